"""Command-line entry point: basis construction, verification, benchmarks,
parity training, and reverse-complement structure checks."""

from __future__ import annotations

import csv
import json
import math
import time

import click
import numpy as np

from ._util import DEFAULT_MEMORY_BUDGET, named_rng
from .basis import expand_basis, invariant_basis
from .bench import METHODS, default_cases, run_benchmark, write_csv
from .errors import GittnError
from .groups import load_group_spec
from .learning import BIT_FEATURES, TrainConfig, parity_dataset, train
from .solvers import (
    ConstraintOperator,
    averaging_basis,
    constraint_matrix_dense,
    invariance_residual,
    iterative_nullspace,
    naive_nullspace,
    subspace_distance,
)
from .tensortrain import (
    build_parity_invariant_ttn,
    build_plain_ttn,
    build_rc_ttn,
    rc_invariance_deviation,
    save_checkpoint,
)


def _complex_to_doc(a: np.ndarray) -> dict:
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Root seed; every stochastic step derives its own stream from it.")
@click.option("--tol-eig", type=float, default=1e-6, show_default=True,
              help="Tolerance for treating an eigenvalue product as 1.")
@click.option("--budget-mem", type=float, default=DEFAULT_MEMORY_BUDGET / 1024**2,
              show_default=True, help="Memory budget for dense objects, in MiB.")
@click.pass_context
def main(ctx, seed, tol_eig, budget_mem):
    """Group-invariant tensor bases and invariant tensor-train classifiers."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["tol_eig"] = tol_eig
    ctx.obj["budget"] = int(budget_mem * 1024**2)


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True),
              help="Group-spec JSON file.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Where to write the basis artifact JSON.")
@click.option("--first-generator", default="auto", show_default=True,
              help="Generator index to eigendecompose, or 'auto'.")
@click.pass_context
def basis(ctx, spec_path, out_path, first_generator):
    """Construct a factored invariant basis for a group spec."""
    problem = _load(spec_path)
    first = first_generator if first_generator == "auto" else int(first_generator)
    fb = invariant_basis(problem, first_gen=first, tol=ctx.obj["tol_eig"])
    doc = {
        "p": fb.p,
        "r": fb.r,
        "mode_dims": list(fb.mode_dims),
        "v_star": [_complex_to_doc(v) for v in fb.v_star],
        "Q": _complex_to_doc(fb.q),
        "residual": fb.residual,
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")
    click.echo(f"wrote basis with p={fb.p}, r={fb.r} to {out_path}")


def _load(spec_path):
    try:
        return load_group_spec(spec_path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"{spec_path}: {exc}") from exc


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Optional path for the JSON report (also printed).")
@click.option("--cap", type=int, default=4096, show_default=True,
              help="Group-enumeration element cap for the averaging method.")
@click.pass_context
def verify(ctx, spec_path, out_path, cap):
    """Run every method on one group spec and report agreement."""
    problem = _load(spec_path)
    budget = ctx.obj["budget"]
    report = {}
    bases = {}

    def record(name, fn):
        start = time.perf_counter()
        try:
            b = fn()
        except GittnError as exc:
            report[name] = {"error": str(exc)}
            return
        seconds = time.perf_counter() - start
        bases[name] = b
        report[name] = {
            "r": int(b.shape[1]),
            "seconds": seconds,
            "residual": invariance_residual(problem, b),
        }

    record("factored", lambda: expand_basis(
        invariant_basis(problem, tol=ctx.obj["tol_eig"]), memory_budget=budget))
    record("svd", lambda: naive_nullspace(
        constraint_matrix_dense(problem, memory_budget=budget)))
    record("averaging", lambda: averaging_basis(problem, cap=cap, memory_budget=budget))
    record("iterative", lambda: iterative_nullspace(
        ConstraintOperator.from_problem(problem), rank_guess=8, seed=ctx.obj["seed"]))

    reference = "svd" if "svd" in bases else next(iter(bases), None)
    for name, b in bases.items():
        report[name]["distance_to_reference"] = (
            subspace_distance(bases[reference], b) if reference else None
        )
    payload = json.dumps({"reference": reference, "methods": report}, sort_keys=True, indent=2)
    click.echo(payload)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")


@main.command()
@click.option("--families", default="C,D,S", show_default=True)
@click.option("--n-list", default="4,6,8,10,12", show_default=True)
@click.option("--d-list", default="2,3", show_default=True)
@click.option("--methods", default="factored,svd,iterative", show_default=True)
@click.option("--time-limit", type=float, default=60.0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def bench(ctx, families, n_list, d_list, methods, time_limit, out_path):
    """Timing sweep over group families and methods; writes a CSV."""
    methods = tuple(m.strip() for m in methods.split(","))
    for m in methods:
        if m not in METHODS:
            raise click.ClickException(f"unknown method {m!r}")
    cases = default_cases(
        families=tuple(f.strip() for f in families.split(",")),
        n_list=tuple(int(n) for n in n_list.split(",")),
        d_list=tuple(int(d) for d in d_list.split(",")),
        methods=methods,
        time_limit=time_limit,
        memory_budget=ctx.obj["budget"],
    )
    rows = run_benchmark(cases)
    write_csv(rows, out_path)
    ok = sum(1 for r in rows if r["status"] == "ok")
    click.echo(f"wrote {len(rows)} rows ({ok} ok) to {out_path}")


@main.command("train-parity")
@click.option("--length", type=int, required=True, help="Bit-string length.")
@click.option("--bond", type=int, default=4, show_default=True)
@click.option("--mode", type=click.Choice(["plain", "invariant", "augmented"]),
              default="invariant", show_default=True)
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--optimizer", type=click.Choice(["adam", "sgd_nesterov"]),
              default="adam", show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--l2", type=float, default=0.0, show_default=True)
@click.option("--fraction", type=float, default=0.05, show_default=True,
              help="Fraction of all bitstrings used for training.")
@click.option("--seed", type=int, default=None,
              help="Overrides the group-level seed for this command.")
@click.option("--runs", type=int, default=1, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Metrics CSV; the final model checkpoint lands next to it.")
def train_parity(length, bond, mode, epochs, lr, optimizer, batch_size, l2,
                 fraction, seed, runs, out_path):
    """Train parity classifiers and record per-epoch metrics."""
    ctx = click.get_current_context()
    root_seed = seed if seed is not None else ctx.parent.params.get("seed", 0)
    rows = []
    model = None
    stalled_runs = 0
    for run_idx in range(runs):
        run_seed = int(named_rng(root_seed, f"run{run_idx}").integers(0, 2**31 - 1))
        train_set, test_set = parity_dataset(length, fraction, seed=run_seed,
                                             augment=(mode == "augmented"))
        if mode == "invariant":
            model = build_parity_invariant_ttn(length, bond, seed=run_seed)
        else:
            model = build_plain_ttn(length, bond, seed=run_seed)
        config = TrainConfig(epochs=epochs, batch_size=batch_size, learning_rate=lr,
                             optimizer=optimizer, l2_coeff=l2, seed=run_seed)
        result = train(model, train_set, test_set, config, BIT_FEATURES)
        stalled_runs += int(result.stalled)
        for epoch in range(epochs):
            rows.append({
                "run": run_idx, "seed": run_seed, "epoch": epoch,
                "train_loss": result.train_loss[epoch],
                "train_acc": result.train_acc[epoch],
                "test_acc": result.test_acc[epoch],
            })
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["run", "seed", "epoch", "train_loss",
                                                "train_acc", "test_acc"])
        writer.writeheader()
        writer.writerows(rows)
    ckpt_path = out_path + ".ckpt.json"
    save_checkpoint(model, ckpt_path)
    final_acc = [r["test_acc"] for r in rows if r["epoch"] == epochs - 1]
    click.echo(
        f"{runs} run(s), mean final test accuracy {np.mean(final_acc):.3f}, "
        f"{stalled_runs} stalled; metrics in {out_path}, checkpoint in {ckpt_path}"
    )


@main.command("rc-check")
@click.option("--length", type=int, required=True, help="Odd strand length.")
@click.option("--bond", type=int, default=2, show_default=True)
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--even", is_flag=True, default=False,
              help="Use the even-length variant (middle core without input).")
@click.pass_context
def rc_check(ctx, length, bond, trials, even):
    """Build a reverse-complement invariant train and print the worst
    deviation between strands and their reverse complements."""
    d = length + 1 if even else length
    model = build_rc_ttn(d, bond, middle_input=not even, seed=ctx.obj["seed"])
    deviation = rc_invariance_deviation(model, trials=trials, seed=ctx.obj["seed"])
    click.echo(f"max_deviation={deviation:.3e} over {trials} strands "
               f"of length {model.strand_length}")
    if not math.isfinite(deviation):
        raise click.ClickException("deviation is not finite")


if __name__ == "__main__":
    main()
