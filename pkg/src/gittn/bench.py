"""Timing and correctness harness for the basis-construction methods."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from ._util import DEFAULT_MEMORY_BUDGET, Deadline
from .basis import eig_normal, expand_basis, invariant_basis, select_unit_products
from .errors import BudgetExceededError, GittnError, TimeLimitExceeded
from .groups import InvariantProblem, octahedral_generators, standard_representation
from .solvers import (
    ConstraintOperator,
    averaging_basis,
    constraint_matrix_dense,
    invariance_residual,
    iterative_nullspace,
    naive_nullspace,
)

FAMILIES = ("C", "D", "S", "S_bad", "octahedral")
METHODS = ("factored", "svd", "iterative", "averaging")
CSV_COLUMNS = ("method", "group", "n", "d", "first_generator", "p", "r",
               "seconds", "status", "residual")
_OCTAHEDRAL_DIMS = {3: "natural", 5: "direct_sum", 8: "tensor"}


@dataclass(frozen=True)
class BenchCase:
    family: str
    n: int
    d: int
    method: str
    time_limit: float = 60.0
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if self.family == "octahedral":
            if self.n not in _OCTAHEDRAL_DIMS:
                raise ValueError("octahedral representations exist in dims 3, 5, 8")
        elif self.n < 2:
            raise ValueError("n must be at least 2")


def family_generators(family: str, n: int):
    """Labeled generator matrices of one standard group family."""
    if family == "C":
        return [("g_c", standard_representation("cyclic_shift", n))]
    if family == "D":
        return [("g_c", standard_representation("cyclic_shift", n)),
                ("g_r", standard_representation("reverser", n))]
    if family == "S":
        return [("g_c", standard_representation("cyclic_shift", n)),
                ("g_s12", standard_representation("swap", n, i=1, j=2))]
    if family == "S_bad":
        return [(f"g_s1{j}", standard_representation("swap", n, i=1, j=j))
                for j in range(2, n + 1)]
    if family == "octahedral":
        return octahedral_generators(_OCTAHEDRAL_DIMS[n])
    raise ValueError(f"unknown family {family!r}")


def family_problem(family: str, n: int, d: int) -> InvariantProblem:
    """Invariance problem with the same generator matrix on every mode."""
    gens = family_generators(family, n)
    return InvariantProblem.from_representations(
        [[m] * d for _, m in gens], labels=[label for label, _ in gens]
    )


def _run_method(case: BenchCase, problem: InvariantProblem, deadline: Deadline):
    """Returns (first_generator, p, r, dense_basis). Timing excludes the
    residual verification done by the caller."""
    if case.method == "factored":
        fb = invariant_basis(problem, first_gen="auto")
        return None, fb, None
    if case.method == "svd":
        c = constraint_matrix_dense(problem, memory_budget=case.memory_budget)
        basis = naive_nullspace(c)
        return basis, None, None
    if case.method == "iterative":
        op = ConstraintOperator.from_problem(problem)
        basis = iterative_nullspace(op, rank_guess=8, deadline=deadline)
        return basis, None, None
    if case.method == "averaging":
        basis = averaging_basis(problem, memory_budget=case.memory_budget)
        return basis, None, None
    raise ValueError(case.method)


def run_case(case: BenchCase) -> dict:
    row = {"method": case.method, "group": case.family, "n": case.n, "d": case.d,
           "first_generator": "", "p": "", "r": "", "seconds": "",
           "status": "ok", "residual": ""}
    if case.time_limit is not None and case.time_limit <= 0:
        row["status"] = "timeout"
        return row
    problem = family_problem(case.family, case.n, case.d)
    deadline = Deadline(case.time_limit)
    start = time.perf_counter()
    try:
        basis, fb, _ = _run_method(case, problem, deadline)
        seconds = time.perf_counter() - start
        if deadline.remaining() < 0:
            raise TimeLimitExceeded
        if fb is not None:
            row["first_generator"] = _first_generator_label(problem)
            row["p"] = fb.p
            try:
                basis = expand_basis(fb, memory_budget=case.memory_budget)
            except BudgetExceededError:
                # verification at full dimension is out of budget; fall back
                # to the reduced-problem residual
                row.update({"r": fb.r, "seconds": seconds, "residual": fb.residual})
                return row
        residual = invariance_residual(problem, basis)
        if residual > 1e-5:
            row["status"] = "error"
            row["residual"] = residual
            return row
        row.update({"r": basis.shape[1], "seconds": seconds, "residual": residual})
    except TimeLimitExceeded:
        row["status"] = "timeout"
    except BudgetExceededError:
        row["status"] = "oom"
    except GittnError:
        row["status"] = "error"
    return row


def _first_generator_label(problem: InvariantProblem) -> str:
    # invariant_basis does not report the chosen index; recompute it.
    from .basis import choose_first_generator

    return problem.generators[choose_first_generator(problem)].label


def run_benchmark(cases) -> list[dict]:
    """Execute cases sequentially; statuses capture per-case failures.

    All ok-status methods on one (family, n, d) configuration must agree on
    the basis dimension; a disagreement aborts with an error because it
    signals an implementation fault rather than a case failure.
    """
    rows = [run_case(case) for case in cases]
    by_config: dict[tuple, set] = {}
    for row in rows:
        if row["status"] == "ok":
            by_config.setdefault((row["group"], row["n"], row["d"]), set()).add(row["r"])
    for config, dims in by_config.items():
        if len(dims) > 1:
            raise GittnError(f"methods disagree on r for {config}: {sorted(dims)}")
    return rows


def write_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def default_cases(families=("C", "D", "S"), n_list=(4, 6, 8, 10, 12),
                  d_list=(2, 3), methods=("factored", "svd", "iterative"),
                  time_limit=60.0, memory_budget=DEFAULT_MEMORY_BUDGET) -> list[BenchCase]:
    cases = []
    for family in families:
        ns = (3, 5, 8) if family == "octahedral" else n_list
        for n in ns:
            for d in d_list:
                for method in methods:
                    cases.append(BenchCase(family, n, d, method,
                                           time_limit=time_limit,
                                           memory_budget=memory_budget))
    return cases


def octahedral_unit_product_counts() -> np.ndarray:
    """Unit-eigenvalue-product counts for the octahedral generators.

    Rows are tensor orders 2, 3, 4; columns run over the nine generator
    matrices (a, b, c in the 3-, 5-, and 8-dimensional forms). Entry (row,
    col) counts the index tuples whose eigenvalue product equals 1 when the
    same matrix acts on every mode.
    """
    columns = []
    for variant in ("natural", "direct_sum", "tensor"):
        for _, rep in octahedral_generators(variant):
            columns.append(eig_normal(rep))
    table = np.zeros((3, 9), dtype=int)
    for row, d in enumerate((2, 3, 4)):
        for col, eig in enumerate(columns):
            table[row, col] = select_unit_products([eig] * d).p
    return table
