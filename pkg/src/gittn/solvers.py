"""Reference constructions of the invariant subspace, for cross-validation.

Three independent routes to the same subspace: the dense SVD nullspace of
the stacked constraint matrix, the range of the group-averaging projector,
and an iterative rank-doubling descent that only touches the constraint
action. All return dense orthonormal bases comparable through
:func:`subspace_distance`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import DEFAULT_MEMORY_BUDGET, Deadline, ensure_memory
from .errors import MaxIterationsError
from .groups import InvariantProblem, enumerate_group


def multilinear_apply(mats, x: np.ndarray, mode_dims) -> np.ndarray:
    """Apply one matrix per mode to vectorized tensors.

    `x` has shape (N,) or (N, k) with N the product of `mode_dims`; columns
    are treated as independent tensors in C-order layout, so the result
    matches multiplication by the Kronecker product of `mats` without ever
    forming it.
    """
    dims = tuple(mode_dims)
    single = x.ndim == 1
    t = x.reshape(*dims, -1)
    for i, m in enumerate(mats):
        t = np.moveaxis(np.tensordot(m, t, axes=(1, i)), 0, i)
    out = t.reshape(math.prod(dims), -1)
    return out[:, 0] if single else out


@dataclass(frozen=True)
class ConstraintOperator:
    """Action of the stacked constraints without the stacked matrix.

    Applying the operator to x stacks, for every generator, the difference
    between the joint multilinear action on x and x itself.
    """

    mode_dims: tuple[int, ...]
    generators: tuple[tuple[np.ndarray, ...], ...]

    @classmethod
    def from_problem(cls, problem: InvariantProblem) -> "ConstraintOperator":
        gens = tuple(problem.generator_arrays(j) for j in range(problem.s))
        return cls(tuple(problem.mode_dims), gens)

    @property
    def total_dim(self) -> int:
        return math.prod(self.mode_dims)

    def apply(self, x: np.ndarray) -> np.ndarray:
        blocks = [multilinear_apply(g, x, self.mode_dims) - x for g in self.generators]
        return np.concatenate(blocks, axis=0)

    def gram_apply(self, x: np.ndarray) -> np.ndarray:
        """C^H C x, accumulated generator by generator."""
        out = np.zeros_like(x)
        for g in self.generators:
            z = multilinear_apply(g, x, self.mode_dims) - x
            gh = tuple(m.conj().T for m in g)
            out += multilinear_apply(gh, z, self.mode_dims) - z
        return out

    def block_norm_bound(self) -> float:
        """Upper bound on the spectral norm of the worst constraint block."""
        worst = 0.0
        for g in self.generators:
            prod = 1.0
            for m in g:
                prod *= float(np.linalg.norm(m, 2))
            worst = max(worst, 1.0 + prod)
        return worst


def constraint_matrix_dense(problem: InvariantProblem,
                            memory_budget: int | None = DEFAULT_MEMORY_BUDGET) -> np.ndarray:
    """Explicit stacked constraint matrix built from Kronecker products."""
    n = problem.total_dim
    s = problem.s
    ensure_memory(16.0 * s * n * n * 2, memory_budget, "dense constraint matrix")
    eye = np.eye(n, dtype=np.complex128)
    blocks = []
    for j in range(s):
        kron = np.ones((1, 1), dtype=np.complex128)
        for u in problem.generator_arrays(j):
            kron = np.kron(kron, u)
        blocks.append(kron - eye)
    return np.concatenate(blocks, axis=0)


def naive_nullspace(c: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal nullspace basis from a dense singular value decomposition.

    Keeps the right singular vectors whose singular value is at most
    ``tol * sigma_max``.
    """
    c = np.asarray(c)
    _, s, vh = np.linalg.svd(c, full_matrices=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > tol * smax))
    return vh[rank:].conj().T


def averaging_projector(problem: InvariantProblem, cap: int = 4096,
                        memory_budget: int | None = DEFAULT_MEMORY_BUDGET) -> np.ndarray:
    """Mean over the whole group of the joint Kronecker actions.

    The result is an idempotent map onto the invariant subspace; idempotency
    is verified to 1e-8 before returning.
    """
    n = problem.total_dim
    ensure_memory(16.0 * n * n * 2, memory_budget, "averaging projector")
    group = enumerate_group(problem, cap=cap)
    p = np.zeros((n, n), dtype=np.complex128)
    for element in group.elements:
        kron = np.ones((1, 1), dtype=np.complex128)
        for u in element:
            kron = np.kron(kron, u)
        p += kron
    p /= group.order
    drift = float(np.linalg.norm(p @ p - p))
    if drift > 1e-8:
        raise ValueError(f"averaging map is not idempotent (||P^2 - P|| = {drift:.3e})")
    return p


def averaging_basis(problem: InvariantProblem, cap: int = 4096,
                    memory_budget: int | None = DEFAULT_MEMORY_BUDGET,
                    rank_tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of the range of the group-averaging map."""
    p = averaging_projector(problem, cap=cap, memory_budget=memory_budget)
    u, s, _ = np.linalg.svd(p)
    rank = int(np.count_nonzero(s > rank_tol))
    return u[:, :rank]


def _orthonormalize(x: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(x)
    return q


def _descend(op: ConstraintOperator, x: np.ndarray, step: float, tol: float,
             max_iter: int, reorth_every: int, deadline: Deadline | None):
    """Gradient iteration on ||C X||_F^2 with periodic re-orthonormalization.

    At every re-orthonormalization the iterate is rotated onto the Ritz
    vectors of C^H C within its span (an orthonormal change of basis, so the
    objective is untouched), which separates converged kernel columns from
    columns stuck at a positive floor. Iteration stops once every column has
    either dropped below `tol` or stalled for three consecutive checks.

    Returns the rotated iterate with per-column residuals ``||C x_i||``
    sorted ascending, plus a flag telling whether the stop was a genuine
    stabilization (as opposed to the iteration cap).
    """

    def ritz(x):
        x = _orthonormalize(x)
        y = op.apply(x)
        vals, vecs = np.linalg.eigh(y.conj().T @ y)
        return x @ vecs, np.sqrt(np.clip(vals, 0.0, None))

    prev_resid = None
    stable_count = 0
    iterations = 0
    stabilized = False
    resid = None
    for t in range(max_iter):
        x = x - (2.0 * step) * op.gram_apply(x)
        iterations = t + 1
        if (t + 1) % reorth_every == 0:
            if deadline is not None:
                deadline.check()
            x, resid = ritz(x)
            if prev_resid is not None:
                settled = (resid <= tol) | (resid > prev_resid * (1.0 - 1e-2) - 1e-14)
                stable_count = stable_count + 1 if settled.all() else 0
                if stable_count >= 3:
                    stabilized = True
                    break
            prev_resid = resid
    if resid is None or not stabilized:
        x, resid = ritz(x)
    return x, resid, stabilized, iterations


def iterative_nullspace(op: ConstraintOperator, rank_guess: int,
                        tol: float | None = None, *, seed: int = 0,
                        max_iter: int = 20000, reorth_every: int = 10,
                        deadline: Deadline | None = None) -> np.ndarray:
    """Kernel basis by gradient descent with rank doubling.

    Minimizes ``||C X||_F^2`` over orthonormal X by fixed-step gradient
    iteration with QR re-orthonormalization every `reorth_every` steps, step
    size ``1 / (2 s max_j ||block_j||^2)``. Columns whose residual is at most
    `tol` (default ``1e-5 * sqrt(s)``) are accepted as kernel vectors. When
    every column is accepted and a fresh probe vector orthogonal to them also
    descends into the kernel, the rank doubles and the procedure restarts;
    otherwise the accepted columns are returned.

    Raises :class:`MaxIterationsError` when the objective was still falling
    at the iteration limit and nothing was accepted.
    """
    if rank_guess < 1:
        raise ValueError("rank_guess must be at least 1")
    s = len(op.generators)
    n = op.total_dim
    if tol is None:
        tol = 1e-5 * math.sqrt(s)
    step = 1.0 / (2.0 * s * op.block_norm_bound() ** 2)
    rng = np.random.default_rng(seed)
    r = min(rank_guess, n)
    while True:
        x0 = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
        x, resid, stabilized, iterations = _descend(
            op, _orthonormalize(x0), step, tol, max_iter, reorth_every, deadline
        )
        accepted = int(np.count_nonzero(resid <= tol))
        if accepted == 0 and not stabilized:
            raise MaxIterationsError(float(resid.min()) if resid.size else np.inf, iterations)
        if accepted == r and r < n:
            probe = rng.standard_normal((n, 1)) + 1j * rng.standard_normal((n, 1))
            probe -= x @ (x.conj().T @ probe)
            norm = np.linalg.norm(probe)
            if norm < 1e-12:
                return x[:, :accepted]
            probe, probe_resid, _, _ = _descend(
                op, probe / norm, step, tol, max_iter, reorth_every, deadline
            )
            if probe_resid[0] <= tol:
                r = min(2 * r, n)
                continue
        return x[:, :accepted]


def subspace_distance(b1: np.ndarray, b2: np.ndarray) -> float:
    """Sine of the largest principal angle between two orthonormal bases.

    Requires equal row dimensions. Bases with different column counts cannot
    have equal span; the sentinel value 1.0 is returned for that mismatch.
    Two empty bases have distance 0.
    """
    b1 = np.asarray(b1)
    b2 = np.asarray(b2)
    if b1.shape[0] != b2.shape[0]:
        raise ValueError(f"row dimensions differ: {b1.shape[0]} vs {b2.shape[0]}")
    if b1.shape[1] != b2.shape[1]:
        return 1.0
    if b1.shape[1] == 0:
        return 0.0
    cosines = np.linalg.svd(b1.conj().T @ b2.astype(np.complex128), compute_uv=False)
    smin = float(np.clip(np.min(cosines), 0.0, 1.0))
    return math.sqrt(max(0.0, 1.0 - smin * smin))


def invariance_residual(problem: InvariantProblem, basis: np.ndarray) -> float:
    """Worst constraint violation over generators and basis columns.

    Applies each generator's joint action mode by mode and returns the
    largest column norm of the difference from the identity action.
    """
    basis = np.asarray(basis)
    if basis.shape[1] == 0:
        return 0.0
    worst = 0.0
    for j in range(problem.s):
        diff = multilinear_apply(problem.generator_arrays(j), basis, problem.mode_dims) - basis
        worst = max(worst, float(np.max(np.linalg.norm(diff, axis=0))))
    return worst
