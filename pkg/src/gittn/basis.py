"""Orthonormal bases of group-invariant tensor subspaces.

The construction eigendecomposes the per-mode matrices of one chosen
generator, keeps only the tensor-product eigenvectors whose eigenvalue
product equals 1, and restricts the remaining generators to that column
space. The restriction never forms the full tensor space: with ``V*`` the
selected eigenvector columns per mode, the restricted matrix of a generator
is the elementwise (Hadamard) product over modes of ``(V*)^H U V*``, by the
Khatri-Rao identity ``(A (kr) B)^H (C (kr) D) = (A^H C) * (B^H D)``. Averaging
the restricted generator matrices turns the joint fixed-point problem into a
single eigenproblem for eigenvalue 1, whose eigenspace is extracted from a
reordered Schur form. The result is a factored basis: per-mode eigenvector
selections plus a small coefficient matrix.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._util import DEFAULT_MEMORY_BUDGET, ensure_memory
from .errors import DefectiveClusterError, NotConjugationClosedError
from .groups import InvariantProblem, RepMatrix

TWO_PI = 2.0 * np.pi
EIG_TOL_DEFAULT = 1e-6
UNIMODULAR_TOL = 1e-8
_PHASE_SLACK = 4e-7


@dataclass(frozen=True)
class ModeEigen:
    """Unitary eigendecomposition of one normal mode matrix."""

    vectors: np.ndarray  # (n, n), unitary
    values: np.ndarray  # (n,), complex

    @property
    def n(self) -> int:
        return self.values.shape[0]


def eig_normal(m: RepMatrix | np.ndarray) -> ModeEigen:
    """Unitarily diagonalize a normal matrix.

    Hermitian (including real symmetric) inputs go through a symmetric
    eigensolver; everything else through a complex Schur form whose
    triangular factor must be diagonal up to tolerance, which is exactly the
    normality condition. Raises ``ValueError`` if the off-diagonal mass of
    the Schur factor exceeds the tolerance.
    """
    a = m.entries if isinstance(m, RepMatrix) else np.asarray(m, dtype=np.complex128)
    scale = max(1.0, float(np.linalg.norm(a)))
    if np.linalg.norm(a - a.conj().T) <= 1e-12 * scale:
        values, vectors = np.linalg.eigh(a)
        values = values.astype(np.complex128)
    else:
        t, z = scipy.linalg.schur(a, output="complex")
        off = np.linalg.norm(t - np.diag(np.diag(t)))
        if off > 1e-8 * scale:
            raise ValueError(
                f"matrix is not normal enough to diagonalize unitarily "
                f"(Schur off-diagonal norm {off:.3e})"
            )
        values = np.diag(t).copy()
        vectors = z
    n = a.shape[0]
    if np.linalg.norm(vectors.conj().T @ vectors - np.eye(n)) > 1e-8 * max(1.0, n):
        raise ValueError("eigenvector matrix failed the unitarity check")
    resid = np.linalg.norm(a @ vectors - vectors * values[None, :])
    if resid > 1e-8 * scale:
        raise ValueError(f"eigendecomposition residual {resid:.3e} too large")
    values.setflags(write=False)
    vectors.setflags(write=False)
    return ModeEigen(vectors=vectors, values=values)


@dataclass(frozen=True)
class UnitProductSelection:
    """Index tuples whose per-mode eigenvalue product equals 1."""

    index_tuples: np.ndarray  # (p, d) int

    def __post_init__(self):
        idx = np.ascontiguousarray(np.asarray(self.index_tuples, dtype=np.intp))
        if idx.ndim != 2:
            raise ValueError("index_tuples must be a (p, d) array")
        idx.setflags(write=False)
        object.__setattr__(self, "index_tuples", idx)

    @property
    def p(self) -> int:
        return self.index_tuples.shape[0]

    @property
    def d(self) -> int:
        return self.index_tuples.shape[1]


def _phase_window(tol: float) -> float:
    # |e^{i phi} - 1| < tol  <=>  |phi| < 2 asin(tol/2); widen slightly so the
    # exact final filter never misses boundary candidates.
    return 2.0 * math.asin(min(tol, 1.999999) / 2.0) + _PHASE_SLACK


def _half_products(value_lists: list[np.ndarray]) -> np.ndarray:
    prod = value_lists[0]
    for v in value_lists[1:]:
        prod = np.multiply.outer(prod, v)
    return prod.ravel()


def _meet_in_the_middle(values: list[np.ndarray], tol: float) -> np.ndarray:
    dims = [len(v) for v in values]
    d = len(values)
    best_k, best_cost = 1, None
    for k in range(1, d):
        cost = max(math.prod(dims[:k]), math.prod(dims[k:]))
        if best_cost is None or cost < best_cost:
            best_k, best_cost = k, cost
    k = best_k

    prod_l = _half_products(values[:k])
    prod_r = _half_products(values[k:])
    ph_r = np.mod(np.angle(prod_r), TWO_PI)
    order = np.argsort(ph_r, kind="stable")
    ph_sorted = ph_r[order]
    # Three shifted copies make every window of width < 2*pi contiguous.
    ph3 = np.concatenate([ph_sorted, ph_sorted + TWO_PI, ph_sorted + 2 * TWO_PI])
    order3 = np.concatenate([order, order, order])

    w = _phase_window(tol)
    targets = np.mod(-np.angle(prod_l), TWO_PI) + TWO_PI
    lo = np.searchsorted(ph3, targets - w, side="left")
    hi = np.searchsorted(ph3, targets + w, side="right")
    counts = hi - lo
    lefts = np.repeat(np.arange(prod_l.shape[0]), counts)
    if lefts.size:
        flat = np.concatenate([np.arange(a, b) for a, b in zip(lo, hi) if b > a])
        rights = order3[flat]
    else:
        rights = np.zeros(0, dtype=np.intp)

    keep = np.abs(prod_l[lefts] * prod_r[rights] - 1.0) < tol
    lefts, rights = lefts[keep], rights[keep]
    cols_l = np.unravel_index(lefts, dims[:k]) if k > 0 else ()
    cols_r = np.unravel_index(rights, dims[k:])
    return np.stack(list(cols_l) + list(cols_r), axis=1)


def select_unit_products(eigs: list[ModeEigen], tol: float = EIG_TOL_DEFAULT) -> UnitProductSelection:
    """All index tuples with ``|lambda_1 ... lambda_d - 1| < tol``.

    When every eigenvalue lies on the unit circle, a meet-in-the-middle
    search over the two half products keeps the working memory at the order
    of the square root of the full tuple count; otherwise the full product
    grid is materialized. Tuples are returned in lexicographic order.
    """
    values = [np.asarray(e.values) for e in eigs]
    if not values:
        raise ValueError("need at least one mode")
    d = len(values)
    unimodular = all(np.max(np.abs(np.abs(v) - 1.0)) <= UNIMODULAR_TOL for v in values)
    if d == 1:
        idx = np.nonzero(np.abs(values[0] - 1.0) < tol)[0]
        tuples = idx[:, None]
    elif not unimodular or _phase_window(tol) >= np.pi:
        grid = values[0]
        for v in values[1:]:
            grid = np.multiply.outer(grid, v)
        tuples = np.argwhere(np.abs(grid - 1.0) < tol)
    else:
        tuples = _meet_in_the_middle(values, tol)
    if tuples.shape[0] > 1:
        tuples = tuples[np.lexsort(tuples[:, ::-1].T)]
    return UnitProductSelection(index_tuples=tuples)


def _cluster_phases(phases: np.ndarray, counts: np.ndarray, width: float):
    """Merge phases closer than `width` (circularly), summing their counts."""
    order = np.argsort(phases, kind="stable")
    ph, ct = phases[order], counts[order]
    reps, totals = [], []
    start = 0
    for i in range(1, len(ph) + 1):
        if i == len(ph) or ph[i] - ph[i - 1] > width:
            chunk_ph, chunk_ct = ph[start:i], ct[start:i]
            reps.append(float(np.average(chunk_ph, weights=chunk_ct)))
            totals.append(float(chunk_ct.sum()))
            start = i
    # circular wrap: a cluster hugging 2*pi belongs with one hugging 0
    if len(reps) > 1 and (TWO_PI - reps[-1]) + reps[0] <= width:
        w0, w1 = totals[0], totals[-1]
        merged = np.average([reps[0], reps[-1] - TWO_PI], weights=[w0, w1])
        reps = [float(np.mod(merged, TWO_PI))] + reps[1:-1]
        totals = [w0 + w1] + totals[1:-1]
    return np.array(reps), np.array(totals)


def count_unit_products(eigs: list[ModeEigen], tol: float = EIG_TOL_DEFAULT,
                        cluster_tol: float = 1e-6) -> int:
    """Exact count of unit-product index tuples, without enumerating them.

    Convolves the per-mode eigenvalue-phase multisets: after each mode the
    phase sums are reduced modulo 2*pi and clustered at `cluster_tol`, so the
    state stays as small as the number of distinct phase sums. Requires all
    eigenvalues on the unit circle; falls back to dense enumeration
    otherwise.
    """
    values = [np.asarray(e.values) for e in eigs]
    if not all(np.max(np.abs(np.abs(v) - 1.0)) <= UNIMODULAR_TOL for v in values):
        return select_unit_products(eigs, tol).p
    phases, counts = _cluster_phases(
        np.mod(np.angle(values[0]), TWO_PI), np.ones(len(values[0])), cluster_tol
    )
    for v in values[1:]:
        ph, ct = _cluster_phases(np.mod(np.angle(v), TWO_PI), np.ones(len(v)), cluster_tol)
        sums = np.mod(np.add.outer(phases, ph), TWO_PI).ravel()
        prods = np.multiply.outer(counts, ct).ravel()
        phases, counts = _cluster_phases(sums, prods, cluster_tol)
    w = _phase_window(tol) + (len(values) - 1) * cluster_tol
    dist = np.minimum(phases, TWO_PI - phases)
    return int(round(float(counts[dist < w].sum())))


class _EigCache:
    """Shares eigendecompositions between identical matrices (by content)."""

    def __init__(self):
        self._store: dict[tuple, ModeEigen] = {}

    def get(self, m: RepMatrix) -> ModeEigen:
        a = m.entries
        key = (a.shape[0], hashlib.sha1(np.ascontiguousarray(a).tobytes()).digest())
        hit = self._store.get(key)
        if hit is None:
            hit = eig_normal(m)
            self._store[key] = hit
        return hit


def choose_first_generator(problem: InvariantProblem, tol: float = EIG_TOL_DEFAULT,
                           cache: _EigCache | None = None) -> int:
    """Index of the generator whose unit-product count is smallest.

    The count determines the size of the reduced eigenproblem, so the
    smallest count gives the cheapest construction. Ties break toward the
    lowest index.
    """
    cache = cache or _EigCache()
    best_j, best_p = 0, None
    for j in range(problem.s):
        eigs = [cache.get(m) for m in problem.generators[j].per_mode]
        p = count_unit_products(eigs, tol)
        if best_p is None or p < best_p:
            best_j, best_p = j, p
    return best_j


def reduced_matrices(problem: InvariantProblem, sel: UnitProductSelection,
                     eigs: list[ModeEigen]) -> list[np.ndarray]:
    """Restriction of every generator to the selected column space.

    Entry ``[q, q']`` of generator j's restricted matrix is the Hadamard
    product over modes of ``(V*)^H U_j V*``; no object of the full tensor
    dimension is ever formed.
    """
    p = sel.p
    selected = [e.vectors[:, sel.index_tuples[:, i]] for i, e in enumerate(eigs)]
    out = []
    for j in range(problem.s):
        m = np.ones((p, p), dtype=np.complex128)
        for i, u in enumerate(problem.generator_arrays(j)):
            v = selected[i]
            m *= v.conj().T @ (u @ v)
        out.append(m)
    return out


def build_reduced_operator(problem: InvariantProblem, sel: UnitProductSelection,
                           eigs: list[ModeEigen]) -> np.ndarray:
    """Average of the restricted generator matrices."""
    mats = reduced_matrices(problem, sel, eigs)
    return sum(mats[1:], start=mats[0]) / problem.s


def solve_eigenspace_one(a: np.ndarray, tol: float = EIG_TOL_DEFAULT) -> np.ndarray:
    """Orthonormal basis of the eigenspace of `a` for eigenvalue 1.

    Computes a complex Schur form reordered so the eigenvalues with
    ``|lambda - 1| < tol`` come first, and returns the leading Schur vectors.
    The operator is generally not normal, so a residual check guards against
    the cluster being defective; :class:`DefectiveClusterError` reports
    instead of silently returning a non-eigenspace.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.shape[0] == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    _, z, sdim = scipy.linalg.schur(a, output="complex", sort=lambda lam: abs(lam - 1.0) < tol)
    q = z[:, :sdim]
    resid = float(np.linalg.norm(a @ q - q))
    if resid > 1e-6:
        raise DefectiveClusterError(resid, 1e-6)
    return q


@dataclass(frozen=True)
class FactoredBasis:
    """Implicit orthonormal basis of the invariant subspace.

    The dense basis is the Khatri-Rao product of the per-mode selections
    `v_star` multiplied by the coefficient matrix `q`; it is materialized
    only on request (:func:`expand_basis`).
    """

    v_star: tuple[np.ndarray, ...]  # mode i: (n_i, p)
    q: np.ndarray  # (p, r)
    selection: UnitProductSelection
    residual: float  # ||A q - q|| of the reduced eigenproblem

    def __post_init__(self):
        object.__setattr__(self, "v_star", tuple(self.v_star))
        q = np.asarray(self.q, dtype=np.complex128)
        object.__setattr__(self, "q", q)
        if q.shape[0]:
            gram = q.conj().T @ q
            if np.linalg.norm(gram - np.eye(q.shape[1])) > 1e-8 * max(1, q.shape[1]):
                raise ValueError("coefficient matrix does not have orthonormal columns")

    @property
    def p(self) -> int:
        return self.q.shape[0]

    @property
    def r(self) -> int:
        return self.q.shape[1]

    @property
    def mode_dims(self) -> tuple[int, ...]:
        return tuple(v.shape[0] for v in self.v_star)

    @property
    def total_dim(self) -> int:
        return math.prod(self.mode_dims)


def invariant_basis(problem: InvariantProblem, first_gen: int | str = "auto",
                    tol: float = EIG_TOL_DEFAULT) -> FactoredBasis:
    """Construct a factored orthonormal basis of the invariant subspace.

    Parameters
    ----------
    problem
        The invariance problem; matrices are consumed as stored (dual modes
        already dualized).
    first_gen
        Index of the generator to eigendecompose, or ``"auto"`` to pick the
        one minimizing the reduced problem size.
    tol
        An eigenvalue product counts as 1 when within `tol` of it.
    """
    cache = _EigCache()
    if first_gen == "auto":
        g1 = choose_first_generator(problem, tol, cache)
    else:
        g1 = int(first_gen)
        if not 0 <= g1 < problem.s:
            raise ValueError(f"first_gen index {g1} out of range")
    eigs = [cache.get(m) for m in problem.generators[g1].per_mode]
    for i, e in enumerate(eigs):
        if np.max(np.abs(np.abs(e.values) - 1.0)) > UNIMODULAR_TOL:
            raise ValueError(
                f"mode {i} of generator {g1} has eigenvalues off the unit "
                "circle; not a finite-group representation matrix"
            )
    sel = select_unit_products(eigs, tol)
    v_star = tuple(e.vectors[:, sel.index_tuples[:, i]] for i, e in enumerate(eigs))
    if sel.p == 0:
        return FactoredBasis(v_star, np.zeros((0, 0), dtype=np.complex128), sel, 0.0)
    a = build_reduced_operator(problem, sel, eigs)
    q = solve_eigenspace_one(a, tol)
    residual = float(np.linalg.norm(a @ q - q))
    return FactoredBasis(v_star, q, sel, residual)


def khatri_rao(mats: list[np.ndarray]) -> np.ndarray:
    """Columnwise Kronecker product of matrices with equal column counts."""
    out = np.asarray(mats[0])
    for m in mats[1:]:
        out = (out[:, None, :] * np.asarray(m)[None, :, :]).reshape(-1, out.shape[1])
    return out


def expand_basis(fb: FactoredBasis, memory_budget: int | None = DEFAULT_MEMORY_BUDGET) -> np.ndarray:
    """Materialize the dense basis, column block by column block.

    The result is the full-dimension-by-r matrix whose column q is the sum
    over selected tuples of Khatri-Rao columns weighted by the coefficient
    matrix. Refuses up front if the result itself would blow the budget.
    """
    total = fb.total_dim
    r = fb.r
    ensure_memory(16.0 * total * max(r, 1), memory_budget, "dense basis")
    dense = np.zeros((total, r), dtype=np.complex128)
    if r == 0 or fb.p == 0:
        return dense
    if memory_budget is None:
        block = fb.p
    else:
        block = int(max(1, min(fb.p, memory_budget // (16 * total) - r)))
    for start in range(0, fb.p, block):
        stop = min(start + block, fb.p)
        kr = khatri_rao([v[:, start:stop] for v in fb.v_star])
        dense += kr @ fb.q[start:stop, :]
    return dense


def realify_basis(dense: np.ndarray, span_tol: float = 1e-6,
                  rank_tol: float = 1e-8) -> np.ndarray:
    """Real orthonormal basis with the same span as a conjugation-closed
    complex basis.

    Stacks real and imaginary parts and re-orthonormalizes by SVD with rank
    truncation at ``sigma > rank_tol``. Raises
    :class:`NotConjugationClosedError` when the span is not closed under
    conjugation (no real basis exists then), and ``ValueError`` if the result
    fails the principal-angle check against the input span.
    """
    b = np.asarray(dense, dtype=np.complex128)
    n, r = b.shape
    if r == 0:
        return np.zeros((n, 0))
    overlap = b.conj() - b @ (b.conj().T @ b.conj())
    if np.linalg.norm(overlap) > span_tol:
        raise NotConjugationClosedError(
            f"conjugated basis sticks out of the span by {np.linalg.norm(overlap):.3e}"
        )
    stacked = np.concatenate([b.real, b.imag], axis=1)
    u, s, _ = np.linalg.svd(stacked, full_matrices=False)
    rank = int(np.count_nonzero(s > rank_tol))
    if rank != r:
        raise ValueError(f"real stacking has rank {rank}, expected {r}")
    real_b = u[:, :r]
    cosines = np.linalg.svd(b.conj().T @ real_b.astype(np.complex128), compute_uv=False)
    angle = math.sqrt(max(0.0, 1.0 - float(np.min(cosines)) ** 2))
    if angle > span_tol:
        raise ValueError(f"realified basis deviates from the span (sin angle {angle:.3e})")
    return real_b
