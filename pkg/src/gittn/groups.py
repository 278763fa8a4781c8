"""Matrix representations of finite groups and multi-mode invariance problems.

A mode is one tensor factor; a generator acts on a mode through a normal,
invertible matrix. A multi-mode problem bundles one such matrix per mode per
generator, with dual (input) modes stored in dualized form, i.e. as the
inverse transpose of the raw representation matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .errors import CapExceededError, RelationVerificationError

NORMALITY_RTOL = 1e-10
SINGULARITY_TOL = 1e-10
GROUP_MATCH_TOL = 1e-8


def _as_complex_square(entries) -> np.ndarray:
    a = np.array(entries, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RepMatrix:
    """A normal, invertible matrix acting on one mode.

    Normality is required so the matrix is unitarily diagonalizable; it is
    checked as ``||A^H A - A A^H||_F <= 1e-10 * ||A||_F^2``. Invertibility is
    checked through the smallest singular value.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = _as_complex_square(self.entries)
        object.__setattr__(self, "entries", a)
        scale = np.linalg.norm(a) ** 2
        commutator = np.linalg.norm(a.conj().T @ a - a @ a.conj().T)
        if commutator > NORMALITY_RTOL * scale:
            raise ValueError(
                f"matrix is not normal: ||A^H A - A A^H|| = {commutator:.3e} "
                f"exceeds {NORMALITY_RTOL:.0e} * ||A||^2 = {NORMALITY_RTOL * scale:.3e}"
            )
        smin = np.linalg.svd(a, compute_uv=False)[-1]
        if smin <= SINGULARITY_TOL:
            raise ValueError(f"matrix is numerically singular (sigma_min = {smin:.3e})")

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def standard_representation(kind: str, n: int, i: int | None = None, j: int | None = None) -> RepMatrix:
    """Build one of the standard permutation/signed-permutation generators.

    Parameters
    ----------
    kind
        ``"cyclic_shift"`` (ones on the first superdiagonal plus the
        bottom-left corner; circularly shifts vector entries upward),
        ``"reverser"`` (antidiagonal ones), ``"swap"`` (transposition of
        positions `i` and `j`, 1-based), ``"trivial"`` (identity), or
        ``"dicyclic_partner"`` (signed reverser satisfying the dicyclic
        relations against the cyclic shift; see Raises).
    n
        Mode dimension, at least 2.

    Raises
    ------
    RelationVerificationError
        For ``"dicyclic_partner"``: the commutation relation forces a signed
        reverser to have constant sign, and neither sign satisfies
        ``X @ X == shift**(n/2)``, so no valid signed permutation exists in
        this family. The search is still performed and verified numerically.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if kind == "cyclic_shift":
        u = np.zeros((n, n))
        u[np.arange(n), (np.arange(n) + 1) % n] = 1.0
        return RepMatrix(u)
    if kind == "reverser":
        return RepMatrix(np.fliplr(np.eye(n)))
    if kind == "trivial":
        return RepMatrix(np.eye(n))
    if kind == "swap":
        if i is None or j is None or not (1 <= i < j <= n):
            raise ValueError("swap requires 1 <= i < j <= n")
        e = np.zeros(n)
        e[i - 1] = 1.0
        e[j - 1] = -1.0
        return RepMatrix(np.eye(n) - np.outer(e, e))
    if kind == "dicyclic_partner":
        return _dicyclic_partner(n)
    raise ValueError(f"unknown representation kind {kind!r}")


def _dicyclic_partner(n: int) -> RepMatrix:
    if n % 4 != 0:
        raise ValueError("dicyclic_partner requires n divisible by 4")
    uc = standard_representation("cyclic_shift", n).entries.real
    target = np.linalg.matrix_power(uc, n // 2)
    uc_inv = uc.T  # permutation matrix
    # Signed reverser ansatz J e_k = s_k e_{n-1-k}. The relation
    # shift @ J == J @ shift^{-1} propagates to s_k == s_{k+1 mod n},
    # leaving only the two constant-sign candidates.
    for sign in (1.0, -1.0):
        cand = sign * np.fliplr(np.eye(n))
        if np.allclose(cand @ cand, target, atol=1e-10) and np.allclose(
            uc @ cand, cand @ uc_inv, atol=1e-10
        ):
            return RepMatrix(cand)
    raise RelationVerificationError(
        f"no signed reverser satisfies X@X == shift**{n // 2} together with the "
        "commutation relation for n = %d" % n
    )


def dualize(m: RepMatrix) -> RepMatrix:
    """Inverse transpose, i.e. the action of the generator on the dual mode.

    Coincides with `m` for orthogonal matrices.
    """
    return RepMatrix(np.linalg.inv(m.entries).T)


def combine(a: RepMatrix, b: RepMatrix, mode: str) -> RepMatrix:
    """Combine two generator matrices for a product group.

    ``"direct_sum"`` stacks them block-diagonally (dimension n_a + n_b);
    ``"tensor_product"`` forms the Kronecker product (dimension n_a * n_b).
    """
    if mode == "direct_sum":
        return RepMatrix(block_diag(a.entries, b.entries))
    if mode == "tensor_product":
        return RepMatrix(np.kron(a.entries, b.entries))
    raise ValueError(f"unknown combine mode {mode!r}")


def octahedral_generators(variant: str) -> list[tuple[str, RepMatrix]]:
    """The three generators a, b, c of the octahedral group in one of its
    standard matrix forms: ``"natural"`` (3-dim), ``"direct_sum"`` (5-dim),
    ``"tensor"`` (8-dim)."""
    if variant == "natural":
        a = -np.eye(3)
        b = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=float)
        c = np.diag([-1.0, -1.0, 1.0])
    elif variant == "direct_sum":
        a = block_diag(np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(3))
        b = np.zeros((5, 5))
        for row, col in [(0, 0), (1, 3), (2, 1), (3, 2), (4, 4)]:
            b[row, col] = 1.0
        c = np.diag([1.0, 1.0, 1.0, 1.0, -1.0])
    elif variant == "tensor":
        a4 = block_diag(np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(2))
        b4 = np.zeros((4, 4))
        for row, col in [(0, 0), (1, 3), (2, 1), (3, 2)]:
            b4[row, col] = 1.0
        a = np.kron(a4, np.eye(2))
        b = np.kron(b4, np.eye(2))
        c = np.kron(np.eye(4), np.array([[0.0, 1.0], [1.0, 0.0]]))
    else:
        raise ValueError(f"unknown octahedral variant {variant!r}")
    return [("a", RepMatrix(a)), ("b", RepMatrix(b)), ("c", RepMatrix(c))]


@dataclass(frozen=True)
class GeneratorRep:
    """Per-mode matrices of one group generator."""

    label: str
    per_mode: tuple[RepMatrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_mode", tuple(self.per_mode))
        if not self.per_mode:
            raise ValueError("a generator needs at least one mode")


@dataclass(frozen=True)
class InvariantProblem:
    """All data of one invariance problem.

    `generators` store the matrices in the form in which they act on the
    tensor: modes flagged dual hold the inverse transpose of the raw
    representation matrix (see :func:`dualize`), other modes hold the raw
    matrix. Use :meth:`from_representations` to apply the dualization.
    """

    mode_dims: tuple[int, ...]
    dual_flags: tuple[bool, ...]
    generators: tuple[GeneratorRep, ...]

    def __post_init__(self):
        object.__setattr__(self, "mode_dims", tuple(int(n) for n in self.mode_dims))
        object.__setattr__(self, "dual_flags", tuple(bool(f) for f in self.dual_flags))
        object.__setattr__(self, "generators", tuple(self.generators))
        if len(self.mode_dims) != len(self.dual_flags):
            raise ValueError("mode_dims and dual_flags must have equal length")
        if not self.generators:
            raise ValueError("at least one generator is required")
        for gen in self.generators:
            if len(gen.per_mode) != len(self.mode_dims):
                raise ValueError(f"generator {gen.label!r} has wrong mode count")
            for m, dim in zip(gen.per_mode, self.mode_dims):
                if m.n != dim:
                    raise ValueError(
                        f"generator {gen.label!r}: mode matrix is {m.n}x{m.n}, "
                        f"expected {dim}x{dim}"
                    )
        if math.prod(self.mode_dims) > 2**62:
            raise ValueError("total dimension overflows")

    @property
    def d(self) -> int:
        return len(self.mode_dims)

    @property
    def s(self) -> int:
        return len(self.generators)

    @property
    def total_dim(self) -> int:
        return math.prod(self.mode_dims)

    def generator_arrays(self, j: int) -> tuple[np.ndarray, ...]:
        return tuple(m.entries for m in self.generators[j].per_mode)

    @classmethod
    def from_representations(cls, generators, dual_flags=None, labels=None) -> "InvariantProblem":
        """Build a problem from raw per-mode representation matrices.

        `generators` is a sequence (over generators) of sequences (over
        modes) of matrices or :class:`RepMatrix`. Modes flagged in
        `dual_flags` are dualized before storage.
        """
        gens = [[m if isinstance(m, RepMatrix) else RepMatrix(m) for m in per_mode]
                for per_mode in generators]
        if not gens:
            raise ValueError("at least one generator is required")
        d = len(gens[0])
        dual_flags = tuple(bool(f) for f in (dual_flags or [False] * d))
        labels = list(labels) if labels is not None else [f"g{j}" for j in range(len(gens))]
        stored = []
        for label, per_mode in zip(labels, gens):
            mats = [dualize(m) if flag else m for m, flag in zip(per_mode, dual_flags)]
            stored.append(GeneratorRep(label, tuple(mats)))
        mode_dims = tuple(m.n for m in gens[0])
        return cls(mode_dims, dual_flags, tuple(stored))


@dataclass(frozen=True)
class GroupEnumeration:
    """All elements of the generated matrix group, as tuples of per-mode
    matrices, closed under elementwise products."""

    elements: tuple[tuple[np.ndarray, ...], ...]

    @property
    def order(self) -> int:
        return len(self.elements)


def enumerate_group(problem: InvariantProblem, cap: int = 4096) -> GroupEnumeration:
    """Breadth-first closure of the generator tuples under elementwise matrix
    products, matched at relative Frobenius tolerance 1e-8.

    Raises :class:`CapExceededError` when more than `cap` distinct elements
    appear (group too large, or not finite at the tolerance).
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    gens = [problem.generator_arrays(j) for j in range(problem.s)]
    identity = tuple(np.eye(n, dtype=np.complex128) for n in problem.mode_dims)

    elements: list[tuple[np.ndarray, ...]] = []
    vecs: list[np.ndarray] = []

    def vectorize(tup):
        return np.concatenate([m.ravel() for m in tup])

    def find(vec) -> bool:
        norm = max(1.0, float(np.linalg.norm(vec)))
        for v in vecs:
            if np.linalg.norm(v - vec) <= GROUP_MATCH_TOL * norm:
                return True
        return False

    def add(tup) -> bool:
        vec = vectorize(tup)
        if find(vec):
            return False
        elements.append(tup)
        vecs.append(vec)
        if len(elements) > cap:
            raise CapExceededError(f"group enumeration exceeded cap of {cap} elements")
        return True

    add(identity)
    frontier = [identity]
    while frontier:
        new_frontier = []
        for elem in frontier:
            for gen in gens:
                prod = tuple(e @ g for e, g in zip(elem, gen))
                if add(prod):
                    new_frontier.append(prod)
        frontier = new_frontier
    return GroupEnumeration(tuple(elements))


# ---------------------------------------------------------------------------
# Group-spec files
#
# {"modes": [{"dim": int, "dual": bool}, ...],
#  "generators": [{"label": str, "per_mode": [matrix-spec, ...]}, ...]}
#
# matrix-spec is one of
#   {"kind": "cyclic_shift" | "reverser" | "trivial", "dim": int?}
#   {"kind": "swap", "i": int, "j": int, "dim": int?}
#   {"kind": "dense", "re": [[..]], "im": [[..]]?}
#   {"kind": "direct_sum" | "kron", "a": spec, "b": spec}
#
# "dim" defaults to the surrounding mode dimension at the top level; nested
# specs inside direct_sum/kron must carry their own "dim" (dense specs infer
# it from the arrays). Matrices in the file are raw representations; modes
# flagged "dual" are dualized on load.
# ---------------------------------------------------------------------------

_COMBINE_KINDS = {"direct_sum": "direct_sum", "kron": "tensor_product"}


def matrix_from_spec(spec: dict, default_dim: int | None = None) -> RepMatrix:
    """Materialize one matrix-spec dictionary."""
    kind = spec.get("kind")
    if kind in ("cyclic_shift", "reverser", "trivial"):
        dim = spec.get("dim", default_dim)
        if dim is None:
            raise ValueError(f"matrix spec {kind!r} needs an explicit 'dim' here")
        return standard_representation(kind, int(dim))
    if kind == "swap":
        dim = spec.get("dim", default_dim)
        if dim is None:
            raise ValueError("swap spec needs an explicit 'dim' here")
        return standard_representation("swap", int(dim), i=int(spec["i"]), j=int(spec["j"]))
    if kind == "dense":
        re = np.array(spec["re"], dtype=float)
        im = np.array(spec.get("im", np.zeros_like(re)), dtype=float)
        return RepMatrix(re + 1j * im)
    if kind in _COMBINE_KINDS:
        a = matrix_from_spec(spec["a"], None)
        b = matrix_from_spec(spec["b"], None)
        return combine(a, b, _COMBINE_KINDS[kind])
    raise ValueError(f"unknown matrix spec kind {kind!r}")


def parse_group_spec(doc: dict) -> InvariantProblem:
    """Build an :class:`InvariantProblem` from a parsed group-spec document."""
    try:
        modes = doc["modes"]
        generators = doc["generators"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"group spec is missing required key: {exc}") from exc
    dims = [int(m["dim"]) for m in modes]
    flags = [bool(m.get("dual", False)) for m in modes]
    raw = []
    labels = []
    for gen in generators:
        labels.append(str(gen.get("label", f"g{len(labels)}")))
        per_mode = []
        for spec, dim in zip(gen["per_mode"], dims):
            m = matrix_from_spec(spec, default_dim=dim)
            if m.n != dim:
                raise ValueError(
                    f"generator {labels[-1]!r}: matrix of size {m.n} does not "
                    f"match mode dimension {dim}"
                )
            per_mode.append(m)
        if len(per_mode) != len(dims):
            raise ValueError(f"generator {labels[-1]!r} has wrong mode count")
        raw.append(per_mode)
    return InvariantProblem.from_representations(raw, dual_flags=flags, labels=labels)


def load_group_spec(path) -> InvariantProblem:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return parse_group_spec(doc)
