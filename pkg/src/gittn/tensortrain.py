"""Tensor-train networks: plain, group-invariant, and reverse-complement
invariant variants.

A network is an ordered chain of cores. End cores are matrices, interior
cores carry (input, left bond, right bond) axes, and the designated output
core has an extra trailing output axis (and, depending on the variant, may
lack the input axis). Invariant variants do not store their cores directly:
each core is a linear combination of a real orthonormal basis of its
core-space invariant subspace, and only the combination coefficients are
trainable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._util import named_rng
from .basis import expand_basis, invariant_basis, realify_basis
from .groups import InvariantProblem, RepMatrix, standard_representation

DNA_ALPHABET = "AGTC"
_RC_PAIRINGS = {
    # complement implemented by the order-reversing matrix on the AGTC basis
    "reverser": {"A": "C", "C": "A", "G": "T", "T": "G"},
    # Watson-Crick base pairing
    "watson_crick": {"A": "T", "T": "A", "C": "G", "G": "C"},
}


@dataclass
class TensorTrain:
    """Dense tensor-train network with a designated output core."""

    cores: list[np.ndarray]
    output_pos: int
    output_has_input: bool = True

    def __post_init__(self):
        d = len(self.cores)
        if d < 3:
            raise ValueError("need at least three cores")
        if not 0 < self.output_pos < d - 1:
            raise ValueError("output core must be interior")
        shapes = [c.shape for c in self.cores]
        if len(shapes[0]) != 2 or len(shapes[-1]) != 2:
            raise ValueError("end cores must be matrices")
        for m in range(1, d - 1):
            if m == self.output_pos:
                want = 4 if self.output_has_input else 3
            else:
                want = 3
            if len(shapes[m]) != want:
                raise ValueError(f"core {m} has {len(shapes[m])} axes, expected {want}")
        for m in range(d - 1):
            if self._right_bond(m) != self._left_bond(m + 1):
                raise ValueError(f"bond dimensions disagree between cores {m} and {m + 1}")

    def _left_bond(self, m):
        if m == 0:
            return None
        c = self.cores[m]
        if m == len(self.cores) - 1:
            return c.shape[0]
        return c.shape[0] if (m == self.output_pos and not self.output_has_input) else c.shape[1]

    def _right_bond(self, m):
        c = self.cores[m]
        if m == len(self.cores) - 1:
            return None
        if m == 0:
            return c.shape[1]
        return c.shape[1] if (m == self.output_pos and not self.output_has_input) else c.shape[2]

    @property
    def n_cores(self) -> int:
        return len(self.cores)

    @property
    def input_positions(self) -> list[int]:
        pos = list(range(self.n_cores))
        if not self.output_has_input:
            pos.remove(self.output_pos)
        return pos

    @property
    def input_dims(self) -> list[int]:
        dims = []
        for m in self.input_positions:
            if m == 0:
                dims.append(self.cores[m].shape[0])
            elif m == self.n_cores - 1:
                dims.append(self.cores[m].shape[1])
            else:
                dims.append(self.cores[m].shape[0])
        return dims

    @property
    def bond_dims(self) -> list[int]:
        return [self._right_bond(m) for m in range(self.n_cores - 1)]

    @property
    def output_dim(self) -> int:
        return self.cores[self.output_pos].shape[-1]


def evaluate(tt: TensorTrain, inputs) -> np.ndarray:
    """Contract the network against one vector per input-bearing core.

    The left chain folds cores up to the output position into a bond vector,
    the right chain folds the remaining cores into another, and the output
    core combines both (with its own input when it has one). Cost is linear
    in the number of cores.
    """
    d = tt.n_cores
    ell = tt.output_pos
    feats = {pos: np.asarray(v, dtype=float) for pos, v in zip(tt.input_positions, inputs)}
    if len(inputs) != len(tt.input_positions):
        raise ValueError(f"expected {len(tt.input_positions)} inputs, got {len(inputs)}")
    for pos, dim in zip(tt.input_positions, tt.input_dims):
        if feats[pos].shape != (dim,):
            raise ValueError(f"input for core {pos} has shape {feats[pos].shape}, expected ({dim},)")

    v = feats[0] @ tt.cores[0]
    for m in range(1, ell):
        v = np.einsum("i,l,ilr->r", feats[m], v, tt.cores[m])
    w = tt.cores[d - 1] @ feats[d - 1]
    for m in range(d - 2, ell, -1):
        w = np.einsum("i,ilr,r->l", feats[m], tt.cores[m], w)
    if tt.output_has_input:
        return np.einsum("i,l,r,ilro->o", feats[ell], v, w, tt.cores[ell])
    return np.einsum("l,r,lro->o", v, w, tt.cores[ell])


def assemble_core(basis: np.ndarray, coeffs: np.ndarray, shape) -> np.ndarray:
    """Dense core from a real basis and a coefficient vector."""
    basis = np.asarray(basis)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (basis.shape[1],):
        raise ValueError(f"expected {basis.shape[1]} coefficients, got {coeffs.shape}")
    return (basis @ coeffs).reshape(shape)


def _core_role(m: int, d: int, ell: int) -> str:
    if m == 0:
        return "left_end"
    if m == d - 1:
        return "right_end"
    if m == ell:
        return "output"
    return "left" if m < ell else "right"


def _dense_core_init(shape, role: str, rng: np.random.Generator, noise: float) -> np.ndarray:
    if role == "left_end":
        base = np.eye(shape[0], shape[1])
    elif role == "right_end":
        base = np.eye(shape[0], shape[1])
    elif role == "left":
        slice_ = np.eye(shape[0], shape[2]) / math.sqrt(2.0)
        base = np.repeat(slice_[:, None, :], shape[1], axis=1)
    elif role == "right":
        slice_ = np.eye(shape[0], shape[1]) / math.sqrt(2.0)
        base = np.repeat(slice_[:, :, None], shape[2], axis=2)
    elif role == "output":
        base = np.ones(shape)
    else:
        raise ValueError(role)
    return base + rng.normal(0.0, noise, size=shape)


def _core_shapes(d, bond_dim, n_in, n_out, ell, output_has_input=True):
    shapes = []
    for m in range(d):
        if m == 0:
            shapes.append((n_in, bond_dim))
        elif m == d - 1:
            shapes.append((bond_dim, n_in))
        elif m == ell:
            shapes.append((n_in, bond_dim, bond_dim, n_out) if output_has_input
                          else (bond_dim, bond_dim, n_out))
        else:
            shapes.append((n_in, bond_dim, bond_dim))
    return shapes


class PlainTTN:
    """Trainable wrapper around a dense tensor train; every entry is a
    parameter."""

    kind = "plain"

    def __init__(self, tt: TensorTrain):
        self.tt = tt

    def assembled(self) -> TensorTrain:
        return self.tt

    @property
    def n_params(self) -> int:
        return sum(c.size for c in self.tt.cores)

    @property
    def coeffs(self) -> np.ndarray:
        return np.concatenate([c.ravel() for c in self.tt.cores])

    @coeffs.setter
    def coeffs(self, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_params,):
            raise ValueError("coefficient vector has wrong length")
        offset = 0
        for m, c in enumerate(self.tt.cores):
            self.tt.cores[m] = vec[offset:offset + c.size].reshape(c.shape)
            offset += c.size

    def core_grads_to_param_grad(self, core_grads) -> np.ndarray:
        return np.concatenate([g.ravel() for g in core_grads])


def _rep_dim(rep) -> int:
    first = rep[0] if isinstance(rep, (list, tuple)) else rep
    a = first.entries if isinstance(first, RepMatrix) else np.asarray(first)
    return a.shape[0]


def _normalize_reps(rep, n, what) -> list[np.ndarray]:
    reps = rep if isinstance(rep, (list, tuple)) else [rep]
    out = []
    for r in reps:
        a = r.entries.real if isinstance(r, RepMatrix) else np.asarray(r, dtype=float)
        if a.shape != (n, n):
            raise ValueError(f"{what} must be {n}x{n}, got {a.shape}")
        out.append(a)
    return out


class InvariantTTN:
    """Tensor train whose cores are pinned to their invariant subspaces.

    Each core stores a real orthonormal basis of the solutions of its
    core-space invariance constraints; the trainable parameters are the
    coefficient vectors. Assembled cores therefore satisfy the constraints
    identically, for any parameter value.
    """

    kind = "invariant"

    def __init__(self, d, bond_dim, output_pos, input_reps, bond_reps, output_reps,
                 bases, core_shapes, coeffs):
        self.d = d
        self.bond_dim = bond_dim
        self.output_pos = output_pos
        self.input_reps = input_reps
        self.bond_reps = bond_reps
        self.output_reps = output_reps
        self.bases = bases
        self.core_shapes = core_shapes
        self._coeffs = np.asarray(coeffs, dtype=float)
        sizes = [b.shape[1] for b in bases]
        self._slices = []
        off = 0
        for size in sizes:
            self._slices.append(slice(off, off + size))
            off += size
        if self._coeffs.shape != (off,):
            raise ValueError(f"expected {off} coefficients, got {self._coeffs.shape}")
        self._cores = None

    @property
    def n_params(self) -> int:
        return self._coeffs.size

    @property
    def basis_dims(self) -> list[int]:
        return [b.shape[1] for b in self.bases]

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs.copy()

    @coeffs.setter
    def coeffs(self, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != self._coeffs.shape:
            raise ValueError("coefficient vector has wrong length")
        self._coeffs = vec.copy()
        self._cores = None

    def assembled(self) -> TensorTrain:
        if self._cores is None:
            self._cores = [
                assemble_core(b, self._coeffs[sl], shape)
                for b, sl, shape in zip(self.bases, self._slices, self.core_shapes)
            ]
        return TensorTrain(list(self._cores), self.output_pos, output_has_input=True)

    def core_grads_to_param_grad(self, core_grads) -> np.ndarray:
        return np.concatenate(
            [b.T @ g.ravel() for b, g in zip(self.bases, core_grads)]
        )

    def project_coeffs(self, dense_cores) -> np.ndarray:
        """Orthogonal projection of dense cores onto the per-core bases."""
        return np.concatenate(
            [b.T @ np.asarray(c, dtype=float).ravel() for b, c in zip(self.bases, dense_cores)]
        )

    def invariance_generators(self):
        gens = []
        n_inputs = self.d
        for j in range(len(self.input_reps)):
            gens.append(([self.input_reps[j]] * n_inputs, self.output_reps[j]))
        return gens


def _multi_core_basis(per_generator_mode_mats, dual_flags, tol):
    problem = InvariantProblem.from_representations(per_generator_mode_mats,
                                                    dual_flags=dual_flags)
    fb = invariant_basis(problem, first_gen="auto", tol=tol)
    if fb.r == 0:
        return np.zeros((problem.total_dim, 0))
    return realify_basis(expand_basis(fb))


def build_invariant_ttn(d: int, bond_dim: int, input_rep, bond_rep, output_rep,
                        output_pos: int | None = None, *, seed: int = 0,
                        tol: float = 1e-6, noise: float = 1e-3) -> InvariantTTN:
    """Build an invariant tensor train for uniform input/bond/output actions.

    `input_rep`, `bond_rep` and `output_rep` are single matrices (one group
    generator) or lists of matrices (several generators, index-aligned).
    Every core's basis is computed once per distinct constraint signature and
    reused. Coefficients are initialized by projecting the standard dense
    initialization (identity-like chain plus Gaussian noise) onto the bases.

    Raises ``ValueError`` when some core has an empty invariant subspace,
    which signals incompatible representations.
    """
    if d < 3:
        raise ValueError("need at least three cores")
    ell = output_pos if output_pos is not None else (d - 1) // 2
    if not 0 < ell < d - 1:
        raise ValueError("output core must be interior")
    in_mats = _normalize_reps(input_rep, _rep_dim(input_rep), "input rep")
    n_in = in_mats[0].shape[0]
    bond_mats = _normalize_reps(bond_rep, bond_dim, "bond rep")
    out_mats = _normalize_reps(output_rep, _rep_dim(output_rep), "output rep")
    n_out = out_mats[0].shape[0]
    s = len(in_mats)
    if not len(bond_mats) == len(out_mats) == s:
        raise ValueError("input, bond and output reps must list the same generator count")

    shapes = _core_shapes(d, bond_dim, n_in, n_out, ell)
    rng = named_rng(seed, "invariant-ttn-init")
    bases = []
    cache: dict = {}
    coeff_parts = []
    for m in range(d):
        role = _core_role(m, d, ell)
        if role == "left_end":
            mats = [[in_mats[j], bond_mats[j]] for j in range(s)]
            flags = (True, False)
        elif role == "right_end":
            mats = [[bond_mats[j], in_mats[j]] for j in range(s)]
            flags = (False, True)
        elif role == "left":
            mats = [[in_mats[j], bond_mats[j], bond_mats[j]] for j in range(s)]
            flags = (True, True, False)
        elif role == "right":
            mats = [[in_mats[j], bond_mats[j], bond_mats[j]] for j in range(s)]
            flags = (True, False, True)
        else:
            mats = [[in_mats[j], bond_mats[j], bond_mats[j], out_mats[j]] for j in range(s)]
            flags = (True, True, True, False)
        key = (flags, tuple(m_.tobytes() for gen in mats for m_ in gen))
        basis = cache.get(key)
        if basis is None:
            basis = _multi_core_basis(mats, flags, tol)
            cache[key] = basis
        if basis.shape[1] == 0:
            raise ValueError(
                f"core {m} has an empty invariant subspace; the representations "
                "are incompatible"
            )
        bases.append(basis)
        init = _dense_core_init(shapes[m], role, rng, noise)
        coeff_parts.append(basis.T @ init.ravel())

    return InvariantTTN(
        d=d, bond_dim=bond_dim, output_pos=ell,
        input_reps=in_mats, bond_reps=bond_mats, output_reps=out_mats,
        bases=bases, core_shapes=shapes, coeffs=np.concatenate(coeff_parts),
    )


def build_plain_ttn(d: int, bond_dim: int, n_in: int = 2, n_out: int = 2,
                    output_pos: int | None = None, *, seed: int = 0,
                    noise: float = 1e-3) -> PlainTTN:
    """Unconstrained tensor train with the standard dense initialization."""
    if d < 3:
        raise ValueError("need at least three cores")
    ell = output_pos if output_pos is not None else (d - 1) // 2
    shapes = _core_shapes(d, bond_dim, n_in, n_out, ell)
    rng = named_rng(seed, "plain-ttn-init")
    cores = [_dense_core_init(shape, _core_role(m, d, ell), rng, noise)
             for m, shape in enumerate(shapes)]
    return PlainTTN(TensorTrain(cores, ell, output_has_input=True))


def build_parity_invariant_ttn(d: int, bond_dim: int, *, seed: int = 0,
                               bond_rep: np.ndarray | None = None,
                               output_pos: int | None = None,
                               noise: float = 1e-3) -> InvariantTTN:
    """Bit-flip invariant train for binary strings of length `d`.

    Inputs and output carry the two-dimensional flip action; bonds carry the
    order-reversing action by default (overridable through `bond_rep`). For
    odd `d` a global bit flip flips the parity class, so the output action is
    the flip; for even `d` the output action is trivial.
    """
    swap = standard_representation("swap", 2, i=1, j=2).entries.real
    if bond_rep is None:
        bond_rep = standard_representation("reverser", bond_dim).entries.real
    out = swap if d % 2 == 1 else np.eye(2)
    return build_invariant_ttn(d, bond_dim, swap, bond_rep, out,
                               output_pos=output_pos, seed=seed, noise=noise)


def verify_model_invariance(model, generators=None, trials: int = 20,
                            seed: int = 0) -> float:
    """Largest deviation from the invariance law over random inputs.

    For each generator, feeds transformed random inputs through the network
    and compares with the output-side action applied to the untransformed
    result. `model` is a :class:`TensorTrain` or any wrapper with an
    ``assembled()`` method; `generators` is a list of
    ``(per_input_matrices, output_matrix)`` pairs and defaults to the
    model's own stored actions when available.
    """
    tt = model if isinstance(model, TensorTrain) else model.assembled()
    if generators is None:
        if hasattr(model, "invariance_generators"):
            generators = model.invariance_generators()
        else:
            raise ValueError("generators are required for a plain tensor train")
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = named_rng(seed, "invariance-check")
    dims = tt.input_dims
    worst = 0.0
    for _ in range(trials):
        xs = [rng.standard_normal(n) for n in dims]
        base = evaluate(tt, xs)
        for in_mats, out_mat in generators:
            if len(in_mats) != len(xs):
                raise ValueError("generator lists one matrix per input-bearing core")
            txs = [np.asarray(m) @ x for m, x in zip(in_mats, xs)]
            dev = float(np.linalg.norm(evaluate(tt, txs) - np.asarray(out_mat) @ base))
            worst = max(worst, dev)
    return worst


# ---------------------------------------------------------------------------
# Reverse-complement invariant trains
# ---------------------------------------------------------------------------


def reverse_complement(strand: str, pairing: str = "reverser") -> str:
    """Reverse a nucleotide strand and complement each symbol.

    `pairing` selects the complement action: ``"reverser"`` (A<->C, G<->T)
    is the action implemented by the order-reversing matrix on the one-hot
    AGTC basis and is the symmetry the mirrored-core networks are built
    around; ``"watson_crick"`` (A<->T, C<->G) is the biological pairing.
    """
    try:
        table = _RC_PAIRINGS[pairing]
    except KeyError:
        raise ValueError(f"unknown pairing {pairing!r}") from None
    try:
        return "".join(table[sym] for sym in reversed(strand))
    except KeyError as exc:
        raise ValueError(f"invalid symbol {exc.args[0]!r}; expected one of ACGT") from None


def _perfect_shuffle(b: int) -> np.ndarray:
    s = np.zeros((b * b, b * b))
    for a in range(b):
        for c in range(b):
            s[a * b + c, c * b + a] = 1.0
    return s


class RCTensorTrain:
    """Tensor train invariant under reversal composed with complementation.

    Cores left of the output position are free dense parameters; the cores
    right of it are derived by the mirror map (complement action on every
    axis plus a bond transposition), and the output core is constrained to
    the fixed space of its own mirrored action. The derived cores are
    recomputed from the free ones, never stored independently, so the
    constraints hold identically.
    """

    kind = "rc"

    def __init__(self, d: int, bond_dim: int, middle_input: bool = True, *,
                 seed: int = 0, noise: float = 1e-3, tol: float = 1e-6):
        if d < 3 or d % 2 == 0:
            raise ValueError("d must be odd and at least 3")
        self.d = d
        self.bond_dim = bond_dim
        self.middle_input = middle_input
        self.output_pos = (d - 1) // 2
        self.n_in = 4
        self.n_out = 2
        self.u_in = standard_representation("reverser", 4).entries.real
        self.u_bond = standard_representation("reverser", bond_dim).entries.real

        ell = self.output_pos
        shapes = _core_shapes(d, bond_dim, self.n_in, self.n_out, ell,
                              output_has_input=middle_input)
        self.core_shapes = shapes
        rng = named_rng(seed, "rc-ttn-init")
        self.free_cores = [
            _dense_core_init(shapes[m], _core_role(m, d, ell), rng, noise)
            for m in range(ell)
        ]

        # The output-core constraint applies the complement action to every
        # axis and transposes the two bond axes; on the combined bond mode
        # that is the perfect shuffle composed with the doubled action. The
        # matrices below are the exact actions, so no dualization is applied.
        bond_action = _perfect_shuffle(bond_dim) @ np.kron(self.u_bond, self.u_bond)
        if middle_input:
            mats = [[self.u_in, bond_action, np.eye(2)]]
            flags = (False, False, False)
        else:
            mats = [[bond_action, np.eye(2)]]
            flags = (False, False)
        self.output_basis = _multi_core_basis(mats, flags, tol)
        init = _dense_core_init(shapes[ell], "output", rng, noise)
        self.output_coeffs = self.output_basis.T @ init.ravel()
        self._free_sizes = [c.size for c in self.free_cores]

    # -- mirror map ---------------------------------------------------------

    def _mirror_end(self, core: np.ndarray) -> np.ndarray:
        return np.einsum("iI,aG,IG->ai", self.u_in, self.u_bond, core)

    def _mirror_interior(self, core: np.ndarray) -> np.ndarray:
        return np.einsum("iI,aG,bg,IgG->iab", self.u_in, self.u_bond, self.u_bond, core)

    def _mirror_end_adjoint(self, grad: np.ndarray) -> np.ndarray:
        return np.einsum("iI,aG,ai->IG", self.u_in, self.u_bond, grad)

    def _mirror_interior_adjoint(self, grad: np.ndarray) -> np.ndarray:
        return np.einsum("iI,aG,bg,iab->IgG", self.u_in, self.u_bond, self.u_bond, grad)

    # -- parameters ---------------------------------------------------------

    @property
    def n_params(self) -> int:
        return sum(self._free_sizes) + self.output_coeffs.size

    @property
    def coeffs(self) -> np.ndarray:
        return np.concatenate([c.ravel() for c in self.free_cores] + [self.output_coeffs])

    @coeffs.setter
    def coeffs(self, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_params,):
            raise ValueError("coefficient vector has wrong length")
        off = 0
        for m, size in enumerate(self._free_sizes):
            self.free_cores[m] = vec[off:off + size].reshape(self.core_shapes[m])
            off += size
        self.output_coeffs = vec[off:].copy()

    def assembled(self) -> TensorTrain:
        ell = self.output_pos
        cores = list(self.free_cores)
        cores.append(assemble_core(self.output_basis, self.output_coeffs,
                                   self.core_shapes[ell]))
        for m in range(ell - 1, 0, -1):
            cores.append(self._mirror_interior(self.free_cores[m]))
        cores.append(self._mirror_end(self.free_cores[0]))
        return TensorTrain(cores, ell, output_has_input=self.middle_input)

    def core_grads_to_param_grad(self, core_grads) -> np.ndarray:
        ell = self.output_pos
        d = self.d
        parts = []
        for m in range(ell):
            g = np.array(core_grads[m])
            mirrored = core_grads[d - 1 - m]
            if m == 0:
                g += self._mirror_end_adjoint(mirrored)
            else:
                g += self._mirror_interior_adjoint(mirrored)
            parts.append(g.ravel())
        parts.append(self.output_basis.T @ core_grads[ell].ravel())
        return np.concatenate(parts)

    @property
    def strand_length(self) -> int:
        return self.d if self.middle_input else self.d - 1


def build_rc_ttn(d: int, bond_dim: int, *, middle_input: bool = True,
                 seed: int = 0, noise: float = 1e-3) -> RCTensorTrain:
    """Reverse-complement invariant train over one-hot AGTC inputs.

    With `middle_input` the output core also reads a symbol (odd strand
    lengths, strand length `d`); without it the middle core is a pure output
    core (even strand lengths, strand length ``d - 1``).
    """
    return RCTensorTrain(d, bond_dim, middle_input, seed=seed, noise=noise)


def onehot_strand(strand: str) -> list[np.ndarray]:
    """One-hot encode a nucleotide strand on the AGTC basis."""
    vecs = []
    for sym in strand:
        idx = DNA_ALPHABET.find(sym)
        if idx < 0:
            raise ValueError(f"invalid symbol {sym!r}; expected one of ACGT")
        v = np.zeros(4)
        v[idx] = 1.0
        vecs.append(v)
    return vecs


def rc_invariance_deviation(model: RCTensorTrain, trials: int = 100,
                            seed: int = 0) -> float:
    """Largest output difference between random strands and their
    reverse complements."""
    tt = model.assembled()
    length = model.strand_length
    rng = named_rng(seed, "rc-check")
    worst = 0.0
    for _ in range(trials):
        strand = "".join(DNA_ALPHABET[i] for i in rng.integers(0, 4, size=length))
        flipped = reverse_complement(strand)
        out = evaluate(tt, onehot_strand(strand))
        out_rc = evaluate(tt, onehot_strand(flipped))
        worst = max(worst, float(np.linalg.norm(out - out_rc)))
    return worst


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(model, path, group_spec=None):
    """Serialize a model to JSON.

    Plain models store their cores; invariant and mirrored models store the
    builder configuration plus the coefficient vector, and are rebuilt on
    load (basis construction is deterministic on a given platform).
    """
    doc: dict = {"version": CHECKPOINT_VERSION, "kind": model.kind}
    if group_spec is not None:
        doc["group_spec"] = group_spec
    if model.kind == "plain":
        tt = model.assembled()
        doc.update({
            "output_pos": tt.output_pos,
            "output_has_input": tt.output_has_input,
            "core_shapes": [list(c.shape) for c in tt.cores],
            "cores": [c.ravel().tolist() for c in tt.cores],
        })
    elif model.kind == "invariant":
        doc.update({
            "d": model.d,
            "bond_dim": model.bond_dim,
            "output_pos": model.output_pos,
            "input_reps": [m.tolist() for m in model.input_reps],
            "bond_reps": [m.tolist() for m in model.bond_reps],
            "output_reps": [m.tolist() for m in model.output_reps],
            "coefficients": model.coeffs.tolist(),
        })
    elif model.kind == "rc":
        doc.update({
            "d": model.d,
            "bond_dim": model.bond_dim,
            "middle_input": model.middle_input,
            "coefficients": model.coeffs.tolist(),
        })
    else:
        raise ValueError(f"unknown model kind {model.kind!r}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    kind = doc["kind"]
    if kind == "plain":
        cores = [np.array(flat, dtype=float).reshape(shape)
                 for flat, shape in zip(doc["cores"], doc["core_shapes"])]
        return PlainTTN(TensorTrain(cores, doc["output_pos"], doc["output_has_input"]))
    if kind == "invariant":
        model = build_invariant_ttn(
            doc["d"], doc["bond_dim"],
            [np.array(m, dtype=float) for m in doc["input_reps"]],
            [np.array(m, dtype=float) for m in doc["bond_reps"]],
            [np.array(m, dtype=float) for m in doc["output_reps"]],
            output_pos=doc["output_pos"],
        )
        model.coeffs = np.array(doc["coefficients"], dtype=float)
        return model
    if kind == "rc":
        model = build_rc_ttn(doc["d"], doc["bond_dim"], middle_input=doc["middle_input"])
        model.coeffs = np.array(doc["coefficients"], dtype=float)
        return model
    raise ValueError(f"unknown checkpoint kind {kind!r}")
