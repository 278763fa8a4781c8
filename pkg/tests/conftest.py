"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's own machinery: group
elements are enumerated from first principles (powers, permutations),
projectors are averaged densely, tensors are contracted through einsum, and
gradients come from central differences.
"""

import itertools
import string
from functools import reduce

import numpy as np
import pytest


# ---------------------------------------------------------------------------
# group-element oracles
# ---------------------------------------------------------------------------


def cyclic_matrices(n):
    """All powers of the upward circular shift."""
    u = np.zeros((n, n))
    u[np.arange(n), (np.arange(n) + 1) % n] = 1.0
    return [np.linalg.matrix_power(u, k) for k in range(n)]


def dihedral_matrices(n):
    """Rotations and reflections of the regular n-gon on cyclic coordinates."""
    r = np.fliplr(np.eye(n))
    out = []
    for c in cyclic_matrices(n):
        out.append(c)
        out.append(c @ r)
    return out


def permutation_matrices(n):
    out = []
    for perm in itertools.permutations(range(n)):
        m = np.zeros((n, n))
        for i, j in enumerate(perm):
            m[j, i] = 1.0
        out.append(m)
    return out


def parity_matrices():
    return [np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]])]


def projector_from_elements(elements, d):
    """Dense averaging projector of ``element^{(x d)}`` actions."""
    n = elements[0].shape[0]
    p = np.zeros((n**d, n**d), dtype=complex)
    for g in elements:
        p += reduce(np.kron, [g] * d)
    return p / len(elements)


def projector_rank(p, tol=1e-8):
    s = np.linalg.svd(p, compute_uv=False)
    return int(np.count_nonzero(s > tol))


# ---------------------------------------------------------------------------
# dense tensor-train oracle
# ---------------------------------------------------------------------------


def dense_ttn_tensor(tt):
    """Materialize the represented tensor by explicit core contraction."""
    letters = iter(string.ascii_lowercase)
    d = tt.n_cores
    bond = [next(letters) for _ in range(d - 1)]
    inp = {pos: next(letters) for pos in tt.input_positions}
    out_letter = next(letters)
    subs = []
    for m in range(d):
        if m == 0:
            subs.append(inp[0] + bond[0])
        elif m == d - 1:
            subs.append(bond[d - 2] + inp[m])
        elif m == tt.output_pos:
            prefix = inp[m] if tt.output_has_input else ""
            subs.append(prefix + bond[m - 1] + bond[m] + out_letter)
        else:
            subs.append(inp[m] + bond[m - 1] + bond[m])
    out_subs = "".join(inp[p] for p in tt.input_positions) + out_letter
    return np.einsum(",".join(subs) + "->" + out_subs, *tt.cores)


def dense_ttn_apply(tt, inputs):
    """Contract the dense tensor with the rank-1 input, one mode at a time."""
    dense = dense_ttn_tensor(tt)
    for x in inputs:
        dense = np.tensordot(np.asarray(x), dense, axes=(0, 0))
    return dense


# ---------------------------------------------------------------------------
# finite-difference gradient oracle
# ---------------------------------------------------------------------------


def central_difference_gradient(model, feats, labels, l2, step=1e-6):
    from gittn.learning import forward_loss

    base = model.coeffs
    grad = np.zeros_like(base)
    for k in range(base.size):
        delta = np.zeros_like(base)
        delta[k] = step
        model.coeffs = base + delta
        up, _ = forward_loss(model, feats, labels, l2)
        model.coeffs = base - delta
        down, _ = forward_loss(model, feats, labels, l2)
        grad[k] = (up - down) / (2.0 * step)
    model.coeffs = base
    return grad


# ---------------------------------------------------------------------------
# shared fixtures
# ---------------------------------------------------------------------------


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def parity_problem():
    from gittn.groups import InvariantProblem, standard_representation

    def build(d):
        swap = standard_representation("swap", 2, i=1, j=2)
        return InvariantProblem.from_representations([[swap] * d], labels=["flip"])

    return build


@pytest.fixture
def group_spec_doc():
    def build(d=3, dim=2):
        return {
            "modes": [{"dim": dim, "dual": False}] * d,
            "generators": [
                {"label": "flip", "per_mode": [{"kind": "swap", "i": 1, "j": 2}] * d}
            ],
        }

    return build
