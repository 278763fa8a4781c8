import json

import numpy as np
import pytest

from gittn.errors import CapExceededError, RelationVerificationError
from gittn.groups import (
    GeneratorRep,
    InvariantProblem,
    RepMatrix,
    combine,
    dualize,
    enumerate_group,
    matrix_from_spec,
    octahedral_generators,
    parse_group_spec,
    standard_representation,
)


class TestStandardRepresentations:
    def test_cyclic_shift_structure(self):
        u = standard_representation("cyclic_shift", 3).entries.real
        expected = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float)
        assert np.array_equal(u, expected)

    def test_cyclic_shift_rolls_up(self, rng):
        n = 5
        u = standard_representation("cyclic_shift", n).entries.real
        v = rng.standard_normal(n)
        assert np.allclose(u @ v, np.roll(v, -1))

    def test_reverser(self):
        u = standard_representation("reverser", 2).entries.real
        assert np.array_equal(u, [[0, 1], [1, 0]])
        u4 = standard_representation("reverser", 4).entries.real
        v = np.arange(4.0)
        assert np.allclose(u4 @ v, v[::-1])

    def test_swap_block_structure(self):
        u = standard_representation("swap", 4, i=1, j=2).entries.real
        expected = np.zeros((4, 4))
        expected[0, 1] = expected[1, 0] = expected[2, 2] = expected[3, 3] = 1.0
        assert np.array_equal(u, expected)

    def test_swap_requires_ordered_indices(self):
        with pytest.raises(ValueError):
            standard_representation("swap", 4, i=2, j=2)
        with pytest.raises(ValueError):
            standard_representation("swap", 4, i=0, j=2)

    def test_trivial(self):
        assert np.array_equal(standard_representation("trivial", 3).entries.real, np.eye(3))

    def test_small_dims_rejected(self):
        with pytest.raises(ValueError):
            standard_representation("cyclic_shift", 1)

    @pytest.mark.parametrize("n", [4, 8, 12])
    def test_dicyclic_partner_has_no_signed_reverser(self, n):
        # the commutation relation forces a constant sign, and neither sign
        # squares to the half shift, so the verified search must fail
        with pytest.raises(RelationVerificationError):
            standard_representation("dicyclic_partner", n)

    def test_dicyclic_partner_needs_multiple_of_four(self):
        with pytest.raises(ValueError):
            standard_representation("dicyclic_partner", 6)

    def test_normality_enforced(self):
        for kind, kwargs in [("cyclic_shift", {}), ("reverser", {}),
                             ("swap", {"i": 1, "j": 3})]:
            m = standard_representation(kind, 5, **kwargs)
            a = m.entries
            assert np.linalg.norm(a.conj().T @ a - a @ a.conj().T) <= 1e-10


class TestRepMatrix:
    def test_rejects_non_normal(self):
        with pytest.raises(ValueError, match="not normal"):
            RepMatrix(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_rejects_singular(self):
        with pytest.raises(ValueError, match="singular"):
            RepMatrix(np.array([[1.0, 0.0], [0.0, 0.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            RepMatrix(np.ones((2, 3)))

    def test_entries_immutable(self):
        m = standard_representation("reverser", 3)
        with pytest.raises(ValueError):
            m.entries[0, 0] = 5.0


class TestDualize:
    def test_identity_self_dual(self):
        assert np.allclose(dualize(RepMatrix(np.eye(3))).entries, np.eye(3))

    def test_orthogonal_self_dual(self):
        for n in (2, 3, 6):
            u = standard_representation("reverser", n)
            assert np.linalg.norm(dualize(u).entries - u.entries) <= 1e-10

    def test_diagonal_example(self):
        m = RepMatrix(np.diag([2.0, 0.5]))
        assert np.allclose(dualize(m).entries, np.diag([0.5, 2.0]))

    @pytest.mark.parametrize("seed", range(5))
    def test_involution_on_random_normal(self, seed):
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        vals = np.exp(1j * rng.uniform(0, 2 * np.pi, 4)) * rng.uniform(0.5, 2.0, 4)
        m = RepMatrix(q @ np.diag(vals) @ q.conj().T)
        twice = dualize(dualize(m))
        assert np.linalg.norm(twice.entries - m.entries) <= 1e-10


class TestCombine:
    def test_direct_sum_identity(self):
        out = combine(RepMatrix(np.eye(2)), RepMatrix(np.eye(3)), "direct_sum")
        assert np.array_equal(out.entries.real, np.eye(5))

    def test_tensor_product_octahedral_factor(self):
        # the 8-dim generator-c matrix factors as identity (x) flip
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        out = combine(RepMatrix(np.eye(4)), RepMatrix(swap), "tensor_product")
        _, expected = octahedral_generators("tensor")[2]
        assert np.allclose(out.entries, expected.entries)

    def test_tensor_product_of_shifts(self):
        u = standard_representation("cyclic_shift", 2)
        out = combine(u, u, "tensor_product").entries.real
        expected = np.kron(u.entries.real, u.entries.real)
        assert np.array_equal(out, expected)
        assert np.array_equal(out @ out, np.eye(4))

    def test_normality_preserved(self, rng):
        diag = RepMatrix(np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 3))))
        perm = standard_representation("cyclic_shift", 4)
        for mode in ("direct_sum", "tensor_product"):
            combine(diag, perm, mode)  # RepMatrix validation would raise

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            combine(RepMatrix(np.eye(2)), RepMatrix(np.eye(2)), "hadamard")


class TestEnumerateGroup:
    def test_parity_rep_has_order_two(self, parity_problem):
        assert enumerate_group(parity_problem(2)).order == 2

    def test_single_mode_c4(self):
        u = standard_representation("cyclic_shift", 4)
        problem = InvariantProblem.from_representations([[u]])
        assert enumerate_group(problem).order == 4

    def test_trivial_generators(self):
        problem = InvariantProblem.from_representations([[RepMatrix(np.eye(2))] * 2])
        assert enumerate_group(problem).order == 1

    @pytest.mark.parametrize("n", range(2, 13))
    def test_cyclic_order(self, n):
        u = standard_representation("cyclic_shift", n)
        problem = InvariantProblem.from_representations([[u, u]])
        assert enumerate_group(problem).order == n

    def test_dihedral_and_symmetric_orders(self):
        uc = standard_representation("cyclic_shift", 4)
        ur = standard_representation("reverser", 4)
        us = standard_representation("swap", 4, i=1, j=2)
        d4 = InvariantProblem.from_representations([[uc], [ur]])
        assert enumerate_group(d4).order == 8
        s4 = InvariantProblem.from_representations([[uc], [us]])
        assert enumerate_group(s4).order == 24

    def test_cap_exceeded(self):
        u = standard_representation("cyclic_shift", 6)
        problem = InvariantProblem.from_representations([[u]])
        with pytest.raises(CapExceededError):
            enumerate_group(problem, cap=3)

    def test_contains_identity(self, parity_problem):
        group = enumerate_group(parity_problem(2))
        ids = [all(np.allclose(m, np.eye(m.shape[0])) for m in tup)
               for tup in group.elements]
        assert any(ids)


class TestInvariantProblem:
    def test_mode_count_mismatch(self):
        swap = standard_representation("swap", 2, i=1, j=2)
        with pytest.raises(ValueError):
            InvariantProblem(
                mode_dims=(2, 2),
                dual_flags=(False, False),
                generators=(GeneratorRep("g", (swap,)),),
            )

    def test_dimension_mismatch_between_generators(self):
        swap = standard_representation("swap", 2, i=1, j=2)
        rev3 = standard_representation("reverser", 3)
        with pytest.raises(ValueError):
            InvariantProblem.from_representations([[swap, swap], [swap, rev3]])
        # heterogeneous mode dims are fine as long as generators agree
        InvariantProblem.from_representations([[swap, rev3], [swap, rev3]])

    def test_needs_generators(self):
        with pytest.raises(ValueError):
            InvariantProblem(mode_dims=(2,), dual_flags=(False,), generators=())

    def test_dual_flags_applied(self):
        m = RepMatrix(np.diag([1j, -1j]))
        problem = InvariantProblem.from_representations([[m, m]], dual_flags=[True, False])
        stored = problem.generator_arrays(0)
        assert np.allclose(stored[0], np.diag([-1j, 1j]))  # inverse transpose
        assert np.allclose(stored[1], np.diag([1j, -1j]))

    def test_total_dim(self, parity_problem):
        assert parity_problem(3).total_dim == 8


class TestGroupSpecs:
    def test_parse_round_trip(self, group_spec_doc):
        problem = parse_group_spec(group_spec_doc(d=3))
        assert problem.d == 3
        assert problem.s == 1
        assert problem.mode_dims == (2, 2, 2)
        assert problem.generators[0].label == "flip"

    def test_dense_spec_with_imaginary_part(self):
        spec = {"kind": "dense", "re": [[0.0, 0.0], [0.0, 0.0]],
                "im": [[1.0, 0.0], [0.0, -1.0]]}
        m = matrix_from_spec(spec)
        assert np.allclose(m.entries, np.diag([1j, -1j]))

    def test_nested_combo_requires_dim(self):
        spec = {"kind": "kron",
                "a": {"kind": "cyclic_shift", "dim": 2},
                "b": {"kind": "reverser", "dim": 3}}
        assert matrix_from_spec(spec).n == 6
        with pytest.raises(ValueError, match="dim"):
            matrix_from_spec({"kind": "kron", "a": {"kind": "cyclic_shift"},
                              "b": {"kind": "reverser", "dim": 3}})

    def test_top_level_leaf_uses_mode_dim(self):
        doc = {"modes": [{"dim": 4}], "generators": [
            {"label": "c", "per_mode": [{"kind": "cyclic_shift"}]}]}
        problem = parse_group_spec(doc)
        assert problem.mode_dims == (4,)

    def test_size_mismatch_rejected(self):
        doc = {"modes": [{"dim": 3}], "generators": [
            {"label": "c", "per_mode": [{"kind": "cyclic_shift", "dim": 4}]}]}
        with pytest.raises(ValueError, match="does not match"):
            parse_group_spec(doc)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown matrix spec"):
            matrix_from_spec({"kind": "wavelet", "dim": 2})

    def test_missing_keys(self):
        with pytest.raises(ValueError):
            parse_group_spec({"modes": []})

    def test_dual_modes_dualized_on_load(self):
        doc = {
            "modes": [{"dim": 2, "dual": True}, {"dim": 2, "dual": False}],
            "generators": [{"label": "g", "per_mode": [
                {"kind": "dense", "re": [[0, 0], [0, 0]], "im": [[1, 0], [0, -1]]},
                {"kind": "dense", "re": [[0, 0], [0, 0]], "im": [[1, 0], [0, -1]]},
            ]}],
        }
        problem = parse_group_spec(doc)
        assert np.allclose(problem.generator_arrays(0)[0], np.diag([-1j, 1j]))
        assert np.allclose(problem.generator_arrays(0)[1], np.diag([1j, -1j]))

    def test_json_round_trip(self, tmp_path, group_spec_doc):
        from gittn.groups import load_group_spec

        path = tmp_path / "spec.json"
        path.write_text(json.dumps(group_spec_doc()))
        problem = load_group_spec(path)
        assert problem.total_dim == 8


class TestOctahedralGenerators:
    def test_dimensions(self):
        assert [m.n for _, m in octahedral_generators("natural")] == [3, 3, 3]
        assert [m.n for _, m in octahedral_generators("direct_sum")] == [5, 5, 5]
        assert [m.n for _, m in octahedral_generators("tensor")] == [8, 8, 8]

    def test_natural_matrices(self):
        gens = dict(octahedral_generators("natural"))
        assert np.array_equal(gens["a"].entries.real, -np.eye(3))
        assert np.array_equal(gens["c"].entries.real, np.diag([-1.0, -1.0, 1.0]))
        b = gens["b"].entries.real
        assert np.array_equal(b @ b @ b, np.eye(3))

    @pytest.mark.parametrize("variant,order", [
        # the 3-dim generators produce all 8 sign patterns but only the
        # cyclic permutations (b is a 3-cycle), hence order 8 * 3
        ("natural", 24),
        ("direct_sum", 48),
        ("tensor", 48),
    ])
    def test_generated_group_orders(self, variant, order):
        problem = InvariantProblem.from_representations(
            [[m] for _, m in octahedral_generators(variant)]
        )
        assert enumerate_group(problem, cap=100).order == order
