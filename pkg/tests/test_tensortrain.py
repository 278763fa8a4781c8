import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_ttn_apply
from gittn.learning import count_params
from gittn.tensortrain import (
    InvariantTTN,
    RCTensorTrain,
    TensorTrain,
    assemble_core,
    build_invariant_ttn,
    build_parity_invariant_ttn,
    build_plain_ttn,
    build_rc_ttn,
    evaluate,
    load_checkpoint,
    onehot_strand,
    rc_invariance_deviation,
    reverse_complement,
    save_checkpoint,
    verify_model_invariance,
)


def random_ttn(rng, d=4, bond=3, n_in=2, n_out=2, output_pos=None,
               output_has_input=True):
    ell = output_pos if output_pos is not None else (d - 1) // 2
    cores = []
    for m in range(d):
        if m == 0:
            cores.append(rng.standard_normal((n_in, bond)))
        elif m == d - 1:
            cores.append(rng.standard_normal((bond, n_in)))
        elif m == ell:
            shape = (n_in, bond, bond, n_out) if output_has_input else (bond, bond, n_out)
            cores.append(rng.standard_normal(shape))
        else:
            cores.append(rng.standard_normal((n_in, bond, bond)))
    return TensorTrain(cores, ell, output_has_input=output_has_input)


class TestTensorTrainStructure:
    def test_bond_mismatch_rejected(self, rng):
        cores = [rng.standard_normal((2, 3)), rng.standard_normal((2, 4, 3, 2)),
                 rng.standard_normal((3, 2))]
        with pytest.raises(ValueError, match="bond"):
            TensorTrain(cores, 1)

    def test_output_position_must_be_interior(self, rng):
        tt = random_ttn(rng)
        with pytest.raises(ValueError):
            TensorTrain(tt.cores, 0)

    def test_properties(self, rng):
        tt = random_ttn(rng, d=5, bond=3)
        assert tt.input_dims == [2] * 5
        assert tt.bond_dims == [3] * 4
        assert tt.output_dim == 2
        assert tt.input_positions == [0, 1, 2, 3, 4]

    def test_no_middle_input_positions(self, rng):
        tt = random_ttn(rng, d=5, output_has_input=False)
        assert tt.input_positions == [0, 1, 3, 4]


class TestEvaluate:
    def test_all_ones_bond_one(self):
        cores = [np.ones((2, 1)), np.ones((2, 1, 1, 3)), np.ones((1, 2))]
        tt = TensorTrain(cores, 1)
        out = evaluate(tt, [np.eye(2)[0], np.eye(2)[1], np.eye(2)[0]])
        assert np.allclose(out, np.ones(3))

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_dense_contraction(self, seed):
        rng = np.random.default_rng(seed)
        tt = random_ttn(rng, d=4, bond=3)
        xs = [rng.standard_normal(n) for n in tt.input_dims]
        assert np.allclose(evaluate(tt, xs), dense_ttn_apply(tt, xs), atol=1e-10)

    def test_rank_one_feature_contraction(self, rng):
        # feeding one-hot vectors picks entries of the dense tensor
        tt = random_ttn(rng, d=4, bond=2)
        xs = [np.eye(2)[rng.integers(0, 2)] for _ in range(4)]
        assert np.allclose(evaluate(tt, xs), dense_ttn_apply(tt, xs), atol=1e-12)

    def test_no_middle_input_variant(self, rng):
        tt = random_ttn(rng, d=5, output_has_input=False)
        xs = [rng.standard_normal(2) for _ in range(4)]
        assert np.allclose(evaluate(tt, xs), dense_ttn_apply(tt, xs), atol=1e-10)

    def test_wrong_input_count(self, rng):
        tt = random_ttn(rng)
        with pytest.raises(ValueError, match="inputs"):
            evaluate(tt, [np.zeros(2)] * 3)

    def test_wrong_input_length(self, rng):
        tt = random_ttn(rng)
        xs = [np.zeros(2)] * 3 + [np.zeros(5)]
        with pytest.raises(ValueError, match="shape"):
            evaluate(tt, xs)


class TestAssembleCore:
    def test_unit_vector_picks_basis_tensor(self, rng):
        basis = np.linalg.qr(rng.standard_normal((12, 4)))[0]
        core = assemble_core(basis, np.eye(4)[0], (2, 3, 2))
        assert np.allclose(core.ravel(), basis[:, 0])

    def test_zero_coefficients(self, rng):
        basis = np.linalg.qr(rng.standard_normal((8, 3)))[0]
        assert np.allclose(assemble_core(basis, np.zeros(3), (2, 2, 2)), 0.0)

    def test_projection_round_trip(self, rng):
        basis = np.linalg.qr(rng.standard_normal((8, 3)))[0]
        coeffs = rng.standard_normal(3)
        core = assemble_core(basis, coeffs, (2, 2, 2))
        assert np.allclose(basis.T @ core.ravel(), coeffs, atol=1e-10)

    def test_length_mismatch(self, rng):
        basis = np.linalg.qr(rng.standard_normal((8, 3)))[0]
        with pytest.raises(ValueError):
            assemble_core(basis, np.zeros(5), (2, 2, 2))


class TestBuildInvariantTTN:
    @pytest.mark.parametrize("d,b,expected", [(11, 4, 168), (13, 6, 444), (15, 10, 1420)])
    def test_parameter_counts(self, d, b, expected):
        model = build_parity_invariant_ttn(d, b)
        assert count_params(model) == expected
        assert model.n_params == expected

    def test_trivial_group_gives_dense_count(self):
        model = build_invariant_ttn(5, 2, np.eye(2), np.eye(2), np.eye(2))
        plain = build_plain_ttn(5, 2)
        assert count_params(model) == plain.n_params

    def test_incompatible_reps_raise(self):
        with pytest.raises(ValueError, match="empty invariant subspace"):
            build_invariant_ttn(5, 2, -np.eye(2), np.eye(2), np.eye(2))

    def test_assembled_cores_live_in_their_bases(self, rng):
        model = build_parity_invariant_ttn(7, 3, seed=5)
        model.coeffs = rng.standard_normal(model.n_params)
        tt = model.assembled()
        coeffs = model.project_coeffs(tt.cores)
        assert np.allclose(coeffs, model.coeffs, atol=1e-10)

    def test_generator_count_must_agree(self):
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(ValueError, match="generator count"):
            build_invariant_ttn(5, 2, [swap, np.eye(2)], np.eye(2), np.eye(2))

    def test_output_position_default_interior(self):
        model = build_parity_invariant_ttn(7, 2)
        assert model.output_pos == 3


class TestVerifyModelInvariance:
    def test_invariant_model_is_invariant(self):
        model = build_parity_invariant_ttn(7, 4, seed=0)
        assert verify_model_invariance(model, trials=10) <= 1e-6

    def test_trained_coefficients_stay_invariant(self, rng):
        model = build_parity_invariant_ttn(5, 3, seed=1)
        model.coeffs = rng.standard_normal(model.n_params)
        assert verify_model_invariance(model, trials=10) <= 1e-6

    def test_plain_model_is_not(self, rng):
        model = build_plain_ttn(5, 3, seed=2)
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        generators = [([swap] * 5, swap)]
        assert verify_model_invariance(model.assembled(), generators, trials=10) > 1e-6

    def test_trivial_action_gives_zero(self):
        model = build_plain_ttn(4, 2, seed=3)
        generators = [([np.eye(2)] * 4, np.eye(2))]
        assert verify_model_invariance(model.assembled(), generators, trials=5) == 0.0

    def test_plain_train_requires_generators(self, rng):
        with pytest.raises(ValueError):
            verify_model_invariance(random_ttn(rng), trials=2)


class TestReverseComplement:
    def test_single_symbols_default_pairing(self):
        assert reverse_complement("A") == "C"
        assert reverse_complement("C") == "A"
        assert reverse_complement("G") == "T"
        assert reverse_complement("T") == "G"

    def test_empty(self):
        assert reverse_complement("") == ""

    def test_invalid_symbol(self):
        with pytest.raises(ValueError, match="invalid symbol"):
            reverse_complement("AXG")

    def test_unknown_pairing(self):
        with pytest.raises(ValueError):
            reverse_complement("A", pairing="hoogsteen")

    def test_watson_crick_worked_example(self):
        assert reverse_complement("AGTGC", pairing="watson_crick") == "GCACT"

    def test_default_pairing_differs_from_watson_crick(self):
        # the two pairings are genuinely different actions
        assert reverse_complement("AGTGC") == "ATGTC"

    @settings(max_examples=50, deadline=None)
    @given(st.text(alphabet="ACGT", max_size=12),
           st.sampled_from(["reverser", "watson_crick"]))
    def test_involution(self, strand, pairing):
        assert reverse_complement(reverse_complement(strand, pairing), pairing) == strand

    def test_matches_reverser_matrix_action(self):
        # complementing a one-hot symbol equals applying the 4-dim reverser
        ur = np.fliplr(np.eye(4))
        for sym in "AGTC":
            lifted = ur @ onehot_strand(sym)[0]
            assert np.allclose(lifted, onehot_strand(reverse_complement(sym))[0])


class TestRCTensorTrain:
    def test_structure_counts(self):
        model = build_rc_ttn(5, 2)
        tt = model.assembled()
        assert tt.n_cores == 5
        assert len(model.free_cores) == 2  # cores 3 and 4 are derived
        assert model.output_pos == 2

    def test_requires_odd_core_count(self):
        with pytest.raises(ValueError):
            build_rc_ttn(4, 2)

    def test_output_core_constraint_residual(self):
        model = build_rc_ttn(5, 3, seed=7)
        core = model.assembled().cores[model.output_pos]
        ur4 = np.fliplr(np.eye(4))
        urb = np.fliplr(np.eye(3))
        acted = np.einsum("iI,aA,bB,oO,IABO->iabo", ur4, urb, urb, np.eye(2), core)
        assert np.linalg.norm(core - acted.transpose(0, 2, 1, 3)) <= 1e-10

    def test_mirror_relations_on_assembled_cores(self):
        model = build_rc_ttn(7, 2, seed=3)
        tt = model.assembled()
        d = model.d
        ur4, urb = model.u_in, model.u_bond
        # end cores: last equals the complement-conjugated transpose of the first
        assert np.allclose(tt.cores[d - 1],
                           np.einsum("iI,aG,IG->ai", ur4, urb, tt.cores[0]), atol=1e-12)
        # interior mirror with bond transposition
        for m in range(1, model.output_pos):
            mirrored = np.einsum("iI,aG,bg,IgG->iab", ur4, urb, urb, tt.cores[m])
            assert np.allclose(tt.cores[d - 1 - m], mirrored, atol=1e-12)

    def test_mirror_is_involution(self, rng):
        model = build_rc_ttn(5, 3)
        core = rng.standard_normal((4, 3, 3))
        assert np.allclose(model._mirror_interior(model._mirror_interior(core)), core)

    @pytest.mark.parametrize("length", [5, 7])
    def test_rc_commutation(self, length):
        model = build_rc_ttn(length, 2, seed=11)
        assert rc_invariance_deviation(model, trials=50, seed=0) <= 1e-10

    def test_even_variant_commutation(self):
        model = build_rc_ttn(5, 2, middle_input=False, seed=13)
        assert model.strand_length == 4
        assert rc_invariance_deviation(model, trials=50, seed=0) <= 1e-10

    def test_commutation_survives_random_parameters(self, rng):
        model = build_rc_ttn(5, 2, seed=17)
        model.coeffs = rng.standard_normal(model.n_params)
        assert rc_invariance_deviation(model, trials=30, seed=1) <= 1e-10

    def test_unconstrained_model_fails_commutation(self, rng):
        plain = build_plain_ttn(5, 2, n_in=4, seed=19)

        class Shim:
            def __init__(self, tt):
                self.tt = tt
                self.strand_length = 5

            def assembled(self):
                return self.tt

        assert rc_invariance_deviation(Shim(plain.assembled()), trials=30, seed=0) > 1e-6


class TestCheckpoints:
    def _outputs(self, model, xs):
        return evaluate(model.assembled(), xs)

    def test_plain_round_trip(self, tmp_path, rng):
        model = build_plain_ttn(5, 3, seed=1)
        path = tmp_path / "plain.json"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        xs = [rng.standard_normal(2) for _ in range(5)]
        assert np.allclose(self._outputs(model, xs), self._outputs(loaded, xs))

    def test_invariant_round_trip(self, tmp_path, rng):
        model = build_parity_invariant_ttn(7, 3, seed=2)
        model.coeffs = rng.standard_normal(model.n_params)
        path = tmp_path / "invariant.json"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        assert isinstance(loaded, InvariantTTN)
        xs = [rng.standard_normal(2) for _ in range(7)]
        assert np.allclose(self._outputs(model, xs), self._outputs(loaded, xs), atol=1e-12)

    def test_rc_round_trip(self, tmp_path, rng):
        model = build_rc_ttn(5, 2, seed=3)
        model.coeffs = rng.standard_normal(model.n_params)
        path = tmp_path / "rc.json"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        assert isinstance(loaded, RCTensorTrain)
        xs = onehot_strand("AGTCA")
        assert np.allclose(self._outputs(model, xs), self._outputs(loaded, xs), atol=1e-12)

    def test_version_check(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"version": 99, "kind": "plain"}')
        with pytest.raises(ValueError, match="version"):
            load_checkpoint(path)
