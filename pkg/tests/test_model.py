import numpy as np
import pytest

from errors import ModelInvalidError, SequenceInvalidError
from helpers import all_sequences, explicit_cost
from model import (ControlSequence, KoopmanModel, cost, final_state, identity_model, random_sequence,
                   sequence_count, validate_sequence)
from synthetic import random_model


class TestCost:
    def test_identity_dynamics_cost_is_c_psi1(self, constant_model):
        for u in [(0, 0, 0, 0), (2, 1, 0, 2), (1, 1, 1, 1)]:
            assert cost(constant_model, u) == 2.0

    def test_identity_dynamics_any_horizon(self):
        for T in (1, 5, 17):
            m = identity_model(2, T, 2, c=[1.0, 0.0], psi1=[2.0, 3.0])
            assert cost(m, [1] * T) == 2.0

    def test_scalar_scaling(self, scalar_model):
        assert cost(scalar_model, (0,)) == 2.0
        assert cost(scalar_model, (1,)) == 3.0

    def test_matches_explicit_matrix_product(self):
        model = random_model(3, 4, 2, seed=3)
        seqs = all_sequences(model)
        assert len(seqs) == 16
        for u in seqs:
            expected = explicit_cost(model, u)
            assert cost(model, u) == pytest.approx(expected, rel=1e-12, abs=1e-15)

    def test_final_state_is_forward_product(self, small_model):
        u = (1, 0, 1, 1)
        x = small_model.psi1
        for a in u:
            x = small_model.A[a] @ x
        np.testing.assert_array_equal(final_state(small_model, u), x)

    def test_accepts_control_sequence(self, scalar_model):
        assert cost(scalar_model, ControlSequence((1,))) == 3.0


class TestSequenceValidation:
    def test_wrong_length(self, small_model):
        with pytest.raises(SequenceInvalidError):
            cost(small_model, (0, 1))

    def test_masked_action(self, small_model):
        masked = small_model.with_mask([(0, 1), (0,), (0, 1), (1,)])
        assert validate_sequence(masked, (1, 0, 0, 1)) == ControlSequence((1, 0, 0, 1))
        with pytest.raises(SequenceInvalidError, match="step 1"):
            validate_sequence(masked, (0, 1, 0, 1))

    def test_unknown_action(self, scalar_model):
        with pytest.raises(SequenceInvalidError):
            cost(scalar_model, (2,))

    def test_random_sequence_respects_mask(self, small_model):
        masked = small_model.with_mask([(1,), (0,), (0, 1), (1,)])
        rng = np.random.default_rng(0)
        for _ in range(20):
            u = random_sequence(masked, rng)
            validate_sequence(masked, u)
            assert u[0] == 1 and u[1] == 0 and u[3] == 1


class TestSequenceCount:
    def test_large_count_is_exact(self):
        model = identity_model(1, 40, 4, c=[1.0], psi1=[1.0])
        assert sequence_count(model) == 1208925819614629174706176
        assert sequence_count(model) == 4 ** 40

    def test_single_action(self):
        assert sequence_count(identity_model(1, 9, 1, c=[1.0], psi1=[1.0])) == 1

    def test_mask_product(self):
        model = identity_model(1, 2, 3, c=[1.0], psi1=[1.0]).with_mask([(0, 1, 2), (0, 2)])
        assert sequence_count(model) == 6


class TestModelValidation:
    def test_non_square(self):
        with pytest.raises(ModelInvalidError, match="square"):
            KoopmanModel(A=np.ones((2, 2, 3)), c=[1, 1], psi1=[1, 1], horizon=1)

    def test_wrong_c_length(self):
        with pytest.raises(ModelInvalidError, match="c has length"):
            KoopmanModel(A=np.ones((1, 2, 2)), c=[1, 1, 1], psi1=[1, 1], horizon=1)

    def test_non_finite(self):
        A = np.ones((1, 2, 2))
        A[0, 0, 1] = np.nan
        with pytest.raises(ModelInvalidError, match="non-finite"):
            KoopmanModel(A=A, c=[1, 1], psi1=[1, 1], horizon=1)

    def test_horizon_positive(self):
        with pytest.raises(ModelInvalidError):
            KoopmanModel(A=np.ones((1, 1, 1)), c=[1], psi1=[1], horizon=0)

    @pytest.mark.parametrize("horizon", [2.7, True, np.bool_(True), "3", -1, float("nan"), None])
    def test_horizon_must_be_integral(self, horizon):
        with pytest.raises(ModelInvalidError, match="horizon"):
            KoopmanModel(A=np.ones((1, 1, 1)), c=[1], psi1=[1], horizon=horizon)

    @pytest.mark.parametrize("horizon", [np.int64(3), 3.0])
    def test_horizon_integral_values_accepted(self, horizon):
        model = KoopmanModel(A=np.ones((1, 1, 1)), c=[1], psi1=[1], horizon=horizon)
        assert model.horizon == 3 and type(model.horizon) is int

    def test_empty_mask_step(self):
        with pytest.raises(ModelInvalidError, match="empty"):
            KoopmanModel(A=np.ones((2, 1, 1)), c=[1], psi1=[1], horizon=2, action_mask=[(0,), ()])

    def test_mask_unknown_action(self):
        with pytest.raises(ModelInvalidError, match="unknown action"):
            KoopmanModel(A=np.ones((2, 1, 1)), c=[1], psi1=[1], horizon=1, action_mask=[(0, 5)])

    def test_labels(self):
        m = KoopmanModel(A=np.ones((2, 1, 1)), c=[1], psi1=[1], horizon=1, actions=("left", "right"))
        assert ControlSequence((1,)).labels(m) == ["right"]
        with pytest.raises(ModelInvalidError, match="unique"):
            KoopmanModel(A=np.ones((2, 1, 1)), c=[1], psi1=[1], horizon=1, actions=("x", "x"))

    def test_default_labels(self, scalar_model):
        assert scalar_model.actions == ("0", "1")

    def test_arrays_are_read_only(self, small_model):
        with pytest.raises(ValueError):
            small_model.A[0, 0, 0] = 1.0

    def test_input_arrays_are_copied(self):
        A = np.ones((1, 2, 2))
        m = KoopmanModel(A=A, c=[1, 0], psi1=[1, 1], horizon=2)
        A[0] = 0.0
        assert cost(m, (0, 0)) == 4.0

    def test_with_horizon_drops_mask(self, small_model):
        masked = small_model.with_mask([(0,), (0, 1), (1,), (0,)])
        longer = masked.with_horizon(6)
        assert longer.horizon == 6
        assert longer.action_mask is None
        assert longer.allowed(5) == (0, 1)
