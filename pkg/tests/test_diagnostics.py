import math

import numpy as np
import pytest

import diagnostics
from diagnostics import (StateSpace, boltzmann, brute_force_min, convergence_profile, detailed_balance_residual,
                         enumerate_costs, enumerate_sequences, gibbs_kernel, global_balance_residual,
                         hoffman_bound, is_regular, joint_boltzmann, mixing_time_bound, naive_gibbs_sweep,
                         sample_complexity, stationary_distribution, sweep_kernel, tempering_kernel)
from errors import ConfigError, EnumerationRefused, NoUniqueStationary
from helpers import all_sequences, explicit_cost
from model import ControlSequence, KoopmanModel, cost, identity_model, validate_sequence
from solvers.tempering import Replica, gibbs_sweep
from synthetic import random_model
from utils.rng import make_stream


class TestEnumeration:
    def test_lexicographic_order(self, small_model):
        seqs = enumerate_sequences(small_model)
        assert [s.u for s in seqs] == all_sequences(small_model)
        space = StateSpace(small_model)
        for i, s in enumerate(seqs):
            assert space[i] == s
            assert space.index(s) == i

    def test_costs_match_explicit_products(self):
        model = random_model(4, 6, 3, seed=4)
        costs = enumerate_costs(model)
        for u, J in zip(all_sequences(model), costs):
            assert J == pytest.approx(explicit_cost(model, u), rel=1e-10, abs=1e-14)

    def test_blocked_expansion(self, monkeypatch):
        model = random_model(3, 5, 3, seed=9).with_mask([(0, 1, 2), (1, 2), (0,), (0, 1, 2), (2, 0)])
        monkeypatch.setattr(diagnostics, "_BLOCK", 4)
        costs = enumerate_costs(model)
        expected = [cost(model, u) for u in all_sequences(model)]
        np.testing.assert_allclose(costs, expected, rtol=1e-12, atol=1e-15)

    def test_identity_model_every_sequence_minimizes(self, constant_model):
        J_star, minimizers = brute_force_min(constant_model)
        assert J_star == 2.0
        assert len(minimizers) == 3 ** 4

    def test_scalar_oracle(self, scalar_model):
        J_star, minimizers = brute_force_min(scalar_model)
        assert J_star == 2.0
        assert minimizers == [ControlSequence((0,))]

    def test_cap_refusal_states_count(self):
        model = identity_model(1, 40, 4, c=[1.0], psi1=[1.0])
        with pytest.raises(EnumerationRefused) as exc:
            brute_force_min(model)
        assert "1208925819614629174706176" in str(exc.value)
        assert exc.value.count == 4 ** 40
        assert exc.value.exit_code == 5

    def test_explicit_cap(self, small_model):
        with pytest.raises(EnumerationRefused):
            enumerate_costs(small_model, cap=15)
        assert len(enumerate_costs(small_model, cap=16)) == 16


class TestBoltzmann:
    def test_zero_beta_uniform(self, small_model):
        dist = boltzmann(small_model, 0.0)
        np.testing.assert_allclose(dist.probs, 1 / 16, atol=1e-15)
        assert dist.partition == pytest.approx(16.0)

    def test_two_point(self):
        model = KoopmanModel(A=[[[0.0]], [[1.0]]], c=[1.0], psi1=[1.0], horizon=1)
        dist = boltzmann(model, math.log(2))
        np.testing.assert_allclose(dist.probs, [2 / 3, 1 / 3], atol=1e-12)
        assert dist.partition == pytest.approx(1.5, rel=1e-12)

    def test_definition(self, small_model):
        dist = boltzmann(small_model, 1.7)
        costs = enumerate_costs(small_model)
        np.testing.assert_allclose(dist.probs, np.exp(-1.7 * costs) / dist.partition, atol=1e-12)
        assert dist.probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_concentrates_on_minimizer(self, separated_model):
        _, minimizers = brute_force_min(separated_model)
        space = StateSpace(separated_model)
        dist = boltzmann(separated_model, 50.0)
        mass = sum(dist.probs[space.index(u)] for u in minimizers)
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_negative_beta(self, small_model):
        with pytest.raises(ConfigError):
            boltzmann(small_model, -1.0)


class TestKernels:
    def test_forced_coordinate_is_identity(self, tiny_model):
        masked = tiny_model.with_mask([(0, 1), (1,), (0, 1)])
        P = gibbs_kernel(masked, 2.0, 1).P
        np.testing.assert_array_equal(P, np.eye(4))

    @pytest.mark.parametrize("beta", [0.5, 2.0, 10.0])
    def test_detailed_balance_per_variable(self, tiny_model, beta):
        pi = boltzmann(tiny_model, beta).probs
        for t in range(tiny_model.horizon):
            assert detailed_balance_residual(gibbs_kernel(tiny_model, beta, t), pi) <= 1e-12

    def test_detailed_balance_larger_instance(self):
        model = random_model(3, 5, 3, seed=21)
        pi = boltzmann(model, 1.3).probs
        for t in range(model.horizon):
            assert detailed_balance_residual(gibbs_kernel(model, 1.3, t), pi) <= 1e-12

    def test_zero_beta_half_entries(self):
        model = random_model(2, 2, 2, seed=0)
        P = gibbs_kernel(model, 0.0, 0).P
        for row in P:
            assert sorted(row[row > 0].tolist()) == [0.5, 0.5]

    def test_sweep_global_balance(self, tiny_model):
        pi = boltzmann(tiny_model, 2.0).probs
        assert global_balance_residual(sweep_kernel(tiny_model, 2.0), pi) <= 1e-10

    def test_sweep_kernel_positive(self, tiny_model):
        P = sweep_kernel(tiny_model, 2.0).P
        assert np.all(P > 0)
        assert is_regular(P)

    def test_sweep_kernel_zero_beta(self, tiny_model):
        P = sweep_kernel(tiny_model, 0.0).P
        np.testing.assert_allclose(P, 1 / 8, atol=1e-15)

    def test_dense_cap(self, tiny_model):
        with pytest.raises(EnumerationRefused, match="dense"):
            sweep_kernel(tiny_model, 1.0, dense_cap=4)

    def test_time_index_checked(self, tiny_model):
        with pytest.raises(ConfigError):
            gibbs_kernel(tiny_model, 1.0, 3)


class TestStationary:
    def test_symmetric(self):
        np.testing.assert_allclose(stationary_distribution(np.array([[0.5, 0.5], [0.5, 0.5]])), [0.5, 0.5])

    def test_two_state_closed_form(self):
        pi = stationary_distribution(np.array([[0.9, 0.1], [0.2, 0.8]]))
        np.testing.assert_allclose(pi, [2 / 3, 1 / 3], atol=1e-12)

    def test_sweep_kernel_matches_boltzmann(self):
        model = random_model(3, 4, 2, seed=31)
        pi = stationary_distribution(sweep_kernel(model, 1.5))
        assert np.abs(pi - boltzmann(model, 1.5).probs).sum() <= 1e-8

    def test_not_regular(self):
        assert not is_regular(np.array([[0.0, 1.0], [1.0, 0.0]]))
        with pytest.raises(NoUniqueStationary):
            stationary_distribution(np.eye(2))

    def test_power_iteration_branch(self, monkeypatch):
        monkeypatch.setattr(diagnostics.config, "DENSE_STATE_CAP", 1)
        pi = stationary_distribution(np.array([[0.9, 0.1], [0.2, 0.8]]))
        np.testing.assert_allclose(pi, [2 / 3, 1 / 3], atol=1e-10)

    def test_geometric_convergence(self, tiny_model):
        P = sweep_kernel(tiny_model, 2.0)
        pi = boltzmann(tiny_model, 2.0).probs
        p0 = np.zeros(len(pi))
        p0[0] = 1.0
        residuals = convergence_profile(P, pi, p0, 6)
        assert residuals[0] > 0
        ratios = residuals[4:] / residuals[3:-1]
        assert np.all(ratios < 1)


class TestHoffman:
    def test_uniform(self):
        lam, mixing = hoffman_bound(np.array([[0.5, 0.5], [0.5, 0.5]]))
        assert lam == 0.0
        assert mixing == 1.0

    def test_hand_values(self):
        lam, mixing = hoffman_bound(np.array([[0.9, 0.1], [0.2, 0.8]]))
        assert lam == pytest.approx(0.7, abs=1e-12)
        assert mixing == pytest.approx(10 / 3, abs=1e-12)
        assert mixing_time_bound(lam) == pytest.approx(10 / 3, abs=1e-12)

    def test_zero_column_minimum(self):
        lam, mixing = hoffman_bound(np.eye(3))
        assert mixing == math.inf
        assert lam == 1.0

    def test_sweep_kernel_bound_is_finite(self, tiny_model):
        lam, mixing = hoffman_bound(sweep_kernel(tiny_model, 1.0))
        assert 0 <= lam < 1
        assert math.isfinite(mixing)
        # 1 / log(1 / lam) <= bound
        if lam > 0:
            assert 1 / math.log(1 / lam) <= mixing + 1e-12


class TestSampleComplexity:
    def test_full_minimizer_set(self):
        sc = sample_complexity(10, 10, 1.0, math.exp(-2), 1.0)
        assert sc.beta_required == 0.0
        assert sc.samples_required == 2

    def test_hand_values(self):
        sc = sample_complexity(16, 2, 1.0, 0.01, 3.0)
        assert sc.beta_required == pytest.approx(math.log(8), rel=1e-12)
        assert sc.samples_required == 6

    def test_infeasible_beta(self):
        sc = sample_complexity(16, 2, 1.0, 0.01, 2.0)
        assert not sc.feasible
        assert sc.samples_required is None

    @pytest.mark.parametrize("args", [(16, 2, 0.0, 0.1, 3.0), (16, 2, 1.0, 1.0, 3.0), (4, 8, 1.0, 0.1, 3.0)])
    def test_degenerate(self, args):
        with pytest.raises(ConfigError):
            sample_complexity(*args)

    def test_huge_counts(self):
        sc = sample_complexity(4 ** 40, 1, 1.0, 0.01, 100.0)
        assert sc.beta_required == pytest.approx(40 * math.log(4), rel=1e-12)
        assert sc.feasible

    def test_monte_carlo(self):
        model = random_model(3, 4, 2, seed=17)
        costs = enumerate_costs(model)
        order = np.sort(costs)
        J_star = order[0]
        n_star = int(np.sum(costs <= J_star + 1e-12))
        epsilon = 0.5 * (order[n_star] - J_star)
        delta = 0.1
        beta = 2.0 * math.log(len(costs) / n_star) / epsilon
        sc = sample_complexity(len(costs), n_star, epsilon, delta, beta)
        probs = boltzmann(model, beta).probs

        rng = np.random.default_rng(5)
        trials = 10_000
        draws = rng.choice(len(costs), size=(trials, sc.samples_required), p=probs)
        bad = np.all(costs[draws] >= J_star + epsilon, axis=1)
        se = math.sqrt(delta * (1 - delta) / trials)
        assert bad.mean() <= delta + 3 * se


class TestTemperingKernel:
    def test_joint_distribution_preserved(self):
        model = random_model(2, 2, 2, seed=3)
        betas = (0.5, 2.0)
        K = tempering_kernel(model, betas)
        target = joint_boltzmann(model, betas)
        assert K.shape == (16, 16)
        np.testing.assert_allclose(K.sum(axis=1), 1.0, atol=1e-12)
        assert global_balance_residual(K, target) <= 1e-10

    def test_three_temperatures(self):
        model = random_model(2, 2, 2, seed=4)
        betas = (0.3, 1.0, 4.0)
        assert global_balance_residual(tempering_kernel(model, betas), joint_boltzmann(model, betas)) <= 1e-10


class TestNaiveSweep:
    def test_returns_valid_sequence(self, small_model):
        rng = np.random.default_rng(0)
        u = (0, 0, 0, 0)
        for _ in range(5):
            u = naive_gibbs_sweep(small_model, u, 1.0, rng)
            validate_sequence(small_model, u)

    @pytest.mark.slow
    def test_empirical_distribution(self, tiny_model):
        beta, samples = 2.0, 200_000
        replica = Replica.start(tiny_model, beta, make_stream(3, 1))
        space = StateSpace(tiny_model)
        counts = np.zeros(len(space))
        for _ in range(1000):
            gibbs_sweep(tiny_model, replica)
        for _ in range(samples):
            gibbs_sweep(tiny_model, replica)
            counts[space.index(replica.u)] += 1
        tv = 0.5 * np.abs(counts / samples - boltzmann(tiny_model, beta).probs).sum()
        assert tv <= 0.01
