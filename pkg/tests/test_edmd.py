import math

import numpy as np
import pytest

from diagnostics import brute_force_min
from edmd import (ObservableBasis, Trajectory, TrajectoryDataset, fit_koopman, fit_residuals, lift,
                  lift_categories, lift_state)
from errors import BasisError, DatasetError, RankDeficientFit, UnderdeterminedFit
from model import KoopmanModel, cost
from synthetic import (TOY_ACTIONS, grid_centers, random_matrices, switched_linear_dataset, toy_particle_dataset,
                       toy_step)


class TestLift:
    def test_point_on_center(self):
        basis = ObservableBasis(centers=[[0.0, 0.0], [1.0, 1.0]], lam=3.0)
        psi = lift(basis, [[1.0, 1.0]])
        assert psi[1] == 1.0
        assert psi[0] == pytest.approx(math.exp(-6.0))

    def test_wide_lambda_decay(self):
        basis = ObservableBasis(centers=[[0.0]], lam=100.0)
        assert lift(basis, [[1.0]])[0] < 1e-40

    def test_symmetric_points(self):
        lam, d = 2.5, 0.3
        basis = ObservableBasis(centers=[[0.5]], lam=lam)
        psi = lift(basis, [[0.5 - d], [0.5 + d]])
        assert psi[0] == pytest.approx(2 * math.exp(-lam * d * d), rel=1e-14)

    def test_affine_coordinate(self):
        basis = ObservableBasis(centers=[[0.0, 0.0]], lam=1.0, extra_affine=True)
        psi = lift(basis, [[0.0, 0.0]])
        assert psi.tolist() == [1.0, 1.0]
        assert basis.size == 2

    def test_permutation_invariant_bitwise(self):
        rng = np.random.default_rng(0)
        basis = ObservableBasis(centers=grid_centers(4), lam=7.0)
        points = rng.uniform(size=(40, 2))
        reference = lift(basis, points)
        for _ in range(5):
            assert np.array_equal(lift(basis, rng.permutation(points)), reference)

    def test_empty_point_set(self):
        basis = ObservableBasis(centers=[[0.0, 0.0], [1.0, 0.0]], lam=1.0)
        np.testing.assert_array_equal(lift(basis, []), [0.0, 0.0])

    def test_dimension_mismatch(self):
        basis = ObservableBasis(centers=[[0.0, 0.0]], lam=1.0)
        with pytest.raises(BasisError):
            lift(basis, [[0.0, 0.0, 0.0]])

    @pytest.mark.parametrize("lam", [0.0, -1.0, math.inf])
    def test_bad_lambda(self, lam):
        with pytest.raises(BasisError):
            ObservableBasis(centers=[[0.0]], lam=lam)

    def test_empty_centers(self):
        with pytest.raises(BasisError):
            ObservableBasis(centers=np.empty((0, 2)), lam=1.0)

    def test_categories_and_cost(self):
        a = ObservableBasis(centers=[[0.0, 0.0]], lam=1.0)
        b = ObservableBasis(centers=[[1.0, 1.0], [2.0, 2.0]], lam=1.0)
        psi = lift_categories([a, b], [[[0.0, 0.0]], [[1.0, 1.0]]], cost_value=4.5)
        assert psi.shape == (4,)
        assert psi[0] == 1.0 and psi[1] == 1.0 and psi[-1] == 4.5
        with pytest.raises(BasisError):
            lift_categories([a], [[[0.0, 0.0]], [[1.0, 1.0]]])

    def test_prelifted_state(self):
        np.testing.assert_array_equal(lift_state(None, [1.0, 2.0], cost_value=3.0), [1.0, 2.0, 3.0])


class TestDataset:
    def test_trajectory_lengths(self):
        with pytest.raises(DatasetError):
            Trajectory(states=[[0.0]], actions=[])
        with pytest.raises(DatasetError):
            Trajectory(states=[[0.0], [1.0]], actions=[0, 1])

    def test_unknown_action(self):
        with pytest.raises(DatasetError):
            TrajectoryDataset([Trajectory(states=[[0.0], [1.0]], actions=[3])], actions=("a", "b"))

    def test_mixed_costs_rejected(self):
        with pytest.raises(DatasetError):
            TrajectoryDataset([
                Trajectory(states=[[0.0], [1.0]], actions=[0], costs=[0.0, 1.0]),
                Trajectory(states=[[0.0], [1.0]], actions=[0]),
            ])


class TestFit:
    def test_recovers_generators(self):
        rng = np.random.default_rng(1)
        A = random_matrices(20, 3, rng)
        dataset = switched_linear_dataset(A, trajectories=30, length=10, seed=2)
        counts = np.bincount([a for tr in dataset.trajectories for a in tr.actions], minlength=3)
        assert counts.min() >= 2 * 20
        model = fit_koopman(dataset, None, c_spec=0)
        np.testing.assert_allclose(model.A, A, rtol=0, atol=1e-8)

    def test_identity_generator(self):
        A = np.eye(4)[np.newaxis]
        dataset = switched_linear_dataset(A, trajectories=8, length=2, seed=0)
        model = fit_koopman(dataset, None, c_spec=[1.0, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(model.A[0], np.eye(4), atol=1e-10)

    def test_missing_action_named(self):
        A = random_matrices(3, 2, np.random.default_rng(0))
        dataset = switched_linear_dataset(A, trajectories=5, length=6, seed=0, actions=("up", "down"))
        dataset = TrajectoryDataset(dataset.trajectories, actions=("up", "down", "fire"))
        with pytest.raises(UnderdeterminedFit, match="'fire'") as exc:
            fit_koopman(dataset, None)
        assert exc.value.available == 0
        assert exc.value.required == 3
        assert exc.value.exit_code == 6

    def test_rank_deficient_warns(self):
        rng = np.random.default_rng(3)
        states = [np.append(rng.normal(size=2), 0.0) for _ in range(8)]
        dataset = TrajectoryDataset([Trajectory(states=states, actions=[0] * 7)])
        with pytest.warns(RankDeficientFit, match="rank 2"):
            fit_koopman(dataset, None)

    def test_least_squares_beats_generator_on_noisy_data(self):
        rng = np.random.default_rng(4)
        A = random_matrices(5, 2, rng)
        trajectories = []
        for _ in range(10):
            psi = rng.normal(size=5)
            states, actions = [psi], []
            for _ in range(8):
                a = int(rng.integers(2))
                psi = A[a] @ psi + 0.01 * rng.normal(size=5)
                states.append(psi)
                actions.append(a)
            trajectories.append(Trajectory(states=states, actions=actions))
        dataset = TrajectoryDataset(trajectories)
        model = fit_koopman(dataset, None)
        fitted = fit_residuals(dataset, None, model.A)
        true = fit_residuals(dataset, None, A)
        assert np.all(fitted <= true * (1 + 1e-12))

    def test_cost_row_and_initial_state(self):
        A = random_matrices(3, 1, np.random.default_rng(0))
        dataset = switched_linear_dataset(A, trajectories=2, length=5, seed=0)
        model = fit_koopman(dataset, None, c_spec="last", horizon=4, initial_state=[1.0, 2.0, 3.0])
        np.testing.assert_array_equal(model.c, [0.0, 0.0, 1.0])
        np.testing.assert_array_equal(model.psi1, [1.0, 2.0, 3.0])
        assert model.horizon == 4
        with pytest.raises(DatasetError):
            fit_koopman(dataset, None, c_spec=7)

    def test_fit_then_solve_agrees_with_generator(self):
        rng = np.random.default_rng(5)
        A = random_matrices(6, 3, rng)
        c, psi1 = rng.normal(size=6), rng.normal(size=6)
        truth = KoopmanModel(A=A, c=c, psi1=psi1, horizon=5)
        dataset = switched_linear_dataset(A, trajectories=20, length=10, seed=6)
        fitted = fit_koopman(dataset, None, c_spec=c, horizon=5, initial_state=psi1)
        J_true, minimizers = brute_force_min(truth)
        J_fit, _ = brute_force_min(fitted)
        assert J_fit == pytest.approx(J_true, abs=1e-8)
        assert cost(fitted, minimizers[0]) == pytest.approx(J_true, abs=1e-8)


class TestToySystem:
    def test_points_stay_in_square(self):
        rng = np.random.default_rng(0)
        points = rng.uniform(size=(30, 2))
        for k in range(50):
            points = toy_step(points, k % len(TOY_ACTIONS))
            assert np.all((points > 0) & (points < 1))

    def test_fit_with_cost_observable(self):
        dataset = toy_particle_dataset(traces=40, length=10, seed=1)
        basis = ObservableBasis(centers=grid_centers(3), lam=10.0)
        model = fit_koopman(dataset, basis, c_spec="last", horizon=6)
        assert model.n_psi == 9 + 1
        assert model.actions == TOY_ACTIONS
        assert model.psi1[-1] == dataset.trajectories[0].costs[0]
        assert np.all(np.isfinite(fit_residuals(dataset, basis, model.A)))
