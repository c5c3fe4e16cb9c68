import numpy as np
import pytest

from cutcell_xdiff import mesh as M
from cutcell_xdiff import stepper as S
from cutcell_xdiff.diagnostics import masses
from cutcell_xdiff.errors import ConfigurationError, StepFailure
from cutcell_xdiff.model import TC1_X0, solve_stationary, tc1_profiles

from conftest import random_simplex, two_species

TC1_MASSES = [0.25, 0.25, 0.5]


@pytest.fixture(scope="module")
def tc1_start():
    return S.initial_state(100, TC1_X0, tc1_profiles)


@pytest.fixture(scope="module")
def stationary(tc1):
    st_ = solve_stationary(TC1_MASSES, tc1)
    return S.uniform_state(st_.c_solid_bar, st_.c_gas_bar, M.build(100, st_.X_bar))


class TestCFL:
    def test_equal_potentials(self):
        assert S.cfl_dt_max(two_species(), 0.01) == pytest.approx(0.0025, rel=1e-15)

    def test_tc1(self, tc1):
        dt = S.cfl_dt_max(tc1, 0.01)
        assert dt == pytest.approx(0.01 / (2 * (np.sqrt(6) + 2)), rel=1e-14)
        assert 6e-4 < dt < 1.125e-3

    def test_linear_in_dx(self, tc1):
        assert S.cfl_dt_max(tc1, 0.03) == pytest.approx(3 * S.cfl_dt_max(tc1, 0.01))


class TestConfig:
    @pytest.mark.parametrize("kw", [{"dt": 0.0}, {"dt": -1.0}, {"dt": 1e-3, "newton_tol": 0.0}])
    def test_rejects(self, kw):
        with pytest.raises(ConfigurationError):
            S.StepConfig(**kw)


class TestInitialState:
    def test_floor_and_volume_filling(self, tc1_start):
        c = tc1_start.c
        assert c.min() >= 1e-14 * 0.99
        np.testing.assert_allclose(c.sum(axis=0), 1.0, atol=1e-15)

    def test_tc1_masses(self, tc1_start):
        np.testing.assert_allclose(masses(tc1_start), TC1_MASSES, atol=1e-12)


class TestResidual:
    def test_stationary_is_zero(self, stationary, tc1):
        res, X = S.residual(stationary.c, stationary, S.StepConfig(6e-4), tc1)
        assert np.max(np.abs(res)) < 1e-12
        assert X == stationary.X

    def test_one_phase_matches_fixed_domain(self, tc1, rng):
        c = random_simplex(rng, 3, 12).T
        prev = S.State(c, M.build(12, 1.0))
        trial = random_simplex(rng, 3, 12).T
        res, X = S.residual(trial, prev, S.StepConfig(1e-3), tc1)
        assert X == 1.0
        from cutcell_xdiff.fluxes import solid_flux_batch

        J = np.zeros((13, 3))
        J[1:-1] = solid_flux_batch(trial[:, :-1].T, trial[:, 1:].T, 1 / 12, tc1.kappa_solid)
        ref = (trial - c).T / 12 / 1e-3 + J[1:] - J[:-1]
        np.testing.assert_allclose(res.reshape(12, 3), ref, rtol=1e-12, atol=1e-12)

    def test_total_sums_to_zero(self, tc1_start, tc1, rng):
        trial = random_simplex(rng, 3, 100, 0.05).T
        # keep the trial interface flux small enough to stay inside the interface cells
        K = tc1_start.mesh.K
        trial[:, K - 1:K + 1] = tc1_start.c[:, K - 1:K + 1]
        res, _ = S.residual(trial, tc1_start, S.StepConfig(6e-4), tc1)
        assert abs(res.sum()) * 6e-4 < 1e-13

    def test_jacobian_finite_differences(self, tc1, rng):
        N = 16
        prev = S.State(random_simplex(rng, 3, N, 0.2).T, M.build(N, 0.53))
        trial = random_simplex(rng, 3, N, 0.2).T
        cfg = S.StepConfig(1e-3)
        jac = S.residual_jacobian(trial, prev, cfg, tc1).toarray()
        h = 1e-6
        fd = np.zeros_like(jac)
        U = trial.T.copy()
        for col in range(U.size):
            e = np.zeros(U.size)
            e[col] = h
            rp = S.residual((U.ravel() + e).reshape(U.shape).T, prev, cfg, tc1)[0]
            rm = S.residual((U.ravel() - e).reshape(U.shape).T, prev, cfg, tc1)[0]
            fd[:, col] = (rp - rm) / (2 * h)
        assert np.max(np.abs(jac - fd)) <= 1e-6 * np.max(np.abs(fd))


class TestNewton:
    def test_stationary_zero_iterations(self, stationary, tc1):
        sol = S.newton_solve(stationary, S.StepConfig(6e-4), tc1)
        assert sol.iterations <= 1
        np.testing.assert_allclose(sol.c, stationary.c, atol=1e-13)

    def test_tc1_first_step(self, tc1_start, tc1):
        sol = S.newton_solve(tc1_start, S.StepConfig(6e-4), tc1)
        assert sol.iterations <= 10 and sol.residual_norm <= 1e-12
        assert sol.c.min() > 0
        assert abs(sol.X - tc1_start.X) <= 0.005

    def test_floor_species(self, tc1):
        N = 20
        c = np.tile([[0.4], [0.6], [1e-300]], N)
        c[0, :5], c[1, :5] = 0.6, 0.4
        prev = S.State(c, M.build(N, 0.51))
        state, _ = S.advance(prev, S.StepConfig(1e-3), tc1)
        assert np.all(np.isfinite(state.c)) and state.c.min() > 0

    def test_nonpositive_rejected(self, tc1):
        c = np.tile([[0.5], [0.5], [0.0]], 10)
        with pytest.raises(StepFailure):
            S.newton_solve(S.State(c, M.build(10, 0.5)), S.StepConfig(1e-3), tc1)


class TestAdvance:
    def test_stationary_preserved(self, stationary, tc1):
        new, _ = S.advance(stationary, S.StepConfig(6e-4), tc1)
        np.testing.assert_allclose(new.c, stationary.c, atol=1e-12)
        assert abs(new.X - stationary.X) < 1e-12

    def test_mass_and_cfl(self, tc1_start, tc1):
        new, _ = S.advance(tc1_start, S.StepConfig(6e-4), tc1)
        np.testing.assert_allclose(masses(new), masses(tc1_start), rtol=0, atol=1e-13)
        assert abs(new.X - tc1_start.X) <= 0.5 / 100

    def test_rebinding_conserves(self, tc1):
        # fast interface: several rebinds in a few steps
        state = S.initial_state(40, 0.5, tc1_profiles)
        m0 = masses(state)
        Ks = {state.mesh.K}
        for _ in range(30):
            state, _ = S.advance(state, S.StepConfig(1e-3), tc1)
            Ks.add(state.mesh.K)
        assert len(Ks) > 1
        np.testing.assert_allclose(masses(state), m0, atol=1e-13)
        np.testing.assert_allclose(state.c.sum(axis=0), 1.0, atol=1e-12)

    def test_phase_vanishes(self):
        # all species prefer the gas: the solid dissolves and the mesh collapses
        p = two_species(exp_s=(0.05, 0.05), exp_g=(20.0, 20.0))
        state = S.uniform_state([0.5, 0.5], [0.5, 0.5], M.build(20, 0.08))
        m0 = masses(state)
        traj = S.run(state, 0.05, S.StepConfig(1e-3), p)
        assert traj.final.X == 0.0 and traj.final.mesh.K == 0
        np.testing.assert_allclose(masses(traj.final), m0, atol=1e-13)


class TestRun:
    def test_zero_time(self, tc1_start, tc1):
        traj = S.run(tc1_start, 0.0, S.StepConfig(6e-4), tc1)
        assert len(traj) == 1 and traj.states[0] is tc1_start

    def test_step_count(self):
        assert S.n_steps(5.0, 6e-4) == 8333
        assert S.n_steps(1.0, 6e-4) == 1666
        assert S.n_steps(0.25, 1e-4) == 2500

    def test_negative_time(self):
        with pytest.raises(ConfigurationError):
            S.n_steps(-1.0, 1e-3)

    def test_observers_and_times(self, tc1_start, tc1):
        seen = []
        traj = S.run(tc1_start, 0.0065, S.StepConfig(1e-3), tc1,
                     observers=[lambda s, info: seen.append((s.t, info.step))], keep_states=False)
        assert [k for _, k in seen] == list(range(7))
        assert seen[-1][0] == pytest.approx(0.006, abs=1e-15)
        assert traj.states == [] and traj.final.t == seen[-1][0]

    def test_one_phase_fixed_domain(self, tc1):
        state = S.initial_state(16, 1.0, lambda x: np.array([0.5 + 0.25 * np.cos(np.pi * x),
                                                             0.5 - 0.25 * np.cos(np.pi * x),
                                                             0 * x + 1e-3]))
        traj = S.run(state, 0.05, S.StepConfig(1e-3), tc1)
        assert all(X == 1.0 for X in traj.X)

    def test_halving_recovers_cfl(self, tc1):
        # dt far above the CFL limit: the halve policy splits the step
        state = S.initial_state(100, TC1_X0, tc1_profiles)
        cfg = S.StepConfig(2e-2)
        infos = []
        S.run(state, 0.02, cfg, tc1, observers=[lambda s, i: infos.append(i)])
        assert infos[-1].substeps > 1
        with pytest.raises(StepFailure):
            S.run(state, 0.02, S.StepConfig(2e-2, cfl_policy=S.CFLPolicy.REJECT), tc1)
