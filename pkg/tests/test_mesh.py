import numpy as np
import pytest
from scipy.integrate import quad

from cutcell_xdiff import mesh as M
from cutcell_xdiff.errors import CFLViolation, ConfigurationError
from cutcell_xdiff.mesh import Move
from cutcell_xdiff.model import tc1_profiles

from conftest import random_simplex


class TestBuild:
    def test_tc1_mesh(self):
        m = M.build(100, 0.51)
        assert m.K == 51
        np.testing.assert_allclose(m.sizes, 0.01, rtol=1e-12)
        assert abs(m.sizes.sum() - 1) < 1e-14

    def test_cut_cells(self):
        m = M.build(10, 0.57)
        assert m.K == 6
        # 1-based cells 6 and 7 are 0-based 5 and 6
        assert m.sizes[5] == pytest.approx(0.07)
        assert m.sizes[6] == pytest.approx(0.13)
        np.testing.assert_allclose(np.delete(m.sizes, [5, 6]), 0.1)

    def test_solid_only(self):
        m = M.build(10, 1.0)
        assert m.K == 10 and not m.two_phase
        np.testing.assert_allclose(m.sizes, 0.1)

    def test_gas_only(self):
        m = M.build(10, 0.0)
        assert m.K == 0 and not m.two_phase

    def test_tie_goes_left(self):
        # 0.55 is exactly halfway between 0.5 and 0.6 in binary-exact units of 1/16
        assert M.build(16, 5.5 / 16).K == 5

    def test_interior_interface_keeps_both_phases(self):
        assert M.build(10, 0.02).K == 1
        assert M.build(10, 0.98).K == 9

    @pytest.mark.parametrize("N", [1, 3])
    def test_too_few_cells(self, N):
        with pytest.raises(ConfigurationError):
            M.build(N, 0.5)

    def test_edges_and_centers(self):
        m = M.build(10, 0.57)
        e = m.edges()
        assert e[6] == 0.57 and e[0] == 0 and e[-1] == 1
        np.testing.assert_allclose(np.diff(e), m.sizes, atol=1e-15)

    def test_sizes_sum_to_one(self, rng):
        for _ in range(200):
            N = int(rng.integers(4, 300))
            m = M.build(N, rng.uniform())
            assert abs(m.sizes.sum() - 1) < 1e-13
            assert m.sizes.min() >= 0
            if m.dx / 2 <= m.X <= 1 - m.dx / 2:
                assert m.sizes.min() >= 0.5 * m.dx - 1e-15
                assert m.sizes.max() <= 1.5 * m.dx + 1e-15


class TestIntermediate:
    def test_same_position(self):
        m = M.build(10, 0.57)
        np.testing.assert_array_equal(M.intermediate_sizes(m, 0.57), m.sizes)

    def test_moved_interface(self):
        m = M.build(10, 0.57)
        s = M.intermediate_sizes(m, 0.63)
        assert s[5] == pytest.approx(0.13) and s[6] == pytest.approx(0.07)
        assert abs(s.sum() - 1) < 1e-14

    def test_outside_interface_cells(self):
        with pytest.raises(CFLViolation):
            M.intermediate_sizes(M.build(10, 0.57), 0.7 + 1e-6)


class TestRebind:
    @pytest.mark.parametrize(
        "X_prev, X_new, K, move",
        [(0.57, 0.63, 6, Move.NONE), (0.57, 0.62, 6, Move.NONE), (0.63, 0.66, 7, Move.RIGHT),
         (0.63, 0.54, 5, Move.LEFT)],
    )
    def test_examples(self, X_prev, X_new, K, move):
        new, mv = M.rebind(M.build(10, X_prev), X_new)
        assert (new.K, mv) == (K, move)
        assert abs(new.sizes.sum() - 1) < 1e-14


def _scenario(rng, move):
    """Random intermediate state that triggers a one-cell rebind."""
    N = int(rng.integers(8, 40))
    dx = 1.0 / N
    K = int(rng.integers(3, N - 3))
    if move is Move.RIGHT:
        X_prev = K * dx + rng.uniform(0.01, 0.49) * dx
        X_new = rng.uniform((K + 0.5) * dx, X_prev + 0.5 * dx)
    else:
        X_prev = K * dx - rng.uniform(0.01, 0.49) * dx
        X_new = rng.uniform(X_prev - 0.5 * dx, (K - 0.5) * dx)
    prev = M.build(N, X_prev)
    sizes_star = M.intermediate_sizes(prev, X_new)
    new, mv = M.rebind(prev, X_new)
    assert mv is move
    c_star = random_simplex(rng, 3, N).T
    return prev, sizes_star, new, c_star


@pytest.mark.parametrize("move", [Move.RIGHT, Move.LEFT])
class TestPostprocess:
    def test_mass_conserved(self, rng, move):
        for _ in range(200):
            prev, s_star, new, c = _scenario(rng, move)
            out = M.postprocess(c, prev, s_star, new, move)
            np.testing.assert_allclose(out @ new.sizes, c @ s_star, rtol=0, atol=1e-14)

    def test_convex_hull(self, rng, move):
        for _ in range(200):
            prev, s_star, new, c = _scenario(rng, move)
            out = M.postprocess(c, prev, s_star, new, move)
            assert np.all(out.min(axis=1) >= c.min(axis=1) - 1e-15)
            assert np.all(out.max(axis=1) <= c.max(axis=1) + 1e-15)
            np.testing.assert_allclose(out.sum(axis=0), 1.0, atol=1e-14)

    def test_constant_preserved(self, move, rng):
        prev, s_star, new, _ = _scenario(rng, move)
        c = np.tile([[0.2], [0.3], [0.5]], prev.N)
        np.testing.assert_allclose(M.postprocess(c, prev, s_star, new, move), c, atol=1e-15)

    def test_mirror_symmetry(self, rng, move):
        for _ in range(100):
            prev, s_star, new, c = _scenario(rng, move)
            out = M.postprocess(c, prev, s_star, new, move)
            X_prev_r, X_new_r = 1 - prev.X, 1 - new.X
            prev_r = M.build(prev.N, X_prev_r)
            new_r, mv_r = M.rebind(prev_r, X_new_r)
            assert mv_r is Move(-move)
            out_r = M.postprocess(c[:, ::-1], prev_r, s_star[::-1], new_r, mv_r)
            np.testing.assert_allclose(out_r[:, ::-1], out, atol=1e-15)


def test_postprocess_identity():
    prev = M.build(10, 0.57)
    c = np.random.default_rng(1).uniform(size=(3, 10))
    np.testing.assert_array_equal(M.postprocess(c, prev, prev.sizes, prev, Move.NONE), c)


def test_postprocess_average_value():
    prev = M.build(10, 0.63)
    s_star = M.intermediate_sizes(prev, 0.66)
    new, mv = M.rebind(prev, 0.66)
    c = np.full((1, 10), 0.3)
    c[0, 6], c[0, 7] = 0.2, 0.5
    out = M.postprocess(c, prev, s_star, new, mv)
    assert s_star[6] == pytest.approx(0.04)
    assert out[0, 7] == pytest.approx((0.04 * 0.2 + 0.1 * 0.5) / 0.14, rel=1e-12)
    assert out[0, 7] == pytest.approx(0.41429, abs=1e-5)
    assert out[0, 6] == c[0, 5]


def test_collapse_conserves_mass():
    prev = M.build(10, 0.05)
    s_star = M.intermediate_sizes(prev, 0.0)
    c = np.random.default_rng(2).uniform(0.1, 1, size=(3, 10))
    out, mesh = M.collapse(c, prev, s_star, solid=False)
    assert mesh.K == 0
    np.testing.assert_allclose(out @ mesh.sizes, c @ s_star, atol=1e-15)


def test_cell_averages_match_quadrature():
    m = M.build(10, 0.57)
    avg = M.cell_averages(m, tc1_profiles)
    e = m.edges()
    for k in (0, 5, 6, 9):
        exact = quad(lambda x: tc1_profiles(x)[2], e[k], e[k + 1])[0] / (e[k + 1] - e[k])
        assert avg[2, k] == pytest.approx(exact, abs=1e-14)
