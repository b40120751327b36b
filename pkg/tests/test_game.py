import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from stochpower.game import (
    GameConfig,
    best_response,
    efficiency,
    gamma_tilde_residual,
    one_shot_nash,
    operating_point_powers,
    solve_gamma_tilde,
    stage_outcome,
)

A_HALF = math.sqrt(2) - 1  # a for R = 0.5

# exact values (mpmath, 30 digits) of the closed forms for R=0.5, sigma2=1, eta=1
U_OP2 = 0.293467858755468997  # R f(a/(1+a)) / a
U_NE2 = 0.260130047511444448  # R f(a) (1-a) / a
U_SOLO = 0.444069768097165609  # R f(a) / a


def cfg(K=2, R=0.5, sigma2=1.0, p_max=10.0, lam=0.05):
    return GameConfig(K, R, sigma2, p_max, lam)


def sympy_root(k, a):
    """Nonzero root of x(1-(k-1)x) f'(x) - f(x) with f = exp(-a/x), symbolically."""
    x = sympy.symbols("x", positive=True)
    f = sympy.exp(-sympy.Rational(a) / x) if isinstance(a, int) else sympy.exp(-sympy.nsimplify(a) / x)
    eq = sympy.simplify((x * (1 - (k - 1) * x) * sympy.diff(f, x) - f) / f)
    roots = [r for r in sympy.solve(eq, x) if r.is_positive]
    assert len(roots) == 1
    return float(roots[0])


class TestEfficiency:
    def test_at_gamma_equal_a(self):
        for a in (0.1, 1.0, 3.0):
            assert efficiency(a, a) == pytest.approx(math.exp(-1))

    def test_zero_sinr(self):
        assert efficiency(0.0, 1.0) == 0.0

    def test_direct(self):
        assert efficiency(0.5, 1.0) == pytest.approx(math.exp(-2))

    @pytest.mark.parametrize("gamma,a", [(-0.1, 1.0), (1.0, 0.0), (1.0, -2.0)])
    def test_domain(self, gamma, a):
        with pytest.raises(ValueError):
            efficiency(gamma, a)

    @given(st.floats(1e-3, 50), st.floats(1e-3, 50), st.floats(0.1, 5))
    def test_increasing_and_in_unit_interval(self, g1, g2, a):
        lo, hi = sorted((g1, g2))
        assert 0 <= efficiency(lo, a) <= efficiency(hi, a) < 1


class TestGameConfig:
    def test_derived_exponent(self):
        c = cfg(K=3, R=[0.5, 1.0, 2.0])
        np.testing.assert_allclose(c.a, [A_HALF, 1.0, 3.0])
        assert not c.equal_rates

    @pytest.mark.parametrize("kw", [dict(K=0), dict(sigma2=0.0), dict(p_max=-1.0), dict(lam=1.0), dict(R=0.0)])
    def test_invariants(self, kw):
        with pytest.raises(ValueError):
            cfg(**kw)


class TestStageOutcome:
    def test_symmetric_pair(self):
        out = stage_outcome([1, 1], [1, 1], cfg(R=1))
        np.testing.assert_allclose(out.sinr, [0.5, 0.5])
        np.testing.assert_allclose(out.utility, [math.exp(-2)] * 2)

    def test_silent_player(self):
        out = stage_outcome([0, 2], [1, 1], cfg(R=1))
        assert out.sinr[0] == 0 and out.utility[0] == 0
        assert out.sinr[1] == pytest.approx(2.0)
        assert out.utility[1] == pytest.approx(math.exp(-0.5) / 2)

    def test_three_symmetric(self):
        out = stage_outcome([1, 1, 1], [1, 1, 1], cfg(K=3))
        np.testing.assert_allclose(out.sinr, [1 / 3] * 3)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            stage_outcome([1, 1, 1], [1, 1], cfg())

    def test_row_stack_matches_single(self):
        c = cfg(K=3)
        p = np.array([[1, 2, 0.5], [0, 1, 3]])
        eta = np.array([[1, 0.5, 2], [0.3, 1, 1]])
        stacked = stage_outcome(p, eta, c).utility
        for r in range(2):
            np.testing.assert_array_equal(stacked[r], stage_outcome(p[r], eta[r], c).utility)

    @given(
        st.lists(st.floats(0, 10), min_size=3, max_size=3),
        st.lists(st.floats(0.01, 4), min_size=3, max_size=3),
        st.floats(0.1, 10),
    )
    def test_scale_invariance(self, p, eta, c):
        base = cfg(K=3, p_max=100.0)
        scaled = GameConfig(3, 0.5, c * base.sigma2, 100.0 * c, 0.05)
        o1 = stage_outcome(p, eta, base)
        o2 = stage_outcome(c * np.array(p), eta, scaled)
        np.testing.assert_allclose(o2.sinr, o1.sinr, rtol=1e-10, atol=1e-300)
        np.testing.assert_allclose(o2.utility, o1.utility / c, rtol=1e-9, atol=1e-300)


class TestGammaTilde:
    @pytest.mark.parametrize("k,a,expected", [(2, 1, 0.5), (2, A_HALF, 0.292893218813452476)])
    def test_examples(self, k, a, expected):
        assert solve_gamma_tilde(k, a) == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("a", [0.1, 1.0, 3.0])
    def test_single_player_root_is_a(self, a):
        assert solve_gamma_tilde(1, a) == pytest.approx(a, abs=1e-10)

    @pytest.mark.parametrize("k,a", [(1, 1), (2, 1), (3, 2), (5, 0.25)])
    def test_against_symbolic_root(self, k, a):
        assert solve_gamma_tilde(k, a) == pytest.approx(sympy_root(k, a), abs=1e-10)

    @pytest.mark.parametrize("a", [0.1, 0.414214, 1.0, 3.0])
    @pytest.mark.parametrize("k", range(1, 11))
    def test_closed_form_and_residual(self, k, a):
        x = solve_gamma_tilde(k, a)
        assert abs(x - a / (1 + (k - 1) * a)) < 1e-10
        assert abs(gamma_tilde_residual(x, k, a)) < 1e-10

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            solve_gamma_tilde(0, 1.0)
        with pytest.raises(ValueError):
            solve_gamma_tilde(2, 0.0)


class TestOperatingPoint:
    def test_pair_a_one(self):
        c = cfg(R=1)
        p = operating_point_powers([1, 1], [0, 1], c)
        np.testing.assert_allclose(p, [1, 1], atol=1e-10)
        np.testing.assert_allclose(stage_outcome(p, [1, 1], c).sinr, [0.5, 0.5], atol=1e-10)

    def test_pair_half_rate(self):
        c = cfg()
        p = operating_point_powers([1, 1], [True, True], c)
        np.testing.assert_allclose(p, [A_HALF] * 2, atol=1e-10)
        np.testing.assert_allclose(stage_outcome(p, [1, 1], c).utility, [U_OP2] * 2, rtol=1e-9)

    def test_single_active(self):
        c = cfg()
        p = operating_point_powers([1, 1], [0], c)
        np.testing.assert_allclose(p, [A_HALF, 0], atol=1e-10)
        assert stage_outcome(p, [1, 1], c).utility[0] == pytest.approx(U_SOLO, rel=1e-9)

    def test_empty_set_is_silent(self):
        np.testing.assert_array_equal(operating_point_powers([1, 1], [], cfg()), [0, 0])

    def test_zero_gain_active_rejected(self):
        with pytest.raises(ValueError):
            operating_point_powers([0.0, 1.0], [0, 1], cfg())

    def test_clipped_at_cap(self):
        c = cfg(p_max=0.1)
        assert np.all(operating_point_powers([1, 1], [0, 1], c) == 0.1)

    @settings(max_examples=200)
    @given(
        st.lists(st.floats(0.01, 10), min_size=1, max_size=8),
        st.sampled_from([0.1, 0.5, 1.0, 2.0]),
        st.data(),
    )
    def test_consistency(self, eta, R, data):
        K = len(eta)
        active = data.draw(st.lists(st.booleans(), min_size=K, max_size=K).filter(any))
        c = GameConfig(K, R, 1.0, 1e9, 0.05)
        p = operating_point_powers(eta, np.array(active), c)
        sinr = stage_outcome(p, eta, c).sinr
        k = sum(active)
        g = solve_gamma_tilde(k, float(c.a[0]))
        np.testing.assert_allclose(sinr[np.array(active)], g, atol=1e-10)


def grid_improvement(p, eta, c, i, n=1000):
    """Best relative gain player i can get on a uniform grid over [0, p_max]."""
    grid = np.linspace(0, c.p_max, n)
    trial = np.tile(p, (n, 1))
    trial[:, i] = grid
    u = stage_outcome(trial, np.tile(eta, (n, 1)), c).utility[:, i]
    base = stage_outcome(p, eta, c).utility[i]
    return (u.max() - base) / base


class TestNash:
    def test_pair_half_rate(self):
        c = cfg()
        ne = one_shot_nash([1, 1], c)
        assert not ne.saturated
        np.testing.assert_allclose(ne.beta, [A_HALF] * 2)
        np.testing.assert_allclose(ne.powers, [1 / math.sqrt(2)] * 2, rtol=1e-12)
        np.testing.assert_allclose(stage_outcome(ne.powers, [1, 1], c).utility, [U_NE2] * 2, rtol=1e-9)
        for i in range(2):
            assert grid_improvement(ne.powers, np.array([1.0, 1.0]), c, i) <= 1e-9

    def test_saturated(self):
        c = cfg(R=1)
        ne = one_shot_nash([1, 1], c)
        assert ne.saturated
        np.testing.assert_array_equal(ne.powers, [c.p_max] * 2)

    @pytest.mark.parametrize("eta", [0.3, 1.0, 4.0])
    def test_single_player(self, eta):
        c = cfg(K=1)
        ne = one_shot_nash([eta], c)
        assert ne.powers[0] == pytest.approx(A_HALF / eta)
        assert stage_outcome(ne.powers, [eta], c).sinr[0] == pytest.approx(A_HALF)

    def test_zero_gain(self):
        with pytest.raises(ValueError):
            one_shot_nash([0.0, 1.0], cfg())

    def test_unequal_rates_sinr_targets(self):
        c = cfg(K=3, R=[0.1, 0.2, 0.3], p_max=1e6)
        eta = np.array([0.5, 1.0, 2.0])
        ne = one_shot_nash(eta, c)
        assert not ne.saturated
        np.testing.assert_allclose(stage_outcome(ne.powers, eta, c).sinr, c.a, rtol=1e-12)


class TestBestResponse:
    def test_examples(self):
        c = cfg(R=1)
        assert best_response(0, 0.0, 1.0, c) == pytest.approx(1.0)
        assert best_response(0, 1.0, 2.0, c) == pytest.approx(1.0)
        assert best_response(0, 1e6, 1.0, c) == c.p_max

    def test_grid_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            interference = rng.uniform(0, 5)
            eta = rng.uniform(0.1, 3)
            R = rng.uniform(0.1, 2)
            c = GameConfig(1, R, 1.0, 10.0, 0.05)
            grid = np.linspace(0, c.p_max, 10_001)
            sinr = grid * eta / (interference + 1.0)
            u = np.where(grid > 0, R * efficiency(sinr, c.a[0]) / np.where(grid > 0, grid, 1), 0)
            assert abs(best_response(0, interference, eta, c) - grid[np.argmax(u)]) <= grid[1]

    def test_zero_gain(self):
        with pytest.raises(ValueError):
            best_response(0, 1.0, 0.0, cfg())


def test_operating_point_dominates_nash():
    c = cfg()
    u_op = stage_outcome(operating_point_powers([1, 1], [0, 1], c), [1, 1], c).utility
    u_ne = stage_outcome(one_shot_nash([1, 1], c).powers, [1, 1], c).utility
    np.testing.assert_allclose(u_op, U_OP2, rtol=1e-9)
    np.testing.assert_allclose(u_ne, U_NE2, rtol=1e-9)
    assert np.all(u_op > u_ne)
