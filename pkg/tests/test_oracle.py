import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from drivenfock import Params, ResonanceError, build_h_generator, build_k_generator, propagate, vacuum_state
from drivenfock.oracle import (
    ClassicalState,
    ClassicalSystem,
    classical_exact,
    classical_propagate,
    coherent_alpha,
    coherent_alpha_series,
    coherent_x2,
    k_constancy_check,
    k_value,
    poisson_occupations,
)


class TestKValue:
    def test_pure_oscillator(self):
        assert k_value(ClassicalSystem(1, 1, 0, 2), ClassicalState(1, 0, 0)) == 0.5

    @pytest.mark.parametrize("A", [0.0, 1.0, 7.5])
    def test_origin(self, A):
        assert k_value(ClassicalSystem(1, 1, A, 2), ClassicalState(0, 0, 0)) == 0.0

    def test_hand_substitution(self):
        # 0.5 * 1 + (1 / 3) * (2 * 1 * cos 0)
        val = k_value(ClassicalSystem(1, 1, 1, 2), ClassicalState(0, 1, 0))
        assert val == pytest.approx(0.5 + 2 / 3, abs=1e-15)
        assert val == pytest.approx(1.16666, abs=1e-5)

    def test_resonance(self):
        with pytest.raises(ResonanceError):
            ClassicalSystem(1, 1, 1, 1)

    def test_transport_equation(self):
        """v K_x + (-w^2 x + A/m sin Wt) K_v + K_t = 0 by central differences."""
        sys = ClassicalSystem(1.3, 0.9, 2.0, 3.1)
        h = 1e-5
        for x, v, t in [(0.3, -1.2, 0.4), (-2.0, 0.5, 7.3), (1.1, 1.1, 12.0)]:
            K = lambda x, v, t: k_value(sys, ClassicalState(x, v, t))
            kx = (K(x + h, v, t) - K(x - h, v, t)) / (2 * h)
            kv = (K(x, v + h, t) - K(x, v - h, t)) / (2 * h)
            kt = (K(x, v, t + h) - K(x, v, t - h)) / (2 * h)
            force = -sys.omega**2 * x + sys.A / sys.m * math.sin(sys.Omega * t)
            assert abs(v * kx + force * kv + kt) < 1e-8


class TestClassical:
    def test_free(self):
        traj = classical_propagate(ClassicalSystem(1, 1, 0, 2), ClassicalState(1, 0), 2 * math.pi, 1e-3)
        assert traj.x[-1] == pytest.approx(1.0, abs=1e-8)

    def test_driven_textbook(self):
        sys = ClassicalSystem(1, 1, 1, 2)
        t_end = 100 * 2 * math.pi
        traj = classical_propagate(sys, ClassicalState(0, 0), t_end, 1e-3)
        # particular solution plus the free part fixed by x0 = v0 = 0
        x = 1.0 / (1 - 4) * (np.sin(2 * traj.t) - 2 * np.sin(traj.t))
        assert np.max(np.abs(traj.x - x)) < 1e-8

    def test_exact_helper_matches_textbook(self):
        sys = ClassicalSystem(1, 1, 1, 2)
        t = np.linspace(0, 30, 301)
        x, _ = classical_exact(sys, ClassicalState(0, 0), t)
        np.testing.assert_allclose(x, -(np.sin(2 * t) - 2 * np.sin(t)) / 3, atol=1e-14)

    def test_fourth_order(self):
        sys = ClassicalSystem(1, 1, 1, 6.25)
        s0 = ClassicalState(1, 0)
        d1 = k_constancy_check(sys, s0, 20.0, 0.02)
        d2 = k_constancy_check(sys, s0, 20.0, 0.01)
        assert 12 < d1 / d2 < 20

    def test_k_constancy_free(self):
        assert k_constancy_check(ClassicalSystem(1, 1, 0, 6.25), ClassicalState(1, 0), 100, 1e-3) <= 1e-9

    def test_k_constancy_driven(self):
        assert k_constancy_check(ClassicalSystem(1, 1, 1, 6.25), ClassicalState(1, 0), 100, 1e-3) <= 1e-8

    def test_mutation_detected(self):
        drift = k_constancy_check(ClassicalSystem(1, 1, 1, 6.25), ClassicalState(1, 0), 100, 1e-3, flip_last_term=True)
        assert drift > 1e-3


P5 = Params(5.0)


def closed_form_alpha(gen, tau):
    """Particular + homogeneous solution of i a' = a + conj(g) for sinusoidal g.

    conj(g) = u exp(i rho tau) + w exp(-i rho tau) with (u, w) read off by
    sampling; the particular part is P exp(i rho tau) + Q exp(-i rho tau).
    """
    rho = gen.params.rho
    t1, t2 = 0.0, math.pi / (2 * rho)
    e = lambda t, s: np.exp(1j * s * rho * t)
    mat = np.array([[e(t1, 1), e(t1, -1)], [e(t2, 1), e(t2, -1)]])
    u, w = np.linalg.solve(mat, [np.conj(gen.coupling(t1)), np.conj(gen.coupling(t2))])
    P = -u / (rho + 1)
    Q = w / (rho - 1)
    return P * e(tau, 1) + Q * e(tau, -1) - (P + Q) * np.exp(-1j * tau)


class TestCoherentAlpha:
    def test_zero_drive(self):
        gen = build_h_generator(Params(0.0))
        assert coherent_alpha(gen, 3.0) == 0
        assert np.all(coherent_alpha_series(gen, np.linspace(0, 5, 11)) == 0)

    def test_quadrature_vs_ode(self):
        gen = build_h_generator(P5)

        def rhs(t, y):
            a = y[0] + 1j * y[1]
            da = -1j * (a + np.conj(gen.coupling(t)))
            return [da.real, da.imag]

        taus = np.linspace(0, 20, 41)
        sol = solve_ivp(rhs, (0, 20), [0.0, 0.0], method="DOP853", t_eval=taus, rtol=1e-13, atol=1e-14)
        ode = sol.y[0] + 1j * sol.y[1]
        quad = np.array([coherent_alpha(gen, t) for t in taus])
        np.testing.assert_allclose(quad, ode, atol=1e-10, rtol=0)

    @pytest.mark.parametrize("builder", [build_h_generator, build_k_generator])
    def test_series_vs_closed_form(self, builder):
        gen = builder(Params(7.0))
        taus = np.linspace(0, 20, 2001)
        want = closed_form_alpha(gen, taus)
        np.testing.assert_allclose(coherent_alpha_series(gen, taus), want, atol=1e-10, rtol=0)
        assert coherent_alpha(gen, 13.37) == pytest.approx(closed_form_alpha(gen, 13.37), abs=1e-10)

    @pytest.mark.parametrize("builder", [build_h_generator, build_k_generator])
    def test_convention_against_brute_force(self, builder):
        """<a> from a dim-256 Fock propagation fixes the sign/conjugation convention."""
        gen = builder(Params(1.0))
        series = propagate(gen, vacuum_state(256), 20.0, sample_every=0.5)
        c = series.amplitudes
        mean_a = np.einsum("sn,n,sn->s", c[:, :-1].conj(), np.sqrt(np.arange(1, c.shape[1])), c[:, 1:])
        np.testing.assert_allclose(mean_a, coherent_alpha_series(gen, series.taus), atol=1e-8, rtol=0)

    def test_mean_level_number(self):
        gen = build_h_generator(P5)
        series = propagate(gen, vacuum_state(64), 20.0, sample_every=0.1)
        mean_n = series.probs @ np.arange(series.dim)
        alpha = coherent_alpha_series(gen, series.taus)
        np.testing.assert_allclose(mean_n, np.abs(alpha) ** 2, atol=1e-6, rtol=0)

    def test_x2_closed_form(self):
        assert coherent_x2(0.0, 0.4) == pytest.approx(0.2)
        assert coherent_x2(1.5 + 2j, 0.4) == pytest.approx(0.2 * (1 + 9.0))


class TestPoisson:
    def test_vacuum(self):
        np.testing.assert_array_equal(poisson_occupations(0.0, 4), [1, 0, 0, 0, 0])

    def test_unit_mean(self):
        p = poisson_occupations(1.0, 30)
        assert p[0] == pytest.approx(math.exp(-1), abs=1e-15)
        assert p[1] == pytest.approx(math.exp(-1), abs=1e-15)
        assert p[0] == pytest.approx(0.367879, abs=1e-6)
        assert p.sum() == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("mean", [0.5, 5.0, 20.0, 50.0])
    def test_tail_bound(self, mean):
        assert poisson_occupations(math.sqrt(mean), 170).sum() >= 1 - 1e-10

    def test_phase_independent(self):
        np.testing.assert_allclose(poisson_occupations(2j, 10), poisson_occupations(-2.0, 10))

    def test_matches_direct_formula(self):
        a = 1.7 - 0.4j
        m = abs(a) ** 2
        direct = [math.exp(-m) * m**n / math.factorial(n) for n in range(25)]
        np.testing.assert_allclose(poisson_occupations(a, 24), direct, rtol=1e-13)

    def test_nmax(self):
        with pytest.raises(ValueError):
            poisson_occupations(1.0, 0)
