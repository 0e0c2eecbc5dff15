import math
from types import SimpleNamespace

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import quad

from cnoidal_traffic.cnoidal import (
    CnoidalParams,
    KdVCoeffs,
    RiemannTriple,
    amplitude_a,
    cnoidal_to_riemann,
    dm_dTheta,
    ds3_dm,
    integration_constants,
    kappa_from_wavenumber,
    mean_d,
    moment_identities,
    mtilde,
    offset_b,
    rho_bar,
    riemann_to_cnoidal,
    s3_of_m,
    shape_H,
    steady_residual,
    u0_derivative,
    u0_profile,
)
from cnoidal_traffic.elliptic import EllipticModulus, complete_K, jacobi_scd
from cnoidal_traffic.errors import DegenerateError, DomainError
from cnoidal_traffic.ov_model import OVParams, kdv_coeffs_from_h

UNIT = KdVCoeffs()
TRAFFIC = kdv_coeffs_from_h(3.5, OVParams(h=3.5))
SQ2 = math.sqrt(2.0)


def derivs(theta, p):
    """u0 and its first four theta-derivatives from the ODE obeyed by cn**2."""
    mod = p.mod
    m2, q = mod.m ** 2, mod.q
    z = p.beta * (theta - p.theta0)
    sn, cn, dn = jacobi_scd(z, mod)
    w = cn * cn
    w1 = -2.0 * sn * cn * dn
    w2 = 2.0 * q - 4.0 * (q - m2) * w - 6.0 * m2 * w * w
    dP = -4.0 * (q - m2) - 12.0 * m2 * w
    w3 = dP * w1
    w4 = -12.0 * m2 * w1 * w1 + dP * w2
    a, B = p.a, p.beta
    return p.trough + a * w, a * B * w1, a * B ** 2 * w2, a * B ** 3 * w3, a * B ** 4 * w4


def period_mean(f, p):
    lo = p.theta0 - p.P
    val = quad(f, lo, lo + 2 * p.P, epsabs=1e-12, epsrel=1e-12, limit=400)[0]
    return val / (2 * p.P)


def mtilde_quadrature(p, c):
    """2 <u0 Vbar(u0)> by direct integration by parts, no KdV reduction."""
    k = p.k

    def g1(t):
        return derivs(t, p)[1] ** 2

    def g2(t):
        return derivs(t, p)[2] ** 2

    def g3(t):
        u, u1, *_ = derivs(t, p)
        return u * u1 * u1

    avg = -c.mu * k ** 2 * period_mean(g1, p) + c.gamma * k ** 4 * period_mean(g2, p) \
        - 2.0 * c.eta * k ** 2 * period_mean(g3, p)
    return 2.0 * avg


class TestCoeffs:
    def test_validation(self):
        with pytest.raises(DomainError):
            KdVCoeffs(lam=0.0)
        with pytest.raises(DomainError):
            KdVCoeffs(nu=0.0)


class TestShape:
    def test_unity_limit(self):
        H1, H2, H3 = shape_H(EllipticModulus.from_comp(1e-15))
        assert H1 == pytest.approx(math.sqrt(18), rel=1e-12)
        assert H2 == pytest.approx(2 * SQ2 / 3, rel=1e-12)
        # H3 + sqrt(2) ~ 3 sqrt(2) E/K: the approach is only logarithmic
        K = complete_K(EllipticModulus.from_comp(1e-15))
        assert (H3 + SQ2) * K / (3 * SQ2) == pytest.approx(1.0, abs=1e-12)

    def test_zero_limit(self):
        _, H2, H3 = shape_H(1e-3)
        assert H2 == pytest.approx(-2 * SQ2 / 3, abs=1e-5)
        assert H3 == pytest.approx(SQ2, abs=1e-5)

    @pytest.mark.parametrize("m", [0.2, 0.5, 0.9, 0.999])
    def test_against_mpmath(self, m):
        mp.mp.dps = 40
        M = mp.mpf(m)
        K, E = mp.ellipk(M * M), mp.ellipe(M * M)
        H1 = mp.sqrt(18 * M ** 4 / (1 - M ** 2 + M ** 4))
        H2 = H1 ** 3 * (-2 + 3 * M ** 2 + 3 * M ** 4 - 2 * M ** 6) / (162 * M ** 6)
        H3 = H1 / (3 * M ** 2) * (3 * E / K + M ** 2 - 2)
        got = shape_H(m)
        assert got == pytest.approx((float(H1), float(H2), float(H3)), rel=1e-13, abs=1e-15)

    def test_offset_limits(self):
        # b ~ -E/K near m = 1, so it vanishes only logarithmically
        vals = [offset_b(EllipticModulus.from_comp(10.0 ** -j)) for j in range(3, 16)]
        assert np.all(np.diff(vals) > 0) and -0.06 < vals[-1] < 0
        near = EllipticModulus.from_comp(1e-15)
        assert offset_b(near) * complete_K(near) == pytest.approx(-1.0, abs=1e-13)
        assert offset_b(1e-3) == pytest.approx(-0.5, abs=1e-6)

    def test_offset_mean(self):
        p = CnoidalParams.from_kappa(0.5, 1.0, 0.7, UNIT)
        assert period_mean(lambda t: u0_profile(t, p), p) == pytest.approx(p.d, abs=1e-8)

    @pytest.mark.parametrize("m", [0.05, 0.2, 0.3, 0.316, 0.317, 0.5])
    def test_offset_against_mpmath(self, m):
        # crosses the switch between series and closed form
        mp.mp.dps = 40
        M = mp.mpf(m)
        b = (1 - M * M) / (M * M) - mp.ellipe(M * M) / (M * M * mp.ellipk(M * M))
        assert offset_b(m) == pytest.approx(float(b), rel=1e-14)


class TestKappa:
    def test_quartic_scaling(self):
        k1 = kappa_from_wavenumber(1.0, 0.7, 3.0, UNIT)
        assert kappa_from_wavenumber(2.0, 0.7, 3.0, UNIT) == pytest.approx(16 * k1, rel=1e-14)

    def test_unit_ratio(self):
        m = 0.7
        got = kappa_from_wavenumber(1.0, m, complete_K(m), UNIT)
        assert got == pytest.approx(144 * (m ** 4 - m ** 2 + 1) / 18, rel=1e-14)

    def test_rejects(self):
        with pytest.raises(DomainError):
            kappa_from_wavenumber(0.0, 0.5, 1.0, UNIT)
        with pytest.raises(DomainError):
            kappa_from_wavenumber(1.0, 0.5, -1.0, UNIT)

    def test_amplitude_and_mean(self):
        assert amplitude_a(0.5, 0.0) == 0.0
        assert mean_d(0.5, 1.2, 0.0) == pytest.approx(0.2)
        near = EllipticModulus.from_comp(1e-15)
        H3 = shape_H(near)[2]
        assert mean_d(near, 1.2, 4.0) == pytest.approx(0.2 + 2.0 * H3, rel=1e-14)
        # the limit d = s1/6 - sqrt(2 kappa) is approached like 1/K
        gap = [mean_d(EllipticModulus.from_comp(10.0 ** -j), 1.2, 4.0) - (0.2 - math.sqrt(8.0)) for j in (4, 8, 15)]
        assert gap[0] > gap[1] > gap[2] > 0

    def test_params_invariants(self):
        p = CnoidalParams.from_kappa(0.9, 1.0, 0.0, TRAFFIC)
        assert p.a == pytest.approx(math.sqrt(p.kappa) * shape_H(0.9)[0], rel=1e-10)
        assert p.kappa == pytest.approx(p.s1 ** 2 / 18 - p.s2 / 6, rel=1e-12)
        assert p.trough == pytest.approx(p.a * p.b + p.d, abs=1e-12)
        q = CnoidalParams.build(0.9, 0.0, p.P, TRAFFIC)
        assert q.kappa == pytest.approx(p.kappa, rel=1e-13)


class TestConstants:
    def test_trivial(self):
        assert integration_constants(0, 0, 0) == (0, 0, 0)
        s1 = 1.7
        U, C, D = integration_constants(s1, 0, 0)
        assert (U, C, D) == pytest.approx((s1 / 6, s1 ** 2 / 24, -s1 ** 3 / 48))

    @pytest.mark.parametrize("m,s1", [(0.9, 0.0), (0.6, 2.0), (0.3, -1.0)])
    def test_from_wave_shape(self, m, s1):
        # constants of the cubic whose roots are trough, crest and trough - a q/m^2
        p = CnoidalParams.from_kappa(m, 1.0, s1, UNIT)
        T, a, m2, q = p.trough, p.a, m * m, p.mod.q
        C = T ** 2 / 2 - p.U * T + a * a * q / (6 * m2)
        D = -(T ** 3) / 3 + p.U * T ** 2 / 2 - a * a * q * T / (6 * m2)
        assert p.C_hat == pytest.approx(C, abs=1e-8)
        assert p.D_hat == pytest.approx(D, abs=1e-8)

    def test_first_integral_pointwise(self):
        for m, s1, kappa, c in [(0.9, 0.0, 1.0, UNIT), (0.6, 2.0, 0.5, KdVCoeffs(lam=2.0, nu=0.5))]:
            p = CnoidalParams.from_kappa(m, kappa, s1, c, k=1.5)
            th = np.linspace(-3 * p.P, 3 * p.P, 201)
            u = u0_profile(th, p)
            u1 = u0_derivative(th, p)
            res = c.lam * p.k ** 2 / c.nu * u1 ** 2 + u ** 3 / 3 - p.U * u ** 2 - 2 * p.C_hat * u - 2 * p.D_hat
            assert np.max(np.abs(res)) < 1e-8

    def test_solved_family_constants(self, sol_159_1):
        p = sol_159_1.cnoidal
        T, a, m2, q = p.trough, p.a, p.mod.m ** 2, p.mod.q
        assert p.C_hat == pytest.approx(T ** 2 / 2 - p.U * T + a * a * q / (6 * m2), abs=1e-8)
        assert p.D_hat == pytest.approx(-(T ** 3) / 3 + p.U * T ** 2 / 2 - a * a * q * T / (6 * m2), abs=1e-8)


class TestS3:
    def test_derivative_fd(self):
        h = 1e-6
        fd = (s3_of_m(0.7 + h, 1.0, -1.0) - s3_of_m(0.7 - h, 1.0, -1.0)) / (2 * h)
        assert ds3_dm(0.7, 1.0, -1.0) == pytest.approx(fd, abs=1e-6)

    def test_sign_and_limit(self):
        for m in np.linspace(0.01, 0.99, 50):
            assert ds3_dm(m, 1.0, -1.0) < 0
        assert abs(ds3_dm(EllipticModulus.from_comp(1e-15), 1.0, -1.0)) < 1e-13

    def test_rejects(self):
        with pytest.raises(DomainError):
            s3_of_m(0.5, 1.0, 1.0)

    def test_reproduces_triple(self):
        t = RiemannTriple(-1.0, 0.5, 2.0)
        m = math.sqrt(t.m2)
        assert s3_of_m(m, t.s1, t.s2) == pytest.approx(t.s3, abs=1e-12)


class TestRhoBar:
    @pytest.mark.parametrize("m,ref", [
        (0.3, 0.86702169916942658),
        (0.6, 0.83736820311861591),
        (0.9, 0.58562180590534536),
        (0.99, 0.26845568351921773),
    ])
    def test_frozen(self, m, ref):
        # 60-digit evaluation of the quotient as written
        assert rho_bar(m) == pytest.approx(ref, rel=1e-12)

    def test_limits_converge(self):
        lo = [rho_bar(10.0 ** -j) for j in range(2, 8)]
        assert np.all(np.abs(np.diff(lo)) < 1e-3)
        assert lo[-1] == pytest.approx(60 / (7 * math.pi ** 2), rel=1e-12)
        hi = [rho_bar(EllipticModulus.from_comp(10.0 ** -j)) for j in range(4, 15)]
        assert np.all(np.isfinite(hi)) and np.all(np.diff(hi) < 0)

    def test_series_switch(self):
        m = math.sqrt(0.1)
        a = rho_bar(m * (1 - 1e-12))
        b = rho_bar(m * (1 + 1e-12))
        assert a == pytest.approx(b, rel=1e-11)


class TestMtilde:
    def test_unperturbed(self):
        p = CnoidalParams.from_kappa(0.8, 1.0, 0.0, UNIT)
        assert mtilde(p, UNIT) == 0.0
        assert steady_residual(0.8, 0.0, 1.0, p.P, UNIT) == 0.0

    @pytest.mark.parametrize("m", [0.3, 0.6, 0.9, 0.99])
    def test_dual_route(self, m):
        for s1 in (0.0, 2.5):
            p = CnoidalParams.from_kappa(m, 1.0, s1, TRAFFIC)
            closed = mtilde(p, TRAFFIC)
            assert closed == pytest.approx(mtilde_quadrature(p, TRAFFIC), rel=1e-7)

    def test_generic_point(self):
        p = CnoidalParams.from_kappa(0.8, 1.0, 0.0, TRAFFIC)
        val = mtilde(p, TRAFFIC)
        assert val != 0.0
        assert val == pytest.approx(mtilde_quadrature(p, TRAFFIC), rel=1e-7)

    def test_residual_brackets_solved_root(self, sol_159_2):
        sol = sol_159_2
        c = kdv_coeffs_from_h(sol.h, sol.ov_params)

        def res(mc):
            mod = EllipticModulus.from_comp(mc)
            P = sol.P
            kappa = kappa_from_wavenumber(1.0, mod, P, c)
            from cnoidal_traffic.steady import s1_boundary
            return steady_residual(mod, s1_boundary(mod, kappa), 1.0, P, c)

        assert res(sol.m_comp * 0.5) * res(sol.m_comp * 2.0) < 0

    def test_dm_dtheta_identity(self):
        for m in (0.3, 0.7, 0.95):
            s1, s2 = 1.0, -1.0
            p = CnoidalParams.from_kappa(m, (s1 ** 2 - 3 * s2) / 18, s1, TRAFFIC)
            lhs = dm_dTheta(m, s1, s2, 1.0, TRAFFIC)
            rhs = -3.0 / TRAFFIC.nu * mtilde(p, TRAFFIC) / ds3_dm(m, s1, s2)
            assert lhs == pytest.approx(rhs, rel=1e-10)
        assert dm_dTheta(0.5, 1.0, -1.0, 1.0, UNIT) == 0.0

    def test_dm_dtheta_sign_matches_quadrature(self):
        s1, s2 = 0.0, -6.0
        p = CnoidalParams.from_kappa(0.8, 1.0, s1, TRAFFIC)
        expect = -3.0 / TRAFFIC.nu * mtilde_quadrature(p, TRAFFIC) / ds3_dm(0.8, s1, s2)
        assert math.copysign(1, dm_dTheta(0.8, s1, s2, 1.0, TRAFFIC)) == math.copysign(1, expect)

    def test_dm_dtheta_blows_up(self):
        vals = [abs(dm_dTheta(EllipticModulus.from_comp(c), 1.0, -1.0, 1.0, TRAFFIC)) for c in (1e-2, 1e-4, 1e-6)]
        assert vals[0] < vals[1] < vals[2]


class TestProfile:
    @pytest.fixture
    def p(self):
        return CnoidalParams.from_kappa(0.9, 1.0, 0.0, TRAFFIC, theta0=0.4)

    def test_crest(self, p):
        assert u0_profile(p.theta0, p) == pytest.approx(p.a * p.b + p.d + p.a, abs=1e-12)

    def test_periodic(self, p):
        th = np.linspace(-10, 10, 101)
        assert np.max(np.abs(u0_profile(th + 2 * p.P, p) - u0_profile(th, p))) < 1e-10

    @pytest.mark.parametrize("m,s1,kappa", [(0.9, 0.0, 1.0), (0.5, 3.0, 0.2), (0.999, -1.0, 2.0)])
    def test_mean(self, m, s1, kappa):
        p = CnoidalParams.from_kappa(m, kappa, s1, TRAFFIC)
        assert period_mean(lambda t: u0_profile(t, p), p) == pytest.approx(p.d, abs=1e-8)

    def test_vbar_zero_mean(self, p):
        c = TRAFFIC

        def vbar(t):
            u, u1, u2, _, u4 = derivs(t, p)
            return c.mu * u2 + c.gamma * u4 + c.eta * 2 * (u1 * u1 + u * u2)

        assert abs(period_mean(vbar, p)) < 1e-8

    def test_derivatives_fd(self, p):
        th = np.linspace(-3, 3, 13)
        h = 1e-5
        fd1 = (u0_profile(th + h, p) - u0_profile(th - h, p)) / (2 * h)
        fd2 = (u0_derivative(th + h, p) - u0_derivative(th - h, p)) / (2 * h)
        assert np.max(np.abs(u0_derivative(th, p) - fd1)) < 1e-6
        assert np.max(np.abs(u0_derivative(th, p, order=2) - fd2)) < 1e-6
        assert np.allclose(u0_derivative(th, p, order=2), derivs(th, p)[2], atol=1e-12)
        with pytest.raises(ValueError):
            u0_derivative(0.0, p, order=3)


class TestMoments:
    def test_flat_state(self):
        s1 = 1.3
        U, C, D = integration_constants(s1, s1 ** 2 / 3, (s1 / 3) ** 3)
        flat = SimpleNamespace(U=U, C_hat=C, D_hat=D, d=s1 / 6)
        I1, I2 = moment_identities(flat, UNIT)
        assert I1 == pytest.approx(0.0, abs=1e-14)
        assert I2 == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("c", [UNIT, KdVCoeffs(lam=2.0, nu=0.5)])
    def test_quadrature(self, c):
        p = CnoidalParams.from_kappa(0.9, 1.0, 0.0, c)
        I1, I2 = moment_identities(p, c)
        q1 = c.lam * p.k ** 2 / c.nu * period_mean(lambda t: u0_derivative(t, p) ** 2, p)
        q2 = (c.lam * p.k ** 2 / c.nu) ** 2 * period_mean(lambda t: u0_derivative(t, p, 2) ** 2, p)
        assert I1 == pytest.approx(q1, abs=1e-7)
        assert I2 == pytest.approx(q2, abs=1e-6)


class TestRiemann:
    def test_degenerate(self):
        flat = SimpleNamespace(a=0.0)
        with pytest.raises(DegenerateError):
            cnoidal_to_riemann(flat)
        with pytest.raises(DegenerateError):
            riemann_to_cnoidal(RiemannTriple(1.0, 1.0, 2.0), 1.0, None, UNIT)

    def test_relations(self):
        p = CnoidalParams.from_kappa(0.8, 1.0, 1.5, UNIT)
        t = cnoidal_to_riemann(p)
        assert t.r2 - t.r1 == pytest.approx(p.a, rel=1e-12)
        assert (t.r1 + t.r3 - t.r2) / 2 == pytest.approx(p.trough, abs=1e-12)
        assert t.r3 - t.r1 == pytest.approx(p.a / 0.64, rel=1e-12)
        assert t.s1 == pytest.approx(6 * p.U, abs=1e-12)
        assert t.s2 == pytest.approx(p.s2, abs=1e-10)
        assert t.s3 == pytest.approx(p.s3, abs=1e-10)
        assert t.m2 == pytest.approx(0.64, rel=1e-12)

    def test_round_trip(self, sol_159_2, sol_159_3):
        for sol in (sol_159_2, sol_159_3):
            c = kdv_coeffs_from_h(sol.h, sol.ov_params)
            p = sol.cnoidal
            back = riemann_to_cnoidal(cnoidal_to_riemann(p), p.k, p.P, c, theta0=p.theta0)
            for f in ("a", "b", "d", "P", "kappa", "s1", "s2", "s3", "trough"):
                assert getattr(back, f) == pytest.approx(getattr(p, f), rel=1e-10, abs=1e-10), f
            assert back.mod.m_comp == pytest.approx(p.mod.m_comp, rel=1e-8)

    def test_inconsistent_period(self):
        p = CnoidalParams.from_kappa(0.8, 1.0, 1.5, UNIT)
        with pytest.raises(DomainError):
            riemann_to_cnoidal(cnoidal_to_riemann(p), 1.0, p.P * 1.1, UNIT)

    def test_ordering(self):
        with pytest.raises(DomainError):
            RiemannTriple(2.0, 1.0, 3.0)

    def test_r_form_profile(self):
        # u0 = (r1 + r3 - r2)/2 + (r2 - r1) cn^2(sqrt(nu (r3 - r1)/(12 lam k^2)) (theta - theta0))
        c = KdVCoeffs(lam=1.5, nu=0.7)
        p = CnoidalParams.from_kappa(0.8, 1.0, 1.5, c, k=1.2, theta0=0.3)
        t = cnoidal_to_riemann(p)
        th = np.linspace(-4, 4, 17)
        _, cn, _ = jacobi_scd(math.sqrt(c.nu * (t.r3 - t.r1) / (12 * c.lam * p.k ** 2)) * (th - p.theta0), p.mod)
        u = (t.r1 + t.r3 - t.r2) / 2 + (t.r2 - t.r1) * cn ** 2
        assert np.allclose(u, u0_profile(th, p), atol=1e-12)
