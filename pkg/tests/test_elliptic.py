import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from cnoidal_traffic.elliptic import (
    EllipticModulus,
    complete_E,
    complete_K,
    complete_KE,
    jacobi_scd,
)
from cnoidal_traffic.errors import DomainError

moduli = st.floats(min_value=1e-6, max_value=1 - 1e-9)
args = st.floats(min_value=-50.0, max_value=50.0)


def K_quad(m):
    return quad(lambda p: 1.0 / math.sqrt(1.0 - (m * math.sin(p)) ** 2), 0, math.pi / 2, epsabs=1e-15, epsrel=1e-13)[0]


def E_quad(m):
    return quad(lambda p: math.sqrt(1.0 - (m * math.sin(p)) ** 2), 0, math.pi / 2, epsabs=1e-15, epsrel=1e-13)[0]


class TestModulus:
    def test_rejects_out_of_range(self):
        for bad in (0.0, 1.0, -0.1, 1.5, float("nan")):
            with pytest.raises(DomainError):
                EllipticModulus.from_m(bad)

    def test_inconsistent_pair(self):
        with pytest.raises(DomainError):
            EllipticModulus(0.5, 0.4)

    def test_q_uses_complement(self):
        mod = EllipticModulus.from_comp(1e-14)
        assert mod.q == pytest.approx(1e-14 * (2 - 1e-14), rel=1e-15)
        assert mod.q > 0


class TestComplete:
    def test_small_modulus_limit(self):
        assert complete_K(1e-12) == pytest.approx(math.pi / 2, abs=1e-14)
        assert complete_E(1e-12) == pytest.approx(math.pi / 2, abs=1e-14)

    def test_E_endpoints(self):
        assert complete_E(0.0) == pytest.approx(math.pi / 2)
        assert complete_E(1.0) == 1.0
        assert complete_E(EllipticModulus.from_comp(1e-15)) == pytest.approx(1.0, abs=1e-12)

    def test_half_frozen(self):
        # 60-digit reference values
        assert complete_K(0.5) == pytest.approx(1.685750354812596, rel=1e-14)
        assert complete_E(0.5) == pytest.approx(1.4674622093394272, rel=1e-14)

    @pytest.mark.parametrize("m", [0.05, 0.3, 0.5, 0.7, 0.9, 0.99])
    def test_quadrature(self, m):
        K, E = complete_KE(m)
        assert K == pytest.approx(K_quad(m), rel=1e-12)
        assert E == pytest.approx(E_quad(m), rel=1e-12)

    def test_near_unity_frozen(self):
        mod = EllipticModulus.from_comp(1e-14)
        K, E = complete_KE(mod)
        assert K == pytest.approx(17.157816421798321041, rel=1e-13)
        assert E == pytest.approx(1.0000000000001665782, rel=1e-14)
        mod = EllipticModulus.from_comp(1e-6)
        K, E = complete_KE(mod)
        assert K == pytest.approx(7.947479773562344765, rel=1e-13)
        assert E == pytest.approx(1.0000074474777241924, rel=1e-14)

    def test_log_asymptote(self):
        mod = EllipticModulus.from_comp(1e-14)
        approx = math.log(4.0 / math.sqrt(mod.m_comp * (1 + mod.m)))
        assert complete_K(mod) == pytest.approx(approx, rel=1e-10)

    @pytest.mark.parametrize("c", [1e-8 * (1 - 1e-9), 1e-8 * (1 + 1e-9), 3e-9, 1e-7, 1e-11])
    def test_series_switch_against_mpmath(self, c):
        mp.mp.dps = 40
        m = 1 - mp.mpf(c)
        K, E = complete_KE(EllipticModulus.from_comp(c))
        assert K == pytest.approx(float(mp.ellipk(m * m)), rel=1e-14)
        assert E == pytest.approx(float(mp.ellipe(m * m)), rel=1e-14)

    def test_monotone(self):
        ms = [EllipticModulus.from_m(m) for m in np.linspace(1e-3, 0.99, 500)]
        ms += [EllipticModulus.from_comp(c) for c in np.geomspace(9e-3, 1e-15, 500)]
        KE = np.array([complete_KE(m) for m in ms])
        assert np.all(np.diff(KE[:, 0]) > 0)
        assert np.all(np.diff(KE[:, 1]) < 0)


class TestJacobi:
    def test_origin(self):
        for m in (0.1, 0.5, 0.999):
            assert jacobi_scd(0.0, m) == (0.0, 1.0, 1.0)

    def test_quarter_period(self):
        K = complete_K(0.5)
        sn, cn, dn = jacobi_scd(K, 0.5)
        assert sn == pytest.approx(1.0, abs=1e-14)
        assert cn == pytest.approx(0.0, abs=1e-14)
        assert dn == pytest.approx(math.sqrt(0.75), abs=1e-14)

    def test_frozen(self):
        sn, cn, dn = jacobi_scd(0.7, 0.8)
        assert sn == pytest.approx(0.61875564895254534, abs=1e-14)
        assert cn == pytest.approx(0.78558350726661419, abs=1e-14)
        assert dn == pytest.approx(0.8688903993077385, abs=1e-14)

    def test_inverse_by_quadrature(self):
        # u = F(phi) with sn = sin(phi)
        m, phi = 0.8, 0.9
        u = quad(lambda p: 1.0 / math.sqrt(1.0 - (m * math.sin(p)) ** 2), 0, phi, epsabs=1e-14)[0]
        sn, cn, _ = jacobi_scd(u, m)
        assert sn == pytest.approx(math.sin(phi), abs=1e-13)
        assert cn == pytest.approx(math.cos(phi), abs=1e-13)

    @settings(max_examples=300, deadline=None)
    @given(u=args, m=moduli)
    def test_identities(self, u, m):
        sn, cn, dn = jacobi_scd(u, m)
        assert abs(sn * sn + cn * cn - 1.0) < 1e-12
        assert abs(dn * dn + m * m * sn * sn - 1.0) < 1e-12

    @settings(max_examples=200, deadline=None)
    @given(u=args, m=st.floats(min_value=1e-3, max_value=0.999))
    def test_cn2_derivative(self, u, m):
        d = 1e-6
        _, cp, _ = jacobi_scd(u + d, m)
        _, cm, _ = jacobi_scd(u - d, m)
        sn, cn, dn = jacobi_scd(u, m)
        fd = (cp * cp - cm * cm) / (2 * d)
        assert abs(fd + 2 * sn * cn * dn) < 1e-6

    @settings(max_examples=200, deadline=None)
    @given(u=args, m=st.floats(min_value=1e-3, max_value=0.999))
    def test_cn2_period(self, u, m):
        K = complete_K(m)
        c1 = jacobi_scd(u, m)[1]
        c2 = jacobi_scd(u + 2 * K, m)[1]
        assert abs(c1 * c1 - c2 * c2) < 1e-12

    def test_vectorised(self):
        u = np.linspace(-3, 3, 7)
        sn, cn, dn = jacobi_scd(u, 0.6)
        assert sn.shape == (7,)
        for i, x in enumerate(u):
            assert jacobi_scd(x, 0.6) == (sn[i], cn[i], dn[i])

    def test_near_unity_frozen(self):
        # 40-digit reference values at 1 - m = 1e-14
        mod = EllipticModulus.from_comp(1e-14)
        sn, cn, dn = jacobi_scd(10.0, mod)
        assert sn == pytest.approx(0.99999999587769776, rel=1e-15)
        assert cn == pytest.approx(9.0799804271657638e-5, rel=1e-9)
        assert dn == pytest.approx(9.0799914403985931e-5, rel=1e-9)
        sn, cn, dn = jacobi_scd(2.0, mod)
        assert cn == pytest.approx(0.26580222883406477, rel=1e-13)
        assert dn == pytest.approx(0.26580222883409974, rel=1e-13)

    def test_rejects_nonfinite(self):
        with pytest.raises(DomainError):
            jacobi_scd(float("inf"), 0.5)
