"""Cnoidal waves of the perturbed KdV equation and their steady modulation.

The leading-order wave is

    u0(theta) = a*b + d + a * cn(beta*(theta - theta0); m)**2,

parameterised by the modulus ``m`` and the symmetric functions
``s1, s2, s3`` of the Riemann invariants, with ``kappa = s1**2/18 - s2/6``.
The perturbed equation is

    u_t + nu*u*u_x + lam*u_xxx + eps*(mu*u_xx + gamma*u_xxxx + eta*(u**2)_xx) = 0.

Several textbook expressions (``3*H2 + 2*H3``, ``3*H2*H3 + 4``, ``b``) are
0/0 or lose all their digits at one end of ``(0, 1)``.  They are evaluated
here through the combinations

    A(m) = 2*D*E - q*(1+q)*K
    B(m) = poly*E - q*(1 - 4q + q**2)*K

with ``q = 1 - m**2``, ``D = m**4 - m**2 + 1`` and
``poly = -2 + 3m**2 + 3m**4 - 2m**6``, so that

    3*H2 + 2*H3 = 3*sqrt(2) * A / (K * D**1.5)
    3*H2*H3 + 4 = 6 * B / (K * D**2)
    rho_bar     = 3 * A / (K**2 * B).

Near ``m = 0`` both A and B vanish like ``m**4``; there they come from exact
power series in ``m**2`` instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .elliptic import EllipticModulus, as_modulus, complete_KE, jacobi_scd
from .errors import DegenerateError, DomainError, SingularityError

__all__ = [
    "KdVCoeffs",
    "CnoidalParams",
    "RiemannTriple",
    "shape_H",
    "offset_b",
    "kappa_from_wavenumber",
    "amplitude_a",
    "mean_d",
    "integration_constants",
    "s3_of_m",
    "ds3_dm",
    "rho_bar",
    "mtilde",
    "steady_residual",
    "dm_dTheta",
    "u0_profile",
    "u0_derivative",
    "cnoidal_to_riemann",
    "riemann_to_cnoidal",
    "moment_identities",
]

SQRT2 = math.sqrt(2.0)
# m**2 at or below this uses the power series route
_SERIES_P = 0.1
_SERIES_TERMS = 48


@dataclass(frozen=True)
class KdVCoeffs:
    """Coefficients of the perturbed KdV equation (see module docstring)."""

    lam: float = 1.0
    nu: float = 1.0
    mu: float = 0.0
    gamma: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"lam must be positive, got {self.lam!r}")
        if self.nu == 0:
            raise DomainError("nu must be nonzero")


# ---------------------------------------------------------------------------
# small-m power series


def _poly_mul(a, b):
    out = [Fraction(0)] * min(len(a) + len(b) - 1, _SERIES_TERMS)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            if i + j < len(out):
                out[i + j] += x * y
    return out


def _poly_add(*ps):
    n = max(len(p) for p in ps)
    return [sum((p[i] for p in ps if i < len(p)), Fraction(0)) for i in range(n)]


def _build_series():
    k, e = [Fraction(1)], [Fraction(1)]
    half = Fraction(1, 2)
    ck = Fraction(1)
    ce = Fraction(1)
    for i in range(1, _SERIES_TERMS):
        ck *= ((half + i - 1) / i) ** 2
        ce *= (-half + i - 1) * (half + i - 1) / (i * i)
        k.append(ck)
        e.append(ce)
    neg = lambda p: [-x for x in p]  # noqa: E731
    # A = 2*D*E - q(1+q)*K, D = 1 - p + p^2, q(1+q) = 2 - 3p + p^2
    A = _poly_add(_poly_mul([2, -2, 2], e), neg(_poly_mul([2, -3, 1], k)))
    # B = (-2 + 3p + 3p^2 - 2p^3)*E + (2 - 4p + p^2 + p^3)*K
    B = _poly_add(_poly_mul([-2, 3, 3, -2], e), _poly_mul([2, -4, 1, 1], k))
    # ((1 - p)*K - E) / p
    bn = _poly_add(_poly_mul([1, -1], k), neg(e))
    assert A[0] == A[1] == B[0] == B[1] == bn[0] == 0
    to_f = lambda p: np.array([float(x) for x in p])  # noqa: E731
    return to_f(A), to_f(B), to_f(bn[1:])


_A_SERIES, _B_SERIES, _BNUM_SERIES = _build_series()


def _horner(coeffs, x):
    acc = 0.0
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


# ---------------------------------------------------------------------------
# shape functions


def _qD(mod: EllipticModulus):
    q = mod.q
    return q, 1.0 - q + q * q


def _AB(mod) -> tuple[float, float]:
    mod = as_modulus(mod)
    p = mod.m * mod.m
    if p <= _SERIES_P:
        half_pi = 0.5 * math.pi
        return half_pi * _horner(_A_SERIES, p), half_pi * _horner(_B_SERIES, p)
    K, E = complete_KE(mod)
    q, D = _qD(mod)
    poly = 2.0 - 3.0 * q - 3.0 * q * q + 2.0 * q ** 3
    A = 2.0 * D * E - q * (1.0 + q) * K
    B = poly * E - q * (1.0 - 4.0 * q + q * q) * K
    return A, B


def shape_H(mod) -> tuple[float, float, float]:
    """The shape functions ``(H1, H2, H3)`` of the modulus.

    ``a = sqrt(kappa)*H1`` and ``d = s1/6 + sqrt(kappa)*H3``; ``H2`` enters the
    integration constant ``D_hat``.
    """
    mod = as_modulus(mod)
    K, E = complete_KE(mod)
    q, D = _qD(mod)
    m2 = mod.m * mod.m
    H1 = 3.0 * SQRT2 * m2 / math.sqrt(D)
    H2 = SQRT2 / 3.0 * (2.0 - 3.0 * q - 3.0 * q * q + 2.0 * q ** 3) / D ** 1.5
    H3 = SQRT2 * (3.0 * E / K - 1.0 - q) / math.sqrt(D)
    return H1, H2, H3


def _sum_H(mod) -> float:
    # 3*H2 + 2*H3
    mod = as_modulus(mod)
    K = complete_KE(mod)[0]
    A, _ = _AB(mod)
    return 3.0 * SQRT2 * A / (K * _qD(mod)[1] ** 1.5)


def _prod_H(mod) -> float:
    # 3*H2*H3 + 4
    mod = as_modulus(mod)
    K = complete_KE(mod)[0]
    _, B = _AB(mod)
    return 6.0 * B / (K * _qD(mod)[1] ** 2)


def offset_b(mod) -> float:
    """Offset ``b`` that makes the period mean of ``u0`` equal to ``d``."""
    mod = as_modulus(mod)
    K, E = complete_KE(mod)
    p = mod.m * mod.m
    if p <= _SERIES_P:
        return 0.5 * math.pi * _horner(_BNUM_SERIES, p) / K
    return (mod.q - E / K) / p


def kappa_from_wavenumber(k: float, mod, P: float, coeffs: KdVCoeffs) -> float:
    if not (k > 0 and P > 0):
        raise DomainError(f"k and P must be positive, got k={k!r}, P={P!r}")
    mod = as_modulus(mod)
    K = complete_KE(mod)[0]
    D = _qD(mod)[1]
    return (k * K / P) ** 4 * (12.0 * coeffs.lam / coeffs.nu) ** 2 * D / 18.0


def amplitude_a(mod, kappa: float) -> float:
    if kappa < 0:
        raise DomainError(f"kappa must be nonnegative, got {kappa!r}")
    return math.sqrt(kappa) * shape_H(mod)[0]


def mean_d(mod, s1: float, kappa: float) -> float:
    if kappa < 0:
        raise DomainError(f"kappa must be nonnegative, got {kappa!r}")
    return s1 / 6.0 + math.sqrt(kappa) * shape_H(mod)[2]


def trough(mod, s1: float, kappa: float) -> float:
    """``a*b + d``, the minimum of ``u0`` over a period, free of E/K."""
    mod = as_modulus(mod)
    q, D = _qD(mod)
    return s1 / 6.0 + math.sqrt(2.0 * kappa / D) * (2.0 * q - 1.0)


def integration_constants(s1: float, s2: float, s3: float) -> tuple[float, float, float]:
    """``(U, C_hat, D_hat)`` from the symmetric functions of the invariants."""
    U = s1 / 6.0
    C = -s2 / 6.0 + s1 * s1 / 24.0
    Dh = -s3 / 6.0 + s1 / 48.0 * (4.0 * s2 - s1 * s1)
    return U, C, Dh


def _spread(s1, s2):
    S = s1 * s1 - 3.0 * s2
    if not S > 0:
        raise DomainError(f"need s1**2 - 3*s2 > 0, got {S!r}")
    return S


def s3_of_m(mod, s1: float, s2: float) -> float:
    mod = as_modulus(mod)
    S = _spread(s1, s2)
    q, D = _qD(mod)
    poly = 2.0 - 3.0 * q - 3.0 * q * q + 2.0 * q ** 3
    return -((S / D) ** 1.5) * poly / 27.0 + s1 * s2 / 3.0 - 2.0 * s1 ** 3 / 27.0


def ds3_dm(mod, s1: float, s2: float) -> float:
    mod = as_modulus(mod)
    S = _spread(s1, s2)
    q, D = _qD(mod)
    return -(S ** 1.5) * mod.m ** 3 * q / D ** 2.5


def rho_bar(mod) -> float:
    """Speed-relation factor ``H1/(mK)**2 * (3H2+2H3)/(3H2H3+4)``.

    Finite at both ends of ``(0, 1)`` although the quotient as written is
    0/0 there.
    """
    mod = as_modulus(mod)
    K = complete_KE(mod)[0]
    A, B = _AB(mod)
    if B == 0.0 or not math.isfinite(B):
        raise SingularityError(f"3*H2*H3 + 4 vanishes at m={mod.m!r}")
    return 3.0 * A / (K * K * B)


def _mtilde(mod, s1, kappa, coeffs: KdVCoeffs) -> float:
    lam, nu = coeffs.lam, coeffs.nu
    damp = -2.0 * (coeffs.mu + s1 * coeffs.eta / 3.0) * (2.0 * nu * kappa ** 1.5 / (5.0 * lam)) * _sum_H(mod)
    disp = 2.0 * (coeffs.gamma - 2.0 * lam * coeffs.eta / nu) * (nu * nu * kappa * kappa / (7.0 * lam * lam)) * (2.0 * _prod_H(mod))
    return damp + disp


def mtilde(params: "CnoidalParams", coeffs: KdVCoeffs) -> float:
    """Twice the period average of ``u0 * Vbar(u0)`` in closed form."""
    return _mtilde(params.mod, params.s1, params.kappa, coeffs)


def steady_residual(mod, s1: float, k: float, P: float, coeffs: KdVCoeffs) -> float:
    """Residual of the constant-modulus condition; zero on steady waves."""
    mod = as_modulus(mod)
    kappa = kappa_from_wavenumber(k, mod, P, coeffs)
    return 0.5 * _mtilde(mod, s1, kappa, coeffs)


def dm_dTheta(mod, s1: float, s2: float, k: float, coeffs: KdVCoeffs) -> float:
    """Slow drift of the modulus along the phase variable."""
    mod = as_modulus(mod)
    S = _spread(s1, s2)
    kappa = S / 18.0
    q, D = _qD(mod)
    denom = S ** 1.5 * mod.m ** 3 * (-q)
    if denom == 0.0:
        raise SingularityError(f"dm/dTheta is singular at m={mod.m!r}")
    return -3.0 / (k * coeffs.nu) * D ** 2.5 / denom * _mtilde(mod, s1, kappa, coeffs)


# ---------------------------------------------------------------------------
# parameter bundle


@dataclass(frozen=True)
class CnoidalParams:
    """One cnoidal wave, with every derived constant precomputed.

    Build with :meth:`build` (given the half-period) or :meth:`from_kappa`.
    """

    mod: EllipticModulus
    a: float
    b: float
    d: float
    beta: float
    P: float
    k: float
    theta0: float
    s1: float
    s2: float
    s3: float
    kappa: float
    U: float
    C_hat: float
    D_hat: float
    c: float
    omega: float
    trough: float

    @classmethod
    def build(cls, mod, s1: float, P: float, coeffs: KdVCoeffs, k: float = 1.0, theta0: float = 0.0):
        mod = as_modulus(mod)
        kappa = kappa_from_wavenumber(k, mod, P, coeffs)
        return cls._assemble(mod, s1, P, kappa, coeffs, k, theta0)

    @classmethod
    def from_kappa(cls, mod, kappa: float, s1: float, coeffs: KdVCoeffs, k: float = 1.0, theta0: float = 0.0):
        """Same wave, but fix ``kappa`` and solve the half-period from it."""
        if not kappa > 0:
            raise DomainError(f"kappa must be positive, got {kappa!r}")
        mod = as_modulus(mod)
        K = complete_KE(mod)[0]
        D = _qD(mod)[1]
        scale = (12.0 * coeffs.lam / coeffs.nu) ** 2 * D / 18.0
        P = k * K * (scale / kappa) ** 0.25
        return cls._assemble(mod, s1, P, kappa, coeffs, k, theta0)

    @classmethod
    def _assemble(cls, mod, s1, P, kappa, coeffs, k, theta0):
        K = complete_KE(mod)[0]
        s2 = s1 * s1 / 3.0 - 6.0 * kappa
        s3 = s3_of_m(mod, s1, s2)
        U, C, Dh = integration_constants(s1, s2, s3)
        c = coeffs.nu * U
        return cls(
            mod=mod,
            a=amplitude_a(mod, kappa),
            b=offset_b(mod),
            d=mean_d(mod, s1, kappa),
            beta=K / P,
            P=P,
            k=k,
            theta0=theta0,
            s1=s1,
            s2=s2,
            s3=s3,
            kappa=kappa,
            U=U,
            C_hat=C,
            D_hat=Dh,
            c=c,
            omega=k * c,
            trough=trough(mod, s1, kappa),
        )


def u0_profile(theta, params: CnoidalParams):
    """Leading-order wave ``u0`` at phase ``theta`` (scalar or array)."""
    _, cn, _ = jacobi_scd(params.beta * (np.asarray(theta, dtype=float) - params.theta0), params.mod)
    out = params.trough + params.a * cn * cn
    return float(out) if np.ndim(out) == 0 else out


def u0_derivative(theta, params: CnoidalParams, order: int = 1):
    """First or second ``theta``-derivative of :func:`u0_profile`."""
    sn, cn, dn = jacobi_scd(params.beta * (np.asarray(theta, dtype=float) - params.theta0), params.mod)
    aB = params.a * params.beta
    if order == 1:
        out = -2.0 * aB * sn * cn * dn
    elif order == 2:
        m2 = params.mod.m ** 2
        out = -2.0 * aB * params.beta * (cn * cn * dn * dn - sn * sn * dn * dn - m2 * sn * sn * cn * cn)
    else:
        raise ValueError("order must be 1 or 2")
    return float(out) if np.ndim(out) == 0 else out


def moment_identities(params: CnoidalParams, coeffs: KdVCoeffs) -> tuple[float, float]:
    """Closed forms for the period averages of ``u0'**2`` and ``u0''**2``.

    Returns ``I1 = lam*k**2/nu * <u0_theta**2>`` and
    ``I2 = lam**2*k**4/nu**2 * <u0_thetatheta**2>``.
    """
    U, C, Dh, d = params.U, params.C_hat, params.D_hat, params.d
    I1 = 0.4 * (3.0 * Dh + 2.0 * C * d + U * (C + U * d))
    I2 = (6.0 * Dh * d + 8.0 * C * C + U * (-6.0 * Dh + 6.0 * C * d + 2.0 * U * C + 2.0 * U * U * d)) / 7.0
    return I1, I2


# ---------------------------------------------------------------------------
# Riemann invariants


@dataclass(frozen=True)
class RiemannTriple:
    r1: float
    r2: float
    r3: float

    def __post_init__(self):
        if not (self.r1 <= self.r2 <= self.r3 and self.r1 < self.r3):
            raise DomainError(f"need r1 <= r2 <= r3 with r1 < r3, got {self}")

    @property
    def m2(self) -> float:
        return (self.r2 - self.r1) / (self.r3 - self.r1)

    @property
    def s1(self) -> float:
        return self.r1 + self.r2 + self.r3

    @property
    def s2(self) -> float:
        return self.r1 * self.r2 + self.r1 * self.r3 + self.r2 * self.r3

    @property
    def s3(self) -> float:
        return self.r1 * self.r2 * self.r3


def cnoidal_to_riemann(params: CnoidalParams) -> RiemannTriple:
    if params.a == 0.0:
        raise DegenerateError("zero amplitude: the modulus is undefined")
    m2 = params.mod.m ** 2
    r1 = 2.0 * params.trough - params.a * params.mod.q / m2
    return RiemannTriple(r1, r1 + params.a, r1 + params.a / m2)


def riemann_to_cnoidal(triple: RiemannTriple, k: float, P: float | None, coeffs: KdVCoeffs,
                       theta0: float = 0.0) -> CnoidalParams:
    """Inverse of :func:`cnoidal_to_riemann`.

    ``kappa`` comes from the triple; if ``P`` is given it must agree with
    that ``kappa`` through the wavenumber relation.
    """
    span = triple.r3 - triple.r1
    if triple.r2 == triple.r1:
        raise DegenerateError("r1 == r2: zero amplitude")
    q = (triple.r3 - triple.r2) / span
    m = math.sqrt((triple.r2 - triple.r1) / span)
    mod = EllipticModulus.from_comp(q / (1.0 + m)) if m > 0.5 else EllipticModulus.from_m(m)
    kappa = (triple.s1 ** 2 - 3.0 * triple.s2) / 18.0
    params = CnoidalParams.from_kappa(mod, kappa, triple.s1, coeffs, k=k, theta0=theta0)
    if P is not None and abs(params.P - P) > 1e-8 * P:
        raise DomainError(f"P={P!r} is inconsistent with the triple (expected {params.P!r})")
    return params
