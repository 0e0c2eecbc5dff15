"""Complete elliptic integrals and Jacobi elliptic functions.

Everything here takes the elliptic *modulus* ``m`` (not the parameter
``m**2``): the integrand of K is ``1/sqrt(1 - m**2 sin(phi)**2)``.

Moduli extremely close to one are the normal case for the traffic waves
(``1 - m`` down to ~1e-14), so the complement ``m_comp = 1 - m`` is carried
explicitly and ``1 - m**2`` is always formed as ``m_comp * (1 + m)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "EllipticModulus",
    "as_modulus",
    "complete_K",
    "complete_E",
    "complete_KE",
    "jacobi_scd",
]

_EPS = np.finfo(float).eps
_LOG4 = math.log(4.0)
# below this m_comp, K and E switch to their logarithmic expansions about m = 1
ASYMPTOTIC_THRESHOLD = 1e-8


@dataclass(frozen=True)
class EllipticModulus:
    """Elliptic modulus with its complement stored separately.

    Use :meth:`from_m` or :meth:`from_comp`; the latter keeps every digit of
    ``m_comp`` when the modulus is within a few ulps of one.
    """

    m: float
    m_comp: float

    def __post_init__(self):
        m, mc = float(self.m), float(self.m_comp)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "m_comp", mc)
        if not (0.0 < m < 1.0 and 0.0 < mc < 1.0):
            raise DomainError(f"modulus must lie in (0, 1), got m={m!r}, m_comp={mc!r}")
        if abs((1.0 - m) - mc) > _EPS:
            raise DomainError(f"m + m_comp != 1 (m={m!r}, m_comp={mc!r})")

    @classmethod
    def from_m(cls, m: float) -> "EllipticModulus":
        return cls(m, 1.0 - m)

    @classmethod
    def from_comp(cls, m_comp: float) -> "EllipticModulus":
        return cls(1.0 - m_comp, m_comp)

    @property
    def q(self) -> float:
        """``1 - m**2`` evaluated without cancellation."""
        return self.m_comp * (1.0 + self.m)

    @property
    def kprime(self) -> float:
        """Complementary modulus ``sqrt(1 - m**2)``."""
        return math.sqrt(self.q)


def as_modulus(mod) -> EllipticModulus:
    if isinstance(mod, EllipticModulus):
        return mod
    return EllipticModulus.from_m(float(mod))


@lru_cache(maxsize=4096)
def _agm(m: float, kprime: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    # a_n, c_n of the AGM started at (1, k'), c_0 = m
    a, b, c = 1.0, kprime, m
    aa, cc = [a], [c]
    for _ in range(64):
        if abs(c) <= _EPS * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        aa.append(a)
        cc.append(c)
    return tuple(aa), tuple(cc)


@lru_cache(maxsize=4096)
def _ke(mod: EllipticModulus) -> tuple[float, float]:
    q = mod.q
    if mod.m_comp < ASYMPTOTIC_THRESHOLD:
        L = _LOG4 - 0.5 * math.log(q)
        K = L + 0.25 * q * (L - 1.0) + 9.0 / 64.0 * q * q * (L - 7.0 / 6.0)
        E = 1.0 + 0.5 * q * (L - 0.5) + 3.0 / 16.0 * q * q * (L - 13.0 / 12.0)
        return K, E
    aa, cc = _agm(mod.m, math.sqrt(q))
    K = math.pi / (2.0 * aa[-1])
    s = sum(2.0 ** (n - 1) * c * c for n, c in enumerate(cc))
    return K, K * (1.0 - s)


def complete_KE(mod) -> tuple[float, float]:
    """Return ``(K(m), E(m))`` for a modulus strictly inside (0, 1)."""
    return _ke(as_modulus(mod))


def complete_K(mod) -> float:
    """Complete elliptic integral of the first kind.

    Raises DomainError unless ``0 < m < 1``; K diverges like
    ``log(4 / sqrt(1 - m**2))`` as ``m -> 1``.
    """
    return _ke(as_modulus(mod))[0]


def complete_E(mod) -> float:
    """Complete elliptic integral of the second kind.

    Unlike K, E is finite on the closed interval, so the plain floats 0 and 1
    are accepted and return the limits pi/2 and 1.
    """
    if not isinstance(mod, EllipticModulus):
        m = float(mod)
        if m == 0.0:
            return math.pi / 2
        if m == 1.0:
            return 1.0
        if not 0.0 < m < 1.0:
            raise DomainError(f"modulus must lie in [0, 1], got {m!r}")
    return _ke(as_modulus(mod))[1]


def jacobi_scd(u, mod):
    """Jacobi elliptic functions ``(sn, cn, dn)`` at argument ``u``.

    ``u`` may be a scalar or an array; scalars come back as floats. Uses the
    descending AGM / phase recursion after reducing ``u`` modulo the real
    period ``4K``. ``dn`` is rebuilt as ``sqrt(cn**2 + (1-m**2) sn**2)`` which
    keeps its relative accuracy when ``m`` is close to one.
    """
    mod = as_modulus(mod)
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise DomainError("argument u must be finite")
    q = mod.q
    K = _ke(mod)[0]
    aa, cc = _agm(mod.m, math.sqrt(q))
    period = 4.0 * K
    ur = u - period * np.round(u / period)
    n = len(aa) - 1
    phi = (2.0 ** n * aa[n]) * ur
    for i in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin((cc[i] / aa[i]) * np.sin(phi)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(cn * cn + q * sn * sn)
    if scalar:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn
