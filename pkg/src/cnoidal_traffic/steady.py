"""Spatially periodic travelling-wave headway solutions on the ring.

Each member of the family is fixed by the number of oscillations ``n`` over
the ``N`` cars and the modulus ``m``; the driver sensitivity and wave speed
then follow.  :func:`solve_m` inverts that map for a requested sensitivity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .cnoidal import CnoidalParams, _AB, _qD, kappa_from_wavenumber
from .elliptic import EllipticModulus, as_modulus, complete_KE, jacobi_scd
from .errors import (
    DomainError,
    NoSolutionError,
    PrecisionLimitError,
    PrecisionWarning,
    SingularityError,
)
from .ov_model import (
    OVParams,
    kdv_coeffs_from_h,
    ov_derivatives,
    second_derivative_or_raise,
    tau_neutral,
)

__all__ = [
    "FamilySolution",
    "CurveRow",
    "half_period_P",
    "s1_boundary",
    "tau_gap",
    "tau_of_m",
    "solve_m",
    "find_roots",
    "wave_speed",
    "headway_asymptotic",
    "headway_rate_asymptotic",
    "family_curves",
]

M_COMP_MIN = 1e-15
M_COMP_MAX = 0.9
PRECISION_WARN_M_COMP = 1e-13


@dataclass(frozen=True)
class FamilySolution:
    n: int
    N: int
    h: float
    mod: EllipticModulus
    tau: float
    sensitivity: float
    epsilon: float
    s1: float
    P: float
    kappa: float
    wave_speed: float
    theta0: float
    tau_s: float
    gap: float  # tau_s - tau
    v_max: float = 2.0
    h_c: float = 4.0
    roots: tuple = field(default=(), compare=False)

    @property
    def m(self) -> float:
        return self.mod.m

    @property
    def m_comp(self) -> float:
        return self.mod.m_comp

    @property
    def ov_params(self) -> OVParams:
        return OVParams(h=self.h, N=self.N, sensitivity=self.sensitivity, v_max=self.v_max, h_c=self.h_c)

    @property
    def cnoidal(self) -> CnoidalParams:
        coeffs = kdv_coeffs_from_h(self.h, self.ov_params)
        return CnoidalParams.build(self.mod, self.s1, self.P, coeffs, k=1.0, theta0=self.theta0)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "h": self.h,
            "m": self.m,
            "m_comp": self.m_comp,
            "tau": self.tau,
            "sensitivity": self.sensitivity,
            "epsilon": self.epsilon,
            "s1": self.s1,
            "kappa": self.kappa,
            "P": self.P,
            "wave_speed": self.wave_speed,
        }


def _check_n(n: int, N: int) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    # fewer than 4 cars per oscillation cannot resolve the wave
    if 4 * n > N:
        raise DomainError(f"n={n} exceeds N/4 = {N / 4:g}")


def half_period_P(n: int, N: int, tau: float, tau_s: float) -> float:
    """Half-period in the phase variable that fits ``n`` waves onto the ring."""
    if tau >= tau_s:
        raise DomainError(f"need tau < tau_s, got tau={tau!r}, tau_s={tau_s!r}")
    return N / (2.0 * n) * math.sqrt(12.0 * (tau_s - tau))


def _half_period_from_gap(n, N, gap):
    return N / (2.0 * n) * math.sqrt(12.0 * gap)


def s1_boundary(mod, kappa: float) -> float:
    """Speed constant that puts the wave trough at zero (``a*b + d = 0``)."""
    mod = as_modulus(mod)
    q, D = _qD(mod)
    return 6.0 * math.sqrt(2.0 * kappa / D) * (1.0 - 2.0 * q)


def _bracket(mod: EllipticModulus) -> float:
    # 15/(7 rho_bar) + 6 m^2 K^2 (b + (3E/K + m^2 - 2)/(3 m^2)), simplified
    K = complete_KE(mod)[0]
    A, B = _AB(mod)
    if A == 0.0 or not math.isfinite(A):
        raise SingularityError(f"rho_bar vanishes at m={mod.m!r}")
    q = mod.q
    return K * K * (5.0 * B / (7.0 * A) - 2.0 * (1.0 - 2.0 * q))


def tau_gap(mod, n: int, N: int, h: float, params: OVParams) -> float:
    """``tau_s - tau(m)``, computed without subtracting nearby numbers."""
    mod = as_modulus(mod)
    V1, _ = ov_derivatives(h, params)
    return -2.0 * n * n / (3.0 * N * N * V1) * _bracket(mod)


def tau_of_m(mod, n: int, N: int, h: float, params: OVParams) -> float:
    """Delay time at which the ``n``-wave family member has modulus ``m``."""
    return tau_neutral(h, params) - tau_gap(mod, n, N, h, params)


def wave_speed(sol: FamilySolution, h: float | None = None, params: OVParams | None = None) -> float:
    h = sol.h if h is None else h
    params = sol.ov_params if params is None else params
    V1, _ = ov_derivatives(h, params)
    tau_s = tau_neutral(h, params)
    return V1 + sol.s1 / 6.0 * (tau_s - sol.tau) / tau_s


def _mod_at(x: float) -> EllipticModulus:
    return EllipticModulus.from_comp(math.exp(x))


def find_roots(sensitivity: float, n: int, N: int, h: float, params: OVParams,
               grid_size: int = 600) -> tuple[list[float], float]:
    """All ``m_comp`` in ``[1e-15, 0.9]`` where the family hits ``sensitivity``.

    Returns the roots (ascending ``m_comp``) and the residual
    ``tau_gap - target`` at the smallest ``m_comp`` on the grid.
    """
    tau_s = tau_neutral(h, params)
    target = tau_s - 1.0 / sensitivity

    def F(x):
        return tau_gap(_mod_at(x), n, N, h, params) - target

    xs = np.linspace(math.log(M_COMP_MIN), math.log(M_COMP_MAX), grid_size)
    fs = np.empty_like(xs)
    for i, x in enumerate(xs):
        try:
            fs[i] = F(x)
        except SingularityError:
            fs[i] = np.nan
    roots = []
    for i in range(len(xs) - 1):
        f0, f1 = fs[i], fs[i + 1]
        if not (np.isfinite(f0) and np.isfinite(f1)):
            continue
        if f0 == 0.0:
            roots.append(xs[i])
        elif f0 * f1 < 0.0:
            roots.append(brentq(F, xs[i], xs[i + 1], xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200))
    if fs[-1] == 0.0:
        roots.append(xs[-1])
    return [math.exp(x) for x in roots], float(fs[0])


def solve_m(sensitivity: float, n: int, N: int, h: float, params: OVParams,
            grid_size: int = 600) -> FamilySolution:
    """Family member with ``n`` oscillations at the given driver sensitivity.

    Scans ``ln(1 - m)`` for sign changes of ``tau(m) - 1/sensitivity`` and
    refines each bracket.  When several roots exist the largest modulus is
    returned; the others are listed in ``FamilySolution.roots``.
    """
    _check_n(n, N)
    second_derivative_or_raise(h, params)
    tau_s = tau_neutral(h, params)
    a_s = 1.0 / tau_s
    if not sensitivity > a_s:
        raise NoSolutionError(
            f"sensitivity {sensitivity!r} is not above the neutral value {a_s!r}: no metastable wave"
        )
    roots, f_floor = find_roots(sensitivity, n, N, h, params, grid_size)
    if not roots:
        if f_floor < 0.0:
            raise PrecisionLimitError(
                f"the n={n} curve reaches sensitivity {sensitivity!r} only at 1 - m < {M_COMP_MIN:g}"
            )
        raise NoSolutionError(f"the n={n} curve never reaches sensitivity {sensitivity!r}")
    m_comp = roots[0]
    if m_comp < PRECISION_WARN_M_COMP:
        warnings.warn(
            f"1 - m = {m_comp:.3e}: only the order of magnitude of 1 - m is reliable",
            PrecisionWarning,
            stacklevel=2,
        )
    mod = EllipticModulus.from_comp(m_comp)
    tau = 1.0 / sensitivity
    gap = tau_s - tau
    P = _half_period_from_gap(n, N, gap)
    coeffs = kdv_coeffs_from_h(h, params)
    kappa = kappa_from_wavenumber(1.0, mod, P, coeffs)
    s1 = s1_boundary(mod, kappa)
    V1, _ = ov_derivatives(h, params)
    eps2 = gap / tau_s
    return FamilySolution(
        n=int(n),
        N=int(N),
        h=float(h),
        mod=mod,
        tau=tau,
        sensitivity=float(sensitivity),
        epsilon=math.sqrt(eps2),
        s1=s1,
        P=P,
        kappa=kappa,
        wave_speed=V1 + s1 / 6.0 * eps2,
        theta0=P,
        tau_s=tau_s,
        gap=gap,
        v_max=params.v_max,
        h_c=params.h_c,
        roots=tuple(roots),
    )


def _phase(j, t, sol: FamilySolution):
    K = complete_KE(sol.mod)[0]
    j = np.asarray(j, dtype=float)
    t = np.asarray(t, dtype=float)
    return (K / sol.P) * (math.sqrt(12.0 * sol.gap) * (j + t * sol.wave_speed) + sol.theta0)


def _scale(sol, h, params):
    V2 = second_derivative_or_raise(h, params)
    return sol.epsilon ** 2 / V2


def headway_asymptotic(j, t, sol: FamilySolution, h: float | None = None, params: OVParams | None = None):
    """Leading-order headway of car ``j`` at time ``t`` (broadcasts)."""
    h = sol.h if h is None else h
    params = sol.ov_params if params is None else params
    cp = sol.cnoidal
    _, cn, _ = jacobi_scd(_phase(j, t, sol), sol.mod)
    out = h + _scale(sol, h, params) * (cp.trough + cp.a * cn * cn)
    return float(out) if np.ndim(out) == 0 else out


def headway_rate_asymptotic(j, t, sol: FamilySolution, h: float | None = None, params: OVParams | None = None):
    """Time derivative of :func:`headway_asymptotic`."""
    h = sol.h if h is None else h
    params = sol.ov_params if params is None else params
    cp = sol.cnoidal
    sn, cn, dn = jacobi_scd(_phase(j, t, sol), sol.mod)
    dphase_dt = cp.beta * math.sqrt(12.0 * sol.gap) * sol.wave_speed
    out = _scale(sol, h, params) * cp.a * (-2.0 * sn * cn * dn) * dphase_dt
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CurveRow:
    n: int
    m: float
    m_comp: float
    sensitivity: float
    wave_speed: float
    valid: bool
    note: str = ""


def family_curves(h: float, n_list: Iterable[int], m_grid: Sequence, N: int,
                  params: OVParams) -> list[CurveRow]:
    """Sensitivity and wave speed along ``m`` for each oscillation count.

    Rows where the sensitivity does not exceed the neutral value lie outside
    the family and are flagged ``valid=False`` (their wave speed is NaN).
    """
    V1, _ = ov_derivatives(h, params)
    tau_s = tau_neutral(h, params)
    coeffs = kdv_coeffs_from_h(h, params)
    rows = []
    for n in n_list:
        _check_n(n, N)
        for m in m_grid:
            mod = as_modulus(m)
            try:
                gap = tau_gap(mod, n, N, h, params)
            except SingularityError as exc:
                rows.append(CurveRow(n, mod.m, mod.m_comp, math.nan, math.nan, False, str(exc)))
                continue
            tau = tau_s - gap
            sens = 1.0 / tau if tau > 0 else math.inf
            if gap <= 0.0:
                rows.append(CurveRow(n, mod.m, mod.m_comp, sens, math.nan, False, "below neutral sensitivity"))
                continue
            if tau <= 0.0:
                rows.append(CurveRow(n, mod.m, mod.m_comp, sens, math.nan, False, "nonpositive delay time"))
                continue
            P = _half_period_from_gap(n, N, gap)
            kappa = kappa_from_wavenumber(1.0, mod, P, coeffs)
            ws = V1 + s1_boundary(mod, kappa) / 6.0 * gap / tau_s
            rows.append(CurveRow(n, mod.m, mod.m_comp, sens, ws, True))
    return rows
