"""Optimal-velocity car-following model on a ring road.

Headway form of the model for ``N`` cars with periodic wrap-around:

    d2(dx_j)/dt2 = a_sens * (V(dx_{j+1}) - V(dx_j) - d(dx_j)/dt)
    V(dx) = v_max/2 * (tanh(dx - h_c) + tanh(h_c))
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cnoidal import KdVCoeffs
from .errors import DegenerateError, DomainError

__all__ = [
    "OVParams",
    "RingState",
    "optimal_velocity",
    "ov_derivatives",
    "tau_neutral",
    "neutral_sensitivity",
    "epsilon_of",
    "kdv_coeffs_from_h",
    "ring_rhs",
]


@dataclass(frozen=True)
class OVParams:
    """Road and driver parameters.

    ``sensitivity`` (the inverse delay time) is only needed to evaluate the
    equations of motion; curve tabulation leaves it unset.
    """

    h: float
    N: int = 100
    sensitivity: Optional[float] = None
    v_max: float = 2.0
    h_c: float = 4.0

    def __post_init__(self):
        if not self.v_max > 0:
            raise DomainError(f"v_max must be positive, got {self.v_max!r}")
        if int(self.N) != self.N or self.N < 3:
            raise DomainError(f"need an integer N >= 3, got {self.N!r}")
        if self.sensitivity is not None and not self.sensitivity > 0:
            raise DomainError(f"sensitivity must be positive, got {self.sensitivity!r}")
        if not math.isfinite(self.h):
            raise DomainError("h must be finite")

    @property
    def tau(self) -> float:
        return 1.0 / self.sensitivity


@dataclass(frozen=True)
class RingState:
    t: float
    headway: np.ndarray
    headway_rate: np.ndarray = field(repr=False)

    def __post_init__(self):
        hw = np.asarray(self.headway, dtype=float)
        rt = np.asarray(self.headway_rate, dtype=float)
        if hw.ndim != 1 or hw.shape != rt.shape:
            raise DomainError("headway and headway_rate must be 1-D arrays of equal length")
        object.__setattr__(self, "headway", hw)
        object.__setattr__(self, "headway_rate", rt)

    @property
    def N(self) -> int:
        return self.headway.size

    @classmethod
    def uniform(cls, params: OVParams, t: float = 0.0) -> "RingState":
        return cls(t, np.full(params.N, float(params.h)), np.zeros(params.N))


def optimal_velocity(dx, params: OVParams):
    out = 0.5 * params.v_max * (np.tanh(np.asarray(dx, dtype=float) - params.h_c) + math.tanh(params.h_c))
    return float(out) if np.ndim(out) == 0 else out


def ov_derivatives(h: float, params: OVParams) -> tuple[float, float]:
    """``(V'(h), V''(h))``."""
    x = h - params.h_c
    e = math.exp(-2.0 * abs(x))
    sech2 = 4.0 * e / (1.0 + e) ** 2
    return 0.5 * params.v_max * sech2, -params.v_max * sech2 * math.tanh(x)


def tau_neutral(h: float, params: OVParams) -> float:
    """Delay time on the neutral stability line, ``1/(2 V'(h))``."""
    V1, _ = ov_derivatives(h, params)
    if V1 <= 0.0:
        raise DomainError(f"V'(h) vanishes at h={h!r}")
    return 1.0 / (2.0 * V1)


def neutral_sensitivity(h: float, params: OVParams) -> float:
    return 1.0 / tau_neutral(h, params)


def epsilon_of(tau: float, tau_s: float) -> float:
    """Distance from the neutral line, ``sqrt(1 - tau/tau_s)``."""
    if not 0.0 < tau <= tau_s:
        raise DomainError(f"need 0 < tau <= tau_s, got tau={tau!r}, tau_s={tau_s!r}")
    return math.sqrt((tau_s - tau) / tau_s)


def kdv_coeffs_from_h(h: float, params: OVParams) -> KdVCoeffs:
    V1, _ = ov_derivatives(h, params)
    if V1 <= 0.0:
        raise DomainError(f"V'(h) vanishes at h={h!r}")
    r = math.sqrt(3.0 / (2.0 * V1))
    return KdVCoeffs(lam=1.0, nu=1.0, mu=-math.sqrt(1.5 * V1), gamma=1.5 * r, eta=0.5 * r)


def second_derivative_or_raise(h: float, params: OVParams) -> float:
    _, V2 = ov_derivatives(h, params)
    if V2 == 0.0:
        raise DegenerateError(f"V''(h) = 0 at h = h_c = {params.h_c!r}; the headway scaling is singular")
    return V2


def ring_rhs(state: RingState, params: OVParams) -> RingState:
    """Time derivative of a ring state (returned as a RingState at the same t)."""
    if params.sensitivity is None:
        raise DomainError("ring_rhs needs params.sensitivity")
    V = optimal_velocity(state.headway, params)
    acc = params.sensitivity * (np.roll(V, -1) - V - state.headway_rate)
    return RingState(state.t, state.headway_rate.copy(), acc)
