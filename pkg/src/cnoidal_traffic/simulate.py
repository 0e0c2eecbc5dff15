"""Numerical integration of the ring and comparison with the asymptotic wave."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import DomainError, IntegratorError, WindowTooShortError
from .ov_model import OVParams, RingState
from .steady import FamilySolution, headway_asymptotic, headway_rate_asymptotic

__all__ = [
    "IntegratorConfig",
    "IntegratorStats",
    "Trajectory",
    "ComparisonMetrics",
    "integrate_ring",
    "initial_from_family",
    "asymptotic_trajectory",
    "compare_metrics",
    "wave_period",
]


@dataclass(frozen=True)
class IntegratorConfig:
    t_samples: np.ndarray
    rtol: float = 1e-8
    atol: float = 1e-10
    initial_step: Optional[float] = None
    max_step: float = math.inf

    def __post_init__(self):
        ts = np.asarray(self.t_samples, dtype=float)
        if ts.ndim != 1 or ts.size == 0:
            raise DomainError("t_samples must be a non-empty 1-D sequence")
        if ts.size > 1 and not np.all(np.diff(ts) > 0):
            raise DomainError("t_samples must be strictly increasing")
        if not (self.rtol > 0 and self.atol > 0):
            raise DomainError("rtol and atol must be positive")
        if self.initial_step is not None and not self.initial_step > 0:
            raise DomainError("initial_step must be positive")
        if not self.max_step > 0:
            raise DomainError("max_step must be positive")
        object.__setattr__(self, "t_samples", ts)

    @classmethod
    def grid(cls, t_end: float, t_step: float, t_start: float = 0.0, **kw) -> "IntegratorConfig":
        n = int(round((t_end - t_start) / t_step))
        return cls(t_start + t_step * np.arange(n + 1), **kw)


@dataclass
class IntegratorStats:
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs: int = 0


@dataclass(frozen=True)
class Trajectory:
    """Sampled headways ``headway[i, j]`` of car ``j`` at ``t[i]``.

    In streaming mode the samples went to a sink and the arrays hold only the
    final sample.
    """

    params: OVParams
    config: IntegratorConfig
    t: np.ndarray
    headway: np.ndarray
    headway_rate: np.ndarray
    stats: IntegratorStats
    backend: str = field(default=_kernels.BACKEND)
    streamed: bool = False

    @property
    def samples(self) -> list[RingState]:
        return [RingState(t, x, v) for t, x, v in zip(self.t, self.headway, self.headway_rate)]

    @property
    def final(self) -> RingState:
        return RingState(self.t[-1], self.headway[-1], self.headway_rate[-1])


def _initial_step(y, f0, ahat, vmax, hc, rtol, atol):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    f1 = _kernels.ring_rhs(y + h0 * f0, ahat, vmax, hc)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100.0 * h0, h1)


def integrate_ring(initial: RingState, params: OVParams, config: IntegratorConfig, *,
                   sink: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], None]] = None,
                   chunk: int = 2000, interaction: bool = True) -> Trajectory:
    """Integrate the ring ODEs with adaptive Dormand-Prince 5(4).

    Parameters
    ----------
    initial
        State at ``initial.t``; every sample time must be ``>= initial.t``.
    sink
        If given, called as ``sink(t, headway, rate)`` with consecutive chunks
        of samples instead of accumulating them in memory.
    interaction
        ``False`` drops the optimal-velocity coupling, leaving
        ``rate' = -sensitivity * rate`` (used to check the integrator).
    """
    if params.sensitivity is None:
        raise DomainError("integrate_ring needs params.sensitivity")
    if initial.N != params.N:
        raise DomainError(f"state has {initial.N} cars but params.N = {params.N}")
    ts = config.t_samples
    if ts[0] < initial.t:
        raise DomainError("sample times precede the initial state")
    N = params.N
    ahat = float(params.sensitivity)
    vmax = float(params.v_max) if interaction else 0.0
    hc = float(params.h_c)
    y = np.concatenate([initial.headway, initial.headway_rate])
    t = float(initial.t)
    if config.initial_step is not None:
        h = float(config.initial_step)
    else:
        h = _initial_step(y, _kernels.ring_rhs(y, ahat, vmax, hc), ahat, vmax, hc, config.rtol, config.atol)
    err_prev = 1e-4
    rejected = False
    stats = IntegratorStats()
    chunks = []
    step = max(1, int(chunk)) if sink is not None else ts.size
    for lo in range(0, ts.size, step):
        t_out = ts[lo:lo + step]
        Y, y, t, h, err_prev, rejected, na, nr, nf = _kernels.dopri5_ring(
            y, t, t_out, ahat, vmax, hc, config.rtol, config.atol, h, config.max_step, err_prev, rejected
        )
        # the next chunk repeats the last accepted step
        stats.n_accepted += int(na) - (1 if lo + step < ts.size and na > 0 else 0)
        stats.n_rejected += int(nr)
        stats.n_rhs += int(nf)
        if not np.all(np.isfinite(Y)):
            raise IntegratorError("non-finite samples")
        if sink is not None:
            sink(t_out, Y[:, :N], Y[:, N:])
            last = (t_out[-1:], Y[-1:])
        else:
            chunks.append(Y)
    if sink is not None:
        t_keep, Y = last
        return Trajectory(params, config, t_keep, Y[:, :N].copy(), Y[:, N:].copy(), stats, streamed=True)
    Y = chunks[0]
    return Trajectory(params, config, ts.copy(), Y[:, :N].copy(), Y[:, N:].copy(), stats)


def initial_from_family(sol: FamilySolution, h: float | None = None, params: OVParams | None = None) -> RingState:
    j = np.arange(sol.N)
    return RingState(
        0.0,
        headway_asymptotic(j, 0.0, sol, h, params),
        headway_rate_asymptotic(j, 0.0, sol, h, params),
    )


def asymptotic_trajectory(sol: FamilySolution, config: IntegratorConfig) -> Trajectory:
    """The asymptotic wave sampled like a simulation (no integration)."""
    t = config.t_samples[:, None]
    j = np.arange(sol.N)[None, :]
    return Trajectory(
        sol.ov_params,
        config,
        config.t_samples.copy(),
        headway_asymptotic(j, t, sol),
        headway_rate_asymptotic(j, t, sol),
        IntegratorStats(),
        backend="asymptotic",
    )


def wave_period(sol: FamilySolution) -> float:
    """Time for one wave crest to pass a fixed car."""
    return sol.N / (sol.n * sol.wave_speed)


@dataclass(frozen=True)
class ComparisonMetrics:
    l2_rel_error: float
    linf_error: float
    amplitude_ratio: float
    phase_shift: float
    window: tuple

    def as_dict(self) -> dict:
        return {
            "l2_rel_error": self.l2_rel_error,
            "linf_error": self.linf_error,
            "amplitude_ratio": self.amplitude_ratio,
            "phase_shift": self.phase_shift,
            "window": list(self.window),
        }


def _best_shift(t, x_num, sol, period):
    # least-squares alignment x_num(t) ~ x_asym(t + s), s in [-period/2, period/2)
    def cost(s):
        return float(np.sum((x_num - headway_asymptotic(0, t + s, sol)) ** 2))

    shifts = np.linspace(-0.5 * period, 0.5 * period, 801)
    costs = np.array([cost(s) for s in shifts])
    i = int(np.argmin(costs))
    ds = shifts[1] - shifts[0]
    lo, hi = shifts[i] - ds, shifts[i] + ds
    # golden-section refinement inside the bracketing cell
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = cost(c), cost(d)
    for _ in range(60):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = cost(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = cost(d)
    s = 0.5 * (a + b)
    return 0.0 if cost(0.0) <= cost(s) else s


def compare_metrics(traj: Trajectory, sol: FamilySolution, h: float | None = None,
                    params: OVParams | None = None, *, min_periods: float = 2.0) -> ComparisonMetrics:
    """Compare a sampled trajectory with the asymptotic headway field.

    ``l2_rel_error`` is ``||num - asym|| / ||asym - h||`` over all sampled
    (t, j); ``linf_error`` the largest pointwise gap.  Amplitude ratio
    (numerical over asymptotic peak-to-trough) and phase shift use car 0 over
    the last ``min_periods`` wave periods; a positive shift means the
    numerical wave lags the asymptotic one.
    """
    if traj.streamed:
        raise DomainError("streamed trajectories keep no samples to compare")
    h = sol.h if h is None else h
    t = traj.t
    j = np.arange(sol.N)[None, :]
    asym = headway_asymptotic(j, t[:, None], sol, h, params)
    diff = traj.headway - asym
    denom = float(np.linalg.norm(asym - h))
    num = float(np.linalg.norm(diff))
    l2 = num / denom if denom > 0 else (0.0 if num == 0 else math.inf)
    linf = float(np.max(np.abs(diff)))

    period = wave_period(sol)
    span = t[-1] - t[0]
    want = min_periods * period
    if span < want * (1.0 - 1e-12):
        raise WindowTooShortError(
            f"sampled span {span:g} is shorter than {min_periods:g} wave periods ({want:g})"
        )
    sel = t >= t[-1] - want
    tw = t[sel]
    x_num = traj.headway[sel, 0]
    x_asym = asym[sel, 0]
    amp_asym = float(x_asym.max() - x_asym.min())
    amp_num = float(x_num.max() - x_num.min())
    ratio = amp_num / amp_asym if amp_asym > 0 else (1.0 if amp_num == 0 else math.inf)
    shift = _best_shift(tw, x_num, sol, period) if amp_asym > 0 else 0.0
    # lag: numerical crest arrives later than the asymptotic one
    return ComparisonMetrics(l2, linf, ratio, 0.0 - float(shift), (float(tw[0]), float(tw[-1])))
