"""Pure numpy kernels: ring right-hand side and Dormand-Prince 5(4) stepping.

Mirrors ``_ckernels.pyx`` operation for operation; used when the compiled
extension is missing or ``CNOIDAL_TRAFFIC_PURE=1`` is set.
"""
import math

import numpy as np

from .errors import IntegratorError

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40

# continuous extension (Shampine), rows: stages 1,3,4,5,6,7; cols: x, x^2, x^3, x^4
DENSE = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA
FAC_MIN = 0.2
FAC_MAX = 10.0


def ring_rhs(y, ahat, vmax, hc):
    """Derivative of the stacked state ``[headway, headway_rate]``."""
    n = y.shape[0] // 2
    x = y[:n]
    v = y[n:]
    V = 0.5 * vmax * (np.tanh(x - hc) + math.tanh(hc))
    out = np.empty_like(y)
    out[:n] = v
    out[n:] = ahat * (np.roll(V, -1) - V - v)
    return out


def dopri5_ring(y, t, t_out, ahat, vmax, hc, rtol, atol, h, hmax, err_prev, rejected=False):
    """Advance from ``(t, y)`` past ``t_out[-1]``, sampling at every ``t_out``.

    Returns ``(Y, y, t, h, err_prev, rejected, n_accepted, n_rejected, n_rhs)``
    where ``Y[i]`` is the dense-output state at ``t_out[i]``.  The stepper
    state is taken at the start of the last accepted step, so resuming from it
    repeats that step bit for bit and later samples inside it are interpolated.
    """
    y = np.array(y, dtype=float)
    t_out = np.asarray(t_out, dtype=float)
    Y = np.empty((t_out.size, y.size))
    n_acc = n_rej = 0
    f = ring_rhs(y, ahat, vmax, hc)
    n_rhs = 1
    k = 0
    while k < t_out.size and t_out[k] <= t:
        Y[k] = y
        k += 1
    rejected = bool(rejected)
    resume = (y, t, h, err_prev, rejected)
    while k < t_out.size:
        if h > hmax:
            h = hmax
        if h < 10.0 * np.finfo(float).eps * max(abs(t), 1.0):
            raise IntegratorError(
                f"step size underflow at t={t!r} (|y|={float(np.linalg.norm(y))!r})"
            )
        k1 = f
        k2 = ring_rhs(y + h * (A21 * k1), ahat, vmax, hc)
        k3 = ring_rhs(y + h * (A31 * k1 + A32 * k2), ahat, vmax, hc)
        k4 = ring_rhs(y + h * (A41 * k1 + A42 * k2 + A43 * k3), ahat, vmax, hc)
        k5 = ring_rhs(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4), ahat, vmax, hc)
        k6 = ring_rhs(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5), ahat, vmax, hc)
        y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        k7 = ring_rhs(y_new, ahat, vmax, hc)
        n_rhs += 6
        err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = math.sqrt(float(np.mean((err / scale) ** 2)))
        if not math.isfinite(err_norm):
            raise IntegratorError(f"non-finite state near t={t!r}")
        if err_norm <= 1.0:
            resume = (y, t, h, err_prev, rejected)
            t_new = t + h
            while k < t_out.size and t_out[k] <= t_new:
                x = (t_out[k] - t) / h
                w = DENSE @ np.array([x, x * x, x ** 3, x ** 4])
                Y[k] = y + h * (w[0] * k1 + w[1] * k3 + w[2] * k4 + w[3] * k5 + w[4] * k6 + w[5] * k7)
                k += 1
            if err_norm == 0.0:
                fac = FAC_MAX
            else:
                fac = SAFETY * err_norm ** -ALPHA * err_prev ** BETA
                fac = min(FAC_MAX, max(FAC_MIN, fac))
            if rejected:
                fac = min(fac, 1.0)
            err_prev = max(err_norm, 1e-4)
            t = t_new
            y = y_new
            f = k7
            h = h * fac
            n_acc += 1
            rejected = False
        else:
            h = h * max(FAC_MIN, SAFETY * err_norm ** -ALPHA)
            n_rej += 1
            rejected = True
    return (Y, *resume, n_acc, n_rej, n_rhs)
