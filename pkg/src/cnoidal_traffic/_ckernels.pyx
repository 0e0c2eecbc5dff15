# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ring right-hand side and Dormand-Prince 5(4) stepping.

Same algorithm and tableau as ``_pykernels``; results agree to rounding.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport tanh, sqrt, fabs, isfinite, pow, fmax, fmin

from .errors import IntegratorError

cnp.import_array()

cdef double C_A21 = 1.0 / 5
cdef double C_A31 = 3.0 / 40, C_A32 = 9.0 / 40
cdef double C_A41 = 44.0 / 45, C_A42 = -56.0 / 15, C_A43 = 32.0 / 9
cdef double C_A51 = 19372.0 / 6561, C_A52 = -25360.0 / 2187, C_A53 = 64448.0 / 6561, C_A54 = -212.0 / 729
cdef double C_A61 = 9017.0 / 3168, C_A62 = -355.0 / 33, C_A63 = 46732.0 / 5247, C_A64 = 49.0 / 176, C_A65 = -5103.0 / 18656
cdef double C_A71 = 35.0 / 384, C_A73 = 500.0 / 1113, C_A74 = 125.0 / 192, C_A75 = -2187.0 / 6784, C_A76 = 11.0 / 84
cdef double C_E1 = 71.0 / 57600, C_E3 = -71.0 / 16695, C_E4 = 71.0 / 1920, C_E5 = -17253.0 / 339200, C_E6 = 22.0 / 525, C_E7 = -1.0 / 40

cdef double[:, ::1] DENSE = np.array([
    [1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432],
    [0.0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933, 87487479700.0 / 32700410799],
    [0.0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072],
    [0.0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408, 701980252875.0 / 199316789632],
    [0.0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844],
    [0.0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423],
])

cdef double SAFETY = 0.9
cdef double BETA = 0.04
cdef double ALPHA = 0.2 - 0.75 * 0.04
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 10.0
cdef double DBL_EPS = 2.220446049250313e-16


cdef void _rhs(double[::1] y, double[::1] out, double[::1] V, Py_ssize_t n,
               double ahat, double vmax, double hc, double th) nogil:
    cdef Py_ssize_t j
    for j in range(n):
        V[j] = 0.5 * vmax * (tanh(y[j] - hc) + th)
    for j in range(n - 1):
        out[j] = y[n + j]
        out[n + j] = ahat * (V[j + 1] - V[j] - y[n + j])
    out[n - 1] = y[2 * n - 1]
    out[2 * n - 1] = ahat * (V[0] - V[n - 1] - y[2 * n - 1])


def ring_rhs(y, double ahat, double vmax, double hc):
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0] // 2
    out = np.empty(2 * n)
    cdef double[::1] ov = out
    cdef double[::1] V = np.empty(n)
    _rhs(yv, ov, V, n, ahat, vmax, hc, tanh(hc))
    return out


def dopri5_ring(y, double t, t_out, double ahat, double vmax, double hc,
                double rtol, double atol, double h, double hmax, double err_prev, bint rejected=False):
    cdef double[::1] yv = np.array(y, dtype=np.float64)
    cdef double[::1] to = np.ascontiguousarray(t_out, dtype=np.float64)
    cdef Py_ssize_t m = yv.shape[0]
    cdef Py_ssize_t n = m // 2
    cdef Py_ssize_t nout = to.shape[0]
    Y = np.empty((nout, m))
    cdef double[:, ::1] Yv = Y
    cdef double[:, ::1] K = np.empty((7, m))
    cdef double[::1] tmp = np.empty(m)
    cdef double[::1] ynew = np.empty(m)
    cdef double[::1] V = np.empty(n)
    cdef double th = tanh(hc)
    cdef double w[6]
    cdef long n_acc = 0, n_rej = 0, n_rhs = 0
    cdef Py_ssize_t i, k = 0, r
    cdef double err_norm, sc, e, x, fac, t_new, acc, ynorm
    cdef double[::1] y0 = np.array(yv, copy=True)
    cdef double t0 = t, h0 = h, e0 = err_prev
    cdef bint r0 = rejected

    _rhs(yv, K[0], V, n, ahat, vmax, hc, th)
    n_rhs = 1
    while k < nout and to[k] <= t:
        Yv[k, :] = yv
        k += 1
    while k < nout:
        if h > hmax:
            h = hmax
        if h < 10.0 * DBL_EPS * fmax(fabs(t), 1.0):
            ynorm = 0.0
            for i in range(m):
                ynorm += yv[i] * yv[i]
            raise IntegratorError(f"step size underflow at t={t!r} (|y|={sqrt(ynorm)!r})")
        with nogil:
            for i in range(m):
                tmp[i] = yv[i] + h * (C_A21 * K[0, i])
            _rhs(tmp, K[1], V, n, ahat, vmax, hc, th)
            for i in range(m):
                tmp[i] = yv[i] + h * (C_A31 * K[0, i] + C_A32 * K[1, i])
            _rhs(tmp, K[2], V, n, ahat, vmax, hc, th)
            for i in range(m):
                tmp[i] = yv[i] + h * (C_A41 * K[0, i] + C_A42 * K[1, i] + C_A43 * K[2, i])
            _rhs(tmp, K[3], V, n, ahat, vmax, hc, th)
            for i in range(m):
                tmp[i] = yv[i] + h * (C_A51 * K[0, i] + C_A52 * K[1, i] + C_A53 * K[2, i] + C_A54 * K[3, i])
            _rhs(tmp, K[4], V, n, ahat, vmax, hc, th)
            for i in range(m):
                tmp[i] = yv[i] + h * (C_A61 * K[0, i] + C_A62 * K[1, i] + C_A63 * K[2, i]
                                      + C_A64 * K[3, i] + C_A65 * K[4, i])
            _rhs(tmp, K[5], V, n, ahat, vmax, hc, th)
            for i in range(m):
                ynew[i] = yv[i] + h * (C_A71 * K[0, i] + C_A73 * K[2, i] + C_A74 * K[3, i]
                                       + C_A75 * K[4, i] + C_A76 * K[5, i])
            _rhs(ynew, K[6], V, n, ahat, vmax, hc, th)
            acc = 0.0
            for i in range(m):
                e = h * (C_E1 * K[0, i] + C_E3 * K[2, i] + C_E4 * K[3, i]
                         + C_E5 * K[4, i] + C_E6 * K[5, i] + C_E7 * K[6, i])
                sc = atol + rtol * fmax(fabs(yv[i]), fabs(ynew[i]))
                acc += (e / sc) * (e / sc)
            err_norm = sqrt(acc / m)
        n_rhs += 6
        if not isfinite(err_norm):
            raise IntegratorError(f"non-finite state near t={t!r}")
        if err_norm <= 1.0:
            y0[:] = yv
            t0 = t
            h0 = h
            e0 = err_prev
            r0 = rejected
            t_new = t + h
            while k < nout and to[k] <= t_new:
                x = (to[k] - t) / h
                for r in range(6):
                    w[r] = (((DENSE[r, 3] * x + DENSE[r, 2]) * x + DENSE[r, 1]) * x + DENSE[r, 0]) * x
                for i in range(m):
                    Yv[k, i] = yv[i] + h * (w[0] * K[0, i] + w[1] * K[2, i] + w[2] * K[3, i]
                                            + w[3] * K[4, i] + w[4] * K[5, i] + w[5] * K[6, i])
                k += 1
            if err_norm == 0.0:
                fac = FAC_MAX
            else:
                fac = SAFETY * pow(err_norm, -ALPHA) * pow(err_prev, BETA)
                fac = fmin(FAC_MAX, fmax(FAC_MIN, fac))
            if rejected:
                fac = fmin(fac, 1.0)
            err_prev = fmax(err_norm, 1e-4)
            t = t_new
            for i in range(m):
                yv[i] = ynew[i]
                K[0, i] = K[6, i]
            h = h * fac
            n_acc += 1
            rejected = False
        else:
            h = h * fmax(FAC_MIN, SAFETY * pow(err_norm, -ALPHA))
            n_rej += 1
            rejected = True
    return Y, np.asarray(y0), t0, h0, e0, r0, n_acc, n_rej, n_rhs
