"""Compiled inner loops. Arithmetic order mirrors ``lorenz_map.step`` exactly."""

import numpy as np
from numba import njit


@njit(cache=True)
def _bad(v, thr2):
    m = v.real * v.real + v.imag * v.imag
    return not (m <= thr2)


@njit(cache=True)
def iterate_complex(a, b, r, dt, x, y, z, steps, stride, threshold):
    """Run ``steps`` map steps; return (ks, samples, diverged_at or -1)."""
    n_rec = steps // stride + 1
    ks = np.empty(n_rec, np.int64)
    out = np.empty((n_rec, 3), np.complex128)
    thr2 = threshold * threshold
    ks[0] = 0
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = z
    j = 1
    for k in range(1, steps + 1):
        xn = x + a * (y - x) * dt
        yn = y + (-x * z + r * x - y) * dt
        zn = z + (x * y - b * z) * dt
        x = xn
        y = yn
        z = zn
        if _bad(x, thr2) or _bad(y, thr2) or _bad(z, thr2):
            return ks[:j], out[:j], k
        if k % stride == 0:
            ks[j] = k
            out[j, 0] = x
            out[j, 1] = y
            out[j, 2] = z
            j += 1
    return ks[:j], out[:j], -1


@njit(cache=True)
def iterate_real(a, b, r, dt, x, y, z, steps, stride, threshold):
    n_rec = steps // stride + 1
    ks = np.empty(n_rec, np.int64)
    out = np.empty((n_rec, 3), np.float64)
    ks[0] = 0
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = z
    j = 1
    for k in range(1, steps + 1):
        xn = x + a * (y - x) * dt
        yn = y + (-x * z + r * x - y) * dt
        zn = z + (x * y - b * z) * dt
        x = xn
        y = yn
        z = zn
        if not (abs(x) <= threshold and abs(y) <= threshold and abs(z) <= threshold):
            return ks[:j], out[:j], k
        if k % stride == 0:
            ks[j] = k
            out[j, 0] = x
            out[j, 1] = y
            out[j, 2] = z
            j += 1
    return ks[:j], out[:j], -1


@njit(cache=True)
def _orthonormalize(v, logs):
    # modified Gram-Schmidt on the 6 real vectors stored as 3 complex rows;
    # the real inner product is Re(sum conj(u) * w)
    n = v.shape[0]
    for i in range(n):
        for j in range(i):
            dot = 0.0
            for c in range(3):
                dot += (v[j, c].conjugate() * v[i, c]).real
            for c in range(3):
                v[i, c] = v[i, c] - dot * v[j, c]
        nrm2 = 0.0
        for c in range(3):
            nrm2 += v[i, c].real * v[i, c].real + v[i, c].imag * v[i, c].imag
        nrm = np.sqrt(nrm2)
        logs[i] = np.log(nrm)
        for c in range(3):
            v[i, c] = v[i, c] / nrm


@njit(cache=True)
def lyapunov_run(a, b, r, dt, x, y, z, burn_in, total, interval, window, threshold):
    """Joint orbit + tangent-frame evolution.

    Tangent vectors live in C^3 viewed as R^6: a 6-real vector is stored as
    three complex numbers, so the complex derivative acting on it equals the
    real 6x6 block representation acting on the real pairs.

    Exponent sums and the log-determinant accumulate after ``burn_in`` only;
    the windowed largest-exponent series covers the whole run from step 0.

    Returns (sums, logdet_sum, window_k, window_vals, n_windows, diverged_at,
    final_state).
    """
    thr2 = threshold * threshold
    v = np.zeros((6, 3), np.complex128)
    for i in range(3):
        v[2 * i, i] = 1.0
        v[2 * i + 1, i] = 1j
    sums = np.zeros(6)
    logs = np.zeros(6)
    logdet = 0.0
    n_win = total // window
    wk = np.empty(max(n_win, 1), np.int64)
    wv = np.empty(max(n_win, 1))
    w_acc = 0.0
    w_idx = 0
    final = np.empty(3, np.complex128)
    for k in range(1, total + 1):
        d00 = 1.0 - a * dt
        d01 = a * dt
        d10 = (r - z) * dt
        d11 = 1.0 - dt
        d12 = -x * dt
        d20 = y * dt
        d21 = x * dt
        d22 = 1.0 - b * dt
        if k > burn_in:
            det = d00 * (d11 * d22 - d12 * d21) - d01 * (d10 * d22 - d12 * d20)
            logdet += 2.0 * np.log(abs(det))
        for i in range(6):
            v0 = v[i, 0]
            v1 = v[i, 1]
            v2 = v[i, 2]
            v[i, 0] = d00 * v0 + d01 * v1
            v[i, 1] = d10 * v0 + d11 * v1 + d12 * v2
            v[i, 2] = d20 * v0 + d21 * v1 + d22 * v2
        xn = x + a * (y - x) * dt
        yn = y + (-x * z + r * x - y) * dt
        zn = z + (x * y - b * z) * dt
        x = xn
        y = yn
        z = zn
        if _bad(x, thr2) or _bad(y, thr2) or _bad(z, thr2):
            final[0] = x
            final[1] = y
            final[2] = z
            return sums, logdet, wk, wv, w_idx, k, final
        # orthonormalize on the interval grid and at every burn-in/window
        # boundary so each accumulator owns exactly its own growth
        if k % interval == 0 or k == burn_in or k % window == 0 or k == total:
            _orthonormalize(v, logs)
            if k > burn_in:
                for i in range(6):
                    sums[i] += logs[i]
            w_acc += logs[0]
        if k % window == 0 and w_idx < n_win:
            wk[w_idx] = k - window
            wv[w_idx] = w_acc / window
            w_idx += 1
            w_acc = 0.0
    final[0] = x
    final[1] = y
    final[2] = z
    return sums, logdet, wk, wv, w_idx, -1, final


@njit(cache=True)
def detect_period(tail, p_max, tol):
    """Smallest p <= p_max with max_k |s_k - s_{k-p}| < tol over the last p_max samples."""
    n = tail.shape[0]
    start = n - p_max
    for p in range(1, p_max + 1):
        ok = True
        for k in range(n - 1, start - 1, -1):
            d = 0.0
            for c in range(3):
                e = abs(tail[k, c] - tail[k - p, c])
                if e > d:
                    d = e
            if not (d < tol):
                ok = False
                break
        if ok:
            return p
    return -1
