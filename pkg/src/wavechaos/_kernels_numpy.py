"""Pure-numpy kernel implementations (fallback backend).

Same contracts as ``_kernels_numba``; see ``backend`` for selection.
All arrays are float64, row convention (rows, samples) for the wavelet
kernels and NHWC for the conv/pool kernels.
"""

import math

import numpy as np


def ws_indices(n: int, pad: int) -> np.ndarray:
    """Whole-point symmetric index map for positions -pad .. n-1+pad.

    Reflection without repeating the edge sample (period 2n-2), so a
    length-n signal extends as  x2 x1 | x0 x1 .. x_{n-1} | x_{n-2} x_{n-3}.
    """
    if n == 1:
        return np.zeros(2 * pad + 1, dtype=np.intp)
    period = 2 * n - 2
    pos = np.arange(-pad, n + pad) % period
    return np.where(pos < n, pos, period - pos).astype(np.intp)


def dwt_rows_fwd(x, lo, hi):
    """One analysis level along axis 1. Returns (approx, detail).

    Approx taps are centred on even sample positions, detail taps on odd
    positions; both outputs have half the input length.
    """
    rows, n = x.shape
    half = n // 2
    xe = x[:, ws_indices(n, 4)]
    a = np.zeros((rows, half))
    d = np.zeros((rows, half))
    for j in range(9):
        a += lo[j] * xe[:, j : j + n : 2]
    for j in range(7):
        d += hi[j] * xe[:, j + 2 : j + 2 + n : 2]
    return a, d


def dwt_rows_inv(a, d, lo, hi):
    """One synthesis level along axis 1: upsample, filter, sum."""
    rows, half = a.shape
    n = 2 * half
    ua = np.zeros((rows, n))
    ud = np.zeros((rows, n))
    ua[:, 0::2] = a
    ud[:, 1::2] = d
    idx = ws_indices(n, 4)
    uae = ua[:, idx]
    ude = ud[:, idx]
    x = np.zeros((rows, n))
    for j in range(7):
        x += lo[j] * uae[:, j + 1 : j + 1 + n]
    for j in range(9):
        x += hi[j] * ude[:, j : j + n]
    return x


def chua_rk4(z0, alpha, beta, a, b, c, d, h, burn_in, n_samples, stride, guard):
    """Fixed-step RK4 over the three-state Chua system.

    Returns (samples, diverged_step): samples is (n_samples, 3) of
    post-burn-in states taken every ``stride`` steps; diverged_step is the
    1-based global step at which any |component| crossed ``guard``
    (-1 when the run stayed inside). On divergence the samples array is
    only partially filled and must be discarded by the caller.
    """
    z1, z2, z3 = float(z0[0]), float(z0[1]), float(z0[2])
    out = np.empty((n_samples, 3))
    thresh = 2.0 * a * c
    slope = b * math.pi / (2.0 * a)
    total = burn_in + n_samples * stride
    filled = 0
    for step in range(total):
        k11, k12, k13 = _deriv(z1, z2, z3, alpha, beta, a, b, d, thresh, slope)
        y1, y2, y3 = z1 + 0.5 * h * k11, z2 + 0.5 * h * k12, z3 + 0.5 * h * k13
        k21, k22, k23 = _deriv(y1, y2, y3, alpha, beta, a, b, d, thresh, slope)
        y1, y2, y3 = z1 + 0.5 * h * k21, z2 + 0.5 * h * k22, z3 + 0.5 * h * k23
        k31, k32, k33 = _deriv(y1, y2, y3, alpha, beta, a, b, d, thresh, slope)
        y1, y2, y3 = z1 + h * k31, z2 + h * k32, z3 + h * k33
        k41, k42, k43 = _deriv(y1, y2, y3, alpha, beta, a, b, d, thresh, slope)
        z1 += h / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        z2 += h / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        z3 += h / 6.0 * (k13 + 2.0 * k23 + 2.0 * k33 + k43)
        if abs(z1) > guard or abs(z2) > guard or abs(z3) > guard:
            return out, step + 1
        if step >= burn_in and (step - burn_in) % stride == stride - 1:
            out[filled, 0] = z1
            out[filled, 1] = z2
            out[filled, 2] = z3
            filled += 1
    return out, -1


def _deriv(z1, z2, z3, alpha, beta, a, b, d, thresh, slope):
    if z1 >= thresh:
        q = slope * (z1 - thresh)
    elif z1 <= -thresh:
        q = slope * (z1 + thresh)
    else:
        q = -b * math.sin(math.pi * z1 / (2.0 * a) + d)
    return alpha * (z2 - q), z1 - z2 + z3, -beta * z2


def conv2d_fwd(x, w, bias):
    """3x3 same-padding stride-1 cross-correlation. x: NHWC, w: (3,3,CI,CO)."""
    n, h, width, ci = x.shape
    co = w.shape[3]
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = _im2col3(xp, n, h, width, ci)
    y = cols @ w.reshape(9 * ci, co) + bias
    return y.reshape(n, h, width, co)


def conv2d_bwd(x, w, dout):
    """Gradients of conv2d_fwd: returns (dx, dw, db)."""
    n, h, width, ci = x.shape
    co = w.shape[3]
    # input gradient: full correlation of dout with the spatially flipped,
    # channel-transposed kernel reduces to the same same-padding conv
    w_t = w[::-1, ::-1].transpose(0, 1, 3, 2).copy()
    dp = np.pad(dout, ((0, 0), (1, 1), (1, 1), (0, 0)))
    dcols = _im2col3(dp, n, h, width, co)
    dx = (dcols @ w_t.reshape(9 * co, ci)).reshape(n, h, width, ci)
    # parameter gradients
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = _im2col3(xp, n, h, width, ci)
    dflat = dout.reshape(-1, co)
    dw = (cols.T @ dflat).reshape(3, 3, ci, co)
    db = dflat.sum(axis=0)
    return dx, dw, db


def _im2col3(xp, n, h, w, ch):
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(1, 2))
    # (n, h, w, ch, 3, 3) -> (n*h*w, 3*3*ch) with (ki, kj, ch) ordering
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(n * h * w, 9 * ch)


def maxpool2x2_fwd(x):
    """Non-overlapping 2x2 max pool; returns (out, argmax in 0..3)."""
    n, h, w, c = x.shape
    win = x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4)
    flat = win.reshape(n, h // 2, w // 2, c, 4)
    arg = flat.argmax(axis=-1).astype(np.uint8)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    return out, arg


def maxpool2x2_bwd(dout, arg):
    """Scatter pooled gradients back to the argmax positions."""
    n, h2, w2, c = dout.shape
    flat = np.zeros((n, h2, w2, c, 4))
    np.put_along_axis(flat, arg[..., None].astype(np.intp), dout[..., None], axis=-1)
    win = flat.reshape(n, h2, w2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
    return win.reshape(n, h2 * 2, w2 * 2, c)
