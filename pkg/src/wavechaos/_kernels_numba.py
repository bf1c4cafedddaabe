"""Numba-jitted kernel implementations (default backend when available).

Contracts match ``_kernels_numpy`` exactly; loops are serial (no prange) so
results are bit-reproducible run to run.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _ws(i, n):
    # whole-point symmetric reflection, period 2n-2
    if n == 1:
        return 0
    p = 2 * n - 2
    j = i % p
    if j < 0:
        j += p
    return j if j < n else p - j


@njit(cache=True)
def dwt_rows_fwd(x, lo, hi):
    rows, n = x.shape
    half = n // 2
    a = np.empty((rows, half))
    d = np.empty((rows, half))
    for r in range(rows):
        for k in range(half):
            acc = 0.0
            for j in range(9):
                acc += lo[j] * x[r, _ws(2 * k - 4 + j, n)]
            a[r, k] = acc
            acc = 0.0
            for j in range(7):
                acc += hi[j] * x[r, _ws(2 * k - 2 + j, n)]
            d[r, k] = acc
    return a, d


@njit(cache=True)
def dwt_rows_inv(a, d, lo, hi):
    rows, half = a.shape
    n = 2 * half
    x = np.zeros((rows, n))
    for r in range(rows):
        for m in range(n):
            acc = 0.0
            for j in range(7):
                t = _ws(m - 3 + j, n)
                if t % 2 == 0:
                    acc += lo[j] * a[r, t // 2]
            for j in range(9):
                t = _ws(m - 4 + j, n)
                if t % 2 == 1:
                    acc += hi[j] * d[r, t // 2]
            x[r, m] = acc
    return x


@njit(cache=True, inline="always")
def _deriv(z1, z2, z3, alpha, beta, a, b, d, thresh, slope):
    if z1 >= thresh:
        q = slope * (z1 - thresh)
    elif z1 <= -thresh:
        q = slope * (z1 + thresh)
    else:
        q = -b * math.sin(math.pi * z1 / (2.0 * a) + d)
    return alpha * (z2 - q), z1 - z2 + z3, -beta * z2


@njit(cache=True)
def chua_rk4(z0, alpha, beta, a, b, c, d, h, burn_in, n_samples, stride, guard):
    z1, z2, z3 = z0[0], z0[1], z0[2]
    out = np.empty((n_samples, 3))
    thresh = 2.0 * a * c
    slope = b * math.pi / (2.0 * a)
    total = burn_in + n_samples * stride
    filled = 0
    for step in range(total):
        k11, k12, k13 = _deriv(z1, z2, z3, alpha, beta, a, b, d, thresh, slope)
        y1 = z1 + 0.5 * h * k11
        y2 = z2 + 0.5 * h * k12
        y3 = z3 + 0.5 * h * k13
        k21, k22, k23 = _deriv(y1, y2, y3, alpha, beta, a, b, d, thresh, slope)
        y1 = z1 + 0.5 * h * k21
        y2 = z2 + 0.5 * h * k22
        y3 = z3 + 0.5 * h * k23
        k31, k32, k33 = _deriv(y1, y2, y3, alpha, beta, a, b, d, thresh, slope)
        y1 = z1 + h * k31
        y2 = z2 + h * k32
        y3 = z3 + h * k33
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


@njit(cache=True)
def conv2d_fwd(x, w, bias):
    # inner loops run over the contiguous channel axes so they vectorize
    n, h, width, ci = x.shape
    co = w.shape[3]
    y = np.empty((n, h, width, co))
    for b in range(n):
        for i in range(h):
            for j in range(width):
                for o in range(co):
                    y[b, i, j, o] = bias[o]
                for ki in range(3):
                    ii = i + ki - 1
                    if ii < 0 or ii >= h:
                        continue
                    for kj in range(3):
                        jj = j + kj - 1
                        if jj < 0 or jj >= width:
                            continue
                        for cc in range(ci):
                            v = x[b, ii, jj, cc]
                            for o in range(co):
                                y[b, i, j, o] += v * w[ki, kj, cc, o]
    return y


@njit(cache=True)
def conv2d_bwd(x, w, dout):
    n, h, width, ci = x.shape
    co = w.shape[3]
    dx = np.zeros((n, h, width, ci))
    dw = np.zeros((3, 3, ci, co))
    db = np.zeros(co)
    for b in range(n):
        for i in range(h):
            for j in range(width):
                for o in range(co):
                    db[o] += dout[b, i, j, o]
                for ki in range(3):
                    ii = i + ki - 1
                    if ii < 0 or ii >= h:
                        continue
                    for kj in range(3):
                        jj = j + kj - 1
                        if jj < 0 or jj >= width:
                            continue
                        for cc in range(ci):
                            xv = x[b, ii, jj, cc]
                            acc = 0.0
                            for o in range(co):
                                g = dout[b, i, j, o]
                                dw[ki, kj, cc, o] += xv * g
                                acc += w[ki, kj, cc, o] * g
                            dx[b, ii, jj, cc] += acc
    return dx, dw, db


@njit(cache=True)
def maxpool2x2_fwd(x):
    n, h, w, c = x.shape
    h2, w2 = h // 2, w // 2
    out = np.empty((n, h2, w2, c))
    arg = np.empty((n, h2, w2, c), dtype=np.uint8)
    for b in range(n):
        for i in range(h2):
            for j in range(w2):
                for cc in range(c):
                    best = x[b, 2 * i, 2 * j, cc]
                    bi = 0
                    for di in range(2):
                        for dj in range(2):
                            v = x[b, 2 * i + di, 2 * j + dj, cc]
                            if v > best:
                                best = v
                                bi = di * 2 + dj
                    out[b, i, j, cc] = best
                    arg[b, i, j, cc] = bi
    return out, arg


@njit(cache=True)
def maxpool2x2_bwd(dout, arg):
    n, h2, w2, c = dout.shape
    dx = np.zeros((n, h2 * 2, w2 * 2, c))
    for b in range(n):
        for i in range(h2):
            for j in range(w2):
                for cc in range(c):
                    k = arg[b, i, j, cc]
                    dx[b, 2 * i + k // 2, 2 * j + k % 2, cc] = dout[b, i, j, cc]
    return dx
