"""Compiled inner loops for the Runge-Kutta steppers.

Stage coefficients ``(d, g)`` are evaluated in Python by the caller and
passed in as arrays, so the kernels know nothing about the generators.
"""

import numpy as np
from numba import njit

# Dormand-Prince 5(4); row 6 of A equals the 5th order weights (FSAL).
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = np.zeros((7, 7))
DP_A[1, :1] = [1 / 5]
DP_A[2, :2] = [3 / 40, 9 / 40]
DP_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
DP_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
DP_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
DP_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
DP_E = DP_B5 - DP_B4


@njit(cache=True)
def rhs_into(c, d, g, sq, out):
    """out = -i M c for the tridiagonal generator with coefficients (d, g)."""
    n = c.size
    gc = np.conj(g)
    for m in range(n):
        acc = (m + 0.5 + d) * c[m]
        if m + 1 < n:
            acc += g * sq[m] * c[m + 1]
        if m > 0:
            acc += gc * sq[m - 1] * c[m - 1]
        out[m] = -1j * acc


@njit(cache=True)
def rk4_kernel(c, ds, gs, h, sq):
    """Classical RK4; ds/gs hold coefficients at tau, tau + h/2, tau + h."""
    n = c.size
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    tmp = np.empty(n, np.complex128)
    rhs_into(c, ds[0], gs[0], sq, k1)
    for j in range(n):
        tmp[j] = c[j] + 0.5 * h * k1[j]
    rhs_into(tmp, ds[1], gs[1], sq, k2)
    for j in range(n):
        tmp[j] = c[j] + 0.5 * h * k2[j]
    rhs_into(tmp, ds[1], gs[1], sq, k3)
    for j in range(n):
        tmp[j] = c[j] + h * k3[j]
    rhs_into(tmp, ds[2], gs[2], sq, k4)
    out = np.empty(n, np.complex128)
    for j in range(n):
        out[j] = c[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    return out


@njit(cache=True)
def dp45_kernel(c, ds, gs, h, sq, k, have_k0, atol, rtol, A, E):
    """One Dormand-Prince step.

    ``k`` is a (7, n) work array; when ``have_k0`` its first row already
    holds f(tau, c). On return ``k[6]`` is f(tau + h, c_new). Returns the
    new state and the max-norm scaled error estimate.
    """
    n = c.size
    if not have_k0:
        rhs_into(c, ds[0], gs[0], sq, k[0])
    tmp = np.empty(n, np.complex128)
    for i in range(1, 7):
        for j in range(n):
            s = 0j
            for l in range(i):
                s += A[i, l] * k[l, j]
            tmp[j] = c[j] + h * s
        if i < 6:
            rhs_into(tmp, ds[i], gs[i], sq, k[i])
    c_new = tmp.copy()
    rhs_into(c_new, ds[6], gs[6], sq, k[6])
    err = 0.0
    for j in range(n):
        e = 0j
        for l in range(7):
            e += E[l] * k[l, j]
        e *= h
        scale = atol + rtol * max(abs(c[j]), abs(c_new[j]))
        r = abs(e) / scale
        if r > err:
            err = r
    return c_new, err
