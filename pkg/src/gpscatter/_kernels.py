"""Compiled inner loops for the 2x2 linear ODE solves."""
from __future__ import annotations

import numba
import numpy as np

OVERFLOW = 1e150


@numba.njit(cache=True, nogil=True)
def _expm2(a, b, c, d):
    # exp of [[a, b], [c, d]] via the trace-free part
    m = 0.5 * (a + d)
    p = 0.5 * (a - d)
    dd = p * p + b * c
    if abs(dd) < 1e-8:
        ch = 1.0 + dd / 2.0 + dd * dd / 24.0
        sh = 1.0 + dd / 6.0 + dd * dd / 120.0
    else:
        delta = np.sqrt(dd)
        ch = np.cosh(delta)
        sh = np.sinh(delta) / delta
    e = np.exp(m)
    return e * (ch + sh * p), e * sh * b, e * sh * c, e * (ch - sh * p)


@numba.njit(cache=True, nogil=True)
def _comm(x, y):
    return x @ y - y @ x


@numba.njit(cache=True, nogil=True)
def magnus6(nodes, h, y0):
    """Sixth-order Magnus integrator.

    ``nodes[i, g]`` is the 2x2 coefficient matrix at the three Gauss points
    of step ``i``. Returns the final state, the index of an overflowing step
    (or -1) and the largest state norm seen.
    """
    s15 = np.sqrt(15.0)
    y1 = y0[0]
    y2 = y0[1]
    peak = 0.0
    for i in range(nodes.shape[0]):
        a1m = nodes[i, 0]
        a2m = nodes[i, 1]
        a3m = nodes[i, 2]
        b1 = h * a2m
        b2 = (s15 * h / 3.0) * (a3m - a1m)
        b3 = (10.0 * h / 3.0) * (a3m - 2.0 * a2m + a1m)
        c1 = _comm(b1, b2)
        c2 = -(1.0 / 60.0) * _comm(b1, 2.0 * b3 + c1)
        w = b1 + b3 / 12.0 + (1.0 / 240.0) * _comm(-20.0 * b1 - b3 + c1, b2 + c2)
        e00, e01, e10, e11 = _expm2(w[0, 0], w[0, 1], w[1, 0], w[1, 1])
        n1 = e00 * y1 + e01 * y2
        n2 = e10 * y1 + e11 * y2
        y1 = n1
        y2 = n2
        nrm = max(abs(y1), abs(y2))
        if nrm > peak:
            peak = nrm
        if not nrm < OVERFLOW:
            out = np.empty(2, dtype=np.complex128)
            out[0] = y1
            out[1] = y2
            return out, i, peak
    out = np.empty(2, dtype=np.complex128)
    out[0] = y1
    out[1] = y2
    return out, -1, peak


@numba.njit(cache=True, nogil=True)
def neumann_rk4(q2, q3, d4, h, nmax):
    """RK4 for the hierarchy ``w_k' = D w_k + X w_{k-1}``.

    ``D = diag(0, d4)`` and ``X = [[0, q2], [q3, 0]]``; the arrays hold values
    at the left end, midpoint and right end of each step. ``w_0 = (1, 0)``.
    Returns ``w_k(+inf)`` for ``k = 0..nmax``.
    """
    nk = nmax + 1
    w = np.zeros((nk, 2), dtype=np.complex128)
    w[0, 0] = 1.0
    k1 = np.zeros((nk, 2), dtype=np.complex128)
    k2 = np.zeros((nk, 2), dtype=np.complex128)
    k3 = np.zeros((nk, 2), dtype=np.complex128)
    k4 = np.zeros((nk, 2), dtype=np.complex128)
    tmp = np.zeros((nk, 2), dtype=np.complex128)
    for i in range(q2.shape[0]):
        for stage in range(4):
            if stage == 0:
                g = 0
                src = w
            elif stage == 1:
                g = 1
                for k in range(nk):
                    tmp[k, 0] = w[k, 0] + 0.5 * h * k1[k, 0]
                    tmp[k, 1] = w[k, 1] + 0.5 * h * k1[k, 1]
                src = tmp
            elif stage == 2:
                g = 1
                for k in range(nk):
                    tmp[k, 0] = w[k, 0] + 0.5 * h * k2[k, 0]
                    tmp[k, 1] = w[k, 1] + 0.5 * h * k2[k, 1]
                src = tmp
            else:
                g = 2
                for k in range(nk):
                    tmp[k, 0] = w[k, 0] + h * k3[k, 0]
                    tmp[k, 1] = w[k, 1] + h * k3[k, 1]
                src = tmp
            if stage == 0:
                dst = k1
            elif stage == 1:
                dst = k2
            elif stage == 2:
                dst = k3
            else:
                dst = k4
            dst[0, 0] = 0.0
            dst[0, 1] = 0.0
            for k in range(1, nk):
                dst[k, 0] = q2[i, g] * src[k - 1, 1]
                dst[k, 1] = d4[i, g] * src[k, 1] + q3[i, g] * src[k - 1, 0]
        for k in range(1, nk):
            for c in range(2):
                w[k, c] += h / 6.0 * (k1[k, c] + 2.0 * k2[k, c] + 2.0 * k3[k, c] + k4[k, c])
    return w


@numba.njit(cache=True, nogil=True)
def riccati_rk4(u_half, h, v0, backward, limit):
    """RK4 for ``v' = u + 1 - v^2`` on a uniform mesh.

    ``u_half[j]`` holds ``u`` at ``x_0 + j h / 2``. Integrates from the right
    end when ``backward`` is true, otherwise from the left end. Returns the
    solution at the mesh points and the index where ``|v|`` first exceeded
    ``limit`` (or -1).
    """
    steps = (u_half.shape[0] - 1) // 2
    v = np.full(steps + 1, np.nan)
    if backward:
        i = steps
        sgn = -1.0
    else:
        i = 0
        sgn = 1.0
    y = v0
    v[i] = y
    for _ in range(steps):
        j = 2 * i
        jn = j + 2 * int(sgn)
        jm = j + int(sgn)
        hs = sgn * h
        k1 = u_half[j] + 1.0 - y * y
        y2 = y + 0.5 * hs * k1
        k2 = u_half[jm] + 1.0 - y2 * y2
        y3 = y + 0.5 * hs * k2
        k3 = u_half[jm] + 1.0 - y3 * y3
        y4 = y + hs * k3
        k4 = u_half[jn] + 1.0 - y4 * y4
        y = y + hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        i += int(sgn)
        if not abs(y) < limit:
            return v, i
        v[i] = y
    return v, -1
