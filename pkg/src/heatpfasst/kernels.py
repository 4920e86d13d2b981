"""Number-crunching kernels for the grid and multigrid modules.

Plain-loop implementations of the stencil applications, smoothers and
level transfers, compiled with numba. Everything here treats fields as
(n, n, n) interior values with an implicit zero Dirichlet boundary.
"""

import numba as nb
import numpy as np

_jit = {"nogil": True, "cache": True}


@nb.njit(**_jit)
def apply_stencil(u, c0, cf, ce):
    """c0*u + cf*(6 face neighbours) + ce*(12 edge neighbours), zero boundary."""
    n = u.shape[0]
    p = np.zeros((n + 2, n + 2, n + 2))
    p[1:n + 1, 1:n + 1, 1:n + 1] = u
    out = np.empty_like(u)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            for k in range(1, n + 1):
                face = (p[i - 1, j, k] + p[i + 1, j, k]
                        + p[i, j - 1, k] + p[i, j + 1, k]
                        + p[i, j, k - 1] + p[i, j, k + 1])
                acc = c0 * p[i, j, k] + cf * face
                if ce != 0.0:
                    edge = (p[i - 1, j - 1, k] + p[i - 1, j + 1, k]
                            + p[i + 1, j - 1, k] + p[i + 1, j + 1, k]
                            + p[i - 1, j, k - 1] + p[i - 1, j, k + 1]
                            + p[i + 1, j, k - 1] + p[i + 1, j, k + 1]
                            + p[i, j - 1, k - 1] + p[i, j - 1, k + 1]
                            + p[i, j + 1, k - 1] + p[i, j + 1, k + 1])
                    acc += ce * edge
                out[i - 1, j - 1, k - 1] = acc
    return out


@nb.njit(**_jit)
def gauss_seidel_color(u, b, c0, cf, color):
    """In-place Gauss-Seidel update of the points with (i+j+k) % 2 == color."""
    n = u.shape[0]
    for i in range(n):
        for j in range(n):
            for k in range((i + j + color) % 2, n, 2):
                s = 0.0
                if i > 0:
                    s += u[i - 1, j, k]
                if i < n - 1:
                    s += u[i + 1, j, k]
                if j > 0:
                    s += u[i, j - 1, k]
                if j < n - 1:
                    s += u[i, j + 1, k]
                if k > 0:
                    s += u[i, j, k - 1]
                if k < n - 1:
                    s += u[i, j, k + 1]
                u[i, j, k] = (b[i, j, k] - cf * s) / c0


@nb.njit(**_jit)
def full_weighting(r):
    """27-point full weighting onto the nested coarse grid (1D weights 1/4, 1/2, 1/4)."""
    nf = r.shape[0]
    nc = (nf - 1) // 2
    out = np.empty((nc, nc, nc))
    w = (0.25, 0.5, 0.25)
    for ic in range(nc):
        for jc in range(nc):
            for kc in range(nc):
                fi, fj, fk = 2 * ic + 1, 2 * jc + 1, 2 * kc + 1
                acc = 0.0
                for a in range(-1, 2):
                    for b_ in range(-1, 2):
                        for c_ in range(-1, 2):
                            acc += w[a + 1] * w[b_ + 1] * w[c_ + 1] * r[fi + a, fj + b_, fk + c_]
                out[ic, jc, kc] = acc
    return out


@nb.njit(**_jit)
def interpolate_trilinear(c):
    """Trilinear interpolation onto the nested fine grid, zero boundary.

    Odd fine indices coincide with coarse points; coincident axes index the
    coarse value directly (no arithmetic), so values at fully coincident
    points are bitwise copies and injection after interpolation is the
    identity. Each even axis contributes the mean of its two bracketing
    coarse planes.
    """
    nc = c.shape[0]
    nf = 2 * nc + 1
    p = np.zeros((nc + 2, nc + 2, nc + 2))
    p[1:nc + 1, 1:nc + 1, 1:nc + 1] = c
    out = np.empty((nf, nf, nf))
    for i in range(nf):
        iodd = i % 2 == 1
        ia = (i + 1) // 2 if iodd else i // 2
        ib = ia + (0 if iodd else 1)
        for j in range(nf):
            jodd = j % 2 == 1
            ja = (j + 1) // 2 if jodd else j // 2
            jb = ja + (0 if jodd else 1)
            for k in range(nf):
                kodd = k % 2 == 1
                ka = (k + 1) // 2 if kodd else k // 2
                kb = ka + (0 if kodd else 1)
                if iodd and jodd and kodd:
                    v = p[ia, ja, ka]
                elif jodd and kodd:
                    v = 0.5 * (p[ia, ja, ka] + p[ib, ja, ka])
                elif iodd and kodd:
                    v = 0.5 * (p[ia, ja, ka] + p[ia, jb, ka])
                elif iodd and jodd:
                    v = 0.5 * (p[ia, ja, ka] + p[ia, ja, kb])
                elif kodd:
                    v = 0.25 * (p[ia, ja, ka] + p[ia, jb, ka] + p[ib, ja, ka] + p[ib, jb, ka])
                elif jodd:
                    v = 0.25 * (p[ia, ja, ka] + p[ia, ja, kb] + p[ib, ja, ka] + p[ib, ja, kb])
                elif iodd:
                    v = 0.25 * (p[ia, ja, ka] + p[ia, ja, kb] + p[ia, jb, ka] + p[ia, jb, kb])
                else:
                    v = 0.125 * (
                        p[ia, ja, ka] + p[ia, ja, kb] + p[ia, jb, ka] + p[ia, jb, kb]
                        + p[ib, ja, ka] + p[ib, ja, kb] + p[ib, jb, ka] + p[ib, jb, kb]
                    )
                out[i, j, k] = v
    return out
