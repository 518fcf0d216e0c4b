"""Numba kernels for the hypoelliptic diffusions.

Randomness is counter-based: every Gaussian increment is a pure function of
(seed, path index, step index, draw index) through a Philox-4x32-10 block
cipher, so ensembles are bit-identical regardless of thread count or
scheduling, and common-random-number runs are exact (same increments for
every start integrated in one call).

Three kernels: chart-coordinate Euler/Heun with polynomial drift/diffusion
tables (the group models and custom polynomial structures), a tangent-step
walk on the unit sphere, and a quaternion walk on the compact group model.
The intrinsic kernels avoid the pole singularities of their charts; both are
weak order one, like the chart Euler scheme.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_INV64 = 5.421010862427522e-20  # 2^-64
_TWO_PI = 6.283185307179586


@njit(inline="always", cache=True)
def _philox(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = _M0 * np.uint64(c0)
        p1 = _M1 * np.uint64(c2)
        hi0 = np.uint32(p0 >> np.uint64(32))
        lo0 = np.uint32(p0 & _MASK)
        hi1 = np.uint32(p1 >> np.uint64(32))
        lo1 = np.uint32(p1 & _MASK)
        n0 = hi1 ^ c1 ^ k0
        n1 = lo1
        n2 = hi0 ^ c3 ^ k1
        n3 = lo0
        c0, c1, c2, c3 = n0, n1, n2, n3
        k0 = np.uint32(k0 + _W0)
        k1 = np.uint32(k1 + _W1)
    return c0, c1, c2, c3


@njit(inline="always", cache=True)
def _normal_pair(seed0, seed1, path, step, draw):
    r0, r1, r2, r3 = _philox(np.uint32(path), np.uint32(step), np.uint32(draw),
                             np.uint32(0x53524356), seed0, seed1)
    u1 = ((np.uint64(r0) << np.uint64(32)) | np.uint64(r1)) * _INV64
    u2 = ((np.uint64(r2) << np.uint64(32)) | np.uint64(r3)) * _INV64
    if u1 <= 0.0:
        u1 = _INV64
    m = math.sqrt(-2.0 * math.log(u1))
    return m * math.cos(_TWO_PI * u2), m * math.sin(_TWO_PI * u2)


@njit(inline="always", cache=True)
def _poly_eval(exps, coefs, lo, hi, state):
    acc = 0.0
    for t in range(lo, hi):
        v = coefs[t]
        for c in range(state.shape[0]):
            e = exps[t, c]
            for _ in range(e):
                v *= state[c]
        acc += v
    return acc


@njit(parallel=True, cache=True)
def chart_kernel(starts, n_paths, n_steps, dt, seed0, seed1, d,
                 dexp, dcoef, dptr, rexp, rcoef, rptr,
                 box_lo, box_hi, rec, out, censored, heun):
    """Euler (Ito drift tables) or Heun (Stratonovich drift tables) in chart
    coordinates; all K starts share each path's increments."""
    K, cd = starts.shape
    R = rec.shape[0]
    sq = math.sqrt(2.0 * dt)
    nd = (d + 1) // 2
    for p in prange(n_paths):
        st = np.empty((K, cd))
        tmp = np.empty(cd)
        pred = np.empty(cd)
        for k in range(K):
            for c in range(cd):
                st[k, c] = starts[k, c]
        alive = np.ones(K, np.bool_)
        xi = np.empty(d)
        ri = 0
        while ri < R and rec[ri] == 0:
            for k in range(K):
                for c in range(cd):
                    out[ri, k, p, c] = st[k, c]
            ri += 1
        for step in range(n_steps):
            for dr in range(nd):
                z0, z1 = _normal_pair(seed0, seed1, p, step, dr)
                xi[2 * dr] = z0
                if 2 * dr + 1 < d:
                    xi[2 * dr + 1] = z1
            for k in range(K):
                if not alive[k]:
                    continue
                if heun:
                    for c in range(cd):
                        acc = st[k, c] + dt * _poly_eval(rexp, rcoef, rptr[c, 0], rptr[c, 1], st[k])
                        for i in range(d):
                            acc += sq * xi[i] * _poly_eval(dexp, dcoef, dptr[i, c, 0], dptr[i, c, 1], st[k])
                        pred[c] = acc
                    for c in range(cd):
                        acc = st[k, c] + dt * _poly_eval(rexp, rcoef, rptr[c, 0], rptr[c, 1], st[k])
                        for i in range(d):
                            sig = 0.5 * (_poly_eval(dexp, dcoef, dptr[i, c, 0], dptr[i, c, 1], st[k])
                                         + _poly_eval(dexp, dcoef, dptr[i, c, 0], dptr[i, c, 1], pred))
                            acc += sq * xi[i] * sig
                        tmp[c] = acc
                else:
                    for c in range(cd):
                        acc = st[k, c] + dt * _poly_eval(rexp, rcoef, rptr[c, 0], rptr[c, 1], st[k])
                        for i in range(d):
                            acc += sq * xi[i] * _poly_eval(dexp, dcoef, dptr[i, c, 0], dptr[i, c, 1], st[k])
                        tmp[c] = acc
                inside = True
                for c in range(cd):
                    if tmp[c] < box_lo[c] or tmp[c] > box_hi[c]:
                        inside = False
                if inside:
                    for c in range(cd):
                        st[k, c] = tmp[c]
                else:
                    alive[k] = False
                    censored[k, p] = True
            while ri < R and rec[ri] == step + 1:
                for k in range(K):
                    for c in range(cd):
                        out[ri, k, p, c] = st[k, c]
                ri += 1


@njit(parallel=True, cache=True)
def sphere_kernel(starts, n_paths, n_steps, dt, seed0, seed1, rec, out):
    """Tangent-step walk on S^2; starts are chart points (theta, phi), output
    is recorded in chart coordinates."""
    K = starts.shape[0]
    R = rec.shape[0]
    sq = math.sqrt(2.0 * dt)
    for p in prange(n_paths):
        st = np.empty((K, 3))
        for k in range(K):
            th = starts[k, 0]
            ph = starts[k, 1]
            st[k, 0] = math.sin(th) * math.cos(ph)
            st[k, 1] = math.sin(th) * math.sin(ph)
            st[k, 2] = math.cos(th)
        ri = 0
        while ri < R and rec[ri] == 0:
            for k in range(K):
                out[ri, k, p, 0] = math.acos(min(1.0, max(-1.0, st[k, 2])))
                out[ri, k, p, 1] = math.atan2(st[k, 1], st[k, 0]) % _TWO_PI
            ri += 1
        for step in range(n_steps):
            z0, z1 = _normal_pair(seed0, seed1, p, step, 0)
            for k in range(K):
                x, y, z = st[k, 0], st[k, 1], st[k, 2]
                rho = math.hypot(x, y)
                if rho < 1e-14:
                    e1x, e1y, e1z = 1.0, 0.0, 0.0
                    e2x, e2y, e2z = 0.0, 1.0 if z > 0 else -1.0, 0.0
                else:
                    cth, sth = z, rho
                    cph, sph = x / rho, y / rho
                    e1x, e1y, e1z = cth * cph, cth * sph, -sth
                    e2x, e2y, e2z = -sph, cph, 0.0
                vx = sq * (z0 * e1x + z1 * e2x)
                vy = sq * (z0 * e1y + z1 * e2y)
                vz = sq * (z0 * e1z + z1 * e2z)
                nv = math.sqrt(vx * vx + vy * vy + vz * vz)
                if nv > 1e-300:
                    c, s = math.cos(nv), math.sin(nv) / nv
                    nx = c * x + s * vx
                    ny = c * y + s * vy
                    nz = c * z + s * vz
                    nn = math.sqrt(nx * nx + ny * ny + nz * nz)
                    st[k, 0], st[k, 1], st[k, 2] = nx / nn, ny / nn, nz / nn
            while ri < R and rec[ri] == step + 1:
                for k in range(K):
                    out[ri, k, p, 0] = math.acos(min(1.0, max(-1.0, st[k, 2])))
                    out[ri, k, p, 1] = math.atan2(st[k, 1], st[k, 0]) % _TWO_PI
                ri += 1


@njit(inline="always", cache=True)
def _quat_mul(a0, a1, a2, a3, b0, b1, b2, b3):
    return (a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 + a2 * b0 + a3 * b1 - a1 * b3,
            a0 * b3 + a3 * b0 + a1 * b2 - a2 * b1)


@njit(inline="always", cache=True)
def _quat_from_euler(th, ph, ps):
    ct, stn = math.cos(th / 2.0), math.sin(th / 2.0)
    return (ct * math.cos((ph + ps) / 2.0),
            -stn * math.sin((ph - ps) / 2.0),
            stn * math.cos((ph - ps) / 2.0),
            ct * math.sin((ph + ps) / 2.0))


@njit(inline="always", cache=True)
def _euler_from_quat(w, x, y, z):
    th = 2.0 * math.atan2(math.hypot(x, y), math.hypot(w, z))
    s = math.atan2(z, w)
    t = math.atan2(-x, y)
    ph = (s + t) % _TWO_PI
    ps = (s - t) % _TWO_PI
    w2, x2, y2, z2 = _quat_from_euler(th, ph, ps)
    if w2 * w + x2 * x + y2 * y + z2 * z < 0.0:
        ps += _TWO_PI
    return th, ph, ps


@njit(parallel=True, cache=True)
def su2_kernel(starts, n_paths, n_steps, dt, seed0, seed1, rec, out):
    """Quaternion walk q <- q * exp(sqrt(2 dt)(xi1 i + xi2 j)); starts and
    records are Euler-angle chart points (theta, phi, psi)."""
    K = starts.shape[0]
    R = rec.shape[0]
    sq = math.sqrt(2.0 * dt)
    for p in prange(n_paths):
        st = np.empty((K, 4))
        for k in range(K):
            w, x, y, z = _quat_from_euler(starts[k, 0], starts[k, 1], starts[k, 2])
            st[k, 0], st[k, 1], st[k, 2], st[k, 3] = w, x, y, z
        ri = 0
        while ri < R and rec[ri] == 0:
            for k in range(K):
                th, ph, ps = _euler_from_quat(st[k, 0], st[k, 1], st[k, 2], st[k, 3])
                out[ri, k, p, 0], out[ri, k, p, 1], out[ri, k, p, 2] = th, ph, ps
            ri += 1
        for step in range(n_steps):
            z0, z1 = _normal_pair(seed0, seed1, p, step, 0)
            vx = sq * z0
            vy = sq * z1
            nv = math.hypot(vx, vy)
            if nv > 1e-300:
                ew = math.cos(nv)
                s = math.sin(nv) / nv
                ex, ey, ez = s * vx, s * vy, 0.0
            else:
                ew, ex, ey, ez = 1.0, 0.0, 0.0, 0.0
            for k in range(K):
                w, x, y, z = _quat_mul(st[k, 0], st[k, 1], st[k, 2], st[k, 3],
                                       ew, ex, ey, ez)
                nn = math.sqrt(w * w + x * x + y * y + z * z)
                st[k, 0], st[k, 1], st[k, 2], st[k, 3] = w / nn, x / nn, y / nn, z / nn
            while ri < R and rec[ri] == step + 1:
                for k in range(K):
                    th, ph, ps = _euler_from_quat(st[k, 0], st[k, 1], st[k, 2], st[k, 3])
                    out[ri, k, p, 0], out[ri, k, p, 1], out[ri, k, p, 2] = th, ph, ps
                ri += 1
