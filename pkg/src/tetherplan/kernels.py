"""Voxel kernels: segment and triangle blocking, ray casting and obstacle distance.

Every kernel has two implementations with identical arithmetic:

* a scalar-loop version compiled with numba (``*_jit``),
* a vectorized numpy version (``*_np``).

The module-level names (``segment_blocked``, ``ray_lengths``, ...) point at
the jitted versions unless ``TETHERPLAN_NO_JIT`` is set.  Both paths must
return bit-identical results; ``tests/test_kernels.py`` checks this.

Cell ``(i, j, k)`` spans the closed box ``[i*s, (i+1)*s] x [j*s, ...] x
[k*s, ...]``.  Anything outside the grid counts as occupied.
"""
import math

import numpy as np

from ._accel import USE_JIT, njit

# ---------------------------------------------------------------------------
# segment vs. closed voxel boxes


@njit
def _box_hit(a0, a1, a2, d0, d1, d2, lo0, lo1, lo2, s):
    # closed slab test, t in [0, 1]; touching counts as a hit
    tmin = 0.0
    tmax = 1.0
    hi0 = lo0 + s
    hi1 = lo1 + s
    hi2 = lo2 + s
    if d0 == 0.0:
        if a0 < lo0 or a0 > hi0:
            return False
    else:
        t1 = (lo0 - a0) / d0
        t2 = (hi0 - a0) / d0
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
        if tmin > tmax:
            return False
    if d1 == 0.0:
        if a1 < lo1 or a1 > hi1:
            return False
    else:
        t1 = (lo1 - a1) / d1
        t2 = (hi1 - a1) / d1
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
        if tmin > tmax:
            return False
    if d2 == 0.0:
        if a2 < lo2 or a2 > hi2:
            return False
    else:
        t1 = (lo2 - a2) / d2
        t2 = (hi2 - a2) / d2
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
        if tmin > tmax:
            return False
    return True


@njit
def _inside(p0, p1, p2, nx, ny, nz, s):
    return (0.0 < p0 < nx * s) and (0.0 < p1 < ny * s) and (0.0 < p2 < nz * s)


@njit
def segment_blocked_jit(occ, s, a, b):
    nx, ny, nz = occ.shape
    if not _inside(a[0], a[1], a[2], nx, ny, nz, s):
        return True
    if not _inside(b[0], b[1], b[2], nx, ny, nz, s):
        return True
    d0 = b[0] - a[0]
    d1 = b[1] - a[1]
    d2 = b[2] - a[2]
    i0 = max(int(math.floor(min(a[0], b[0]) / s)) - 1, 0)
    i1 = min(int(math.floor(max(a[0], b[0]) / s)), nx - 1)
    j0 = max(int(math.floor(min(a[1], b[1]) / s)) - 1, 0)
    j1 = min(int(math.floor(max(a[1], b[1]) / s)), ny - 1)
    k0 = max(int(math.floor(min(a[2], b[2]) / s)) - 1, 0)
    k1 = min(int(math.floor(max(a[2], b[2]) / s)), nz - 1)
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            for k in range(k0, k1 + 1):
                if occ[i, j, k]:
                    if _box_hit(a[0], a[1], a[2], d0, d1, d2, i * s, j * s, k * s, s):
                        return True
    return False


def _bbox_cells(occ, s, a, b):
    nx, ny, nz = occ.shape
    lo = np.floor(np.minimum(a, b) / s).astype(np.int64) - 1
    hi = np.floor(np.maximum(a, b) / s).astype(np.int64)
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, np.array([nx - 1, ny - 1, nz - 1]))
    if np.any(hi < lo):
        return np.empty((0, 3), dtype=np.int64)
    sub = occ[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1]
    return np.argwhere(sub) + lo


def _boxes_hit_np(a, d, lo, s):
    """Closed slab test of one segment against many boxes (rows of ``lo``)."""
    tmin = np.zeros(len(lo))
    tmax = np.ones(len(lo))
    ok = np.ones(len(lo), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for ax in range(3):
            lo_ax = lo[:, ax]
            hi_ax = lo_ax + s
            if d[ax] == 0.0:
                ok &= ~((a[ax] < lo_ax) | (a[ax] > hi_ax))
                continue
            t1 = (lo_ax - a[ax]) / d[ax]
            t2 = (hi_ax - a[ax]) / d[ax]
            tmin = np.maximum(tmin, np.minimum(t1, t2))
            tmax = np.minimum(tmax, np.maximum(t1, t2))
    return ok & (tmin <= tmax)


def segment_blocked_np(occ, s, a, b):
    nx, ny, nz = occ.shape
    ext = np.array([nx, ny, nz]) * s
    if np.any(a <= 0.0) or np.any(a >= ext) or np.any(b <= 0.0) or np.any(b >= ext):
        return True
    cells = _bbox_cells(occ, s, a, b)
    if len(cells) == 0:
        return False
    lo = cells * s
    return bool(np.any(_boxes_hit_np(a, b - a, lo.astype(np.float64), s)))


# ---------------------------------------------------------------------------
# triangle vs. closed voxel boxes (separating axis test)


@njit
def _tri_box_hit(t, lo0, lo1, lo2, s):
    h = 0.5 * s
    c0 = lo0 + h
    c1 = lo1 + h
    c2 = lo2 + h
    v = np.empty((3, 3))
    for m in range(3):
        v[m, 0] = t[m, 0] - c0
        v[m, 1] = t[m, 1] - c1
        v[m, 2] = t[m, 2] - c2
    # box face normals
    for ax in range(3):
        lo = min(v[0, ax], v[1, ax], v[2, ax])
        hi = max(v[0, ax], v[1, ax], v[2, ax])
        if lo > h or hi < -h:
            return False
    # edge x box-axis cross products
    for m in range(3):
        e0 = v[(m + 1) % 3, 0] - v[m, 0]
        e1 = v[(m + 1) % 3, 1] - v[m, 1]
        e2 = v[(m + 1) % 3, 2] - v[m, 2]
        for ax in range(3):
            if ax == 0:
                a0, a1, a2 = 0.0, e2, -e1
            elif ax == 1:
                a0, a1, a2 = -e2, 0.0, e0
            else:
                a0, a1, a2 = e1, -e0, 0.0
            p0 = a0 * v[0, 0] + a1 * v[0, 1] + a2 * v[0, 2]
            p1 = a0 * v[1, 0] + a1 * v[1, 1] + a2 * v[1, 2]
            p2 = a0 * v[2, 0] + a1 * v[2, 1] + a2 * v[2, 2]
            r = h * (abs(a0) + abs(a1) + abs(a2))
            if min(p0, p1, p2) > r or max(p0, p1, p2) < -r:
                return False
    # triangle normal
    f0 = v[1, 0] - v[0, 0]
    f1 = v[1, 1] - v[0, 1]
    f2 = v[1, 2] - v[0, 2]
    g0 = v[2, 0] - v[1, 0]
    g1 = v[2, 1] - v[1, 1]
    g2 = v[2, 2] - v[1, 2]
    n0 = f1 * g2 - f2 * g1
    n1 = f2 * g0 - f0 * g2
    n2 = f0 * g1 - f1 * g0
    d = n0 * v[0, 0] + n1 * v[0, 1] + n2 * v[0, 2]
    r = h * (abs(n0) + abs(n1) + abs(n2))
    return not abs(d) > r


@njit
def triangle_blocked_jit(occ, s, tri):
    nx, ny, nz = occ.shape
    for m in range(3):
        if not _inside(tri[m, 0], tri[m, 1], tri[m, 2], nx, ny, nz, s):
            return True
    lo = np.empty(3, dtype=np.int64)
    hi = np.empty(3, dtype=np.int64)
    dims = (nx, ny, nz)
    for ax in range(3):
        lo[ax] = max(int(math.floor(min(tri[0, ax], tri[1, ax], tri[2, ax]) / s)) - 1, 0)
        hi[ax] = min(int(math.floor(max(tri[0, ax], tri[1, ax], tri[2, ax]) / s)), dims[ax] - 1)
    for i in range(lo[0], hi[0] + 1):
        for j in range(lo[1], hi[1] + 1):
            for k in range(lo[2], hi[2] + 1):
                if occ[i, j, k]:
                    if _tri_box_hit(tri, i * s, j * s, k * s, s):
                        return True
    return False


def _tri_boxes_hit_np(tri, lo, s):
    """Separating axis test of one triangle against many boxes (rows of ``lo``)."""
    h = 0.5 * s
    c = lo + h
    v = [tri[m][None, :] - c for m in range(3)]
    ok = np.ones(len(lo), dtype=bool)
    for ax in range(3):
        a, b, d = v[0][:, ax], v[1][:, ax], v[2][:, ax]
        lo_ = np.minimum(np.minimum(a, b), d)
        hi_ = np.maximum(np.maximum(a, b), d)
        ok &= ~((lo_ > h) | (hi_ < -h))
    for m in range(3):
        e = v[(m + 1) % 3] - v[m]
        e0, e1, e2 = e[:, 0], e[:, 1], e[:, 2]
        zero = np.zeros_like(e0)
        for a0, a1, a2 in ((zero, e2, -e1), (-e2, zero, e0), (e1, -e0, zero)):
            p = [a0 * w[:, 0] + a1 * w[:, 1] + a2 * w[:, 2] for w in v]
            r = h * (np.abs(a0) + np.abs(a1) + np.abs(a2))
            lo_ = np.minimum(np.minimum(p[0], p[1]), p[2])
            hi_ = np.maximum(np.maximum(p[0], p[1]), p[2])
            ok &= ~((lo_ > r) | (hi_ < -r))
    f = v[1] - v[0]
    g = v[2] - v[1]
    n0 = f[:, 1] * g[:, 2] - f[:, 2] * g[:, 1]
    n1 = f[:, 2] * g[:, 0] - f[:, 0] * g[:, 2]
    n2 = f[:, 0] * g[:, 1] - f[:, 1] * g[:, 0]
    d = n0 * v[0][:, 0] + n1 * v[0][:, 1] + n2 * v[0][:, 2]
    r = h * (np.abs(n0) + np.abs(n1) + np.abs(n2))
    return ok & ~(np.abs(d) > r)


def triangle_blocked_np(occ, s, tri):
    nx, ny, nz = occ.shape
    ext = np.array([nx, ny, nz]) * s
    if np.any(tri <= 0.0) or np.any(tri >= ext):
        return True
    lo = np.maximum(np.floor(tri.min(axis=0) / s).astype(np.int64) - 1, 0)
    hi = np.minimum(np.floor(tri.max(axis=0) / s).astype(np.int64), np.array([nx - 1, ny - 1, nz - 1]))
    if np.any(hi < lo):
        return False
    sub = occ[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1]
    cells = np.argwhere(sub) + lo
    if len(cells) == 0:
        return False
    return bool(np.any(_tri_boxes_hit_np(tri, (cells * s).astype(np.float64), s)))


# ---------------------------------------------------------------------------
# ray casting (Amanatides-Woo traversal)


@njit
def _ray_length_one(occ, s, p, d, rmax):
    nx, ny, nz = occ.shape
    idx = np.empty(3, dtype=np.int64)
    step = np.empty(3, dtype=np.int64)
    tmax = np.empty(3)
    tdelta = np.empty(3)
    dims = (nx, ny, nz)
    for ax in range(3):
        c = int(math.floor(p[ax] / s))
        if c < 0:
            c = 0
        if c > dims[ax] - 1:
            c = dims[ax] - 1
        idx[ax] = c
        if d[ax] > 0.0:
            step[ax] = 1
            tmax[ax] = ((c + 1) * s - p[ax]) / d[ax]
            tdelta[ax] = s / d[ax]
        elif d[ax] < 0.0:
            step[ax] = -1
            tmax[ax] = (c * s - p[ax]) / d[ax]
            tdelta[ax] = -s / d[ax]
        else:
            step[ax] = 0
            tmax[ax] = np.inf
            tdelta[ax] = np.inf
    while True:
        ax = 0
        if tmax[1] < tmax[ax]:
            ax = 1
        if tmax[2] < tmax[ax]:
            ax = 2
        t = tmax[ax]
        if t >= rmax:
            return rmax
        idx[ax] += step[ax]
        if idx[ax] < 0 or idx[ax] >= dims[ax]:
            return t
        if occ[idx[0], idx[1], idx[2]]:
            return t
        tmax[ax] += tdelta[ax]


@njit
def ray_lengths_jit(occ, s, p, dirs, rmax):
    out = np.empty(dirs.shape[0])
    for r in range(dirs.shape[0]):
        out[r] = _ray_length_one(occ, s, p, dirs[r], rmax)
    return out


def ray_lengths_np(occ, s, p, dirs, rmax):
    """All rays advanced in lockstep; same traversal and tie rule as the jit loop."""
    dims = np.array(occ.shape)
    k = len(dirs)
    c = np.clip(np.floor(p / s).astype(np.int64), 0, dims - 1)
    idx = np.tile(c, (k, 1))
    step = np.sign(dirs).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        tmax = np.where(
            dirs > 0.0,
            ((idx + 1) * s - p) / dirs,
            np.where(dirs < 0.0, (idx * s - p) / dirs, np.inf),
        )
        tdelta = np.where(dirs > 0.0, s / dirs, np.where(dirs < 0.0, -s / dirs, np.inf))
    out = np.full(k, rmax, dtype=np.float64)
    active = np.ones(k, dtype=bool)
    rows = np.arange(k)
    while active.any():
        r = rows[active]
        ax = np.argmin(tmax[r], axis=1)
        t = tmax[r, ax]
        done = t >= rmax
        out[r[done]] = rmax
        active[r[done]] = False
        r, ax, t = r[~done], ax[~done], t[~done]
        idx[r, ax] += step[r, ax]
        oob = (idx[r, ax] < 0) | (idx[r, ax] >= dims[ax])
        hit = oob.copy()
        inb = ~oob
        ri = r[inb]
        hit[inb] = occ[idx[ri, 0], idx[ri, 1], idx[ri, 2]]
        out[r[hit]] = t[hit]
        active[r[hit]] = False
        go = r[~hit]
        tmax[go, ax[~hit]] += tdelta[go, ax[~hit]]
    return out


# ---------------------------------------------------------------------------
# exact distance to the nearest occupied box or the workspace boundary


@njit
def _box_dist(p, i, j, k, s):
    acc = 0.0
    lo = (i * s, j * s, k * s)
    for ax in range(3):
        l = lo[ax]
        h = l + s
        if p[ax] < l:
            g = l - p[ax]
        elif p[ax] > h:
            g = p[ax] - h
        else:
            g = 0.0
        acc += g * g
    return math.sqrt(acc)


@njit
def obstacle_distance_jit(occ, s, p):
    nx, ny, nz = occ.shape
    best = min(p[0], nx * s - p[0], p[1], ny * s - p[1], p[2], nz * s - p[2])
    ci = min(max(int(math.floor(p[0] / s)), 0), nx - 1)
    cj = min(max(int(math.floor(p[1] / s)), 0), ny - 1)
    ck = min(max(int(math.floor(p[2] / s)), 0), nz - 1)
    r = 0
    rmax = max(nx, ny, nz)
    while r <= rmax:
        if (r - 1) * s >= best:
            break
        for i in range(max(ci - r, 0), min(ci + r, nx - 1) + 1):
            for j in range(max(cj - r, 0), min(cj + r, ny - 1) + 1):
                for k in range(max(ck - r, 0), min(ck + r, nz - 1) + 1):
                    if max(abs(i - ci), abs(j - cj), abs(k - ck)) != r:
                        continue
                    if occ[i, j, k]:
                        dd = _box_dist(p, i, j, k, s)
                        if dd < best:
                            best = dd
        r += 1
    return best


def obstacle_distance_np(occ, s, p, occupied_idx=None):
    nx, ny, nz = occ.shape
    best = min(p[0], nx * s - p[0], p[1], ny * s - p[1], p[2], nz * s - p[2])
    if occupied_idx is None:
        occupied_idx = np.argwhere(occ)
    if len(occupied_idx) == 0:
        return float(best)
    lo = occupied_idx * s
    gap = np.maximum(np.maximum(lo - p, 0.0), p - (lo + s))
    gap = np.where(gap > 0.0, gap, 0.0)
    d = np.sqrt(gap[:, 0] * gap[:, 0] + gap[:, 1] * gap[:, 1] + gap[:, 2] * gap[:, 2])
    return float(min(best, d.min()))


@njit
def distance_field_jit(occ, s):
    nx, ny, nz = occ.shape
    out = np.full((nx, ny, nz), np.nan)
    p = np.empty(3)
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if occ[i, j, k]:
                    continue
                p[0] = (i + 0.5) * s
                p[1] = (j + 0.5) * s
                p[2] = (k + 0.5) * s
                out[i, j, k] = obstacle_distance_jit(occ, s, p)
    return out


def distance_field_np(occ, s):
    out = np.full(occ.shape, np.nan)
    occupied_idx = np.argwhere(occ)
    for c in np.argwhere(~occ):
        out[tuple(c)] = obstacle_distance_np(occ, s, (c + 0.5) * s, occupied_idx)
    return out


if USE_JIT:
    segment_blocked = segment_blocked_jit
    triangle_blocked = triangle_blocked_jit
    ray_lengths = ray_lengths_jit
    obstacle_distance = obstacle_distance_jit
    distance_field = distance_field_jit
else:
    segment_blocked = segment_blocked_np
    triangle_blocked = triangle_blocked_np
    ray_lengths = ray_lengths_np
    obstacle_distance = obstacle_distance_np
    distance_field = distance_field_np
