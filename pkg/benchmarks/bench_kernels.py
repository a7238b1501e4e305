"""Time the numba kernels against their pure-numpy twins on a random cluttered grid.

    python benchmarks/bench_kernels.py --dims 40 12 40 --density 0.15 --repeat 5

Both variants are imported directly, so the TETHERPLAN_NO_JIT flag does not
matter here.  Results are also checked for exact agreement.
"""
import argparse
import time

import numpy as np

from tetherplan import kernels
from tetherplan.world import fibonacci_sphere


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs=3, default=(40, 12, 40))
    ap.add_argument("--cell", type=float, default=0.5)
    ap.add_argument("--density", type=float, default=0.15)
    ap.add_argument("--segments", type=int, default=2000)
    ap.add_argument("--rays", type=int, default=64)
    ap.add_argument("--points", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    occ = rng.random(args.dims) < args.density
    s = args.cell
    extent = np.array(args.dims) * s
    seg_a = rng.uniform(0.01, extent - 0.01, (args.segments, 3))
    seg_b = seg_a + rng.normal(0.0, 2.0, (args.segments, 3))
    seg_b = np.clip(seg_b, 0.01, extent - 0.01)
    tris = seg_a[:, None, :] + rng.normal(0.0, 1.0, (args.segments, 3, 3))
    tris = np.clip(tris, 0.01, extent - 0.01)
    pts = rng.uniform(0.01, extent - 0.01, (args.points, 3))
    dirs = fibonacci_sphere(args.rays)
    rmax = float(np.linalg.norm(extent))

    def los(fn):
        return lambda: np.array([fn(occ, s, a, b) for a, b in zip(seg_a, seg_b)])

    def sweep(fn):
        return lambda: np.array([fn(occ, s, t) for t in tris])

    def rays(fn):
        return lambda: np.array([fn(occ, s, p, dirs, rmax) for p in pts])

    def dist(fn):
        return lambda: np.array([fn(occ, s, p) for p in pts])

    cases = [
        ("line of sight", los(kernels.segment_blocked_jit), los(kernels.segment_blocked_np), args.segments),
        ("sweep triangle", sweep(kernels.triangle_blocked_jit), sweep(kernels.triangle_blocked_np),
         args.segments),
        ("isovist rays", rays(kernels.ray_lengths_jit), rays(kernels.ray_lengths_np), args.points),
        ("obstacle distance", dist(kernels.obstacle_distance_jit), dist(kernels.obstacle_distance_np),
         args.points),
        ("distance field", lambda: kernels.distance_field_jit(occ, s),
         lambda: kernels.distance_field_np(occ, s), 1),
    ]
    # compile once outside the timing loop
    for _, jit_fn, _, _ in cases:
        jit_fn()

    print(f"grid {tuple(args.dims)}, density {args.density}, best of {args.repeat}")
    print(f"{'kernel':<20}{'calls':>7}{'numba s':>12}{'numpy s':>12}{'speedup':>10}  same")
    for name, jit_fn, np_fn, calls in cases:
        tj, rj = best_of(jit_fn, args.repeat)
        tn, rn = best_of(np_fn, args.repeat)
        same = np.array_equal(rj, rn, equal_nan=True)
        print(f"{name:<20}{calls:>7}{tj:>12.4f}{tn:>12.4f}{tn / tj:>10.1f}  {same}")


if __name__ == "__main__":
    main()
