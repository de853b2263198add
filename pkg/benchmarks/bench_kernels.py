"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--targets 40] [--headings 10] [--repeat 3]

Both backends get identical inputs; the script also checks that they agree.
"""

import argparse
import time

import numpy as np

from weednav import _backend
from weednav.routing import build_cluster_graph, candidate_headings, cycle_cost, gtsp_to_atsp, solve_atsp
from weednav.io import generate_field


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--targets", type=int, default=40)
    ap.add_argument("--headings", type=int, default=10)
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--budget", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    fld = generate_field(args.seed, args.targets, 20.0, 20.0, 0.5)
    th = candidate_headings(args.headings)
    x = np.repeat(fld.targets[:, 0], args.headings)
    y = np.repeat(fld.targets[:, 1], args.headings)
    theta = np.tile(th, args.targets)
    atsp = gtsp_to_atsp(build_cluster_graph(fld, args.headings, args.rho)).matrix

    try:
        _backend.kernels("cython")
        names = ["python", "cython"]
    except ImportError:
        names = ["python"]
        print("compiled extension not available; timing the fallback only")

    rows = {}
    for name in names:
        dubins_matrix = _backend.kernels(name)[0]
        t_mat, mat = best_of(lambda: dubins_matrix(x, y, theta, args.rho), args.repeat)
        t_ls, order = best_of(
            lambda: solve_atsp(atsp, seed=args.seed, backend=name, budget=args.budget), args.repeat
        )
        rows[name] = (t_mat, t_ls, mat, cycle_cost(atsp, order))

    n = x.size
    print(f"{args.targets} targets x {args.headings} headings = {n} nodes, ATSP budget {args.budget}")
    print(f"{'backend':<8} {'dubins matrix [s]':>18} {'ATSP search [s]':>16} {'ATSP cost':>14}")
    for name, (t_mat, t_ls, _, cost) in rows.items():
        print(f"{name:<8} {t_mat:18.4f} {t_ls:16.4f} {cost:14.4f}")
    if len(rows) == 2:
        (pm, pl, a, ca), (cm, cl, b, cb) = rows["python"], rows["cython"]
        print(f"speedup  {pm / cm:17.1f}x {pl / cl:15.1f}x")
        print(f"matrices agree to {np.nanmax(np.abs(a - b)):.1e}; ATSP costs {'match' if ca == cb else 'differ'}")


if __name__ == "__main__":
    main()
