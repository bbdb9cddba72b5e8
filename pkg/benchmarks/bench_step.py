"""Compare the compiled and numpy stepping kernels.

    python3 benchmarks/bench_step.py [--repeat 5]

Times single explicit steps on 1/2/3-d grids and a full p=3 solve, and
checks that both backends produce bitwise identical output.
"""

import argparse
import timeit

import numpy as np

from plaplab.coeffs import PLaplaceParams
from plaplab.datagen import generate_boundary_data
from plaplab.grid import make_grid
from plaplab.kernels import explicit_step
from plaplab.solver import SolveConfig, solve


def step_case(n, m):
    shape = (m,) * n
    rng = np.random.default_rng(n)
    u = rng.standard_normal(shape).ravel()
    strides = [int(np.prod(shape[i + 1:])) for i in range(n)]
    idx = np.indices(tuple(s - 2 for s in shape)).reshape(n, -1) + 1
    interior = np.ravel_multi_index(tuple(idx), shape).astype(np.int64)
    h = 2.0 / (m - 1)
    return u, interior, strides, h, 0.2 * h * h / (2 * n * 2.0)


def time_step(backend, n, m, repeat):
    u, interior, strides, h, dt = step_case(n, m)
    out = u.copy()
    t = min(timeit.repeat(lambda: explicit_step(u, out, interior, strides, h, dt, 3.0, 0.01,
                                                True, backend), number=10, repeat=repeat)) / 10
    return t, out.copy()


def time_solve(backend, repeat):
    g = make_grid(2, 1.0, 1 / 32, 1 / 1024, -1.0, 0.0)
    sc = SolveConfig.auto(g, PLaplaceParams(3.0, 0.01, 2))
    data = generate_boundary_data(0)
    holder = {}

    def go():
        holder["f"] = solve(sc, data, backend=backend)
    t = min(timeit.repeat(go, number=1, repeat=repeat))
    return t, holder["f"].values


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'case':<22}{'python [ms]':>12}{'compiled [ms]':>15}{'speedup':>9}  identical")
    for n, m in ((1, 4097), (2, 129), (3, 33)):
        tp, op = time_step("python", n, m, args.repeat)
        tc, oc = time_step("compiled", n, m, args.repeat)
        print(f"{f'step n={n} {m}^{n}':<22}{1e3 * tp:>12.3f}{1e3 * tc:>15.3f}{tp / tc:>9.1f}  "
              f"{np.array_equal(op, oc)}")
    tp, vp = time_solve("python", max(1, args.repeat // 2))
    tc, vc = time_solve("compiled", max(1, args.repeat // 2))
    print(f"{'solve n=2 h=1/32 p=3':<22}{1e3 * tp:>12.1f}{1e3 * tc:>15.1f}{tp / tc:>9.1f}  "
          f"{np.array_equal(vp, vc)}")


if __name__ == "__main__":
    main()
