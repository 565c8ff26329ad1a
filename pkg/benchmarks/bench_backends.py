"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_backends.py [--repeat 5]

Prints the best-of-``repeat`` wall time per workload and backend, and the
speedup of the compiled one.  Both backends produce bit-identical results,
which is checked before timing.
"""
import argparse
import timeit

import numpy as np

from detflow import _backend, identity, ode
from detflow import scenarios as S


def workloads():
    g = np.random.default_rng(0)
    mats = [g.uniform(-1, 1, (n, n)) for n in (2, 4, 6) for _ in range(200)]
    stack = np.ascontiguousarray(g.uniform(-1, 1, (2000, 5, 5)))
    forcing = np.ascontiguousarray(g.uniform(-1, 1, (2000, 5, 5)))
    smooth = S.random_smooth(g, 5)
    long_run = smooth.with_solver(h=1e-4)
    traj = ode.integrate(smooth)

    def k():
        return _backend.kernels

    return {
        "det x600 (n=2,4,6)": lambda: [k().det(m) for m in mats],
        "adjugate x600": lambda: [k().adjugate(m, 1e-12) for m in mats],
        "batch trace(adj X F), 2000 x 5x5": lambda: k().batch_trace_adj_prod(stack, forcing, 1e-12),
        "rk4 integrate n=5, 1000 steps": lambda: ode.integrate(smooth),
        "rk4 integrate n=5, 10000 steps": lambda: ode.integrate(long_run),
        "all identity series, n=5": lambda: identity.all_series(smooth, traj),
    }


def _bytes(value):
    if isinstance(value, (list, tuple)):
        return b"".join(_bytes(v) for v in value)
    return np.asarray(value).tobytes()


def same_results(fn):
    out = []
    for name in _backend.available():
        with _backend.use(name):
            out.append(_bytes(fn()))
    return len(set(out)) <= 1


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    backends = _backend.available()
    if len(backends) < 2:
        print("compiled extension not built; only the fallback is available")
    print(f"{'workload':36s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup")
    for label, fn in workloads().items():
        if label.startswith(("det", "adjugate", "batch")):
            assert same_results(fn), label
        times = []
        for name in backends:
            with _backend.use(name):
                times.append(min(timeit.repeat(fn, number=1, repeat=args.repeat)))
        row = f"{label:36s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"  {times[1] / times[0]:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
