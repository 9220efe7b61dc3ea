"""Time the compiled and pure-Python RK4 kernels on the standard workloads.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from sondlab import kernels
from sondlab.adrc import IadrcConfig, kernel_args
from sondlab.differentiators import SOND_CASE1
from sondlab.signals import CASE1


def sond_workload(mod, n=1000, h=0.002):
    p = SOND_CASE1
    return mod.sond_simulate(p.a, p.b, p.c, p.rho, *CASE1.kernel_spec(), 0.0, h, n, 0.0, 0.0)


def iadrc_workload(mod, cfg=IadrcConfig()):
    return mod.iadrc_simulate(*kernel_args(cfg))


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    names = kernels.available()
    workloads = {"sond case1 (1000 steps)": sond_workload, "iadrc nominal (5000 steps)": iadrc_workload}
    print(f"{'workload':<28}{'backend':<10}{'best [ms]':>12}{'speedup':>10}")
    for title, work in workloads.items():
        results = {}
        for name in names:
            mod = kernels.get(name)
            results[name] = best_of(lambda: work(mod), args.repeat)
        ref = results["python"][0]
        for name, (elapsed, _) in results.items():
            print(f"{title:<28}{name:<10}{elapsed * 1e3:>12.2f}{ref / elapsed:>9.1f}x")
        if len(results) > 1:
            a, b = (r[1] for r in results.values())
            print(f"{'':<28}max |difference| between backends: {np.max(np.abs(a - b)):.3e}")
    if "cython" not in names:
        print("compiled backend not built; only the pure-Python kernel was timed")


if __name__ == "__main__":
    main()
