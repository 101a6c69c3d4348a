"""Time the compiled kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Each row is the
best-of-N wall time per call in microseconds.
"""

import argparse
import timeit

import numpy as np

from noma_opt import kernels


def _cases(rng):
    h = np.sort(10 ** rng.uniform(-1, 4, 4))
    beta = np.expm1(rng.uniform(0.5, 2.0, 4) * np.log(2))
    bf = beta / (1 + beta)
    q = float(kernels.min_power_chain(h, beta)[1]) * 2

    n = 30
    inv_h = 1.0 / 10 ** rng.uniform(-1, 4, n)
    lo = rng.uniform(0, 1, n)
    hi = lo + rng.uniform(0.1, 3, n)
    budget = float(lo.sum() + 0.5 * (hi - lo).sum())
    w = np.ones(n)
    scale = 1.0 / np.log(2)
    return {
        "min_power_chain (K=4)": lambda m: m.min_power_chain(h, beta),
        "intra_chain (K=4)": lambda m: m.intra_chain(h, bf, q),
        "chain_coefficients (K=4)": lambda m: m.chain_coefficients(h, bf),
        "waterfill_level (N=30)": lambda m: m.waterfill_level(inv_h, lo, hi, w, budget, scale),
        "subgradient_dual (N=30)": lambda m: m.subgradient_dual(inv_h, lo, hi, 0.2, budget, scale),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    names = sorted(backends)
    cases = _cases(np.random.default_rng(args.seed))
    print(f"{'kernel':28s}" + "".join(f"{n:>12s}" for n in names)
          + ("     speedup" if len(names) > 1 else ""))
    for label, call in cases.items():
        times = {}
        for name in names:
            mod = backends[name]
            timer = timeit.Timer(lambda: call(mod))
            number, _ = timer.autorange()
            times[name] = min(timer.repeat(args.repeat, number)) / number * 1e6
        row = f"{label:28s}" + "".join(f"{times[n]:12.2f}" for n in names)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:11.1f}x"
        print(row)
    if "cython" not in backends:
        print("compiled kernels not built; only the Python fallback was timed")


if __name__ == "__main__":
    main()
