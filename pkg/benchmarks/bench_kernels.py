"""Time the compiled and pure-Python union-find kernels on real sponge covers.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time
from fractions import Fraction

import numpy as np

from lgsponge import kernels
from lgsponge.connectivity import threshold_units
from lgsponge.cover import refine
from lgsponge.model import SpongeSpec

CASES = [
    ("dust 1/2048", SpongeSpec.grid((4, 5), [(0, 0), (2, 2)]), Fraction(1, 2048)),
    ("counterexample 1/256", SpongeSpec.grid((3, 4), [(0, 0), (1, 2), (2, 0)]), Fraction(1, 256)),
    ("carpet 1/64", SpongeSpec.grid((2, 3), [(0, 0), (1, 1), (1, 2)]), Fraction(1, 64)),
]


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'case':<24}{'boxes':>9}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, spec, delta in CASES:
        ps, thresh = threshold_units(refine(spec, (), delta / 16), delta)
        times, labels = [], []
        for b in backends:
            t, lab = best_of(lambda: kernels.box_components(ps.lo, ps.hi, thresh, backend=b), args.repeat)
            times.append(t)
            labels.append(lab)
        assert all(np.array_equal(labels[0], x) for x in labels[1:]), "backends disagree"
        speed = f"{times[-1] / times[0]:.1f}x" if len(times) > 1 else "-"
        print(f"{name:<24}{len(ps):>9}" + "".join(f"{t:>11.3f}s" for t in times) + f"{speed:>10}")


if __name__ == "__main__":
    main()
