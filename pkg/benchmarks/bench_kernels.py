"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Each case is timed on both backends with identical inputs; the outputs are
checked for equality before timings are reported.
"""
import argparse
import time

import numpy as np

from urq import CandidateSet, kernels


def cases(rng):
    grid = CandidateSet.grid(2, 0.01).points
    phi2 = rng.standard_normal((150, 2))
    w2 = rng.random(150) * 0.2
    code2 = kernels.codes(grid[:1] * 0 + 0.1, phi2, w2, 0.2, 1)[0]
    yield "first_mismatch K=2 grid h=0.01, M=150", kernels.first_mismatch, (grid, phi2, w2, 0.2, 1, code2)

    pts3 = CandidateSet.grid(3, 0.04).points
    phi3 = rng.standard_normal((200, 3))
    w3 = rng.random(200) * 0.3
    code3 = kernels.codes(pts3[:1], phi3, w3, 0.3, 1)[0]
    yield "first_mismatch K=3 grid h=0.04, M=200", kernels.first_mismatch, (pts3, phi3, w3, 0.3, 1, code3)

    pts = rng.uniform(-1, 1, (20_000, 8))
    phi = rng.standard_normal((64, 8))
    w = rng.random(64) * 0.5
    yield "codes n=20000 K=8 M=64 B=2", kernels.codes, (pts, phi, w, 0.5, 2)

    pa = rng.standard_normal((100_000, 40))
    pb = pa + 0.01 * rng.standard_normal(pa.shape)
    wd = rng.random(pa.shape) * 0.3
    yield "pair_first_mismatch n=100000 M=40", kernels.pair_first_mismatch, (pa, pb, wd, 0.3, 1)


def best_time(fn, args, backend, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args, backend=backend)
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if kernels._compiled is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(args.seed)
    print(f"{'case':44s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}")
    for name, fn, fargs in cases(rng):
        tc, oc = best_time(fn, fargs, "compiled", args.repeat)
        tp, op = best_time(fn, fargs, "python", args.repeat)
        assert np.array_equal(oc, op), f"backends disagree on {name}"
        print(f"{name:44s} {tc * 1e3:9.2f}ms {tp * 1e3:9.2f}ms {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
