#!/usr/bin/env python3
"""Time the numba kernel backend against the pure-numpy one.

Imports both implementations directly, so a single run covers the two
backends regardless of MINDVLOG_NUMBA.  Each kernel is checked for
agreement on the benchmark inputs before any timing happens; a mismatch
aborts the run, because a fast wrong kernel is not a result.

Usage:
    python benchmarks/bench_kernels.py [--repeats N] [--seed S]

The first numba call per kernel pays JIT compilation; that warm-up is
done outside the timed region and reported separately.
"""

import argparse
import time

import numpy as np

from mindvlog.kernels import numba_impl, numpy_impl

KERNELS = (
    "windowed_frames",
    "autocorr_lags",
    "lcs_length",
    "cosine_scores",
    "masked_mse",
    "softmax_rows",
)


def build_inputs(rng):
    """One realistic argument tuple per kernel.

    Shapes mirror where each kernel actually runs hot: audio framing on a
    ten-second 16 kHz waveform, pitch autocorrelation on one frame,
    LCS over paragraph-length token ids, retrieval scoring over a few
    thousand chunks, reconstruction loss on a masked batch, and attention
    row softmax.
    """
    wave = rng.standard_normal(160_000)
    window = np.hanning(512)
    hop = 256
    n_frames = 1 + (wave.shape[0] - 512) // hop

    frame = rng.standard_normal(2048)

    a = rng.integers(0, 50, size=300).astype(np.int64)
    b = rng.integers(0, 50, size=300).astype(np.int64)

    queries = rng.standard_normal((32, 64))
    entries = rng.standard_normal((4000, 64))

    pred = rng.standard_normal((256, 768))
    target = rng.standard_normal((256, 768))
    positions = rng.choice(256, size=96, replace=False).astype(np.int64)

    logits = rng.standard_normal((512, 512))

    return {
        "windowed_frames": (wave, window, hop, n_frames),
        "autocorr_lags": (frame, 32, 400),
        "lcs_length": (a, b),
        "cosine_scores": (queries, entries),
        "masked_mse": (pred, target, positions),
        "softmax_rows": (logits,),
    }


def check_agreement(name, args):
    ref = getattr(numpy_impl, name)(*args)
    got = getattr(numba_impl, name)(*args)
    if name == "lcs_length":
        if ref != got:
            raise SystemExit(f"{name}: numpy={ref} numba={got}")
        return 0.0
    err = float(np.max(np.abs(np.asarray(ref) - np.asarray(got))))
    # identical arithmetic order is not guaranteed, float noise is
    if err > 1e-9:
        raise SystemExit(f"{name}: backends disagree by {err:.3e}")
    return err


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7,
                        help="timed runs per kernel per backend (best is kept)")
    parser.add_argument("--seed", type=int, default=0)
    opts = parser.parse_args(argv)

    rng = np.random.default_rng(opts.seed)
    inputs = build_inputs(rng)

    print(f"repeats={opts.repeats} seed={opts.seed}")
    print()

    jit_cost = {}
    for name in KERNELS:
        t0 = time.perf_counter()
        check_agreement(name, inputs[name])
        jit_cost[name] = time.perf_counter() - t0

    header = f"{'kernel':<18} {'numpy':>10} {'numba':>10} {'speedup':>8} {'1st call':>9}"
    print(header)
    print("-" * len(header))
    for name in KERNELS:
        args = inputs[name]
        t_np = best_of(getattr(numpy_impl, name), args, opts.repeats)
        t_nb = best_of(getattr(numba_impl, name), args, opts.repeats)
        ratio = t_np / t_nb if t_nb > 0 else float("inf")
        print(f"{name:<18} {t_np * 1e3:>8.3f}ms {t_nb * 1e3:>8.3f}ms "
              f"{ratio:>7.2f}x {jit_cost[name] * 1e3:>7.0f}ms")
    print()
    print("speedup > 1 means the numba backend is faster; the 1st-call")
    print("column includes JIT compilation and the agreement check.")


if __name__ == "__main__":
    main()
