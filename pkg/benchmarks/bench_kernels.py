"""Compare the compiled and numpy LSTM pointwise kernels.

    python3 benchmarks/bench_kernels.py [--batch 32] [--hidden 256] [--repeat 200]

Also times one full segment (T=200) through the fused sequence op with each
backend, since that is where the kernels are called from during training.
"""
import argparse
import timeit

import numpy as np

from dctlm import _kernels_py, kernels
from dctlm.layers import DenseLSTMWeights, lstm_sequence
from dctlm.numerics import Rng, backward, precision, recording, sum_

try:
    from dctlm import _ext
except ImportError:
    _ext = None


def bench_pointwise(impl, B, n, dtype, repeat):
    rng = np.random.default_rng(0)
    pre = rng.uniform(-4, 4, (B, 4 * n)).astype(dtype)
    c = rng.uniform(-1, 1, (B, n)).astype(dtype)
    dh = rng.uniform(-1, 1, (B, n)).astype(dtype)
    act, _, tc, _ = impl.lstm_pointwise_forward(pre, c)
    fwd = min(timeit.repeat(lambda: impl.lstm_pointwise_forward(pre, c), number=repeat,
                            repeat=3)) / repeat
    bwd = min(timeit.repeat(lambda: impl.lstm_pointwise_backward(act, c, tc, dh, dh),
                            number=repeat, repeat=3)) / repeat
    return fwd, bwd


def bench_segment(impl, B, n, dtype, T=200):
    saved = kernels._impl
    kernels._impl = impl
    try:
        with precision(dtype):
            w = DenseLSTMWeights(n, n, Rng(0))
            xs = Rng(1).uniform(-1, 1, (T, B, n)).astype(dtype)
            h0 = np.zeros((B, n), dtype=dtype)

            def run():
                with recording() as tape:
                    hs, _ = lstm_sequence(w, xs, h0, h0)
                    loss = sum_(hs)
                backward(tape, loss)
            run()
            return min(timeit.repeat(run, number=1, repeat=3))
    finally:
        kernels._impl = saved


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--hidden", type=int, default=256)
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()
    impls = {"numpy": _kernels_py}
    if _ext is not None:
        impls["cython"] = _ext
    else:
        print("compiled extension not built; timing numpy only")
    print(f"batch {args.batch}, hidden {args.hidden}, active backend {kernels.BACKEND}")
    print(f"{'dtype':<8}{'backend':<9}{'forward us':>12}{'backward us':>13}{'segment s':>11}")
    for dtype in ("float32", "float64"):
        for name, impl in impls.items():
            fwd, bwd = bench_pointwise(impl, args.batch, args.hidden, dtype, args.repeat)
            seg = bench_segment(impl, args.batch, args.hidden, dtype)
            print(f"{dtype:<8}{name:<9}{fwd * 1e6:>12.1f}{bwd * 1e6:>13.1f}{seg:>11.3f}")


if __name__ == "__main__":
    main()
