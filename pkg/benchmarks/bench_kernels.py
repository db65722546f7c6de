"""Compare the jitted and pure-numpy kernel paths.

Run twice to see both sides:

    python benchmarks/bench_kernels.py
    INRR_DISABLE_NUMBA=1 python benchmarks/bench_kernels.py

The jitted path pays a one-time compile cost (excluded below via warmup);
matrix products go through BLAS either way and are not benchmarked here.
"""

import time

import numpy as np

from inrr import _kernels
from inrr import autodiff as ad
from inrr.optim import Adam


def timeit(fn, repeats=50):
    fn()  # warmup (jit compile / cache touch)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def main():
    rng = np.random.default_rng(0)
    z = np.ascontiguousarray(rng.normal(size=(4096, 256)))
    small = np.ascontiguousarray(rng.normal(size=(64, 64)))

    path = "numba" if _kernels.NUMBA_ACTIVE else "numpy"
    print(f"kernel path: {path}")
    print(f"{'kernel':<14}{'size':<14}{'us/call':>10}")
    for name, fn, arg in (
        ("sine", lambda a: _kernels.sine(a, 30.0), z),
        ("sine", lambda a: _kernels.sine(a, 30.0), small),
        ("relu", _kernels.relu, z),
        ("exp_clip", lambda a: _kernels.exp_clip(a, 30.0), z),
        ("abs", _kernels.abs_, z),
    ):
        dt = timeit(lambda: fn(arg))
        print(f"{name:<14}{str(arg.shape):<14}{dt * 1e6:>10.1f}")

    p = ad.param(rng.normal(size=(4096, 64)))
    opt = Adam([p], lr=1e-3)
    g = rng.normal(size=p.value.shape)

    def adam_step():
        p.grad = g
        opt.step()

    dt = timeit(adam_step)
    print(f"{'adam_step':<14}{str(p.value.shape):<14}{dt * 1e6:>10.1f}")

    # end-to-end: one training-style forward/backward on a small SIREN
    from inrr.models import NetworkSpec, forward, grid_coords_centered, init_network
    spec = NetworkSpec(2, 1, (64,) * 5, "sine")
    params = init_network(spec, 0)
    coords = grid_coords_centered(64, 64)

    def train_step():
        out = forward(spec, params, coords)
        ad.backward(ad.tsum(out * out))

    dt = timeit(train_step, repeats=20)
    print(f"{'fwd+bwd':<14}{'64x64 grid':<14}{dt * 1e6:>10.1f}")


if __name__ == "__main__":
    main()
