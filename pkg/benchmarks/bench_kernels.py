"""Compare the numba and pure-numpy kernels.

Runs each kernel on identical inputs, checks the two agree, and reports the
best-of-N wall time. ``--simulate`` also times a full Monte Carlo run under
each backend (selected through ``EIGENWAVE_NUMBA`` in a subprocess).

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --size 2000000 --repeat 7 --simulate
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from eigenwave import _kernels
from eigenwave.eigen import ChannelDims, marginal_expansion
from eigenwave.policy import StreamSpec, derive_params


def best_time(fn, repeat):
    fn()  # warm-up; also triggers JIT compilation
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_accumulate(size, repeat):
    dims = ChannelDims(3, 6)
    prm = derive_params(dims, StreamSpec(2, 1e-6, oe=1.0))
    lam = np.random.default_rng(0).gamma(4.0, size=size)
    args = (lam, prm.lambda_out, prm.lambda_mea, prm.delta, prm.snr_hat, prm.snr_tilde,
            1.0, 2.0, True)
    a = _kernels.accumulate_stream_numpy(*args)
    b = _kernels.accumulate_stream_numba(*args)
    err = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
    t_np = best_time(lambda: _kernels.accumulate_stream_numpy(*args), repeat)
    t_nb = best_time(lambda: _kernels.accumulate_stream_numba(*args), repeat)
    return "accumulate_stream", size, t_np, t_nb, err


def bench_expansion(size, repeat):
    exp = marginal_expansion(ChannelDims(3, 6), 2)
    x = np.linspace(0.0, 40.0, size)
    args = (x, exp.coeffs, exp.exponents, exp.rates)
    a = _kernels.eval_expansion_numpy(*args)
    b = _kernels.eval_expansion_numba(*args)
    err = float(np.max(np.abs(a - b)))
    t_np = best_time(lambda: _kernels.eval_expansion_numpy(*args), repeat)
    t_nb = best_time(lambda: _kernels.eval_expansion_numba(*args), repeat)
    return "eval_expansion", size, t_np, t_nb, err


def time_simulate(flag, samples):
    env = dict(os.environ, EIGENWAVE_NUMBA=flag)
    code = (
        "import time\n"
        "from eigenwave.eigen import ChannelDims\n"
        "from eigenwave.montecarlo import SimConfig, simulate\n"
        "from eigenwave.policy import StreamSpec\n"
        "specs = [StreamSpec(i, 1e-6, oe=1.0) for i in (1, 2, 3)]\n"
        f"cfg = SimConfig(ChannelDims(3, 6), specs, 'dynamic', samples={samples})\n"
        "simulate(SimConfig(ChannelDims(3, 6), specs, samples=1000))\n"
        "t = time.perf_counter(); simulate(cfg, threads=1)\n"
        "print(time.perf_counter() - t)\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=1_000_000, help="elements per kernel call")
    parser.add_argument("--repeat", type=int, default=5, help="timed repetitions")
    parser.add_argument("--simulate", action="store_true",
                        help="also time a full simulate() run per backend")
    parser.add_argument("--samples", type=int, default=1_000_000,
                        help="samples for --simulate")
    args = parser.parse_args(argv)

    if _kernels.accumulate_stream_numba is None:
        sys.exit("numba is not importable; nothing to compare")

    print(f"{'kernel':<20}{'size':>10}{'numpy s':>12}{'numba s':>12}{'speedup':>10}"
          f"{'max diff':>12}")
    for row in (bench_accumulate(args.size, args.repeat),
                bench_expansion(args.size, args.repeat)):
        name, size, t_np, t_nb, err = row
        print(f"{name:<20}{size:>10}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x"
              f"{err:>12.1e}")

    if args.simulate:
        t_np = time_simulate("0", args.samples)
        t_nb = time_simulate("1", args.samples)
        print(f"{'simulate (3 streams)':<20}{args.samples:>10}{t_np:>12.4f}{t_nb:>12.4f}"
              f"{t_np / t_nb:>9.1f}x{'':>12}")


if __name__ == "__main__":
    main()
