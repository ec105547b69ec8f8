#!/usr/bin/env python3
"""Benchmark the fused E-step kernel: compiled extension vs numpy fallback.

The E-step is the per-iteration hot loop of the EM solver next to the FFT
products: per coefficient it evaluates truncated-Gaussian moments (erf/exp),
two Gamma updates (digamma/log), and a Bernoulli responsibility. This script
times both backends on a paper-scale state (I = 25600) and an end-to-end
paper-scale solve, and checks that the outputs agree.

Usage: python benchmarks/bench_estep.py [--reps 200]
"""
import argparse
import time

import numpy as np

from mimo_papr import channel, emtgm, kernels, linops, model


def make_state(rng, n):
    return dict(
        r_hat=rng.normal(size=n) * 0.5,
        tau_r=10 ** rng.uniform(-4, 0, size=n),
        mu=np.zeros(n), sigma2=np.ones(n), phi=np.ones(n),
        ex=np.zeros(n), ex2=np.ones(n),
        a1=np.ones(n), b1=np.ones(n), a2=np.ones(n), b2=np.ones(n),
        ealpha1=10 ** rng.uniform(0, 5, size=n),
        ealpha2=10 ** rng.uniform(0, 5, size=n),
        elnalpha1=rng.normal(size=n), elnalpha2=rng.normal(size=n),
        ekappa=rng.uniform(0, 1, size=n),
    )


FIELDS = ("mu", "sigma2", "phi", "ex", "ex2", "a1", "b1", "a2", "b2",
          "ealpha1", "ealpha2", "elnalpha1", "elnalpha2", "ekappa")


def time_backend(backend, reps, n=25600, seed=0):
    rng = np.random.default_rng(seed)
    state = make_state(rng, n)
    fn = kernels.get_estep(backend)
    args = (state["r_hat"], state["tau_r"], 0.45, 1e-6, 1e-6, 0.5,
            *[state[f] for f in FIELDS])
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    dt = (time.perf_counter() - t0) / reps
    return dt, state


def time_solve(backend, seed=0):
    cfg = model.SystemConfig.with_centered_tones(M=100, K=10, N=128,
                                                 n_data=114, D=8)
    rng = np.random.default_rng(seed)
    taps = channel.draw_taps(cfg.K, cfg.M, cfg.D, rng)
    H = channel.freq_response(taps, cfg.N)
    S = model.generate_symbols(cfg, rng)
    y = model.RealStackLayout(cfg).target_from_symbols(S)
    op = linops.build_operator(H, cfg, mode="fast")
    t0 = time.perf_counter()
    emtgm.solve(y, op, emtgm.Hyperparams(t_max=200, backend=backend))
    return time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--reps", type=int, default=200)
    args = parser.parse_args()

    if not kernels.HAVE_COMPILED:
        print("compiled kernel not available; benchmarking the fallback only")

    backends = ["python"] + (["compiled"] if kernels.HAVE_COMPILED else [])
    results = {}
    states = {}
    for b in backends:
        dt, state = time_backend(b, args.reps)
        results[b] = dt
        states[b] = state
        print(f"E-step ({b:8s}): {dt * 1e3:7.3f} ms per call "
              f"({25600 / dt / 1e6:.1f} M coefficients/s)")
    if len(backends) == 2:
        worst = max(np.max(np.abs(states["python"][f] - states["compiled"][f])
                           / np.maximum(np.abs(states["python"][f]), 1.0))
                    for f in FIELDS)
        print(f"speedup: {results['python'] / results['compiled']:.2f}x, "
              f"worst relative output difference {worst:.2e}")

    for b in backends:
        print(f"paper-scale solve, 200 iterations ({b:8s}): "
              f"{time_solve(b):.2f} s")


if __name__ == "__main__":
    main()
