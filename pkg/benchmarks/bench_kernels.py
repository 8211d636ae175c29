#!/usr/bin/env python3
"""Benchmark the two hot kernels on both execution paths.

Runs each kernel through its numba implementation and its
numpy/scipy fallback on identical inputs, checks agreement, and prints
the timings. ``LEOCP_DISABLE_NUMBA=1`` makes the whole package use the
fallback path; this script times both explicitly regardless.

Usage:
    python3 benchmarks/bench_kernels.py [--sats 1584] [--ticks 43200]
"""
import argparse
import time

import numpy as np

from leocp import kernels
from leocp.orbits import WalkerShell, GroundStation, generate_constellation
from leocp.topology import build_snapshot, shortest_distances


def time_fn(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_dijkstra(n_planes, n_slots):
    shell = WalkerShell(n_planes, n_slots, 53.0, 550.0, phasing_factor=1)
    elements = generate_constellation(shell)
    stations = [
        GroundStation(0, "a", 0.0, 0.0),
        GroundStation(1, "b", 0.0, 90.0),
        GroundStation(2, "c", 0.0, 180.0),
        GroundStation(3, "d", 0.0, -90.0),
    ]
    snap = build_snapshot(shell, elements, stations, 0.0)
    print(f"dijkstra: {shell.total_sats} sats, {snap.isl_pairs.shape[0]} ISLs, "
          f"{snap.gsl_pairs.shape[0]} GSLs, {len(stations)} sources")

    if kernels.HAVE_NUMBA:
        shortest_distances(snap, impl="numba")  # warm the JIT
        t_numba, a = time_fn(lambda: shortest_distances(snap, impl="numba"))
    else:
        t_numba, a = float("nan"), None
    t_scipy, b = time_fn(lambda: shortest_distances(snap, impl="scipy"))

    if a is not None:
        same = np.array_equal(
            np.where(a.reachable, a.d, -1.0), np.where(b.reachable, b.d, -1.0)
        )
        print(f"  numba : {t_numba * 1e3:8.2f} ms")
        print(f"  scipy : {t_scipy * 1e3:8.2f} ms   (agree: {same})")
    else:
        print(f"  numba : unavailable")
        print(f"  scipy : {t_scipy * 1e3:8.2f} ms")


def bench_scan(n_ticks, n_controllers=5):
    rng = np.random.default_rng(0)
    horizon = float(n_ticks)
    sample_t = np.arange(0.0, horizon + 60.0, 60.0)
    sample_t = sample_t[sample_t <= horizon]
    if sample_t[-1] < horizon:
        sample_t = np.append(sample_t, horizon)
    sample_d = rng.uniform(500.0, 3000.0, size=(n_controllers, sample_t.shape[0]))
    print(f"handover scan: {n_controllers} controllers, {n_ticks} decision ticks")

    args = (sample_t, sample_d, 60.0, 1.0, horizon, 0.9)
    if kernels.HAVE_NUMBA:
        kernels.handover_scan(*args, impl="numba")  # warm the JIT
        t_numba, a = time_fn(lambda: kernels.handover_scan(*args, impl="numba"))
    else:
        t_numba, a = float("nan"), None
    t_numpy, b = time_fn(lambda: kernels.handover_scan(*args, impl="numpy"))

    if a is not None:
        print(f"  numba : {t_numba * 1e3:8.2f} ms")
        print(f"  numpy : {t_numpy * 1e3:8.2f} ms   (agree: {a == b})")
    else:
        print(f"  numba : unavailable")
        print(f"  numpy : {t_numpy * 1e3:8.2f} ms")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--planes", type=int, default=72)
    parser.add_argument("--slots", type=int, default=22)
    parser.add_argument("--ticks", type=int, default=43200)
    args = parser.parse_args()

    print(f"numba available: {kernels.HAVE_NUMBA} "
          f"(disable with LEOCP_DISABLE_NUMBA=1)\n")
    bench_dijkstra(args.planes, args.slots)
    print()
    bench_scan(args.ticks)


if __name__ == "__main__":
    main()
