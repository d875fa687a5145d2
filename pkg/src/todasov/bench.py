"""Timing comparison of the compiled and numpy log-Gamma backends."""

from __future__ import annotations

import time

import numpy as np

from . import gammaplex
from .whittaker import Positions, Rapidities, phi_mb


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(size: int = 200_000):
    rng = np.random.default_rng(0)
    z = rng.uniform(-30, 30, size) + 1j * rng.uniform(-60, 60, size)
    y3, x3 = Rapidities((0.3, -0.4, 0.1)), Positions((0.2, -0.5, 0.3))
    return {
        "loggamma_array": lambda: gammaplex.loggamma(z),
        "phi_mb_n3": lambda: phi_mb(y3, x3),
    }


def run(repeat: int = 3, size: int = 200_000) -> list:
    """Best-of-``repeat`` seconds for each workload under each backend."""
    previous = gammaplex.BACKEND
    rows = []
    try:
        for name, fn in workloads(size).items():
            times = {}
            for backend in gammaplex.available_backends():
                gammaplex.set_backend(backend)
                fn()  # warm up
                times[backend] = _best(fn, repeat)
            row = {"workload": name, **{f"{b}_s": t for b, t in times.items()}}
            if "compiled" in times:
                row["speedup"] = times["numpy"] / times["compiled"]
            rows.append(row)
    finally:
        gammaplex.set_backend(previous)
    return rows
