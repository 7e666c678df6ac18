"""Compare the compiled and numpy bath-sum kernels.

    python benchmarks/bench_kernels.py [--points 200] [--modes 2000,20000,200000] [--repeat 5]

Prints one line per mode count with the best-of-repeat wall time of each
backend, the speedup, and the max relative difference between the two.
"""
from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from topofano import _kernels_py

try:
    from topofano import _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None


def make_inputs(n_modes: int, points: int):
    w = np.linspace(1.5, 2.5, n_modes, endpoint=False) + 0.5 / n_modes
    t = np.sqrt(1e-4 / (2 * np.pi) / n_modes)
    weights = np.ascontiguousarray(np.full((4, n_modes), t * t))
    z = np.linspace(1.99, 2.01, points) + 1e-5j
    return z, w, weights


def run(modes, points: int, repeat: int) -> list[dict]:
    rows = []
    for n in modes:
        z, w, W = make_inputs(n, points)
        best = lambda f: min(timeit.repeat(lambda: f(z, w, W), number=1, repeat=repeat))
        row = {"modes": n, "points": points, "python_s": best(_kernels_py.bath_sums)}
        if _kernels_cy is not None:
            row["cython_s"] = best(_kernels_cy.bath_sums)
            row["speedup"] = row["python_s"] / row["cython_s"]
            a = np.asarray(_kernels_cy.bath_sums(z, w, W))
            b = _kernels_py.bath_sums(z, w, W)
            row["max_rel_diff"] = float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
        rows.append(row)
    return rows


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--modes", default="2000,20000,200000")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", action="store_true")
    a = p.parse_args()
    rows = run([int(m) for m in a.modes.split(",")], a.points, a.repeat)
    if a.json:
        print(json.dumps(rows, indent=2))
        return
    if _kernels_cy is None:
        print("compiled kernel not available; timing numpy backend only")
    for r in rows:
        line = f"N={r['modes']:>7d}  python {r['python_s'] * 1e3:9.2f} ms"
        if "cython_s" in r:
            line += f"  cython {r['cython_s'] * 1e3:9.2f} ms  x{r['speedup']:5.1f}  diff {r['max_rel_diff']:.1e}"
        print(line)


if __name__ == "__main__":
    main()
