"""Timing comparison of the numba and pure-numpy kernel builds.

Runs each hot kernel in the current process (whichever build the
WALSHLAB_NO_NUMBA flag selected), then re-runs the same workload in a
subprocess with the flag inverted, and prints both timings side by side.

    python3 bench/bench_kernels.py [--resolution K] [--repeats N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def workload(resolution: int, repeats: int) -> dict:
    from walshlab import _kernels
    from walshlab.triform import EpsilonField, lambda_direct
    from walshlab.gridfn import GridFunction2D

    n = 1 << resolution
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(64, n))

    # warm-up pass so numba's compile time is not billed to the loop
    _kernels.wht_rows(rows.copy())
    best_wht = min(
        _timed(lambda: _kernels.wht_rows(rows.copy())) for _ in range(repeats)
    )

    eps = EpsilonField.random(resolution, rng)
    F0, F1, F2 = (
        GridFunction2D(resolution, rng.normal(size=(n, n))) for _ in range(3)
    )
    lambda_direct(eps, F0, F1, F2)
    best_form = min(
        _timed(lambda: lambda_direct(eps, F0, F1, F2)) for _ in range(repeats)
    )
    return {
        "numba": _kernels.USING_NUMBA,
        "wht_rows": best_wht,
        "lambda_direct": best_form,
    }


def _timed(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--resolution", type=int, default=6)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument(
        "--json", action="store_true", help="emit one JSON object, no subprocess"
    )
    args = parser.parse_args()

    here = workload(args.resolution, args.repeats)
    if args.json:
        print(json.dumps(here))
        return 0

    env = dict(os.environ)
    if here["numba"]:
        env["WALSHLAB_NO_NUMBA"] = "1"
    else:
        env.pop("WALSHLAB_NO_NUMBA", None)
    proc = subprocess.run(
        [
            sys.executable,
            os.path.abspath(__file__),
            "--resolution",
            str(args.resolution),
            "--repeats",
            str(args.repeats),
            "--json",
        ],
        env=env,
        capture_output=True,
        text=True,
    )
    if proc.returncode:
        sys.stderr.write(proc.stderr)
        return proc.returncode
    other = json.loads(proc.stdout.strip().splitlines()[-1])

    results = {r["numba"]: r for r in (here, other)}
    if len(results) != 2:
        print("numba build unavailable; numpy path timed twice")
    print(f"resolution K={args.resolution}, best of {args.repeats}")
    print(f"{'kernel':<16}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>9}")
    for name in ("wht_rows", "lambda_direct"):
        t_nb = results.get(True, here)[name] * 1e3
        t_np = results.get(False, here)[name] * 1e3
        print(f"{name:<16}{t_nb:>12.3f}{t_np:>12.3f}{t_np / t_nb:>9.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
