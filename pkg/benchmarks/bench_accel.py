"""Compare the numba kernels with their numpy twins.

    python benchmarks/bench_accel.py [--repeat N]

Each kernel is timed in-process on both paths (numba after one warm-up call
so compilation is excluded) and checked for agreement.  A power fit and a
lacunary band on dense grids are then timed in two subprocesses, one per
setting of FRACBLOCH_NUMBA, since the backend is fixed at import.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from fracbloch import _accel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def kernel_cases(rng):
    p = np.linspace(1.0, 2e4, 2000)
    ls = np.log(rng.uniform(1e-6, 1.0, 600))
    lc = rng.normal(size=600)

    g = 800
    lt = -np.cumsum(rng.exponential(size=g))
    lq = -np.linspace(0.0, 20.0, g)

    r = 1.0 - np.geomspace(1e-8, 0.5, 4000)
    ex = 2.0 ** np.arange(41)
    lcoef = np.arange(41) * np.log(2.0)

    return [
        ("log_power_sums 2000x600", _accel._log_power_sums_np, _accel._log_power_sums_nb, (p, ls, lc)),
        ("pair_envelope 800^2", _accel._pair_envelope_np, _accel._pair_envelope_nb, (lt, lq, 1.7, True)),
        ("lacunary_sums 4000x41", _accel._lacunary_sums_np, _accel._lacunary_sums_nb,
         (np.log(r), ex, lcoef)),
    ]


END_TO_END = (
    "import time, warnings\n"
    "warnings.simplefilter('ignore')\n"
    "from fracbloch.classes import power_fit\n"
    "from fracbloch.constructions import lacunary_band\n"
    "from fracbloch.weights import builtin_weight\n"
    "w = builtin_weight('lograpid', alpha=2.0)\n"
    "c = builtin_weight('constant')\n"
    "def work():\n"
    "    power_fit(w, 1.0, True, depth=424, per_octave=16)\n"
    "    lacunary_band(c, 40, depth=424, per_octave=16)\n"
    "work()\n"
    "best = float('inf')\n"
    "for _ in range(3):\n"
    "    t0 = time.perf_counter(); work(); best = min(best, time.perf_counter() - t0)\n"
    "print(best)\n"
)


def end_to_end(flag):
    env = dict(os.environ, FRACBLOCH_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True,
                         text=True, check=True)
    return float(out.stdout.split()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _accel.numba is None:
        sys.exit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, f_np, f_nb, a in kernel_cases(rng):
        f_nb(*a)  # compile
        t_np, y_np = best_of(lambda: f_np(*a), args.repeat)
        t_nb, y_nb = best_of(lambda: f_nb(*a), args.repeat)
        y_np, y_nb = np.atleast_1d(y_np), np.atleast_1d(y_nb)
        diff = float(np.max(np.abs(y_np - y_nb) / np.maximum(np.abs(y_np), 1e-300)))
        print(f"{name:28s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {diff:13.2e}")

    t_np, t_nb = end_to_end("0"), end_to_end("1")
    print(f"{'Lemma A(ii) fit + 4.1 band':28s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {'':>13s}")


if __name__ == "__main__":
    main()
