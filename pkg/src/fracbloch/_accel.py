"""Hot inner loops, compiled with numba when available.

Each kernel has a pure-numpy twin.  The numba versions are used unless the
environment variable ``FRACBLOCH_NUMBA`` is set to ``0`` (or numba cannot be
imported).  Both paths must return the same numbers to rounding; the test
suite and ``benchmarks/bench_accel.py`` exercise them side by side.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FLAG = os.environ.get("FRACBLOCH_NUMBA", "1").strip().lower()
USE_NUMBA = numba is not None and _FLAG not in ("0", "false", "no", "off")

# rows per block in the numpy fallback; keeps the temporary matrix ~32 MB
_BLOCK_ELEMS = 4_000_000


# ---------------------------------------------------------------------------
# log-sum-exp of power-weighted samples
# ---------------------------------------------------------------------------

def _log_power_sums_np(powers, log_s, log_c):
    m = powers.shape[0]
    out = np.empty(m)
    n = max(log_s.shape[0], 1)
    block = max(1, _BLOCK_ELEMS // n)
    for start in range(0, m, block):
        p = powers[start:start + block, None]
        e = p * log_s[None, :] + log_c[None, :]
        e[~np.isfinite(e)] = -np.inf
        mx = e.max(axis=1)
        safe = np.where(np.isfinite(mx), mx, 0.0)
        with np.errstate(under="ignore"):
            s = np.exp(e - safe[:, None]).sum(axis=1)
        with np.errstate(divide="ignore"):
            out[start:start + block] = np.where(np.isfinite(mx), safe + np.log(s), -np.inf)
    return out


if numba is not None:

    @numba.njit(cache=True, fastmath=False)
    def _log_power_sums_nb(powers, log_s, log_c):
        m = powers.shape[0]
        n = log_s.shape[0]
        out = np.empty(m)
        for i in range(m):
            p = powers[i]
            mx = -np.inf
            for j in range(n):
                if log_c[j] == -np.inf:
                    continue
                v = p * log_s[j] + log_c[j]
                if v > mx:
                    mx = v
            if mx == -np.inf or not np.isfinite(mx):
                out[i] = mx if mx != np.inf else np.inf
                continue
            acc = 0.0
            for j in range(n):
                if log_c[j] == -np.inf:
                    continue
                acc += np.exp(p * log_s[j] + log_c[j] - mx)
            out[i] = mx + np.log(acc)
        return out


def log_power_sums(powers, log_s, log_c):
    """Return ``log(sum_j exp(p * log_s[j] + log_c[j]))`` for every ``p``.

    This is the reduction behind every moment integral: with quadrature
    nodes ``s_j`` and log-weights ``log_c`` (integrand times quadrature
    weight), each entry is the log of ``sum_j s_j**p * c_j``.
    """
    powers = np.ascontiguousarray(powers, dtype=np.float64)
    log_s = np.ascontiguousarray(log_s, dtype=np.float64)
    log_c = np.ascontiguousarray(log_c, dtype=np.float64)
    if USE_NUMBA:
        return _log_power_sums_nb(powers, log_s, log_c)
    return _log_power_sums_np(powers, log_s, log_c)


# ---------------------------------------------------------------------------
# pairwise envelope constant for two-point tail inequalities
# ---------------------------------------------------------------------------

def _pair_envelope_np(log_tail, log_q, exponent, s_first):
    d_tail = log_tail[:, None] - log_tail[None, :]
    d_q = log_q[None, :] - log_q[:, None]
    vals = d_tail + exponent * d_q
    g = log_tail.shape[0]
    if s_first:
        mask = np.triu(np.ones((g, g), dtype=bool))
    else:
        mask = np.tril(np.ones((g, g), dtype=bool))
    vals = np.where(mask, vals, -np.inf)
    return float(vals.max())


if numba is not None:

    @numba.njit(cache=True)
    def _pair_envelope_nb(log_tail, log_q, exponent, s_first):
        g = log_tail.shape[0]
        best = -np.inf
        for i in range(g):
            if s_first:
                lo, hi = i, g
            else:
                lo, hi = 0, i + 1
            for j in range(lo, hi):
                v = (log_tail[i] - log_tail[j]) + exponent * (log_q[j] - log_q[i])
                if v > best:
                    best = v
        return best


def pair_envelope(log_tail, log_q, exponent, s_first=True):
    """Smallest log C with tail(s) <= C (q_s/q_t)**exponent tail(t) on grid pairs.

    Grid values are indexed by increasing radius.  With ``s_first`` the
    pairs are s <= t (upper-doubling form); otherwise t <= s.
    """
    log_tail = np.ascontiguousarray(log_tail, dtype=np.float64)
    log_q = np.ascontiguousarray(log_q, dtype=np.float64)
    if USE_NUMBA:
        return float(_pair_envelope_nb(log_tail, log_q, float(exponent), bool(s_first)))
    return _pair_envelope_np(log_tail, log_q, float(exponent), bool(s_first))


# ---------------------------------------------------------------------------
# lacunary power sums 1 + sum_n 2^n r^{M_n}
# ---------------------------------------------------------------------------

def _lacunary_sums_np(log_r, exps, log_coef):
    e = exps[None, :] * log_r[:, None] + log_coef[None, :]
    with np.errstate(under="ignore"):
        return 1.0 + np.exp(e).sum(axis=1)


if numba is not None:

    @numba.njit(cache=True)
    def _lacunary_sums_nb(log_r, exps, log_coef):
        out = np.empty(log_r.shape[0])
        for i in range(log_r.shape[0]):
            acc = 1.0
            for n in range(exps.shape[0]):
                v = exps[n] * log_r[i] + log_coef[n]
                if v > -745.0:
                    acc += np.exp(v)
            out[i] = acc
        return out


def lacunary_sums(log_r, exps, log_coef):
    """Evaluate ``1 + sum_n exp(log_coef[n]) * r**exps[n]`` for each r."""
    log_r = np.ascontiguousarray(log_r, dtype=np.float64)
    exps = np.ascontiguousarray(exps, dtype=np.float64)
    log_coef = np.ascontiguousarray(log_coef, dtype=np.float64)
    if USE_NUMBA:
        return _lacunary_sums_nb(log_r, exps, log_coef)
    return _lacunary_sums_np(log_r, exps, log_coef)


def backend():
    return "numba" if USE_NUMBA else "numpy"
