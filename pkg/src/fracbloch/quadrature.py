"""Quadrature rules for integrals that pile up at the unit circle.

Radial integrals in this package live on [a, 1) and their integrands are
usually flat for a while and then collapse (or spike) in a tiny layer near
s = 1.  Everything is therefore written in the complementary variable
q = 1 - s and mapped onto a finite interval by

    q = (1 - a) * exp(1 - e**w),   w in [0, W],

i.e. the usual ``s = 1 - e**(-u)`` substitution followed by
``u = e**w - 1``.  The second step turns algebraic decay in ``u`` (tails
like 1/log) into exponential decay in ``w``.  ``W`` is chosen so that the
smallest node has q of order 1e-300.

Composite Gauss-Legendre panels are doubled until successive estimates of
every requested integral agree to ``rtol``.
"""

from functools import lru_cache

import numpy as np

from . import _accel
from .errors import NumericError

Q_FLOOR = 1e-300
DEFAULT_RTOL = 1e-10
MAX_EVALS = 2 ** 24
GL_ORDER = 16
_CHUNK = 8192
_BLOCK_ELEMS = 1 << 19


def _eval_chunked(log_g, q):
    """Evaluate ``log_g`` on a 1-d node array in blocks to bound temporaries."""
    if q.size <= _CHUNK:
        return np.asarray(log_g(q), dtype=float)
    return np.concatenate([np.asarray(log_g(q[i:i + _CHUNK]), dtype=float)
                           for i in range(0, q.size, _CHUNK)])


@lru_cache(maxsize=32)
def gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def composite_nodes(lo, hi, panels, order=GL_ORDER):
    """Nodes and weights of ``panels`` equal Gauss-Legendre panels on [lo, hi]."""
    x, w = gauss_legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def boundary_nodes(q0, panels, order=GL_ORDER):
    """Nodes on [1 - q0, 1) in the doubly exponential boundary map.

    Returns ``(q, log_dw)`` where ``q`` are node complements (1 - s) and
    ``log_dw`` is the log of the Jacobian-weighted quadrature weight, so that
    ``int_{1-q0}^1 g(s) ds ~= sum exp(log g(q) + log_dw)``.
    """
    W = np.log1p(np.log(q0 / Q_FLOOR)) if q0 > Q_FLOOR else 0.0
    w, wt = composite_nodes(0.0, W, panels, order)
    ew = np.exp(w)
    log_q = np.log(q0) + 1.0 - ew
    q = np.exp(log_q)
    log_dw = np.log(wt) + log_q + w
    return q, log_q, log_dw


def origin_nodes(a, panels, order=GL_ORDER):
    """Nodes on (a, 1/2] clustered doubly exponentially at s = a.

    Returns ``(q, log_s, log_dw)`` like :func:`boundary_nodes`; used for the
    inner half of moment integrals, where ``s**p`` with 0 < p < 1 (or p < 0)
    is not smooth at s = 0.
    """
    width = 0.5 - a
    W = np.log1p(np.log(width / Q_FLOOR))
    w, wt = composite_nodes(0.0, W, panels, order)
    ew = np.exp(w)
    log_off = np.log(width) + 1.0 - ew
    off = np.exp(log_off)
    s = a + off
    with np.errstate(divide="ignore"):
        log_s = np.log(s) if a > 0 else log_off
    return 1.0 - s, log_s, np.log(wt) + log_off + w


def _moment_nodes(q0, panels):
    q, log_q, log_dw = boundary_nodes(min(q0, 0.5), panels)
    log_s = np.log1p(-q)
    if q0 <= 0.5:
        return q, log_s, log_dw
    q2, log_s2, log_dw2 = origin_nodes(1.0 - q0, panels)
    return (np.concatenate([q, q2]), np.concatenate([log_s, log_s2]),
            np.concatenate([log_dw, log_dw2]))


def log_moment_integrals(log_g, powers, q0=1.0, rtol=DEFAULT_RTOL,
                         max_evals=MAX_EVALS, panels=16):
    """Return ``log int_{1-q0}^1 s**p * exp(log_g(q)) ds`` for each power p > -1.

    ``log_g`` maps complements q = 1 - s (an array) to log integrand values;
    it is evaluated once per panel level, shared by all powers.  Ranges that
    reach below s = 1/2 are split there and the inner half uses nodes
    clustered at the lower end.
    """
    powers = np.atleast_1d(np.asarray(powers, dtype=float))
    if np.any(powers <= -1):
        raise NumericError("moment integrals need powers > -1")
    prev = None
    evals = 0
    while True:
        q, log_s, log_dw = _moment_nodes(q0, panels)
        lg = _eval_chunked(log_g, q)
        evals += q.size
        log_c = lg + log_dw
        cur = _accel.log_power_sums(powers, log_s, log_c)
        if np.any(np.isnan(cur)) or np.any(cur == np.inf):
            raise NumericError(f"nonfinite quadrature value with {q.size} nodes")
        if prev is not None:
            both_dead = np.isneginf(cur) & np.isneginf(prev)
            diff = np.abs(cur - prev)
            diff[both_dead] = 0.0
            if np.all(diff < rtol):
                return cur
        if evals + 2 * q.size > max_evals:
            raise NumericError(
                f"quadrature did not reach rtol={rtol:g} within {evals} evaluations "
                f"(last panel count {panels})")
        prev = cur
        panels *= 2


def log_integral_to_one(log_g, q0, rtol=DEFAULT_RTOL, max_evals=MAX_EVALS, panels=16):
    """``log int_{1-q0}^1 exp(log_g(q)) ds`` for a scalar start ``1 - q0``."""
    return float(log_moment_integrals(log_g, [0.0], q0=q0, rtol=rtol,
                                      max_evals=max_evals, panels=panels)[0])


def log_integrals_from_each(log_g_rel, q0s, rtol=1e-12, panels=32, max_panels=4096,
                            rows=256, extra=None):
    """Vectorised ``log int_{1-q0}^1 exp(log_g_rel(q, q0)) ds`` for many q0.

    ``log_g_rel`` receives a matrix of node complements (one row per q0) and
    the column vector of q0 values (and, when ``extra`` is given, the
    matching column of ``extra``).  Rows are processed in blocks of ``rows``.
    """
    q0s = np.atleast_1d(np.asarray(q0s, dtype=float))
    out = np.full(q0s.shape, -np.inf)
    live = q0s > 0
    if not np.any(live):
        return out
    qv = q0s[live]
    ev = None if extra is None else np.asarray(extra, dtype=float)[live]
    if qv.size > rows:
        out[live] = np.concatenate([
            log_integrals_from_each(log_g_rel, qv[i:i + rows], rtol, panels, max_panels, rows,
                                    None if ev is None else ev[i:i + rows])
            for i in range(0, qv.size, rows)])
        return out
    prev = None
    while True:
        w_max = np.log1p(np.log(qv / Q_FLOOR))
        t, wt = composite_nodes(0.0, 1.0, panels)
        w = w_max[:, None] * t[None, :]
        ew = np.exp(w)
        log_q = np.log(qv)[:, None] + 1.0 - ew
        q = np.exp(log_q)
        log_dw = np.log(wt)[None, :] + np.log(w_max)[:, None] + log_q + w
        step = max(1, _BLOCK_ELEMS // q.shape[1])
        e = np.concatenate([
            np.asarray(log_g_rel(*((q[i:i + step], qv[i:i + step, None]) if ev is None else
                                   (q[i:i + step], qv[i:i + step, None], ev[i:i + step, None]))),
                       dtype=float)
            for i in range(0, qv.size, step)]) + log_dw
        mx = np.max(e, axis=1)
        with np.errstate(under="ignore"):
            cur = mx + np.log(np.exp(e - mx[:, None]).sum(axis=1))
        if prev is not None and np.all(np.abs(cur - prev) < rtol):
            break
        if panels >= max_panels:
            raise NumericError(f"tail quadrature unresolved at {panels} panels")
        prev = cur
        panels *= 2
    out[live] = cur
    return out


def log_cumulative_dlog(log_g, q_uppers, rtol=1e-10, panels_per_unit=2, max_refine=8):
    """``log int_0^{1-q} exp(log_g(q')) dq'/q'`` for each upper complement q.

    With u = -log(1 - s) the measure ds/(1 - s) becomes du, so the integral
    runs over u in [0, -log q].  The u-axis is cut at the sorted breakpoints
    and each piece gets Gauss-Legendre panels; results are cumulative sums.
    """
    q_uppers = np.atleast_1d(np.asarray(q_uppers, dtype=float))
    u_up = -np.log(q_uppers)
    order = np.argsort(u_up)
    u_sorted = u_up[order]
    brk = np.concatenate(([0.0], u_sorted))
    prev = None
    refine = 1
    for _ in range(max_refine):
        logs = np.full(brk.size - 1, -np.inf)
        for i in range(brk.size - 1):
            lo, hi = brk[i], brk[i + 1]
            if hi <= lo:
                continue
            panels = max(1, int(np.ceil((hi - lo) * panels_per_unit))) * refine
            u, wt = composite_nodes(lo, hi, panels)
            e = np.asarray(log_g(np.exp(-u)), dtype=float) + np.log(wt)
            mx = e.max()
            logs[i] = mx + np.log(np.exp(e - mx).sum())
        cum = np.logaddexp.accumulate(logs) if logs.size else logs
        if prev is not None:
            diff = np.abs(cum - prev)
            diff[np.isneginf(cum) & np.isneginf(prev)] = 0.0
            if np.all(diff < rtol):
                break
        prev = cum
        refine *= 2
    else:
        raise NumericError("cumulative quadrature did not converge")
    out = np.empty_like(cum)
    out[order] = cum
    return out
