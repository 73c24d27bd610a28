"""Numerical membership tests for the weight classes D-hat, D-check, M and D.

Every class is defined by an inequality that only matters as r -> 1, so a
verdict here is evidence, not proof.  Each profile is evaluated on three
grids geometric in 1 - r:

* base:    q_j = 2**(-j/4), j = 0..depth (depth 106 reaches q ~ 1e-8),
* shallow: the same grid stopped 6.5 octaves early (the "deepening" check),
* fine:    twice the point density over the base range.

A verdict is evidence-yes when the defining sup or inf is finite on all three
and moves by less than 10% between them.  For the lower-doubling classes the
quantity compared is the excess ``inf - 1``: a ratio that creeps down to 1 as
the grid deepens is exactly the failure mode those classes rule out.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .bands import STABILITY_TOL, jsonable, make_band, rel_change
from .errors import DomainError, NumericError
from .grids import DEFAULT_DEPTH, PER_OCTAVE, shallow_depth
from .quadrature import log_integrals_from_each
from .weights import log_moments

DELTA = 0.01
K_LADDER = tuple(2 ** k for k in range(1, 11))
MOMENT_X_MAX = 1e4
# the log-tail difference loses ~1e-8 absolute for tails like exp(-1/q) at q ~ 1e-8
LEMMA22_RTOL = 1e-7
YES, NO = "evidence-yes", "evidence-no"


def _verdict(flag):
    return YES if flag else NO


# ---------------------------------------------------------------------------
# grids in the complement q = 1 - r and in the moment exponent x
# ---------------------------------------------------------------------------

def _q_grid(depth, per_octave):
    return 2.0 ** (-np.arange(depth + 1) / per_octave)


def _grid_variants(depth, per_octave):
    return {
        "base": _q_grid(depth, per_octave),
        "shallow": _q_grid(shallow_depth(depth, per_octave), per_octave),
        "fine": _q_grid(2 * depth, 2 * per_octave),
    }


def _x_grid(per_octave, x_max=MOMENT_X_MAX):
    top = int(np.floor(per_octave * np.log2(x_max) + 1e-9))
    return 2.0 ** (np.arange(top + 1) / per_octave)


def _x_variants(per_octave, x_max=MOMENT_X_MAX):
    base = _x_grid(per_octave, x_max)
    return {
        "base": base,
        "shallow": base[base <= x_max / 2 ** 6.5],
        "fine": _x_grid(2 * per_octave, x_max),
    }


def _log_tail_on(w, q):
    lt = np.asarray(w.log_tail_q(np.asarray(q, dtype=float)), dtype=float)
    if np.any(np.isnan(lt)):
        raise NumericError(f"tail of {w.name!r} is nan on the grid")
    return lt


# ---------------------------------------------------------------------------
# profile record
# ---------------------------------------------------------------------------

@dataclass
class ClassProfile:
    """Outcome of one class test: the witness value and its stability."""

    name: str
    value: float
    evidence: bool
    variants: dict = field(default_factory=dict)
    drift: float = 0.0
    K: float = None
    truncated: bool = False
    log_value: float = None
    per_K: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return _verdict(self.evidence)

    def __iter__(self):
        yield self.value
        yield self.verdict

    def to_dict(self):
        return jsonable({
            "name": self.name,
            "value": self.value,
            "log_value": self.log_value,
            "verdict": self.verdict,
            "variants": self.variants,
            "drift": self.drift,
            "K": self.K,
            "truncated_grid": self.truncated,
            "per_K": {str(k): v for k, v in self.per_K.items()},
        })


def _safe_exp(x):
    with np.errstate(over="ignore", under="ignore"):
        return float(np.exp(x))


# ---------------------------------------------------------------------------
# D-hat: tail(r) <= C tail((1 + r)/2)
# ---------------------------------------------------------------------------

def dhat_log_ratios(w, q):
    """log of tail(r) / tail((1 + r)/2) at complements q."""
    q = np.asarray(q, dtype=float)
    return _log_tail_on(w, q) - _log_tail_on(w, q / 2.0)


def dhat_profile(w, depth=DEFAULT_DEPTH, per_octave=PER_OCTAVE):
    """Sup over the grid of tail(r)/tail((1+r)/2) with its refinement verdict."""
    logs, trunc = {}, False
    for name, q in _grid_variants(depth, per_octave).items():
        lr = dhat_log_ratios(w, q)
        ok = np.isfinite(lr)
        trunc |= not bool(np.all(ok))
        lt = _log_tail_on(w, q)
        trunc |= bool(_safe_exp(lt[-1]) == 0.0)
        logs[name] = float(np.max(lr[ok])) if np.any(ok) else float("inf")
    vals = {k: _safe_exp(v) for k, v in logs.items()}
    drift = max(rel_change(vals["base"], vals[k]) for k in ("shallow", "fine"))
    evidence = all(np.isfinite(v) for v in vals.values()) and drift < STABILITY_TOL
    return ClassProfile("dhat", vals["base"], evidence, variants=vals, drift=drift,
                        truncated=trunc, log_value=logs["base"])


# ---------------------------------------------------------------------------
# D-check: tail(r) >= C tail(1 - (1 - r)/K), C > 1
# ---------------------------------------------------------------------------

def dcheck_log_ratios(w, K, q):
    q = np.asarray(q, dtype=float)
    return _log_tail_on(w, q) - _log_tail_on(w, q / K)


def dcheck_ratio(w, K, grid):
    """inf over radii ``grid`` of tail(r)/tail(1 - (1 - r)/K)."""
    if not K > 1:
        raise DomainError("K must exceed 1")
    q = 1.0 - np.asarray(grid, dtype=float)
    lr = dcheck_log_ratios(w, K, q)
    lr = lr[np.isfinite(lr)]
    return _safe_exp(np.min(lr)) if lr.size else float("nan")


def _lower_doubling(name, log_inf_by_grid, delta):
    """Shared verdict logic for D-check and M given {grid: log inf} for one K."""
    vals = {k: _safe_exp(v) for k, v in log_inf_by_grid.items()}
    excess = {k: v - 1.0 for k, v in vals.items()}
    drift = max(rel_change(excess["base"], excess[k]) for k in ("shallow", "fine"))
    ok = all(np.isfinite(e) and e >= delta for e in excess.values()) and drift < STABILITY_TOL
    return vals, drift, ok


def _ladder_search(name, per_K_logs, delta):
    per_K = {}
    best = None
    fallback = None
    for K, logs in per_K_logs.items():
        vals, drift, ok = _lower_doubling(name, logs, delta)
        per_K[K] = {"inf": vals["base"], "variants": vals, "excess_drift": drift, "ok": ok}
        if ok and best is None:
            best = (K, vals, drift, logs["base"])
        if fallback is None or vals["base"] > fallback[1]["base"]:
            fallback = (K, vals, drift, logs["base"])
    pick = best or fallback
    K, vals, drift, lv = pick
    return ClassProfile(name, vals["base"], best is not None, variants=vals, drift=drift,
                        K=K, log_value=lv, per_K=per_K)


def dcheck_profile(w, K, depth=DEFAULT_DEPTH, per_octave=PER_OCTAVE, delta=DELTA):
    """Lower-doubling test for one K."""
    if not K > 1:
        raise DomainError("K must exceed 1")
    return is_dcheck(w, depth, per_octave, ladder=(K,), delta=delta)


def is_dcheck(w, depth=DEFAULT_DEPTH, per_octave=PER_OCTAVE, ladder=K_LADDER, delta=DELTA):
    """Search the K ladder for tail(r) >= (1 + delta) tail(1 - (1 - r)/K) stably."""
    grids = _grid_variants(depth, per_octave)
    per_K_logs = {}
    for K in ladder:
        logs = {}
        for name, q in grids.items():
            lr = dcheck_log_ratios(w, K, q)
            lr = lr[np.isfinite(lr)]
            logs[name] = float(np.min(lr)) if lr.size else float("nan")
        per_K_logs[K] = logs
    return _ladder_search("dcheck", per_K_logs, delta)


# ---------------------------------------------------------------------------
# M: mu_x >= C mu_{Kx}
# ---------------------------------------------------------------------------

def m_ratio(w, K, xs, method="auto"):
    """inf over xs of mu_x / mu_{Kx}."""
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < 1):
        raise DomainError("moment-doubling exponents must be >= 1")
    lm = log_moments(w, np.concatenate([xs, K * xs]), method)
    return _safe_exp(np.min(lm[: xs.size] - lm[xs.size:]))


def m_profile(w, K, per_octave=PER_OCTAVE, delta=DELTA, method="auto"):
    """Moment-doubling test for one K."""
    return is_M(w, per_octave, ladder=(K,), delta=delta, method=method)


def is_M(w, per_octave=PER_OCTAVE, ladder=K_LADDER, delta=DELTA, method="auto"):
    """Search the K ladder for mu_x >= (1 + delta) mu_{Kx} stably over x in [1, 1e4]."""
    grids = _x_variants(per_octave)
    all_x = np.unique(np.concatenate(
        [g * K for g in grids.values() for K in (1,) + tuple(ladder)]))
    lm_all = log_moments(w, all_x, method)
    if np.any(~np.isfinite(lm_all)):
        raise NumericError(f"moments of {w.name!r} over- or underflow on the M grid")
    lookup = dict(zip(all_x.tolist(), lm_all.tolist()))

    def lm(x):
        return np.array([lookup[float(v)] for v in x])

    per_K_logs = {}
    for K in ladder:
        per_K_logs[K] = {name: float(np.min(lm(x) - lm(K * x))) for name, x in grids.items()}
    return _ladder_search("M", per_K_logs, delta)


# ---------------------------------------------------------------------------
# Lemma A and Lemma 2.2 cross-checks
# ---------------------------------------------------------------------------

def lemmaA_moment_tail(w, xs=None, per_octave=PER_OCTAVE, method="auto"):
    """Band of mu_x / tail(1 - 1/x); bounded for upper-doubling weights."""

    def vals(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(log_moments(w, x, method) - _log_tail_on(w, 1.0 / x))

    if xs is not None:
        xs = np.asarray(xs, dtype=float)
        return make_band("moment/tail(1-1/x)", xs, vals(xs))
    g = _x_variants(per_octave)
    return make_band("moment/tail(1-1/x)", g["base"], vals(g["base"]),
                     {k: vals(g[k]) for k in ("shallow", "fine")})


def lemmaA_moment_doubling(w, ns=None, per_octave=PER_OCTAVE, method="auto"):
    """Band of mu_n / mu_{2n}; its sup is finite for upper-doubling weights."""

    def vals(x):
        x = np.asarray(x, dtype=float)
        lm = log_moments(w, np.concatenate([x, 2 * x]), method)
        with np.errstate(over="ignore"):
            return np.exp(lm[: x.size] - lm[x.size:])

    if ns is not None:
        ns = np.asarray(ns, dtype=float)
        return make_band("moment doubling", ns, vals(ns), ends="hi")
    g = _x_variants(per_octave)
    return make_band("moment doubling", g["base"], vals(g["base"]),
                     {k: vals(g[k]) for k in ("shallow", "fine")}, ends="hi")


def lemma22_values(w, gamma, q):
    """(int_0^r ds / (tail(s)^gamma (1 - s))) * tail(r)^gamma at complements q.

    With u = -log(1 - s) the integral is int_0^{u_r} (tail(r)/tail(s))^gamma du;
    the integrand is at most 1 and concentrates at u = u_r for fast tails, so
    the quadrature runs in v = u_r - u through the boundary map.
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    q = np.asarray(q, dtype=float)
    out = np.zeros(q.shape)
    live = q < 1.0
    if not np.any(live):
        return out
    ql = q[live]
    u_r = -np.log(ql)
    lt_r = _log_tail_on(w, ql)

    def log_g(frac, _q0, idx):
        # frac = v / u_r in (0, 1] with v = u_r - u, i.e. 1 - s = q_r e^v
        k = idx[:, 0].astype(int)
        ur = u_r[k][:, None]
        lt_s = _log_tail_on(w, ql[k][:, None] * np.exp(ur * frac))
        return gamma * (lt_r[k][:, None] - lt_s) + np.log(ur)

    out[live] = np.exp(log_integrals_from_each(log_g, np.ones(ql.size), rtol=LEMMA22_RTOL,
                                               extra=np.arange(ql.size)))
    return out


def lemma22_integral(w, gamma, grid=None, depth=DEFAULT_DEPTH, per_octave=PER_OCTAVE):
    """Band of the Lemma 2.2(iii) quantity; its sup is finite for lower-doubling weights."""
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        return make_band(f"lemma22 gamma={gamma:g}", grid, lemma22_values(w, gamma, 1.0 - grid),
                         ends="hi")
    g = _grid_variants(depth, per_octave)
    # the base and shallow grids are subsets of the fine one: evaluate each point once
    allq = np.unique(np.concatenate(list(g.values())))
    vals = lemma22_values(w, gamma, allq)

    def on(q):
        return vals[np.searchsorted(allq, q)]

    return make_band(f"lemma22 gamma={gamma:g}", 1.0 - g["base"], on(g["base"]),
                     {k: on(g[k]) for k in ("shallow", "fine")}, ends="hi")


@dataclass
class PowerFit:
    """tail(s) <= C ((1 - s)/(1 - t))^exponent tail(t) over grid pairs."""

    exponent: float
    C: float
    pairs: int
    violations: int
    order: str

    @property
    def violation_rate(self):
        return self.violations / self.pairs if self.pairs else 0.0

    def to_dict(self):
        return jsonable({"exponent": self.exponent, "C": self.C, "pairs": self.pairs,
                         "violation_rate": self.violation_rate, "order": self.order})


def _count_violations(log_tail, log_q, exponent, log_C, s_first):
    d = (log_tail[:, None] - log_tail[None, :]) + exponent * (log_q[None, :] - log_q[:, None])
    g = log_tail.size
    mask = np.triu(np.ones((g, g), bool)) if s_first else np.tril(np.ones((g, g), bool))
    slack = 1e-12 * max(1.0, abs(log_C))
    return int(mask.sum()), int(np.sum((d > log_C + slack) & mask))


def power_fit(w, exponent, s_first, depth=DEFAULT_DEPTH, per_octave=PER_OCTAVE):
    """Fit C for a fixed exponent on all grid pairs (s <= t if ``s_first`` else t <= s)."""
    q = _q_grid(depth, per_octave)
    lt = _log_tail_on(w, q)
    ok = np.isfinite(lt)
    lt, lq = lt[ok], np.log(q[ok])
    log_C = _accel.pair_envelope(lt, lq, exponent, s_first)
    pairs, bad = _count_violations(lt, lq, exponent, log_C, s_first)
    return PowerFit(exponent=float(exponent), C=_safe_exp(log_C), pairs=pairs, violations=bad,
                    order="s<=t" if s_first else "t<=s")


def lemmaA_power_fit(w, dhat=None, **grid):
    """Lemma A(ii) witness: exponent log2 of the D-hat constant, C from the grid pairs."""
    dhat = dhat or dhat_profile(w, **grid)
    return power_fit(w, np.log2(max(dhat.value, 1.0)), True, **grid)


def lemma22_power_fit(w, dcheck=None, **grid):
    """Lemma 2.2(ii) witness: exponent log_K of the D-check constant."""
    dcheck = dcheck or is_dcheck(w, **grid)
    beta = np.log(dcheck.value) / np.log(dcheck.K)
    return power_fit(w, beta, False, **grid)


# ---------------------------------------------------------------------------
# the aggregate report
# ---------------------------------------------------------------------------

@dataclass
class ClassReport:
    weight: str
    dhat: ClassProfile
    dcheck: ClassProfile
    M: ClassProfile
    depth: int
    per_octave: int
    lemmaA_fit: PowerFit = None
    lemma22_fit: PowerFit = None
    refinement_stable: bool = True
    resolution_failure: bool = False
    notes: list = field(default_factory=list)

    @property
    def verdicts(self):
        return {
            "Dhat": self.dhat.verdict,
            "Dcheck": self.dcheck.verdict,
            "M": self.M.verdict,
            "D": _verdict(self.dhat.evidence and self.dcheck.evidence),
        }

    def in_class(self, cls):
        return self.verdicts[cls] == YES

    def to_dict(self):
        return jsonable({
            "weight": self.weight,
            "verdicts": self.verdicts,
            "witnesses": {
                "Dhat": self.dhat.to_dict(),
                "Dcheck": self.dcheck.to_dict(),
                "M": self.M.to_dict(),
                "lemmaA_ii": None if self.lemmaA_fit is None else self.lemmaA_fit.to_dict(),
                "lemma22_ii": None if self.lemma22_fit is None else self.lemma22_fit.to_dict(),
            },
            "grid": {"depth": self.depth, "per_octave": self.per_octave,
                     "min_complement": 2.0 ** (-self.depth / self.per_octave)},
            "refinement_stable": self.refinement_stable,
            "resolution_failure": self.resolution_failure,
            "notes": list(self.notes),
        })


def _profiles(w, depth, per_octave, ladder, delta, method):
    return (dhat_profile(w, depth, per_octave),
            is_dcheck(w, depth, per_octave, ladder, delta),
            is_M(w, per_octave, ladder, delta, method))


def classify(w, depth=DEFAULT_DEPTH, per_octave=PER_OCTAVE, ladder=K_LADDER, delta=DELTA,
             check_refinement=True, method="auto"):
    """Run every class test on the default grids and assemble a ClassReport.

    With ``check_refinement`` the whole procedure is repeated at doubled grid
    density and ``refinement_stable`` records whether all verdicts agree.
    """
    dh, dc, m = _profiles(w, depth, per_octave, ladder, delta, method)
    rep = ClassReport(weight=w.name, dhat=dh, dcheck=dc, M=m, depth=depth, per_octave=per_octave)
    if dh.truncated:
        rep.notes.append("tail underflows at the deepest grid point; ratios taken in log space")
    for note in getattr(w, "notes", ()):
        rep.notes.append(note)
    if dh.evidence:
        rep.lemmaA_fit = lemmaA_power_fit(w, dh, depth=depth, per_octave=per_octave)
    if dc.evidence:
        rep.lemma22_fit = lemma22_power_fit(w, dc, depth=depth, per_octave=per_octave)
    if dc.evidence and not m.evidence:
        rep.resolution_failure = True
        rep.notes.append("D-check evidence without M evidence: grid resolution too coarse")
    if check_refinement:
        dh2, dc2, m2 = _profiles(w, 2 * depth, 2 * per_octave, ladder, delta, method)
        rep.refinement_stable = (dh2.evidence, dc2.evidence, m2.evidence) == (
            dh.evidence, dc.evidence, m.evidence)
        if not rep.refinement_stable:
            rep.notes.append("verdicts change at doubled grid density")
    return rep
