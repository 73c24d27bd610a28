"""Dyadic radii of a tail, lacunary sums and the B^mu-not-H^inf counterexample."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import _accel
from .bands import jsonable, make_band
from .errors import DomainError, TruncationError
from .grids import DEFAULT_DEPTH, PER_OCTAVE, shallow_depth
from .series import TaylorPoly
from .weights import log_moments

NMAX_LIMIT = 40
REACH_Q = 1e-14
DEPTH_RTOL = 0.01
# 1/(1 - r_n) this close to an integer is taken to be that integer: the root
# itself is only known to about this relative accuracy
SNAP_RTOL = 1e-12


class UnreachableDepthError(TruncationError):
    """The tail does not fall to 2^-nmax before 1 - r reaches 1e-14."""

    def __init__(self, message, achievable):
        super().__init__(message, suggested=achievable)
        self.achievable = achievable


def normalized(w):
    """(weight with tail(0) = 1, scale factor applied)."""
    t0 = w.tail0
    if abs(t0 - 1.0) <= 1e-15:
        return w, 1.0
    return w.normalized(), 1.0 / t0


def achievable_depth(w):
    """Largest n with tail(1 - 1e-14) <= 2^-n for the normalised weight."""
    wn, _ = normalized(w)
    lt = float(wn.log_tail_q(np.array([REACH_Q]))[0])
    return int(np.floor(-lt / np.log(2.0) + 1e-12))


@dataclass
class LacunaryData:
    weight: str
    scale: float
    complements: np.ndarray
    exponents: np.ndarray
    nmax: int
    log_weight: object = field(default=None, repr=False)

    @property
    def radii(self):
        return 1.0 - self.complements

    @property
    def duplicates(self):
        return int(np.sum(np.diff(self.exponents) == 0))

    def to_dict(self):
        return jsonable({
            "weight": self.weight, "scale": self.scale, "nmax": self.nmax,
            "radii": [float(r) for r in self.radii],
            "complements": [float(q) for q in self.complements],
            "exponents": [int(m) for m in self.exponents],
            "duplicate_exponents": self.duplicates,
        })


def _bisect_complements(log_tail_q, thresholds, q_floor=1e-300):
    """Largest q with log_tail_q(q) <= threshold, for each threshold.

    Bisection on the predicate runs until the bracket is two adjacent floats,
    so on a flat stretch of the tail the returned point is its outer end,
    i.e. the smallest radius.
    """
    thr = np.asarray(thresholds, dtype=float)
    lo = np.full(thr.shape, q_floor)  # predicate true
    hi = np.ones(thr.shape)           # predicate false unless tail(0) <= thr
    at_one = log_tail_q(hi) <= thr
    for _ in range(4000):
        active = (np.nextafter(lo, np.inf) < hi) & ~at_one
        if not np.any(active):
            break
        far = hi > 2.0 * lo
        mid = np.where(far, np.sqrt(lo * hi), 0.5 * (lo + hi))
        mid = np.clip(mid, np.nextafter(lo, np.inf), np.nextafter(hi, 0.0))
        ok = log_tail_q(mid) <= thr
        lo = np.where(active & ok, mid, lo)
        hi = np.where(active & ~ok, mid, hi)
    return np.where(at_one, 1.0, lo)


def _floor_snapped(x):
    x = np.asarray(x, dtype=float)
    near = np.round(x)
    snap = np.abs(x - near) <= SNAP_RTOL * np.maximum(near, 1.0)
    return np.where(snap, near, np.floor(x)).astype(np.int64)


def dyadic_radii(w, nmax):
    """r_n: the smallest r with tail(r) = 2^-n (tail normalised to 1 at 0), and M_n = E(1/(1 - r_n))."""
    if not 0 <= nmax <= NMAX_LIMIT:
        raise DomainError(f"nmax must lie in 0..{NMAX_LIMIT}")
    wn, scale = normalized(w)
    reach = achievable_depth(wn)
    if reach < nmax:
        raise UnreachableDepthError(
            f"tail of {w.name!r} at 1 - r = 1e-14 is still above 2^-{nmax}; "
            f"nmax <= {reach} is reachable", achievable=reach)
    n = np.arange(nmax + 1)
    thr = np.log(2.0 ** -n)
    q = _bisect_complements(wn.log_tail_q, thr)
    return LacunaryData(weight=w.name, scale=scale, complements=q,
                        exponents=_floor_snapped(1.0 / q), nmax=nmax, log_weight=wn)


def _terms_log(d):
    n = np.arange(d.nmax + 1, dtype=float)
    return n * np.log(2.0)


def lacunary_sums(d, radii, check=True):
    """1 + sum_{n <= nmax} 2^n r^{M_n} for each radius."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(radii < 0) or np.any(radii >= 1):
        raise DomainError("radii must lie in [0, 1)")
    with np.errstate(divide="ignore"):
        log_r = np.log(radii)
    exps = d.exponents.astype(float)
    out = _accel.lacunary_sums(log_r, exps, _terms_log(d))
    if check:
        est = _tail_estimate(d, log_r)
        bad = est > DEPTH_RTOL * out
        if np.any(bad):
            r_bad = float(radii[bad][0])
            raise TruncationError(
                f"lacunary sum at r={r_bad:.17g} needs more than nmax={d.nmax} terms",
                suggested=min(NMAX_LIMIT, d.nmax + 5))
    return out


def _tail_estimate(d, log_r):
    """Geometric extrapolation of the dropped terms from the last two."""
    if d.nmax < 1:
        return np.zeros(log_r.shape)
    m1, m0 = float(d.exponents[-1]), float(d.exponents[-2])
    with np.errstate(invalid="ignore", under="ignore", over="ignore"):
        last = np.exp(d.nmax * np.log(2.0) + m1 * log_r)
        ratio = 2.0 * np.exp((m1 - m0) * log_r)
        est = np.where(ratio < 1.0, last * ratio / (1.0 - ratio), np.inf)
    return np.where(log_r == -np.inf, 0.0, est)


def lacunary_sum(d, r):
    """1 + sum_{n <= nmax} 2^n r^{M_n}, comparable to 1/tail(r)."""
    return float(lacunary_sums(d, [r])[0])


def _q_grid(depth, per_octave):
    return 2.0 ** (-np.arange(depth + 1) / per_octave)


def lacunary_band(w, nmax=None, depth=DEFAULT_DEPTH, per_octave=PER_OCTAVE):
    """Band of lacunary_sum(r) * tail(r) over geometric grids, with truncation-limited depth."""
    wn, _ = normalized(w)
    nmax = min(NMAX_LIMIT, achievable_depth(wn)) if nmax is None else nmax
    d = dyadic_radii(wn, nmax)

    def values(q):
        r = 1.0 - q
        s = lacunary_sums(d, r, check=False)
        est = _tail_estimate(d, np.log1p(-q))
        ok = ~(est > DEPTH_RTOL * s)
        # keep the grid up to the first radius the truncation cannot cover
        stop = int(np.argmin(ok)) if not np.all(ok) else q.size
        return q[:stop], s[:stop] * np.exp(wn.log_tail_q(q[:stop]))

    qb, vb = values(_q_grid(depth, per_octave))
    _, vs = values(_q_grid(shallow_depth(depth, per_octave), per_octave))
    _, vf = values(_q_grid(2 * depth, 2 * per_octave))
    band = make_band(f"lacunary {w.name}", 1.0 - qb, vb, {"shallow": vs, "fine": vf})
    band.variants["min_complement"] = (float(qb[-1]), float(qb[-1]))
    return band


# ---------------------------------------------------------------------------
# the counterexample f = mu_1 + sum mu_{2 M_n + 1} 2^n z^{M_n}
# ---------------------------------------------------------------------------

@dataclass
class LacunaryPoly:
    """Sparse polynomial with nonnegative real coefficients at increasing exponents."""

    exponents: np.ndarray
    coeffs: np.ndarray
    merged: int = 0

    @property
    def degree(self):
        return int(self.exponents[-1]) if self.exponents.size else 0

    def __call__(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        with np.errstate(divide="ignore"):
            log_r = np.log(r)
        pos = self.coeffs > 0
        lc = np.log(self.coeffs[pos])
        ex = self.exponents[pos].astype(float)
        # lacunary_sums adds 1; the constant term is carried separately
        zero = ex == 0
        const = float(np.exp(lc[zero]).sum()) if np.any(zero) else 0.0
        vals = _accel.lacunary_sums(log_r, ex[~zero], lc[~zero]) - 1.0
        return vals + const

    def to_taylor(self, max_degree=1 << 22):
        if self.degree > max_degree:
            raise DomainError(f"degree {self.degree} is too large for a dense polynomial")
        c = np.zeros(self.degree + 1)
        np.add.at(c, self.exponents.astype(np.int64), self.coeffs)
        return TaylorPoly(c)


def counterexample_function(w, nmax):
    """Coefficients of f for the normalised weight, as a sparse polynomial."""
    d = dyadic_radii(w, nmax)
    wn = d.log_weight
    M = d.exponents
    log_mu = log_moments(wn, np.concatenate(([1.0], 2.0 * M + 1.0)))
    coef = np.concatenate(([np.exp(log_mu[0])],
                           np.exp(log_mu[1:] + np.arange(nmax + 1) * np.log(2.0))))
    ex = np.concatenate(([0], M))
    uniq, inv = np.unique(ex, return_inverse=True)
    summed = np.zeros(uniq.size)
    np.add.at(summed, inv, coef)
    return LacunaryPoly(exponents=uniq, coeffs=summed, merged=int(ex.size - uniq.size)), d


def _bmu_sup_lacunary(d, q_min, per_octave=PER_OCTAVE):
    """sup_r tail(r) (1 + sum 2^n r^{M_n}): the B^mu norm of the counterexample.

    D^mu turns the coefficient mu_{2M+1} 2^n into 2^n (and mu_1 into 1), and
    with positive coefficients the circle maximum sits at z = r.
    """
    wn = d.log_weight
    depth = int(np.ceil(per_octave * -np.log2(q_min)))
    q = _q_grid(depth, per_octave)

    def prof(qq):
        qq = np.atleast_1d(qq)
        s = lacunary_sums(d, 1.0 - qq, check=False)
        return np.exp(wn.log_tail_q(qq) + np.log(s))

    vals = prof(q)
    k = int(np.argmax(vals))
    lo = np.log(q[min(k + 1, q.size - 1)])
    hi = np.log(q[max(k - 1, 0)])
    best, arg = float(vals[k]), float(q[k])
    if hi > lo:
        res = minimize_scalar(lambda y: -prof(np.exp(y))[0], bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun > best:
            best, arg = float(-res.fun), float(np.exp(res.x))
    return best, 1.0 - arg, q, vals


@dataclass
class CounterexampleReport:
    weight: str
    scale: float
    nmax: int
    nmax_ref: int
    norm: float
    norm_ref: float
    partial_sums: list
    exponents: list
    profile_radii: list
    profile_values: list
    merged: int
    notes: list = field(default_factory=list)

    @property
    def norm_drift(self):
        return abs(self.norm_ref - self.norm) / max(self.norm, self.norm_ref)

    @property
    def sums_increasing(self):
        return bool(np.all(np.diff(self.partial_sums) > 0))

    @property
    def growth(self):
        return self.partial_sums[self.nmax] / self.partial_sums[0]

    def to_dict(self):
        return jsonable({
            "weight": self.weight, "scale": self.scale, "nmax": self.nmax,
            "nmax_ref": self.nmax_ref, "bmu_norm": self.norm, "bmu_norm_ref": self.norm_ref,
            "norm_drift": self.norm_drift, "partial_sums": self.partial_sums,
            "partial_sums_increasing": self.sums_increasing, "growth_S_nmax_over_S_0": self.growth,
            "exponents": self.exponents, "merged_duplicate_exponents": self.merged,
            "f_on_radius": {"r": self.profile_radii, "f(r)": self.profile_values},
            "notes": self.notes,
        })


def counterexample_report(w, nmax=20, extra=5, per_octave=PER_OCTAVE):
    """Norm stability and coefficient growth of the counterexample truncations.

    The B^mu norm is computed at depths nmax and nmax + extra; the partial
    coefficient sums S_k and the profile f(r) = M_inf(r, f) use the deeper one.
    """
    deep = nmax + extra
    f_deep, d_deep = counterexample_function(w, deep)
    d = dyadic_radii(w, nmax)
    q_min = min(1e-8, float(d_deep.complements[-1]) / 16.0)
    norm, _, _, _ = _bmu_sup_lacunary(d, q_min, per_octave)
    norm_ref, _, _, _ = _bmu_sup_lacunary(d_deep, q_min, per_octave)

    M = d_deep.exponents
    wn = d_deep.log_weight
    log_mu = log_moments(wn, np.concatenate(([1.0], 2.0 * M + 1.0)))
    terms = np.exp(log_mu[1:] + np.arange(deep + 1) * np.log(2.0))
    S = (np.exp(log_mu[0]) + np.cumsum(terms)).tolist()

    depth = int(np.ceil(per_octave * -np.log2(q_min)))
    q = _q_grid(depth, per_octave)
    fr = f_deep(1.0 - q)
    rep = CounterexampleReport(
        weight=w.name, scale=d_deep.scale, nmax=nmax, nmax_ref=deep, norm=norm,
        norm_ref=norm_ref, partial_sums=S, exponents=[int(m) for m in M],
        profile_radii=(1.0 - q).tolist(), profile_values=fr.tolist(), merged=f_deep.merged)
    if f_deep.merged:
        rep.notes.append(f"{f_deep.merged} repeated exponents M_n; their coefficients were summed")
    if d_deep.scale != 1.0:
        rep.notes.append(f"tail rescaled by {d_deep.scale:.17g} so that tail(0) = 1")
    return rep
