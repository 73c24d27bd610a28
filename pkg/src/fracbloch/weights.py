"""Radial weights on the unit disc, their tails and their moments.

A weight is stored through its tail ``tail(r) = int_r^1 density(s) ds``;
the density and a closed-form moment rule are optional extras.  All
evaluators take the complement ``q = 1 - r`` so that quantities near the
boundary keep full relative precision.
"""

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from .errors import ConfigurationError, DomainError, InvalidWeightError, NumericError
from .quadrature import (
    DEFAULT_RTOL,
    composite_nodes,
    gauss_legendre,
    log_moment_integrals,
)

FAMILIES = ("constant", "standard", "exponential", "log_rapid", "tabulated")


class MomentTable:
    """Insert-once memo of moments and mixed moments of one weight.

    Values are keyed by the exact exponent (float bits) and by the route used
    to compute them, so a cached closed-form value never masks a quadrature
    check.  Concurrent callers may race to compute a value; the first insert
    wins and every caller sees that value.
    """

    def __init__(self, weight_id, rtol=DEFAULT_RTOL):
        self.weight_id = weight_id
        self.rtol = rtol
        self._lock = threading.Lock()
        self._maps = {}

    def _map(self, kind):
        with self._lock:
            return self._maps.setdefault(kind, {})

    def lookup(self, kind, xs, compute):
        """Return cached values for ``xs``, computing the missing ones in one batch."""
        xs = np.asarray(xs, dtype=float)
        flat = xs.ravel()
        table = self._map(kind)
        with self._lock:
            missing = sorted({float(x) for x in flat if float(x) not in table})
        if missing:
            vals = np.asarray(compute(np.array(missing)), dtype=float)
            with self._lock:
                for x, v in zip(missing, vals):
                    table.setdefault(x, float(v))
        with self._lock:
            out = np.array([table[float(x)] for x in flat])
        return out.reshape(xs.shape)

    def moments(self, kind="log_moment"):
        with self._lock:
            return dict(self._maps.get(kind, {}))

    def __len__(self):
        with self._lock:
            return sum(len(m) for m in self._maps.values())


@dataclass(frozen=True, eq=False)
class RadialWeight:
    name: str
    log_tail_q: Callable
    log_density_q: Optional[Callable] = None
    moment_rule: Optional[Callable] = None
    params: dict = field(default_factory=dict)
    mixed_rule: Optional[Callable] = None
    density_log_moment: Optional[Callable] = None
    scale: float = 1.0
    notes: tuple = ()
    table: MomentTable = field(default=None, repr=False)

    def __post_init__(self):
        if self.table is None:
            object.__setattr__(self, "table", MomentTable(self.name))

    @property
    def has_density(self):
        return self.log_density_q is not None

    def log_tail(self, r):
        r = np.asarray(r, dtype=float)
        return np.asarray(self.log_tail_q(1.0 - r), dtype=float)

    def tail(self, r):
        return np.exp(self.log_tail(r))

    def density(self, r):
        if self.log_density_q is None:
            raise InvalidWeightError(f"weight {self.name!r} has no density")
        r = np.asarray(r, dtype=float)
        return np.exp(self.log_density_q(1.0 - r))

    @property
    def tail0(self):
        return float(np.exp(self.log_tail_q(np.array([1.0]))[0]))

    def rescaled(self, c, name=None):
        """Same weight multiplied by the constant ``c > 0``."""
        if not c > 0:
            raise ConfigurationError("rescaling factor must be positive")
        lc = float(np.log(c))
        lt, ld = self.log_tail_q, self.log_density_q
        mr, xr, dm = self.moment_rule, self.mixed_rule, self.density_log_moment
        return RadialWeight(
            name=name or self.name,
            log_tail_q=lambda q: lt(q) + lc,
            log_density_q=None if ld is None else (lambda q: ld(q) + lc),
            moment_rule=None if mr is None else (lambda x: c * mr(x)),
            params=dict(self.params),
            mixed_rule=None if xr is None else (lambda x: c * c * xr(x)),
            density_log_moment=None if dm is None else (lambda x: dm(x) + lc),
            scale=self.scale * c,
            notes=self.notes,
        )

    def normalized(self):
        """Rescale so that tail(0) = 1."""
        return self.rescaled(1.0 / self.tail0, name=self.name)


# ---------------------------------------------------------------------------
# public evaluation API
# ---------------------------------------------------------------------------

def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r < 0) or np.any(r >= 1):
        raise DomainError("radius must satisfy 0 <= r < 1")
    return r


def tail(w, r):
    """Tail ``int_r^1 density`` at radius (or radii) r."""
    r = _check_radius(r)
    val = w.tail(r)
    if np.any(~(val > 0)):
        raise InvalidWeightError(f"tail of {w.name!r} is not positive at some radius "
                                 "(underflow or invalid weight)")
    return float(val) if val.ndim == 0 else val


def log_tail(w, r):
    r = _check_radius(r)
    val = w.log_tail(r)
    return float(val) if val.ndim == 0 else val


def _log_moments_tail(w, xs):
    """log of x * int_0^1 s^(x-1) tail(s) ds (integration by parts)."""
    xs = np.asarray(xs, dtype=float)
    out = np.empty(xs.shape)
    zero = xs == 0
    if np.any(zero):
        out[zero] = w.log_tail_q(np.array([1.0]))[0]
    pos = ~zero
    if np.any(pos):
        out[pos] = np.log(xs[pos]) + log_moment_integrals(w.log_tail_q, xs[pos] - 1.0)
    return out


def _log_moments_density(w, xs):
    if w.density_log_moment is not None:
        return np.asarray(w.density_log_moment(np.asarray(xs, dtype=float)), dtype=float)
    if w.log_density_q is None:
        raise InvalidWeightError(f"weight {w.name!r} has no density")
    return log_moment_integrals(w.log_density_q, xs)


def log_moments(w, xs, method="auto"):
    """Vectorised log-moments ``log mu_x``; cached per route."""
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < 0) or np.any(~np.isfinite(xs)):
        raise DomainError("moment exponents must be finite and >= 0")
    if method == "auto":
        method = "closed" if w.moment_rule is not None else "tail"
    if method == "closed":
        if w.moment_rule is None:
            raise ConfigurationError(f"weight {w.name!r} has no closed-form moments")
        return w.table.lookup("closed", xs, lambda x: np.log(w.moment_rule(x)))
    if method == "tail":
        return w.table.lookup("tail", xs, lambda x: _log_moments_tail(w, x))
    if method == "density":
        return w.table.lookup("density", xs, lambda x: _log_moments_density(w, x))
    raise ConfigurationError(f"unknown moment method {method!r}")


def moments(w, xs, method="auto"):
    with np.errstate(under="ignore"):
        return np.exp(log_moments(w, xs, method))


def moment(w, x, method="auto"):
    """The moment ``mu_x = int_0^1 s^x density(s) ds`` of a weight."""
    val = float(moments(w, [x], method)[0])
    if not np.isfinite(val):
        raise NumericError(f"moment of {w.name!r} at x={x} is not finite")
    return val


def _log_mixed_tail(w, xs):
    def log_t2(q):
        return 2.0 * w.log_tail_q(q)

    xs = np.asarray(xs, dtype=float)
    return np.log(0.5 * xs) + log_moment_integrals(log_t2, xs - 1.0)


def _log_mixed_density(w, xs):
    if w.log_density_q is None:
        raise InvalidWeightError(f"weight {w.name!r} has no density")

    def lg(q):
        return w.log_density_q(q) + w.log_tail_q(q)

    return log_moment_integrals(lg, xs)


def log_mixed_moments(w, xs, method="auto"):
    xs = np.asarray(xs, dtype=float)
    if np.any(xs <= 0):
        raise DomainError("mixed-moment exponents must be > 0")
    if method == "auto":
        method = "closed" if w.mixed_rule is not None else "tail"
    if method == "closed":
        if w.mixed_rule is None:
            raise ConfigurationError(f"weight {w.name!r} has no closed-form mixed moments")
        return w.table.lookup("mixed_closed", xs, lambda x: np.log(w.mixed_rule(x)))
    if method == "tail":
        return w.table.lookup("mixed_tail", xs, lambda x: _log_mixed_tail(w, x))
    if method == "density":
        return w.table.lookup("mixed_density", xs, lambda x: _log_mixed_density(w, x))
    raise ConfigurationError(f"unknown moment method {method!r}")


def mixed_moments(w, xs, method="auto"):
    with np.errstate(under="ignore"):
        return np.exp(log_mixed_moments(w, xs, method))


def mixed_moment(w, x, method="auto"):
    """``int_0^1 s^x density(s) tail(s) ds``, via ``(x/2) int s^(x-1) tail^2``."""
    val = float(mixed_moments(w, [x], method)[0])
    if not np.isfinite(val):
        raise NumericError(f"mixed moment of {w.name!r} at x={x} is not finite")
    return val


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------

def _one_minus_r2(q):
    return q * (2.0 - q)


def constant_weight():
    def log_tail_q(q):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(q, dtype=float))

    return RadialWeight(
        name="constant",
        log_tail_q=log_tail_q,
        log_density_q=lambda q: np.zeros(np.shape(q)),
        moment_rule=lambda x: 1.0 / (np.asarray(x, dtype=float) + 1.0),
        mixed_rule=lambda x: 1.0 / ((np.asarray(x, dtype=float) + 1.0) * (np.asarray(x, dtype=float) + 2.0)),
        params={},
    )


def _log_betainc_small(a, u):
    # log I_u(a, 1/2) for tiny u: u^a / (a B(a, 1/2)) * (1 + a u / (2 (a + 1)))
    return a * np.log(u) - np.log(a) - special.betaln(a, 0.5) + np.log1p(a * u / (2 * (a + 1)))


def standard_weight(beta):
    """Density beta (1 - r^2)^(beta - 1); the weight behind the classical D^beta."""
    if not (np.isfinite(beta) and beta > 0):
        raise ConfigurationError("standard weight needs beta > 0")
    beta = float(beta)
    log_pref = np.log(beta / 2.0) + special.betaln(beta, 0.5)

    def log_tail_q(q):
        u = _one_minus_r2(np.asarray(q, dtype=float))
        with np.errstate(divide="ignore", under="ignore"):
            direct = np.log(special.betainc(beta, 0.5, u))
        small = u < 1e-10
        if np.any(small):
            with np.errstate(divide="ignore"):
                direct = np.where(small, _log_betainc_small(beta, np.where(small, u, 0.5)), direct)
        return log_pref + direct

    def log_density_q(q):
        u = _one_minus_r2(np.asarray(q, dtype=float))
        with np.errstate(divide="ignore"):
            return np.log(beta) + (beta - 1.0) * np.log(u)

    def rule(x):
        x = np.asarray(x, dtype=float)
        return np.exp(np.log(beta / 2.0) + special.betaln((x + 1.0) / 2.0, beta))

    return RadialWeight(
        name=f"standard:beta={beta:g}",
        log_tail_q=log_tail_q,
        log_density_q=log_density_q,
        moment_rule=rule,
        params={"beta": beta},
    )


_Y_LO, _Y_HI = np.log(1e-16), np.log(60.0)
_EXP_BLOCK = 4096


def exponential_weight(alpha=1.0, l=1.0, beta=1.0):
    """Density exp(-alpha / (1 - r^l)^beta)."""
    for nm, v in (("alpha", alpha), ("l", l), ("beta", beta)):
        if not (np.isfinite(v) and v > 0):
            raise ConfigurationError(f"exponential weight needs {nm} > 0")
    alpha, l, beta = float(alpha), float(l), float(beta)

    def v_of_q(q):
        # 1 - s^l computed without cancellation
        with np.errstate(divide="ignore"):
            return -np.expm1(l * np.log1p(-np.asarray(q, dtype=float)))

    def log_density_q(q):
        v = v_of_q(q)
        with np.errstate(divide="ignore"):
            return -alpha / v ** beta

    def _s_power(log_1mv):
        # log of (1 - v)^(1/l - 1), i.e. s^(1 - l); zero exponent when l = 1
        if l == 1.0:
            return np.zeros(np.shape(log_1mv))
        return (1.0 / l - 1.0) * log_1mv

    y, wy = composite_nodes(_Y_LO, _Y_HI, 20)
    t_nodes = np.exp(y)
    log_wt = np.log(wy) + y  # dt = e^y dy

    def log_tail_q(q):
        # tail(r) = density(r) * int_0^inf e^(-t) ds/dt dt with
        # t = alpha/(1 - s^l)^beta - alpha/(1 - r^l)^beta; the small-t piece
        # [0, 1e-16] is added in closed form from a local power law
        q = np.asarray(q, dtype=float)
        flat = q.ravel()
        if flat.size > _EXP_BLOCK:
            return np.concatenate([log_tail_q(flat[i:i + _EXP_BLOCK])
                                   for i in range(0, flat.size, _EXP_BLOCK)]).reshape(q.shape)
        out = np.full(flat.shape, -np.inf)
        live = flat > 0
        if np.any(live):
            ql = flat[live]
            v0 = v_of_q(ql)
            T = alpha / v0 ** beta
            tt = T[:, None] + t_nodes[None, :]
            # v = v0 (T / (T + t))^(1/beta) and 1 - v = s0^l + v0 (1 - e^-eps),
            # both free of cancellation when t << T or s0 -> 0
            eps = np.log1p(t_nodes[None, :] / T[:, None]) / beta
            v = v0[:, None] * np.exp(-eps)
            with np.errstate(divide="ignore"):
                s0l = np.exp(l * np.log1p(-ql))
            with np.errstate(divide="ignore"):
                log_1mv = np.log(s0l[:, None] - v0[:, None] * np.expm1(-eps))
            log_g = _s_power(log_1mv) + np.log(v) - np.log(beta * l * tt)
            e = log_g - t_nodes[None, :] + log_wt[None, :]
            # [0, 1e-16]: g ~ c t^p near t = 0 (p = 1/l - 1 at r = 0, else 0),
            # with p read off the two smallest nodes
            p = (log_g[:, 1] - log_g[:, 0]) / (y[1] - y[0])
            p = np.clip(np.where(np.isfinite(p), p, 0.0), -1.0 + 1e-6, None)
            g0 = log_g[:, 0] + p * (_Y_LO - y[0]) + _Y_LO - np.log1p(p)
            g0 = np.where(np.isfinite(g0), g0, -np.inf)
            e = np.concatenate([e, g0[:, None]], axis=1)
            mx = e.max(axis=1)
            with np.errstate(under="ignore"):
                out[live] = -T + mx + np.log(np.exp(e - mx[:, None]).sum(axis=1))
        return out.reshape(q.shape)

    return RadialWeight(
        name=f"exp:alpha={alpha:g},l={l:g},beta={beta:g}",
        log_tail_q=log_tail_q,
        log_density_q=log_density_q,
        params={"alpha": alpha, "l": l, "beta": beta},
    )


def log_rapid_weight(alpha=2.0):
    """Density 1 / ((1 - r^2) log(e / (1 - r^2))^alpha), alpha > 1."""
    if not (np.isfinite(alpha) and alpha > 1):
        raise ConfigurationError("log_rapid weight needs alpha > 1")
    alpha = float(alpha)

    def log_L(q):
        u = _one_minus_r2(q)
        with np.errstate(divide="ignore"):
            return np.log1p(-np.log(u))

    def log_density_q(q):
        q = np.asarray(q, dtype=float)
        with np.errstate(divide="ignore"):
            return -np.log(_one_minus_r2(q)) - alpha * log_L(q)

    def log_G(q):
        # primitive of -2 s density: G = L^(1 - alpha) / (alpha - 1)
        return (1.0 - alpha) * log_L(q) - np.log(alpha - 1.0)

    x_half, w_half = gauss_legendre(48)

    # with t = 1 - log(1 - s^2) the tail is (1/2) int_T^inf t^-alpha h(t) dt,
    # h = (1 - e^(1-t))^(-1/2); h = 1 integrates exactly and h - 1 decays like
    # e^-t, so tau = t - T gets fixed panels refined toward tau = 0
    edges = np.concatenate(([0.0], 2.0 ** np.arange(-6, 6), [48.0]))
    tau_parts = [composite_nodes(a, b, 1) for a, b in zip(edges[:-1], edges[1:])]
    tau = np.concatenate([p[0] for p in tau_parts])
    tau_w = np.concatenate([p[1] for p in tau_parts])

    def _log_tail_inner(q):
        # valid for q <= 1/2, where 1 - s^2 <= 3/4 keeps h smooth
        u = _one_minus_r2(q)
        T = 1.0 - np.log(u)
        lead = T ** (1.0 - alpha) / (alpha - 1.0)
        e = u[:, None] * np.exp(-tau)[None, :]
        root = np.sqrt(1.0 - e)
        hm1 = e / (root * (1.0 + root))
        corr = ((T[:, None] + tau[None, :]) ** (-alpha) * hm1 * tau_w[None, :]).sum(axis=1)
        return np.log(0.5 * (lead + corr))

    tail_half = float(_log_tail_inner(np.array([0.5]))[0])

    def log_tail_q(q):
        q = np.asarray(q, dtype=float)
        flat = q.ravel()
        out = np.empty(flat.shape)
        near = flat <= 0.5
        if np.any(near):
            zero = flat == 0
            sub = near & ~zero
            if np.any(sub):
                out[sub] = _log_tail_inner(flat[sub])
            out[zero] = -np.inf
        far = ~near
        if np.any(far):
            # tail(s) = tail(1/2) + int_s^{1/2} density
            s = 1.0 - flat[far]
            a = s[:, None]
            mid = 0.5 * (a + 0.5)
            half = 0.5 * (0.5 - a)
            t = mid + half * x_half[None, :]
            dens = np.exp(log_density_q(1.0 - t))
            integral = (half * (w_half[None, :] * dens)).sum(axis=1)
            out[far] = np.log(np.exp(tail_half) + integral)
        return out.reshape(q.shape)

    def density_log_moment(xs):
        # mu_x = ((x - 1)/2) int_0^1 s^(x-2) G(s) ds for x > 1, mu_1 = G(0)/2
        xs = np.asarray(xs, dtype=float)
        out = np.empty(xs.shape)
        one = xs == 1
        out[one] = -np.log(2.0 * (alpha - 1.0))
        big = xs > 1
        if np.any(big & (xs >= 2)):
            sel = xs >= 2
            out[sel] = np.log(0.5 * (xs[sel] - 1.0)) + log_moment_integrals(log_G, xs[sel] - 2.0)
        rest = ~(one | (xs >= 2))
        if np.any(rest):
            out[rest] = log_moment_integrals(log_density_q, xs[rest])
        return out

    return RadialWeight(
        name=f"lograpid:alpha={alpha:g}",
        log_tail_q=log_tail_q,
        log_density_q=log_density_q,
        density_log_moment=density_log_moment,
        params={"alpha": alpha},
    )


def tabulated_weight(r, tails, name="tabulated"):
    """Weight given by tail samples; monotone cubic in between, power-law decay past the end."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(tails, dtype=float)
    if r.ndim != 1 or r.shape != t.shape or r.size < 2:
        raise InvalidWeightError("tabulated weight needs at least two (r, tail) samples")
    if np.any(r < 0) or np.any(r >= 1):
        raise InvalidWeightError("tabulated radii must lie in [0, 1)")
    if np.any(np.diff(r) <= 0):
        raise InvalidWeightError("tabulated radii must be strictly increasing")
    if np.any(~(t > 0)):
        raise InvalidWeightError("tabulated tails must be positive")
    if np.any(np.diff(t) > 0):
        raise InvalidWeightError("tabulated tails must be nonincreasing")
    if not t[-2] > t[-1]:
        raise InvalidWeightError("last two tail samples must decrease so the tail can vanish at 1")
    interp = PchipInterpolator(r, t, extrapolate=False)
    q_last = 1.0 - r[-1]
    power = np.log(t[-2] / t[-1]) / np.log((1.0 - r[-2]) / q_last)
    log_t_last = np.log(t[-1])

    def log_tail_q(q):
        q = np.asarray(q, dtype=float)
        rr = 1.0 - q
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(
                q < q_last,
                log_t_last + power * (np.log(q) - np.log(q_last)),
                np.log(np.clip(interp(np.clip(rr, r[0], r[-1])), 1e-300, None)),
            )
        return out

    return RadialWeight(
        name=name,
        log_tail_q=log_tail_q,
        params={"r_last": float(r[-1]), "extrapolation_power": float(power)},
        notes=(f"power-law extrapolation with exponent {power:.6g} beyond r={r[-1]:.17g}",),
    )


def load_tabulated(path):
    """Read a ``r,tail`` CSV with a header line."""
    import csv

    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["r", "tail"]:
            raise InvalidWeightError(f"{path}: expected header 'r,tail'")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                raise InvalidWeightError(f"{path}:{lineno}: malformed row {row!r}") from None
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return tabulated_weight(arr[:, 0], arr[:, 1], name=f"tabulated:file={path}")


def builtin_weight(family, **params):
    """Construct one of the built-in weight families."""
    try:
        return _builtin(family, dict(params))
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {family!r}: {exc}") from None


def _builtin(family, params):
    if family == "constant":
        if params:
            raise ConfigurationError("constant weight takes no parameters")
        return constant_weight()
    if family == "standard":
        return standard_weight(params.pop("beta", 1.0), **params)
    if family in ("exponential", "exp"):
        return exponential_weight(**params)
    if family in ("log_rapid", "lograpid"):
        return log_rapid_weight(**params)
    if family == "tabulated":
        if "file" in params:
            return load_tabulated(params["file"])
        return tabulated_weight(params["r"], params["tail"])
    raise ConfigurationError(f"unknown weight family {family!r}; expected one of {FAMILIES}")
