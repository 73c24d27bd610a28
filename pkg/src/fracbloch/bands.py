"""Empirical two-sided comparability records."""

from dataclasses import dataclass, field

import numpy as np

STABILITY_TOL = 0.10


def rel_change(a, b):
    """Symmetric relative change; 0 when both values vanish, inf if one is nonfinite."""
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    if not (np.isfinite(a) and np.isfinite(b)):
        return float("inf")
    return abs(a - b) / max(abs(a), abs(b))


def jsonable(x):
    """Floats with inf/nan spelled as strings so that strict JSON parsers accept them."""
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


@dataclass
class RatioBand:
    """Min and max of a ratio over a grid, with a refinement-stability verdict.

    ``variants`` holds the (lo, hi) pairs seen on the comparison grids
    (coarser, finer, doubled corpus, ...); ``drift`` is the largest relative
    change of either end against the base grid.
    """

    label: str
    grid: np.ndarray
    values: np.ndarray
    lo: float
    hi: float
    variants: dict = field(default_factory=dict)
    drift: float = 0.0
    tol: float = STABILITY_TOL
    ends: str = "both"

    @property
    def stable(self):
        return bool(np.isfinite(self.hi) and self.drift < self.tol)

    @property
    def bounded(self):
        return bool(np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo > 0)

    @property
    def spread(self):
        return self.hi / self.lo if self.lo > 0 else float("inf")

    def drift_against(self, *names):
        """Drift restricted to the named comparison grids."""
        d = 0.0
        for name in names:
            vlo, vhi = self.variants[name]
            if self.ends in ("both", "lo"):
                d = max(d, rel_change(self.lo, vlo))
            if self.ends in ("both", "hi"):
                d = max(d, rel_change(self.hi, vhi))
        return d

    def contains(self, lo, hi):
        return self.lo >= lo and self.hi <= hi

    def to_dict(self, with_values=True):
        d = {
            "label": self.label,
            "lo": self.lo,
            "hi": self.hi,
            "spread": self.spread,
            "drift": self.drift,
            "stable": self.stable,
            "variants": {k: list(v) for k, v in self.variants.items()},
        }
        if with_values:
            d["grid"] = [float(x) for x in self.grid]
            d["values"] = [float(v) for v in self.values]
        return jsonable(d)


def make_band(label, grid, values, variants=None, ends="both", tol=STABILITY_TOL):
    """Build a RatioBand from base values and {name: values} on comparison grids.

    ``ends`` selects which end must be stable: "both", "hi" or "lo".
    """
    values = np.asarray(values, dtype=float)
    lo, hi = float(np.min(values)), float(np.max(values))
    seen = {}
    drift = 0.0
    for name, vals in (variants or {}).items():
        vals = np.asarray(vals, dtype=float)
        vlo, vhi = float(np.min(vals)), float(np.max(vals))
        seen[name] = (vlo, vhi)
        if ends in ("both", "lo"):
            drift = max(drift, rel_change(lo, vlo))
        if ends in ("both", "hi"):
            drift = max(drift, rel_change(hi, vhi))
    return RatioBand(label=label, grid=np.asarray(grid, dtype=float), values=values,
                     lo=lo, hi=hi, variants=seen, drift=drift, tol=tol, ends=ends)
