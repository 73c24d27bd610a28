"""Integral means, the Bloch norm and the weighted B^mu norm of polynomials.

Circle values are computed on Q equally spaced angles by an inverse FFT of
the (dilated) coefficient vector, which is exactly the point set of the
trapezoid rule; with Q > degree nothing aliases.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError
from .grids import geometric_grid
from .series import TaylorPoly, frac_deriv

MIN_ANGLES = 4096
OVERSAMPLE = 8
_CHUNK = 4_000_000


def angle_count(degree):
    return max(MIN_ANGLES, OVERSAMPLE * int(degree))


def circle_values(f, radii, Q=None):
    """Matrix of f(r e^{i theta_j}), one row per radius, theta_j = 2 pi j / Q."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    c = f.coeffs
    Q = Q or angle_count(f.degree)
    if Q <= f.degree:
        raise DomainError("angular resolution must exceed the degree")
    n = np.arange(c.size)
    out = np.empty((radii.size, Q), dtype=complex)
    rows = max(1, _CHUNK // Q)
    for start in range(0, radii.size, rows):
        r = radii[start:start + rows]
        with np.errstate(under="ignore"):
            scaled = c[None, :] * r[:, None] ** n[None, :]
        buf = np.zeros((r.size, Q), dtype=complex)
        buf[:, :c.size] = scaled
        out[start:start + rows] = np.fft.ifft(buf, axis=1) * Q
    return out


def integral_means(f, radii, p, Q=None):
    """M_p(r, f) for an array of radii (p may be np.inf)."""
    if not p > 0:
        raise DomainError("integral-mean exponent must be positive")
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(radii < 0) or np.any(radii > 1):
        raise DomainError("radii must lie in [0, 1]")
    Q = Q or angle_count(f.degree)
    out = np.empty(radii.size)
    rows = max(1, _CHUNK // Q)
    for start in range(0, radii.size, rows):
        vals = np.abs(circle_values(f, radii[start:start + rows], Q))
        if np.isinf(p):
            out[start:start + rows] = vals.max(axis=1)
        elif p == 2:
            out[start:start + rows] = np.sqrt(np.mean(vals * vals, axis=1))
        else:
            out[start:start + rows] = np.mean(vals ** p, axis=1) ** (1.0 / p)
    return out


def integral_mean(f, r, p, Q=None):
    """M_p(r, f): the L^p average of |f| on the circle of radius r."""
    return float(integral_means(f, [r], p, Q)[0])


def hardy_norm(f, p=1.0, Q=None):
    """H^p norm of a polynomial, i.e. M_p(1, f)."""
    return integral_mean(f, 1.0, p, Q)


@dataclass
class NormProfile:
    radii: np.ndarray
    values: np.ndarray
    sup: float
    argmax: float
    decay_tail: list = field(default_factory=list)
    polished: bool = True

    def to_dict(self):
        return {
            "radii": [float(r) for r in self.radii],
            "values": [float(v) for v in self.values],
            "sup": float(self.sup),
            "argmax": float(self.argmax),
            "decay_tail": [float(v) for v in self.decay_tail],
            "polished": self.polished,
        }


def _polish(fun, radii, values, k):
    """Refine a grid maximum at index k by bounded Brent search on the neighbours."""
    lo = radii[k - 1] if k > 0 else radii[0]
    hi = radii[k + 1] if k + 1 < radii.size else radii[k]
    if hi <= lo:
        return radii[k], values[k]
    res = minimize_scalar(lambda r: -fun(r), bounds=(lo, hi), method="bounded",
                          options={"xatol": max(1e-15, 1e-10 * (hi - lo))})
    best = -res.fun
    if best > values[k]:
        return float(res.x), float(best)
    return radii[k], values[k]


def _profile(fun_vec, fun_scalar, radii, polish):
    radii = np.asarray(radii, dtype=float)
    values = fun_vec(radii)
    k = int(np.argmax(values))
    arg, sup = radii[k], values[k]
    if polish:
        arg, sup = _polish(fun_scalar, radii, values, k)
    return NormProfile(radii=radii, values=values, sup=float(sup), argmax=float(arg),
                       decay_tail=list(values[-5:]), polished=polish)


def default_norm_grid():
    return geometric_grid()


def bloch_profile(f, grid=None, polish=True):
    """Profile of (1 - r) M_inf(r, f') over the grid (without the |f(0)| term)."""
    grid = default_norm_grid() if grid is None else np.asarray(grid, dtype=float)
    d = f.derivative()
    Q = angle_count(d.degree)

    def vec(r):
        return (1.0 - r) * integral_means(d, r, np.inf, Q)

    def scal(r):
        return float(vec(np.array([r]))[0])

    return _profile(vec, scal, grid, polish)


def bloch_norm(f, grid=None, polish=True):
    """|f(0)| + sup_r (1 - r) M_inf(r, f')."""
    prof = bloch_profile(f, grid, polish)
    return abs(f.coeffs[0]) + prof.sup


def bmu_profile(f, w, grid=None, polish=True, method="auto"):
    """tail(r) M_inf(r, D^mu f) over the grid, with its sup."""
    grid = default_norm_grid() if grid is None else np.asarray(grid, dtype=float)
    g = frac_deriv(f, w, method)
    Q = angle_count(g.degree)

    def vec(r):
        r = np.asarray(r, dtype=float)
        m = integral_means(g, r, np.inf, Q)
        with np.errstate(divide="ignore", under="ignore"):
            return np.where(m > 0, np.exp(w.log_tail(r) + np.log(np.where(m > 0, m, 1.0))), 0.0)

    def scal(r):
        return float(vec(np.array([r]))[0])

    return _profile(vec, scal, grid, polish)


def bmu_norm(f, w, grid=None, polish=True, method="auto"):
    """``||f||_{B^mu} = sup tail(r) M_inf(r, D^mu f)`` as a NormProfile."""
    return bmu_profile(f, w, grid, polish, method)


def little_decay_profile(f, w=None, grid=None, last=5):
    """Weighted values at the outermost radii and whether they decrease there.

    With ``w=None`` the Bloch quantity (1 - r) M_inf(r, f') is used,
    otherwise tail(r) M_inf(r, D^mu f).
    """
    grid = default_norm_grid() if grid is None else np.asarray(grid, dtype=float)
    prof = bloch_profile(f, grid, polish=False) if w is None else bmu_profile(f, w, grid, polish=False)
    tail_vals = np.asarray(prof.values[-last:])
    decreasing = bool(np.all(np.diff(tail_vals) <= 0))
    return {
        "radii": [float(r) for r in grid[-last:]],
        "values": [float(v) for v in tail_vals],
        "decreasing": decreasing,
        "last_over_sup": float(tail_vals[-1] / prof.sup) if prof.sup > 0 else 0.0,
    }


def random_corpus(size, seed=20240601, max_degree=512):
    """Fixed random polynomials with N(0,1) real coefficients.

    Degrees are log-uniform on [1, max_degree] so that every dyadic frequency
    scale is equally represented; low degrees, which carry the extreme norm
    ratios, would otherwise be rare.  The corpus of size 2m starts with the
    corpus of size m.
    """
    rng = np.random.default_rng(seed)
    top = np.log2(max_degree)
    polys = []
    for _ in range(size):
        deg = max(1, min(max_degree, int(np.floor(2.0 ** rng.uniform(0.0, top)))))
        polys.append(TaylorPoly(rng.standard_normal(deg + 1)))
    return polys
