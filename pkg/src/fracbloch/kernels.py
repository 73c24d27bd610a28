"""Bergman reproducing kernels of radial weights and the estimates built on them.

The kernel of A^2_omega at a point a is ``sum_n (conj(a) z)^n / (2 omega_{2n+1})``.
Every quantity tested here depends on a only through |a|, so points are
taken on the positive real axis and coefficients stay real.
"""

from dataclasses import dataclass

import numpy as np

from .bands import jsonable, make_band, rel_change
from .errors import DomainError, InvalidWeightError, TruncationError
from .norms import NormProfile, angle_count, integral_means
from .quadrature import gauss_legendre, log_cumulative_dlog
from .series import TaylorPoly
from .weights import log_mixed_moments, log_moments

DEFAULT_N = 8192
TRUNC_RTOL = 1e-8
RADIAL_NODES = 256


def _log_odd_moments(w, N):
    return log_moments(w, 2.0 * np.arange(N + 1) + 1.0)


# ---------------------------------------------------------------------------
# truncation control
# ---------------------------------------------------------------------------

def truncation_bound(omega, mu, x, N, log_retained):
    """Log of a bound on the dropped tail ``sum_{n>N} x^n / (2 omega_{2n+1} mu_{2n+1})``.

    Uses only ``w_{2n+1} >= eps^(n+1/2) tail_w(sqrt(eps))`` (valid for every
    weight), optimised over eps in (sqrt(x), 1).  Returns (log ratio of the
    bound to the retained sum, suggested N reaching ``TRUNC_RTOL``).
    """
    if x <= 0:
        return -np.inf, 0
    root = np.sqrt(x)
    eps = root + (1.0 - root) * np.linspace(0.02, 0.98, 97)
    ws = [w for w in (omega, mu) if w is not None]
    k = len(ws)
    log_c = -np.log(2.0) - 0.5 * k * np.log(eps)
    for w in ws:
        log_c = log_c - w.log_tail_q(1.0 - np.sqrt(eps))
    log_rho = np.log(x) - k * np.log(eps)
    ok = log_rho < 0
    if not np.any(ok):
        return np.inf, None
    log_c, log_rho = log_c[ok], log_rho[ok]
    log_geo = -np.log(-np.expm1(log_rho))
    bound = log_c + (N + 1) * log_rho + log_geo
    best = float(np.min(bound)) - log_retained
    need = (np.log(TRUNC_RTOL) + log_retained - log_c - log_geo) / log_rho - 1.0
    suggested = int(np.ceil(max(np.min(need), N)))
    return best, suggested


@dataclass
class KernelSpec:
    """Weights, point modulus and truncation of a (differentiated) kernel."""

    omega: object
    mu: object = None
    a_mod: float = 0.0
    N: int = DEFAULT_N

    def __post_init__(self):
        if not 0.0 <= self.a_mod < 1.0:
            raise DomainError("kernel point modulus must lie in [0, 1)")
        if self.N < 0:
            raise DomainError("truncation must be >= 0")

    def log_coeffs(self):
        """log of a^n / (2 omega_{2n+1} [mu_{2n+1}]) for n = 0..N."""
        n = np.arange(self.N + 1, dtype=float)
        out = -np.log(2.0) - _log_odd_moments(self.omega, self.N)
        if self.mu is not None:
            out = out - _log_odd_moments(self.mu, self.N)
        if self.a_mod == 0.0:
            out[1:] = -np.inf
        else:
            out = out + n * np.log(self.a_mod)
        return out

    def admissibility(self, r):
        """(log dropped-to-retained bound, suggested N) at radius r."""
        x = self.a_mod * r
        if x == 0.0:
            return -np.inf, self.N
        lc = self.log_coeffs() + np.arange(self.N + 1) * np.log(r)
        mx = lc.max()
        log_retained = mx + np.log(np.exp(lc - mx).sum())
        return truncation_bound(self.omega, self.mu, x, self.N, log_retained)

    def admissible(self, r):
        return self.admissibility(r)[0] < np.log(TRUNC_RTOL)

    def check(self, r):
        ratio, suggested = self.admissibility(r)
        if not ratio < np.log(TRUNC_RTOL):
            raise TruncationError(
                f"truncation N={self.N} leaves a tail bound of {np.exp(ratio):.3g} of the sum "
                f"at |a| r = {self.a_mod * r:g}; try N >= {suggested}", suggested=suggested)


def kernel_coeffs(omega, a_mod, N=DEFAULT_N, r=None, strict=True):
    """Taylor coefficients a^n / (2 omega_{2n+1}) of the kernel at the point a_mod.

    With ``r`` given the truncation is checked for use on the circle of that
    radius (a ``TruncationError`` if inadmissible and ``strict``).
    """
    spec = KernelSpec(omega, None, a_mod, N)
    if r is not None and strict:
        spec.check(r)
    with np.errstate(under="ignore"):
        return TaylorPoly(np.exp(spec.log_coeffs()))


def frac_kernel_coeffs(omega, mu, a_mod, N=DEFAULT_N):
    """D^mu of the omega-kernel at a_mod: a^n / (2 omega_{2n+1} mu_{2n+1})."""
    with np.errstate(under="ignore"):
        return TaylorPoly(np.exp(KernelSpec(omega, mu, a_mod, N).log_coeffs()))


def m1_frac_kernels(omega, mu, a_mod, radii, N=DEFAULT_N, strict=True):
    """M_1(r, D^mu(B^omega_a)) at several radii; also returns admissibility flags."""
    spec = KernelSpec(omega, mu, a_mod, N)
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    flags = np.array([spec.admissible(r) for r in radii])
    if strict and not np.all(flags):
        spec.check(float(radii[~flags][0]))
    with np.errstate(under="ignore"):
        g = TaylorPoly(np.exp(spec.log_coeffs()))
    return integral_means(g, radii, 1.0, angle_count(N)), flags


def m1_frac_kernel(omega, mu, a_mod, r, N=DEFAULT_N, strict=True):
    """M_1 of the mu-derivative of the omega-kernel at a_mod on the circle |z| = r."""
    if not 0.0 <= r < 1.0:
        raise DomainError("radius must lie in [0, 1)")
    vals, _ = m1_frac_kernels(omega, mu, a_mod, [r], N, strict)
    return float(vals[0])


def comparison_integral(omega, mu, x):
    """``1 + int_0^x dt / (tail_omega(t) tail_mu(t) (1 - t))`` for each x in [0, 1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.ones(x.shape)
    pos = x > 0
    if np.any(pos):
        def log_g(q):
            return -omega.log_tail_q(q) - mu.log_tail_q(q)

        out[pos] = 1.0 + np.exp(log_cumulative_dlog(log_g, 1.0 - x[pos]))
    return out


PROP23_POINTS = (0.5, 0.9, 0.99, 0.999)


@dataclass
class Prop23Result:
    band: object
    rows: list
    excluded: list

    @property
    def admissible(self):
        return not self.excluded

    def to_dict(self):
        return jsonable({"band": self.band.to_dict(with_values=False), "rows": self.rows,
                         "excluded": self.excluded})


def prop23_rows(omega, mu, rs, as_, N):
    rows = []
    for a in as_:
        m1, flags = m1_frac_kernels(omega, mu, a, rs, N, strict=False)
        comp = comparison_integral(omega, mu, a * np.asarray(rs))
        for r, m, c, ok in zip(rs, m1, comp, flags):
            rows.append({"r": float(r), "a_mod": float(a), "m1": float(m),
                         "comparison": float(c), "ratio": float(m / c), "admissible": bool(ok)})
    return rows


def prop23_ratio_band(omega, mu, rs=PROP23_POINTS, as_=PROP23_POINTS, N=DEFAULT_N, N_ref=None):
    """Band of M_1(r, D^mu B^omega_a) / (1 + comparison integral) over the (r, a) grid.

    Stability is measured against the truncation ``N_ref`` (default N/2).
    Grid points where either truncation fails the admissibility bound are
    evaluated and reported but left out of the band.
    """
    N_ref = N_ref or N // 2
    rows = prop23_rows(omega, mu, rs, as_, N)
    ref = prop23_rows(omega, mu, rs, as_, N_ref)
    keep, excluded = [], []
    for a, b in zip(rows, ref):
        a["ratio_at_N_ref"] = b["ratio"]
        a["admissible_at_N_ref"] = b["admissible"]
        if a["admissible"] and b["admissible"]:
            keep.append(a)
        else:
            excluded.append((a["r"], a["a_mod"]))
    if not keep:
        raise TruncationError("no (r, a) point admits the requested truncations")
    band = make_band(f"prop23 {omega.name}/{mu.name}", np.arange(len(keep)),
                     [r["ratio"] for r in keep], {f"N={N_ref}": [r["ratio_at_N_ref"] for r in keep]})
    pointwise = max(rel_change(r["ratio"], r["ratio_at_N_ref"]) for r in keep)
    band.variants["pointwise_drift"] = (pointwise, pointwise)
    return Prop23Result(band, rows, excluded)


# ---------------------------------------------------------------------------
# area integrals against the kernel
# ---------------------------------------------------------------------------

def _area_pairing(f, omega, z, log_mult, n_kernel):
    """``int_D f(zeta) sum_n m_n (z conj(zeta))^n omega(zeta) dA(zeta)``.

    dA is normalised area.  Radial Gauss-Legendre on [0, 1] times the angular
    trapezoid rule with enough angles to integrate the polynomial integrand
    exactly in theta.
    """
    if not omega.has_density:
        raise InvalidWeightError(f"weight {omega.name!r} has no density")
    x, wx = gauss_legendre(RADIAL_NODES)
    rho = 0.5 * (x + 1.0)
    wr = 0.5 * wx
    Q = 8 * (f.degree + n_kernel)
    theta = 2.0 * np.pi * np.arange(Q) / Q
    zeta = rho[:, None] * np.exp(1j * theta)[None, :]
    fv = f(zeta)
    with np.errstate(under="ignore"):
        m = np.exp(log_mult[: n_kernel + 1])
    kern = np.zeros(zeta.shape, dtype=complex)
    w_conj = z * np.conj(zeta)
    for c in m[::-1]:
        kern = kern * w_conj + c
    dens = omega.density(rho)
    radial = (fv * kern).mean(axis=1)
    return complex(2.0 * np.sum(wr * rho * dens * radial))


def repro_identity_residual(f, omega, mu, z, N=None):
    """|int f(zeta) D^mu(B^omega_zeta)(z) omega dA - D^mu(f)(z)|.

    The kernel is truncated at ``N`` (default deg f + 8); higher kernel terms
    integrate to zero against a polynomial of lower degree.
    """
    N = f.degree + 8 if N is None else N
    log_mult = -np.log(2.0) - _log_odd_moments(omega, N) - _log_odd_moments(mu, N)
    rhs = _area_pairing(f, omega, complex(z), log_mult, N)
    lhs = complex(TaylorPoly(f.coeffs * np.exp(-_log_odd_moments(mu, f.degree)))(complex(z)))
    return abs(rhs - lhs)


def kernel_reproduction_residual(f, omega, z, N=None):
    """|<f, B^omega_z> - f(z)| in A^2_omega."""
    N = f.degree + 8 if N is None else N
    log_mult = -np.log(2.0) - _log_odd_moments(omega, N)
    rhs = _area_pairing(f, omega, complex(z), log_mult, N)
    return abs(rhs - complex(f(complex(z))))


# ---------------------------------------------------------------------------
# Theorem 1.3 multiplier checks
# ---------------------------------------------------------------------------

def lambda_sequence(mu, N):
    """lambda_n = mu_{2n+1}^2 / (mu mu-hat)_{2n+1} for n = 0..N."""
    x = 2.0 * np.arange(N + 1) + 1.0
    return np.exp(2.0 * log_moments(mu, x) - log_mixed_moments(mu, x))


def multiplier_radius_limit(N, tol=1e-8):
    """Largest r with r^N N^2 < tol."""
    return float(np.exp((np.log(tol) - 2.0 * np.log(max(N, 1))) / max(N, 1)))


def multiplier_condition(lam, grid=None, per_octave=4):
    """Profile of (1 - r) M_1(r, lambda^[1]) where lambda^[1] = sum (n + 1) lambda_n z^n.

    The default grid is geometric in 1 - r and stops where the truncated tail
    stops being negligible; an explicit grid reaching past that radius raises
    ``TruncationError``.
    """
    lam = np.asarray(lam, dtype=float)
    N = lam.size - 1
    r_max = multiplier_radius_limit(N)
    if grid is None:
        depth = int(np.floor(per_octave * -np.log2(1.0 - r_max)))
        grid = -np.expm1(-np.arange(depth + 1) / per_octave * np.log(2.0))
    grid = np.asarray(grid, dtype=float)
    if np.any(grid > r_max):
        raise TruncationError(f"radius {grid.max():g} exceeds the admissible {r_max:.6g} "
                              f"for a length-{N + 1} sequence", suggested=None)
    g = TaylorPoly((np.arange(N + 1) + 1.0) * lam)
    vals = (1.0 - grid) * integral_means(g, grid, 1.0, angle_count(N))
    k = int(np.argmax(vals))
    return NormProfile(radii=grid, values=vals, sup=float(vals[k]), argmax=float(grid[k]),
                       decay_tail=list(vals[-5:]), polished=False)


def multiplier_band(mu, N=DEFAULT_N, per_octave=4):
    """sup (1 - r) M_1(r, lambda^[1]) at N with its drift against N/2 and a denser grid."""
    base = multiplier_condition(lambda_sequence(mu, N), per_octave=per_octave).sup
    variants = {
        f"N={N // 2}": multiplier_condition(lambda_sequence(mu, N // 2), per_octave=per_octave).sup,
        "fine": multiplier_condition(lambda_sequence(mu, N), per_octave=2 * per_octave).sup,
    }
    return make_band("multiplier condition", [0], [base], {k: [v] for k, v in variants.items()},
                     ends="hi")


def mixed_moment_equiv(mu, xs=None, per_octave=4, x_max=1e3):
    """Band of (mu mu-hat)_{2x+1} / mu_{2x+1}^2."""

    def vals(x):
        y = 2.0 * np.asarray(x, dtype=float) + 1.0
        return np.exp(log_mixed_moments(mu, y) - 2.0 * log_moments(mu, y))

    if xs is not None:
        xs = np.asarray(xs, dtype=float)
        return make_band("mixed/moment^2", xs, vals(xs))

    def grid(po, top):
        j = np.arange(int(np.floor(po * np.log2(top) + 1e-9)) + 1)
        return np.concatenate(([0.0], 2.0 ** (j / po)))

    base = grid(per_octave, x_max)
    return make_band("mixed/moment^2", base, vals(base),
                     {"shallow": vals(grid(per_octave, x_max / 2 ** 3)),
                      "fine": vals(grid(2 * per_octave, x_max))})


__all__ = [
    "KernelSpec", "kernel_coeffs", "frac_kernel_coeffs", "m1_frac_kernel", "m1_frac_kernels",
    "comparison_integral", "prop23_ratio_band", "repro_identity_residual",
    "kernel_reproduction_residual", "lambda_sequence", "multiplier_condition",
    "multiplier_band", "mixed_moment_equiv", "truncation_bound",
]
