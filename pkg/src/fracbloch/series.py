"""Truncated Taylor series and the coefficient-multiplier transforms on them."""

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, UnsupportedOrderError
from .weights import log_moments

DEFAULT_DEGREE = 4096


class TaylorPoly:
    """Polynomial ``sum_n c[n] z**n`` with complex coefficients.

    Instances are immutable: the coefficient array is copied on construction
    and flagged read-only.  Every transform returns a new polynomial.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex, ndmin=1, copy=True)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a nonempty 1-d sequence")
        c.flags.writeable = False
        self._c = c

    @classmethod
    def monomial(cls, n, coef=1.0):
        c = np.zeros(n + 1, dtype=complex)
        c[n] = coef
        return cls(c)

    @property
    def coeffs(self):
        return self._c

    @property
    def degree(self):
        return self._c.size - 1

    def __len__(self):
        return self._c.size

    def __repr__(self):
        return f"TaylorPoly(degree={self.degree})"

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros(z.shape, dtype=complex)
        for a in self._c[::-1]:
            acc = acc * z + a
        return acc

    def _binary(self, other, op):
        n = max(self._c.size, other._c.size)
        a = np.zeros(n, dtype=complex)
        b = np.zeros(n, dtype=complex)
        a[:self._c.size] = self._c
        b[:other._c.size] = other._c
        return TaylorPoly(op(a, b))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        return TaylorPoly(self._c * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return TaylorPoly(-self._c)

    def allclose(self, other, rtol=1e-12, atol=0.0):
        d = (self - other).coeffs
        ref = max(np.abs(self._c).max(), np.abs(other._c).max(), 1e-300)
        return bool(np.all(np.abs(d) <= atol + rtol * ref))

    def derivative(self):
        if self.degree == 0:
            return TaylorPoly([0.0])
        n = np.arange(1, self._c.size)
        return TaylorPoly(self._c[1:] * n)

    def dilate(self, rho):
        """``f_rho(z) = f(rho z)``."""
        return TaylorPoly(self._c * float(rho) ** np.arange(self._c.size))

    def scale_coeffs(self, factors):
        return TaylorPoly(self._c * np.asarray(factors)[: self._c.size])

    def truncate(self, degree):
        return TaylorPoly(self._c[: degree + 1])


def fractional_multipliers(w, degree, method="auto"):
    """``1 / mu_{2n+1}`` for n = 0..degree."""
    n = np.arange(degree + 1, dtype=float)
    return np.exp(-log_moments(w, 2.0 * n + 1.0, method))


def frac_deriv(f, w, method="auto"):
    """D^mu(f): coefficient n divided by the odd moment mu_{2n+1}."""
    return TaylorPoly(f.coeffs * fractional_multipliers(w, f.degree, method))


def classical_multipliers(beta, degree):
    if not beta > 0:
        raise DomainError("fractional order must be positive")
    n = np.arange(degree + 1, dtype=float)
    return np.exp(np.log(2.0) + special.gammaln(n + beta + 1.0)
                  - special.gammaln(beta + 1.0) - special.gammaln(n + 1.0))


def classical_frac_deriv(f, beta):
    """Hardy-Littlewood-type D^beta; the n = 0 term carries the factor 2."""
    return TaylorPoly(f.coeffs * classical_multipliers(beta, f.degree))


def multiplier_transform(f, beta):
    """``f^[beta]``: coefficient n multiplied by (n + 1)**beta."""
    n = np.arange(f.degree + 1, dtype=float)
    return TaylorPoly(f.coeffs * (n + 1.0) ** beta)


def hadamard(a, b):
    """Coefficientwise product, truncated to the shorter polynomial."""
    m = min(a.degree, b.degree) + 1
    return TaylorPoly(a.coeffs[:m] * b.coeffs[:m])


# ---------------------------------------------------------------------------
# smooth cutoff and the dyadic blocks V_n
# ---------------------------------------------------------------------------

def _phi(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def _big_psi(t):
    t = np.asarray(t, dtype=float)
    a = _phi(2.0 - t)
    b = _phi(t - 1.0)
    return a / (a + b)


def _nth_derivative(fun, x, m, h=1e-4):
    """Central finite difference of order m with one Richardson step."""
    x = np.asarray(x, dtype=float)

    def fd(step):
        k = np.arange(m + 1)
        coef = special.comb(m, k) * (-1.0) ** k
        offs = (m / 2.0 - k) * step
        acc = np.zeros(x.shape)
        for c, o in zip(coef, offs):
            acc = acc + c * fun(x + o)
        return acc / step ** m

    if m == 0:
        return fun(x)
    coarse, fine = fd(h), fd(h / 2.0)
    return (4.0 * fine - coarse) / 3.0


@dataclass(frozen=True)
class SmoothCutoff:
    """The cutoff Psi (1 on (-inf, 1], 0 on [2, inf)) and psi(t) = Psi(t/2) - Psi(t)."""

    def Psi(self, t):
        return _big_psi(t)

    def psi(self, t):
        t = np.asarray(t, dtype=float)
        return _big_psi(t / 2.0) - _big_psi(t)

    def dPsi(self, t, order=1):
        return _nth_derivative(self.Psi, t, order)

    def dpsi(self, t, order=1):
        return _nth_derivative(self.psi, t, order)

    support = (1.0, 4.0)


def smooth_cutoff():
    return SmoothCutoff()


def cesaro_block(n, cutoff=None):
    """V_0 = 1 + z and V_n = sum_k psi(k / 2^(n-1)) z^k for n >= 1."""
    if n < 0:
        raise DomainError("block index must be >= 0")
    if n == 0:
        return TaylorPoly([1.0, 1.0])
    cutoff = cutoff or smooth_cutoff()
    top = 2 ** (n + 1) - 1
    k = np.arange(top + 1, dtype=float)
    c = cutoff.psi(k / 2.0 ** (n - 1))
    c[: 2 ** (n - 1)] = 0.0
    return TaylorPoly(c)


def cesaro_blocks_needed(degree):
    """Number of blocks V_0, V_1, ... whose supports meet degrees 0..degree."""
    if degree < 1:
        return 1
    return int(np.floor(np.log2(degree))) + 2


@dataclass(frozen=True)
class SampledFunction:
    """A compactly supported function on the real line with known support."""
    fun: object
    support: tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        out = np.zeros(x.shape, dtype=complex if self._is_complex() else float)
        if np.any(inside):
            out[inside] = self.fun(x[inside])
        return out

    def _is_complex(self):
        return np.iscomplexobj(self.fun(np.array([0.5 * sum(self.support)])))


def w_phi(n, phi):
    """``W_n^Phi(z) = sum_k Phi(k/n) z^k`` over the (nonnegative) support of Phi."""
    if n < 1:
        raise DomainError("scale must be >= 1")
    lo, hi = phi.support
    kmax = int(np.floor(hi * n))
    kmin = max(0, int(np.ceil(lo * n)))
    c = np.zeros(kmax + 1, dtype=complex)
    k = np.arange(kmin, kmax + 1, dtype=float)
    c[kmin:] = phi(k / n)
    return TaylorPoly(c)


def a_phi_m(phi, m, step=1e-4):
    """``max|Phi| + m max|Phi^(m)|`` by dense sampling of the support."""
    if m < 0 or int(m) != m:
        raise DomainError("derivative order must be a nonnegative integer")
    if m > 4:
        raise UnsupportedOrderError("derivative orders above 4 are not supported")
    lo, hi = phi.support
    x = np.arange(lo, hi + step / 2, step)
    top = float(np.max(np.abs(phi(x))))
    if m == 0:
        return top
    d = _nth_derivative(phi, x, m)
    return top + m * float(np.max(np.abs(d)))


def psi_function(cutoff=None):
    cutoff = cutoff or smooth_cutoff()
    return SampledFunction(cutoff.psi, cutoff.support)
