import numpy as np
import pytest

from fracbloch.errors import DomainError, TruncationError
from fracbloch.kernels import (KernelSpec, comparison_integral, frac_kernel_coeffs, kernel_coeffs,
                               kernel_reproduction_residual, lambda_sequence, m1_frac_kernel,
                               m1_frac_kernels, mixed_moment_equiv, multiplier_band,
                               multiplier_condition, prop23_ratio_band, repro_identity_residual,
                               truncation_bound)
from fracbloch.series import TaylorPoly
from fracbloch.weights import log_mixed_moments, moment


class TestKernelCoeffs:
    def test_classical_kernel(self, weights):
        t = 0.6
        c = kernel_coeffs(weights["constant"], t, N=200).coeffs.real
        n = np.arange(201)
        assert np.allclose(c, (n + 1) * t ** n, rtol=1e-12, atol=0)

    def test_zero_point(self, weights):
        for w in weights.values():
            c = kernel_coeffs(w, 0.0, N=10).coeffs.real
            assert c[0] == pytest.approx(1 / (2 * moment(w, 1.0)), rel=1e-13)
            assert np.all(c[1:] == 0)

    def test_frac_kernel_is_dmu_of_kernel(self, weights):
        from fracbloch.series import frac_deriv
        om, mu = weights["std2"], weights["lograpid"]
        a = frac_kernel_coeffs(om, mu, 0.7, N=60)
        b = frac_deriv(kernel_coeffs(om, 0.7, N=60), mu)
        assert a.allclose(b, rtol=1e-12)

    def test_domain(self, weights):
        with pytest.raises(DomainError):
            KernelSpec(weights["constant"], None, 1.0)

    def test_truncation_error(self, weights):
        with pytest.raises(TruncationError) as ei:
            kernel_coeffs(weights["constant"], 0.999, N=100, r=0.999)
        assert ei.value.suggested > 100
        kernel_coeffs(weights["constant"], 0.999, N=ei.value.suggested, r=0.999)

    def test_bound_is_a_bound(self, weights):
        w = weights["constant"]
        x, N = 0.9, 150
        n = np.arange(N + 1)
        retained = np.sum((n + 1.0) ** 2 * x ** n)
        m = np.arange(N + 1, 20000)
        dropped = np.sum((m + 1.0) ** 2 * x ** m)
        log_bound, _ = truncation_bound(w, w, x, N, np.log(retained))
        # coefficients here are 1/(2 w w) = (2n+2)^2/2
        assert np.log(dropped / retained) <= log_bound + 1e-9


class TestM1:
    def test_zero_point(self, weights):
        w = weights["constant"]
        vals, flags = m1_frac_kernels(w, w, 0.0, [0.1, 0.5, 0.9])
        assert np.allclose(vals, 2.0, rtol=1e-13) and flags.all()

    def test_small_radius_bounded(self, weights):
        w = weights["constant"]
        # sum (1/2)^n (2n+2)^2 / 2 = 26
        assert m1_frac_kernel(w, w, 0.5, 0.5, N=400) <= 26.0
        assert m1_frac_kernel(w, w, 0.5, 1.0 - 1e-9, N=400) <= 26.0 + 1e-6

    def test_domain(self, weights):
        with pytest.raises(DomainError):
            m1_frac_kernel(weights["constant"], weights["constant"], 0.5, 1.0)


class TestComparison:
    def test_closed_form(self, weights):
        w = weights["constant"]
        x = np.array([0.0, 0.5, 0.9, 0.999])
        exact = 1 + ((1 - x) ** -2 - 1) / 2
        assert np.allclose(comparison_integral(w, w, x), exact, rtol=1e-12)


class TestProp23:
    def test_constant_band(self, weights):
        w = weights["constant"]
        res = prop23_ratio_band(w, w, rs=(0.5, 0.9, 0.99), as_=(0.5, 0.9, 0.99), N=4096)
        assert res.admissible
        assert res.band.hi / res.band.lo < 20 and res.band.lo > 0
        assert res.band.drift < 0.1

    def test_standard_band(self, weights):
        w = weights["std2"]
        res = prop23_ratio_band(w, w, rs=(0.5, 0.9, 0.99), as_=(0.5, 0.9, 0.99), N=4096)
        assert np.isfinite(res.band.hi) and res.band.lo > 0


class TestReproduction:
    @pytest.mark.parametrize("n", [0, 1, 5, 12])
    def test_monomials(self, weights, n):
        w = weights["constant"]
        assert repro_identity_residual(TaylorPoly.monomial(n), w, w, 0.4 + 0.3j) < 1e-8

    def test_constant(self, weights):
        for w in (weights["constant"], weights["std2"]):
            assert repro_identity_residual(TaylorPoly([1.0]), w, w, 0.2j) < 1e-10

    def test_random(self, weights):
        rng = np.random.default_rng(16)
        f = TaylorPoly(rng.standard_normal(17) + 1j * rng.standard_normal(17))
        assert repro_identity_residual(f, weights["std2"], weights["constant"], 0.5 - 0.4j) < 1e-7
        assert kernel_reproduction_residual(f, weights["std2"], 0.6) < 1e-7


class TestMultiplier:
    def test_lambda_constant(self, weights):
        lam = lambda_sequence(weights["constant"], 100)
        n = np.arange(101)
        assert np.allclose(lam, (2 * n + 3) / (2 * n + 2), rtol=1e-12)
        assert lam[0] == pytest.approx(1.5, rel=1e-14)

    def test_conditions(self, weights):
        a = multiplier_condition(lambda_sequence(weights["constant"], 4096))
        b = multiplier_condition(np.ones(4097))
        assert 0.5 < a.sup < 3 and 0.5 < b.sup < 3
        band = multiplier_band(weights["std2"], N=4096)
        assert np.isfinite(band.hi) and band.drift < 0.1

    def test_radius_guard(self):
        with pytest.raises(TruncationError):
            multiplier_condition(np.ones(101), grid=[0.5, 0.99])

    def test_mixed_band(self, weights):
        xs = np.linspace(0.5, 300, 60)
        b = mixed_moment_equiv(weights["constant"], xs)
        assert b.lo >= 2 / 3 - 1e-12 and b.hi < 1
        s = mixed_moment_equiv(weights["std2"])
        assert s.hi / s.lo < 10

    def test_mixed_positive_domain(self, weights):
        with pytest.raises(DomainError):
            log_mixed_moments(weights["constant"], [0.0])
