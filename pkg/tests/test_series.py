import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracbloch.errors import DomainError, UnsupportedOrderError
from fracbloch.norms import hardy_norm
from fracbloch.series import (SampledFunction, TaylorPoly, a_phi_m, cesaro_block, cesaro_blocks_needed,
                              classical_frac_deriv, classical_multipliers, frac_deriv, hadamard,
                              multiplier_transform, psi_function, smooth_cutoff, w_phi)
from fracbloch.weights import builtin_weight, log_moments

coef = st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=40)


class TestTaylorPoly:
    def test_immutable_and_value_at_zero(self):
        f = TaylorPoly([3.0, 1.0, 2.0])
        assert f(0.0) == 3.0
        with pytest.raises(ValueError):
            f.coeffs[0] = 1.0
        assert TaylorPoly.monomial(3).coeffs.tolist() == [0, 0, 0, 1]

    def test_derivative_dilate(self):
        f = TaylorPoly([1.0, 2.0, 3.0])
        assert f.derivative().coeffs.tolist() == [2.0, 6.0]
        assert np.allclose(f.dilate(0.5).coeffs, [1.0, 1.0, 0.75])

    @settings(max_examples=50, deadline=None)
    @given(c=coef, z=st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False))
    def test_horner_matches_powers(self, c, z):
        f = TaylorPoly(c)
        direct = sum(a * z ** k for k, a in enumerate(c))
        assert abs(f(z) - direct) <= 1e-10 * (1 + sum(abs(a) for a in c))


class TestFracDeriv:
    def test_constant_weight_monomial(self, weights):
        g = frac_deriv(TaylorPoly.monomial(7), weights["constant"])
        assert g.coeffs[7] == pytest.approx(16.0, rel=1e-14)

    def test_constant_function(self, weights):
        for w in weights.values():
            g = frac_deriv(TaylorPoly([1.0]), w)
            assert g.coeffs[0] == pytest.approx(1.0 / np.exp(log_moments(w, [1.0])[0]), rel=1e-14)

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0, 3.7])
    def test_classical_agreement(self, beta):
        f = TaylorPoly(np.ones(501))
        a = frac_deriv(f, builtin_weight("standard", beta=beta)).coeffs.real
        b = classical_frac_deriv(f, beta).coeffs.real
        assert np.max(np.abs(a / b - 1)) <= 1e-10

    def test_classical_values(self):
        assert classical_multipliers(2.0, 3)[3] == pytest.approx(20.0, rel=1e-14)
        assert np.allclose(classical_multipliers(1.0, 10), 2 * np.arange(1, 12), rtol=1e-14)
        with pytest.raises(DomainError):
            classical_multipliers(0.0, 3)

    @settings(max_examples=25, deadline=None)
    @given(a=coef, b=coef, s=st.floats(-3, 3), t=st.floats(-3, 3))
    def test_linearity(self, weights, a, b, s, t):
        f, g = TaylorPoly(a), TaylorPoly(b)
        w = weights["std2"]
        lhs = frac_deriv(s * f + t * g, w)
        rhs = s * frac_deriv(f, w) + t * frac_deriv(g, w)
        assert lhs.allclose(rhs, rtol=1e-12, atol=1e-12)
        assert frac_deriv(f, w).degree == f.degree

    @settings(max_examples=25, deadline=None)
    @given(c=coef)
    def test_inverse_multiplication(self, weights, c):
        f = TaylorPoly(c)
        w = weights["lograpid"]
        mu = np.exp(log_moments(w, 2.0 * np.arange(f.degree + 1) + 1.0))
        assert frac_deriv(f, w).scale_coeffs(mu).allclose(f, rtol=1e-13)


class TestMultiplierAndHadamard:
    def test_multiplier_transform(self):
        f = TaylorPoly([1.0, 1.0])
        assert multiplier_transform(f, 1.0).coeffs.tolist() == [1.0, 2.0]
        g = TaylorPoly(np.arange(1.0, 30.0))
        assert multiplier_transform(multiplier_transform(g, -1.0), 1.0).allclose(g, rtol=1e-14)
        assert multiplier_transform(g, 0.0).allclose(g, rtol=0)

    def test_hadamard(self):
        assert hadamard(TaylorPoly([1.0, 1.0]), TaylorPoly([1.0, 2.0, 3.0])).coeffs.tolist() == [1, 2]
        assert hadamard(TaylorPoly([1.0]), TaylorPoly([5.0, 2.0])).coeffs.tolist() == [5.0]

    def test_convolution_identity(self):
        # (W * f)(e^{it}) = (1/2 pi) int W(e^{i(t - theta)}) f(e^{i theta}) d theta, trapezoid in theta
        rng = np.random.default_rng(1)
        W = TaylorPoly(rng.standard_normal(12))
        f = TaylorPoly(rng.standard_normal(9) + 1j * rng.standard_normal(9))
        Q = 64
        theta = 2 * np.pi * np.arange(Q) / Q
        for t in (0.0, 0.7, 2.5):
            conv = np.mean(W(np.exp(1j * (t - theta))) * f(np.exp(1j * theta)))
            assert abs(conv - hadamard(W, f)(np.exp(1j * t))) < 1e-10


class TestCutoff:
    def test_Psi_values(self):
        c = smooth_cutoff()
        assert c.Psi(np.array([0.5]))[0] == 1.0
        assert c.Psi(np.array([3.0]))[0] == 0.0
        assert c.Psi(np.array([1.5]))[0] == pytest.approx(0.5, abs=1e-15)
        t = np.linspace(1.0, 2.0, 1001)
        assert np.all(np.diff(c.Psi(t)) <= 0)

    def test_psi_support(self):
        c = smooth_cutoff()
        t = np.concatenate([np.linspace(-2, 1, 50), np.linspace(4, 9, 50)])
        assert np.all(c.psi(t) == 0)
        assert np.all(c.psi(np.linspace(0, 5, 2001)) >= 0)

    def test_a_phi_m(self):
        psi = psi_function()
        assert a_phi_m(psi, 0) == pytest.approx(1.0, abs=1e-6)
        a2 = a_phi_m(psi, 2)
        assert np.isfinite(a2) and a2 > 1
        with pytest.raises(UnsupportedOrderError):
            a_phi_m(psi, 5)
        bump = SampledFunction(lambda x: np.ones_like(x), (1.0, 2.0))
        assert a_phi_m(bump, 0) == 1.0


class TestCesaroBlocks:
    def test_first_blocks(self):
        assert cesaro_block(0).coeffs.tolist() == [1.0, 1.0]
        v1 = cesaro_block(1).coeffs.real
        assert v1.size == 4 and v1[0] == 0 and v1[1] == 0
        assert np.all(v1[2:] > 0)

    def test_support(self):
        for n in range(1, 10):
            c = cesaro_block(n).coeffs.real
            assert c.size == 2 ** (n + 1)
            assert np.all(c[: 2 ** (n - 1)] == 0)

    def test_w_phi(self):
        psi = psi_function()
        assert np.allclose(w_phi(1, psi).coeffs[:4], cesaro_block(1).coeffs)
        bump = SampledFunction(lambda x: np.ones_like(x), (1.0, 2.0))
        c = w_phi(4, bump).coeffs
        assert np.flatnonzero(c).tolist() == [4, 5, 6, 7, 8]

    def test_partition_of_unity(self):
        kmax = 2 ** 14
        total = np.zeros(kmax + 1)
        for n in range(cesaro_blocks_needed(kmax)):
            c = cesaro_block(n).coeffs.real[: kmax + 1]
            total[: c.size] += c
        assert np.max(np.abs(total - 1)) <= 1e-14

    @settings(max_examples=10, deadline=None)
    @given(deg=st.integers(0, 2 ** 12), seed=st.integers(0, 2 ** 31))
    def test_reconstruction(self, deg, seed):
        rng = np.random.default_rng(seed)
        f = TaylorPoly(rng.standard_normal(deg + 1))
        acc = TaylorPoly([0.0])
        for n in range(cesaro_blocks_needed(deg)):
            acc = acc + hadamard(cesaro_block(n), f)
        assert acc.truncate(deg).allclose(f, rtol=1e-12)

    def test_block_norms_band(self):
        vals = [hardy_norm(cesaro_block(n), 1.0) for n in range(2, 13)]
        assert max(vals) / min(vals) <= 10

    def test_theorem_B_smoke(self):
        # ||W_n^psi * f||_H1 <= C A_{psi,2} ||f||_H1 with one C for n <= 10
        psi = psi_function()
        a2 = a_phi_m(psi, 2)
        rng = np.random.default_rng(7)
        ratios = []
        for n in range(1, 11):
            for _ in range(3):
                f = TaylorPoly(rng.standard_normal(4 * n + 8) + 1j * rng.standard_normal(4 * n + 8))
                f = f * (1.0 / hardy_norm(f, 1.0))
                ratios.append(hardy_norm(hadamard(w_phi(n, psi), f), 1.0) / a2)
        assert max(ratios) < 10.0
