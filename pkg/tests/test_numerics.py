import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nullplane.errors import BoundaryLeak, NonConvergent
from nullplane.numerics import (
    QuadratureSpec,
    SmoothBump,
    SmoothFn1D,
    balanced_pair,
    fourier_transform,
    integrate_1d,
    kahan_sum,
    primitive,
    spectral_diff,
)

from oracles import BUMP_MASS, adaptive_simpson, scalar


SPEC = QuadratureSpec()


class TestSmoothBump:
    def test_vanishes_outside_support(self):
        b = SmoothBump(0.5, 2.0)
        assert b(np.array([-1.5, 2.5, 10.0])).tolist() == [0.0, 0.0, 0.0]
        assert b(0.5) == pytest.approx(math.exp(-1.0))

    def test_derivative_is_analytic_derivative(self):
        b0 = SmoothBump(0.3, 1.7, amplitude=2.0)
        b1 = SmoothBump(0.3, 1.7, amplitude=2.0, derivative_order=1)
        x = np.linspace(-1.2, 1.8, 57)
        h = 1e-6
        fd = (b0(x + h) - b0(x - h)) / (2 * h)
        assert np.max(np.abs(fd - b1(x))) < 1e-7

    def test_dilated_shifted_matches_pointwise(self):
        for order in (0, 1):
            b = SmoothBump(0.6, 0.9, amplitude=1.3, derivative_order=order)
            alpha, t = 0.37, -0.8
            moved = b.dilated_shifted(alpha, t)
            x = np.linspace(-4, 4, 201)
            expected = math.exp(-alpha) * b(math.exp(-alpha) * (x - t))
            assert np.max(np.abs(moved(x) - expected)) < 1e-14

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            SmoothBump(0.0, -1.0)
        with pytest.raises(ValueError):
            SmoothBump(0.0, 1.0, derivative_order=2)


class TestIntegrate1D:
    def test_zero_function(self):
        assert integrate_1d(SmoothFn1D(()), (0.0, 1.0), SPEC) == 0.0

    def test_order1_bump_integrates_to_zero(self):
        d = SmoothFn1D.single(0.7, 1.4, derivative_order=1)
        assert abs(integrate_1d(d, spec=SPEC)) <= SPEC.abs_tol

    def test_bump_mass_golden(self):
        # golden: adaptive Simpson, tol 1e-13 (regenerated here)
        live = adaptive_simpson(scalar(SmoothFn1D.single(0.0, 1.0)), -1.0, 1.0, 1e-13)
        assert live == pytest.approx(BUMP_MASS, abs=1e-12)
        val = integrate_1d(SmoothFn1D.single(0.0, 1.0), spec=SPEC)
        assert val == pytest.approx(BUMP_MASS, abs=1e-11)

    def test_scaling(self):
        val = integrate_1d(SmoothFn1D.single(2.0, 3.0, amplitude=0.5), spec=SPEC)
        assert val == pytest.approx(0.5 * 3.0 * BUMP_MASS, rel=1e-10)

    def test_infinite_interval_requires_support(self):
        with pytest.raises(ValueError):
            integrate_1d(lambda x: np.exp(-x * x), (None, None), SPEC)

    def test_nonconvergent_on_rough_integrand(self):
        rng = np.random.default_rng(1)
        noise = rng.normal(size=4096)

        def f(x):
            idx = np.clip((np.asarray(x) * 4096).astype(int), 0, 4095)
            return noise[idx]

        with pytest.raises(NonConvergent):
            integrate_1d(f, (0.0, 1.0), QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14))

    @given(a=st.floats(-3, 3), b=st.floats(-3, 3))
    @settings(max_examples=25, deadline=None)
    def test_linearity(self, a, b):
        f = SmoothFn1D.single(0.0, 1.0)
        g = SmoothFn1D.single(0.5, 0.8, derivative_order=1)
        combo = f.scaled(a) + g.scaled(b)
        lhs = integrate_1d(combo, spec=SPEC)
        rhs = a * integrate_1d(f, spec=SPEC) + b * integrate_1d(g, spec=SPEC)
        assert abs(lhs - rhs) <= 2 * SPEC.abs_tol * (1 + abs(a) + abs(b))

    @given(c=st.floats(-2, 2), w=st.floats(0.3, 3.0))
    @settings(max_examples=25, deadline=None)
    def test_zero_mean_property(self, c, w):
        d = SmoothFn1D.single(c, w, derivative_order=1)
        assert abs(integrate_1d(d, spec=SPEC)) <= SPEC.abs_tol


class TestPrimitive:
    def test_below_support(self):
        d = SmoothFn1D.single(0.0, 1.0, derivative_order=1)
        assert primitive(d, -5.0, SPEC) == 0.0

    def test_beyond_support_order1(self):
        d = SmoothFn1D.single(0.0, 1.0, derivative_order=1)
        assert abs(primitive(d, 7.0, SPEC)) < 1e-12

    def test_beyond_support_order0(self):
        f = SmoothFn1D.single(0.0, 1.0)
        assert primitive(f, 10.0, SPEC) == pytest.approx(BUMP_MASS, abs=1e-11)

    def test_primitive_of_derivative_recovers_bump(self):
        d = SmoothFn1D.single(0.2, 1.3, derivative_order=1)
        f = SmoothBump(0.2, 1.3)
        xs = np.linspace(-1.5, 2.0, 23)
        vals = primitive(d, xs, SPEC)
        assert np.max(np.abs(vals - f(xs))) < 1e-11

    def test_matches_total_integral(self):
        f = SmoothFn1D.single(-0.3, 0.9, amplitude=1.7)
        assert primitive(f, 1e3, SPEC) == pytest.approx(integrate_1d(f, spec=SPEC), abs=SPEC.abs_tol)


class TestSpectralDiff:
    def test_constant_grid(self):
        v = np.full(64, 3.0)
        assert np.max(np.abs(spectral_diff(v, 0.1, abs_tol=1.0))) < 1e-12

    def test_exact_on_cubics_interior(self):
        x = np.linspace(0, 1, 41)
        v = x**3 - 2 * x**2 + x  # vanishes at both ends, so the gate stays quiet
        d = spectral_diff(v, x[1] - x[0])
        exact = 3 * x**2 - 4 * x + 1
        rel = np.abs(d[2:-2] - exact[2:-2]) / np.maximum(np.abs(exact[2:-2]), 1e-3)
        assert np.max(rel) < 1e-10

    def test_windowed_sine_fourth_order(self):
        def err(n):
            x = np.linspace(-10, 10, n)
            w = np.exp(-0.5 * x * x)
            d = spectral_diff(np.sin(x) * w, x[1] - x[0])
            exact = np.cos(x) * w + np.sin(x) * (-x * w)
            return np.max(np.abs(d - exact))

        assert err(512) < 5e-6
        assert err(1024) < err(512) / 12.0  # fourth-order convergence

    def test_gaussian(self):
        x = np.linspace(-9, 9, 512)
        v = np.exp(-x * x)
        d = spectral_diff(v, x[1] - x[0])
        assert np.max(np.abs(d - (-2 * x * v))) < 5e-6

    def test_boundary_leak(self):
        v = np.ones(32)
        with pytest.raises(BoundaryLeak):
            spectral_diff(v, 0.1)


class TestFourierTransform:
    def test_zero_frequency_is_integral(self):
        f = SmoothFn1D.single(0.4, 1.1)
        assert fourier_transform(f, 0.0, SPEC) == pytest.approx(integrate_1d(f, spec=SPEC), abs=1e-12)

    def test_against_adaptive_oracle(self):
        f = SmoothFn1D.single(0.3, 1.0)
        for p in (0.7, 5.0, 31.0, 140.0):
            re = adaptive_simpson(lambda x: scalar(f)(x) * math.cos(x * p), -0.7, 1.3, 1e-13)
            im = adaptive_simpson(lambda x: scalar(f)(x) * math.sin(x * p), -0.7, 1.3, 1e-13)
            got = fourier_transform(f, p, SPEC)
            assert abs(got - (re + 1j * im)) < 1e-10

    def test_translation_phase(self):
        f = SmoothFn1D.single(0.0, 1.0, derivative_order=1)
        g = f.translated(0.9)
        p = np.array([0.5, 2.0, 11.0])
        fa = fourier_transform(f, p, SPEC)
        ga = fourier_transform(g, p, SPEC)
        assert np.max(np.abs(ga - np.exp(1j * 0.9 * p) * fa)) < 1e-12

    def test_clamp_region_is_zero(self):
        f = SmoothFn1D.single(0.0, 1.0)
        assert fourier_transform(f, 5e4, SPEC) == 0.0


class TestKahan:
    def test_compensated_sum(self):
        vals = np.array([1.0, 1e-16, 1e-16, 1e-16, 1e-16] * 100)
        assert kahan_sum(vals) == pytest.approx(100.0 + 400e-16, abs=0.0)

    def test_complex(self):
        vals = np.array([1 + 1j, 2 - 0.5j, -3 + 0.25j])
        assert kahan_sum(vals) == pytest.approx(0.0 + 0.75j)


def test_balanced_pair_moments():
    g = balanced_pair(-0.4, 1.5)
    assert g.zero_mean
    xg = lambda x: x * g(x)
    moment = adaptive_simpson(lambda x: float(xg(np.asarray([x]))[0]), *g.support, 1e-12)
    assert abs(moment) < 1e-11


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(theta_points=4)
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(compact_rule=2)
