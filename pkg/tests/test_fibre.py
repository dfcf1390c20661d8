import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nullplane.errors import BoundaryLeak, ZeroModePresent
from nullplane.fibre import (
    IntervalSubspaceTag,
    fibre_inner_grid,
    fibre_inner_p,
    halfline_entropy,
    lagrange_shift,
    make_fibre,
    modular_flow_halfline,
    shift_error_estimate,
    symplectic_form,
    u1_act,
)
from nullplane.numerics import QuadratureSpec, SmoothBump, SmoothFn1D, integrate_1d, primitive

from oracles import HALFLINE_GOLD, adaptive_simpson, bump1

SPEC = QuadratureSpec()


@pytest.fixture(scope="module")
def kvec():
    k = SmoothFn1D.single(0.0, 1.2, derivative_order=1)
    return k, make_fibre(k, SPEC)


class TestMakeFibre:
    def test_zero_profile(self):
        xi = make_fibre(SmoothFn1D(()), SPEC)
        assert xi.norm_sq() == 0.0

    def test_rejects_zero_mode(self):
        with pytest.raises(ZeroModePresent):
            make_fibre(SmoothFn1D.single(0.0, 1.0), SPEC)

    def test_end_decay(self, kvec):
        _, xi = kvec
        # zero mode removed: value at the p -> 0 end is tiny
        assert abs(xi.values[-1]) ** 2 <= SPEC.abs_tol * (1 + np.max(np.abs(xi.values)) ** 2)
        assert abs(xi.values[0]) < 1e-14

    def test_norm_against_p_substitution_oracle(self, kvec):
        k, xi = kvec
        oracle = fibre_inner_p(k, k, SPEC).real
        # the default 512-point window carries a few 1e-7 of sampling error;
        # at 2048 points the substitution identity holds at full tolerance
        assert xi.norm_sq() == pytest.approx(oracle, rel=5e-7)
        fine_spec = QuadratureSpec(theta_points=2048)
        fine = make_fibre(k, fine_spec)
        assert fine.norm_sq() == pytest.approx(oracle, rel=fine_spec.rel_tol)

    def test_norm_oracle_refined_grid(self, kvec):
        k, xi = kvec
        mid = make_fibre(k, QuadratureSpec(theta_points=1024))
        fine = make_fibre(k, QuadratureSpec(theta_points=2048))
        coarse_err = abs(xi.norm_sq() - fine.norm_sq())
        mid_err = abs(mid.norm_sq() - fine.norm_sq())
        assert xi.norm_sq() == pytest.approx(fine.norm_sq(), rel=5e-7)
        assert mid_err < coarse_err / 100.0

    def test_interval_tag(self, kvec):
        _, xi = kvec
        assert xi.interval == IntervalSubspaceTag(-1.2, 1.2)
        with pytest.raises(ValueError):
            IntervalSubspaceTag(2.0, 1.0)


class TestSymplecticForm:
    def test_self_pairing_vanishes(self, kvec):
        k, _ = kvec
        assert abs(symplectic_form(k, k, SPEC)) < 1e-12

    def test_antisymmetry(self):
        g = SmoothFn1D.single(0.0, 1.0, derivative_order=1)
        f = SmoothFn1D.single(0.5, 1.0, derivative_order=1)
        assert symplectic_form(g, f, SPEC) == pytest.approx(-symplectic_form(f, g, SPEC), abs=1e-10)

    def test_disjoint_with_vanishing_primitive(self):
        # f entirely left of g: G = primitive(g) vanishes left of supp g
        g = SmoothFn1D.single(2.0, 0.5, derivative_order=1)
        f = SmoothFn1D.single(-2.0, 0.5, derivative_order=1)
        assert symplectic_form(g, f, SPEC) == 0.0

    def test_matches_momentum_oracle(self):
        g = SmoothFn1D.single(0.0, 1.0, derivative_order=1)
        f = SmoothFn1D.single(0.5, 1.0, derivative_order=1)
        closed = symplectic_form(g, f, SPEC)
        oracle = fibre_inner_p(g, f, SPEC).imag
        assert closed == pytest.approx(oracle, abs=1e-8)

    def test_rejects_zero_mode(self):
        g = SmoothFn1D.single(0.0, 1.0)
        f = SmoothFn1D.single(0.0, 1.0, derivative_order=1)
        with pytest.raises(ZeroModePresent):
            symplectic_form(g, f, SPEC)


class TestU1Act:
    def test_identity(self, kvec):
        _, xi = kvec
        out = u1_act(xi, 0.0, 0.0, SPEC)
        assert np.max(np.abs(out.values - xi.values)) < 1e-12

    def test_covariance_of_support(self):
        g = SmoothFn1D.single(1.5, 0.5, derivative_order=1)  # support (1, 2)
        xi = make_fibre(g, SPEC)
        out = u1_act(xi, math.log(2.0), 0.0, SPEC)
        lo, hi = out.source.support
        assert (lo, hi) == pytest.approx((2.0, 4.0), abs=1e-12)
        assert (out.interval.lower, out.interval.upper) == pytest.approx((2.0, 4.0), abs=1e-12)

    def test_source_route_matches_pointwise(self, kvec):
        k, xi = kvec
        alpha, t = 0.3, 1.1
        exact = u1_act(xi, alpha, t, SPEC, method="source")
        # the transformed profile evaluates as e^{-a} k(e^{-a}(x - t))
        x = np.linspace(-2, 4, 101)
        expected = math.exp(-alpha) * k(math.exp(-alpha) * (x - t))
        assert np.max(np.abs(exact.source(x) - expected)) < 1e-13

    def test_unitary_on_source_route(self, kvec):
        k, xi = kvec
        out = u1_act(xi, 0.3, 1.1, SPEC, method="source")
        # exact unitarity through the substitution-invariant momentum route
        n_in = fibre_inner_p(k, k, SPEC).real
        n_out = fibre_inner_p(out.source, out.source, SPEC).real
        assert n_out == pytest.approx(n_in, rel=1e-9)
        # grid norms agree at the window-resolution scale
        assert out.norm_sq() == pytest.approx(xi.norm_sq(), rel=2e-6)

    def test_grid_route_within_interpolation_tolerance(self, kvec):
        _, xi = kvec
        alpha = 0.23
        grid = u1_act(xi, alpha, 0.7, SPEC, method="grid")
        exact = u1_act(xi, alpha, 0.7, SPEC, method="source")
        est = shift_error_estimate(xi.values, xi.spacing, alpha, SPEC.abs_tol)
        err = math.sqrt(np.sum(np.abs(grid.values - exact.values) ** 2) * xi.spacing)
        assert err <= max(10 * est, 1e-9)

    def test_grid_route_norm_preservation(self, kvec):
        _, xi = kvec
        alpha = 0.23
        grid = u1_act(xi, alpha, 0.0, SPEC, method="grid")
        est = shift_error_estimate(xi.values, xi.spacing, alpha, SPEC.abs_tol)
        tol = max(SPEC.rel_tol, 6 * est / math.sqrt(xi.norm_sq()))
        assert grid.norm_sq() == pytest.approx(xi.norm_sq(), rel=tol)

    def test_boundary_leak(self):
        g = SmoothFn1D.single(1.5, 0.5, derivative_order=1)
        xi = make_fibre(g, SPEC)
        with pytest.raises(BoundaryLeak):
            lagrange_shift(xi.values, xi.spacing, 3 * SPEC.theta_cutoff, SPEC.abs_tol)


class TestModularFlowHalfline:
    def test_s_zero_identity(self, kvec):
        _, xi = kvec
        out = modular_flow_halfline(xi, 0.0, 0.0, SPEC)
        assert np.max(np.abs(out.values - xi.values)) < 1e-12

    def test_geometric_dilation_stays_in_halfline(self):
        g = SmoothFn1D.single(1.5, 0.5, derivative_order=1)  # support (1, 2) in R+
        xi = make_fibre(g, SPEC)
        out = modular_flow_halfline(xi, -0.1, 0.0, SPEC)
        scale = math.exp(0.2 * math.pi)
        lo, hi = out.source.support
        assert (lo, hi) == pytest.approx((scale * 1.0, scale * 2.0), rel=1e-12)
        assert lo > 0

    def test_general_endpoint_fixes_endpoint(self):
        g = SmoothFn1D.single(3.0, 0.5, derivative_order=1)  # support (2.5, 3.5)
        xi = make_fibre(g, SPEC)
        a = 2.0
        out = modular_flow_halfline(xi, -0.15, a, SPEC)
        scale = math.exp(0.3 * math.pi)
        lo, hi = out.source.support
        assert lo == pytest.approx(a + scale * 0.5, rel=1e-12)
        assert hi == pytest.approx(a + scale * 1.5, rel=1e-12)

    def test_group_law(self, kvec):
        _, xi = kvec
        one = modular_flow_halfline(modular_flow_halfline(xi, 0.06, 0.0, SPEC), 0.04, 0.0, SPEC)
        two = modular_flow_halfline(xi, 0.1, 0.0, SPEC)
        err = math.sqrt(np.sum(np.abs(one.values - two.values) ** 2) * xi.spacing)
        assert err < 1e-10 * math.sqrt(xi.norm_sq()) + 1e-12

    def test_borchers_commutation(self, kvec):
        # flow after translation equals scaled translation after flow
        _, xi = kvec
        s, t = 0.08, 0.9
        lhs = modular_flow_halfline(u1_act(xi, 0.0, t, SPEC), s, 0.0, SPEC)
        rhs = u1_act(modular_flow_halfline(xi, s, 0.0, SPEC), 0.0, math.exp(-2 * math.pi * s) * t, SPEC)
        err = math.sqrt(np.sum(np.abs(lhs.values - rhs.values) ** 2) * xi.spacing)
        assert err < 1e-10 * math.sqrt(xi.norm_sq()) + 1e-12


class TestHalflineEntropy:
    def test_zero_profile(self):
        assert halfline_entropy(SmoothFn1D(()), 0.0, SPEC) == 0.0

    def test_support_below_cut(self):
        k = SmoothFn1D.single(-3.0, 0.5, derivative_order=1)
        assert halfline_entropy(k, 0.0, SPEC) == 0.0

    def test_golden_value(self):
        # golden: adaptive Simpson at tol 1e-13 of pi x k^2 on (1, 3)
        k = SmoothFn1D.single(2.0, 1.0, derivative_order=1)
        live = math.pi * adaptive_simpson(
            lambda x: x * float(bump1(np.asarray([x]), 2.0, 1.0)[0]) ** 2, 1.0, 3.0, 1e-13)
        assert live == pytest.approx(HALFLINE_GOLD, abs=1e-11)
        assert halfline_entropy(k, 0.0, SPEC) == pytest.approx(HALFLINE_GOLD, abs=1e-10)

    def test_partial_overlap_restricts_integral(self):
        k = SmoothFn1D.single(0.0, 1.0, derivative_order=1)
        t = 0.3
        live = math.pi * adaptive_simpson(
            lambda x: (x - t) * float(bump1(np.asarray([x]))[0]) ** 2, t, 1.0, 1e-12)
        assert halfline_entropy(k, t, SPEC) == pytest.approx(live, abs=1e-10)

    @given(c=st.floats(-1.5, 2.5), w=st.floats(0.4, 2.0), t=st.floats(-2.0, 2.0))
    @settings(max_examples=30, deadline=None)
    def test_nonnegative(self, c, w, t):
        k = SmoothFn1D.single(c, w, derivative_order=1)
        assert halfline_entropy(k, t, SPEC) >= 0.0

    @given(c=st.floats(-1.0, 2.0), w=st.floats(0.4, 1.5),
           t1=st.floats(-2.0, 2.0), dt=st.floats(0.0, 2.0))
    @settings(max_examples=30, deadline=None)
    def test_monotone_in_cut(self, c, w, t1, dt):
        k = SmoothFn1D.single(c, w, derivative_order=1)
        assert halfline_entropy(k, t1 + dt, SPEC) <= halfline_entropy(k, t1, SPEC) + 1e-10

    def test_translation_covariance(self):
        # identical panel layout in the shifted variable: equality up to the
        # rounding of the shifted bump argument
        k = SmoothFn1D.single(0.7, 0.9, derivative_order=1)
        a = 1.37
        lhs = halfline_entropy(k, 0.2, SPEC)
        rhs = halfline_entropy(k.translated(a), 0.2 + a, SPEC)
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestGridInner:
    def test_grid_matches_p_route(self):
        g = SmoothFn1D.single(0.0, 1.2, derivative_order=1)
        f = SmoothFn1D.single(0.4, 1.0, derivative_order=1)
        grid = fibre_inner_grid(make_fibre(g, SPEC), make_fibre(f, SPEC))
        oracle = fibre_inner_p(g, f, SPEC)
        assert grid == pytest.approx(oracle, rel=2e-6, abs=1e-9)
