"""Relative entropy of coherent lightlike states on null cuts.

For a smooth compactly supported profile h on the null plane the relative
entropy of its coherent state with respect to the vacuum, for the algebra of
the region above the cut C, is the closed-form double integral

    S(C) = pi * int d x_perp int_{C}^{inf} (x_+ - C(x_perp)) h(x_+, x_perp)^2 dx_+,

a transverse quadrature of per-fibre half-line entropies.  Its deformation
derivatives along C -> C + t A with A >= 0 are

    S'(t)  = -pi * int A h^2            over the region above C + tA,
    S''(t) =  pi * int A^2 h(C + tA)^2  over the cut boundary,

so S'' >= 0 pointwise (the second-derivative positivity) and the t-integral
of S''/(2 pi) collapses to the deformation energy (1/2) int A h^2, which is
also the Weyl-overlap derivative of the deformed coherent state.  The first
derivative is the negative of the energy localised above the cut,
S'(t) = -pi * E(N_{C+tA}); see the package notes on that sign.

Lightlike integrals run in the shifted variable u = x_+ - cut with a panel
count fixed by the support length alone, which makes every entropy exactly
translation covariant, smooth in the deformation parameter, and makes the
min/max cut combination identity hold to floating-point reassociation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fibre import INV_SQRT_2PI
from .numerics import (
    DEFAULT_SPEC,
    QuadratureSpec,
    SmoothBump,
    SmoothFn1D,
    fourier_transform,
    gauss_legendre_panels,
    integrate_1d,
    kahan_sum,
)
from .nullcut import NullCutVector, ProfileLike, profile_max, profile_min
from .oneparticle import DirectIntegralVector, MassShellParams, ThinTestFunction, transverse_position_grid

__all__ = [
    "BMTState",
    "EntropyReport",
    "QnecSweep",
    "AnecReport",
    "SuperadditivityReport",
    "weyl_overlap",
    "nullcut_entropy",
    "entropy_derivatives",
    "qnec_sweep",
    "anec_identity",
    "energy_null_cut",
    "superadditivity_check",
    "reduced_state_vector",
    "shifted_profile",
]


@dataclass(frozen=True)
class BMTState:
    """Coherent-state datum: a smooth compactly supported profile on the
    null plane.  No zero-mode condition is imposed; whenever a one-particle
    vector is needed, a compensator supported strictly below the relevant
    cut restores the zero mean without changing the state above the cut."""

    h: ThinTestFunction

    @classmethod
    def separable(cls, u: SmoothFn1D, v) -> "BMTState":
        return cls(ThinTestFunction.separable(u, v))

    def fibre_profile(self, node) -> SmoothFn1D:
        return self.h.fibre_profile(node)


def _entropy_nodes(state: BMTState, spec: QuadratureSpec):
    return transverse_position_grid(state.h, spec)


def _fibre_panel_count(state: BMTState, spec: QuadratureSpec) -> int:
    lo, hi = state.h.lightlike_support()
    return 2 * max(1, math.ceil(spec.compact_rule * (hi - lo))) + 2


def _fibre_entropy(profile: SmoothFn1D, cut: float, panels: int) -> float:
    """pi * int_cut^inf (x - cut) profile(x)^2 dx in the shifted variable."""
    lo, hi = profile.support
    if hi <= cut or hi <= lo:
        return 0.0
    u, w = gauss_legendre_panels(0.0, hi - cut, panels)
    vals = profile(u + cut)
    return math.pi * float(np.dot(w, u * vals * vals))


def _fibre_mass_above(profile: SmoothFn1D, cut: float, panels: int) -> float:
    """int_cut^inf profile(x)^2 dx in the shifted variable."""
    lo, hi = profile.support
    if hi <= cut or hi <= lo:
        return 0.0
    u, w = gauss_legendre_panels(0.0, hi - cut, panels)
    vals = profile(u + cut)
    return float(np.dot(w, vals * vals))


@dataclass(frozen=True, eq=False)
class EntropyReport:
    S: float
    per_fibre: tuple[tuple[np.ndarray, float], ...]
    quadrature_error: float
    S_prime: float | None = None
    S_double_prime: float | None = None
    identity_residuals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "S": self.S,
            "quadrature_error": self.quadrature_error,
            "identity_residuals": dict(self.identity_residuals),
        }
        if self.S_prime is not None:
            d["S_prime"] = self.S_prime
        if self.S_double_prime is not None:
            d["S_double_prime"] = self.S_double_prime
        return d


def nullcut_entropy(state: BMTState, C: ProfileLike, params: MassShellParams,
                    spec: QuadratureSpec = DEFAULT_SPEC,
                    nodes: np.ndarray | None = None,
                    weights: np.ndarray | None = None,
                    threads: int = 1) -> EntropyReport:
    """Relative entropy of the coherent state of h for the region above C."""
    if nodes is None:
        nodes, weights = _entropy_nodes(state, spec)
    cuts = np.atleast_1d(np.asarray(C(nodes), dtype=float))
    panels = _fibre_panel_count(state, spec)
    profiles = [state.fibre_profile(nodes[j]) for j in range(nodes.shape[0])]

    def one(j: int) -> float:
        return _fibre_entropy(profiles[j], float(cuts[j]), panels)

    per = _fibre_map(one, nodes.shape[0], threads)
    coarse = np.asarray(
        [_fibre_entropy(profiles[j], float(cuts[j]), max(2, panels // 2)) for j in range(nodes.shape[0])]
    )
    S = float(kahan_sum(weights * per))
    S_coarse = float(kahan_sum(weights * coarse))
    return EntropyReport(
        S=S,
        per_fibre=tuple((nodes[j], float(per[j])) for j in range(nodes.shape[0])),
        quadrature_error=max(abs(S - S_coarse), spec.abs_tol),
    )


def _fibre_map(fn, count: int, threads: int) -> np.ndarray:
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(fn, range(count)))
        return np.asarray(vals)
    return np.asarray([fn(j) for j in range(count)])


def _require_nonneg(A: ProfileLike, nodes: np.ndarray) -> np.ndarray:
    vals = np.atleast_1d(np.asarray(A(nodes), dtype=float))
    if vals.size and vals.min() < 0.0:
        raise ValueError(f"deformation profile dips to {vals.min():.3e} on the grid")
    return vals


def entropy_derivatives(state: BMTState, C: ProfileLike, A: ProfileLike, t: float,
                        params: MassShellParams, spec: QuadratureSpec = DEFAULT_SPEC,
                        nodes: np.ndarray | None = None,
                        weights: np.ndarray | None = None) -> tuple[float, float]:
    """Closed-form first and second t-derivatives of S(C + tA)."""
    if nodes is None:
        nodes, weights = _entropy_nodes(state, spec)
    a_vals = _require_nonneg(A, nodes)
    cuts = np.atleast_1d(np.asarray(C(nodes), dtype=float)) + t * a_vals
    panels = _fibre_panel_count(state, spec)
    first = np.zeros(nodes.shape[0])
    second = np.zeros(nodes.shape[0])
    for j in range(nodes.shape[0]):
        prof = state.fibre_profile(nodes[j])
        first[j] = a_vals[j] * _fibre_mass_above(prof, float(cuts[j]), panels)
        hc = prof(np.asarray([cuts[j]]))[0]
        second[j] = a_vals[j] ** 2 * hc * hc
    s_prime = -math.pi * float(kahan_sum(weights * first))
    s_double = math.pi * float(kahan_sum(weights * second))
    return s_prime, s_double


@dataclass(frozen=True, eq=False)
class QnecSweep:
    t_grid: np.ndarray
    S: np.ndarray
    S_prime: np.ndarray
    S_double_prime: np.ndarray
    saturated: np.ndarray           # bool mask: S'' below saturation threshold
    min_second: float

    @property
    def qnec_holds(self) -> bool:
        return bool(self.min_second >= -1e-10)

    def margins(self) -> np.ndarray:
        return self.S_double_prime + 1e-10


def qnec_sweep(state: BMTState, C: ProfileLike, A: ProfileLike, t_grid,
               params: MassShellParams, spec: QuadratureSpec = DEFAULT_SPEC,
               threads: int = 1) -> QnecSweep:
    """Entropy and derivatives along C + tA; the closed-form second
    derivative is non-negative term by term, so the sweep reports where the
    bound is strict versus saturated."""
    nodes, weights = _entropy_nodes(state, spec)
    _require_nonneg(A, nodes)
    ts = np.asarray(t_grid, dtype=float)
    S = np.zeros(ts.size)
    S1 = np.zeros(ts.size)
    S2 = np.zeros(ts.size)
    for i, t in enumerate(ts):
        shifted = _ShiftedProfile(C, A, float(t))
        S[i] = nullcut_entropy(state, shifted, params, spec, nodes=nodes,
                               weights=weights, threads=threads).S
        S1[i], S2[i] = entropy_derivatives(state, C, A, float(t), params, spec,
                                           nodes=nodes, weights=weights)
    scale = float(np.max(S2)) if ts.size else 0.0
    saturated = S2 <= 1e-12 * max(scale, 1.0)
    return QnecSweep(t_grid=ts, S=S, S_prime=S1, S_double_prime=S2,
                     saturated=saturated, min_second=float(np.min(S2)) if ts.size else 0.0)


@dataclass(frozen=True)
class _ShiftedProfile:
    base: ProfileLike
    deform: ProfileLike
    t: float

    def __call__(self, x_perp):
        b = np.atleast_1d(np.asarray(self.base(x_perp), dtype=float))
        a = np.atleast_1d(np.asarray(self.deform(x_perp), dtype=float))
        out = b + self.t * a
        return float(out[0]) if np.asarray(x_perp).ndim <= 1 else out


def shifted_profile(C: ProfileLike, A: ProfileLike, t: float) -> _ShiftedProfile:
    """The deformed cut C + t A as an evaluable profile."""
    return _ShiftedProfile(C, A, float(t))


def weyl_overlap(xi: DirectIntegralVector | NullCutVector,
                 eta: DirectIntegralVector | NullCutVector) -> complex:
    """Vacuum overlap of two coherent vectors,
    e^{-(||xi||^2 + ||eta||^2)/2} e^{<xi, eta>}."""
    a = xi.vector if isinstance(xi, NullCutVector) else xi
    b = eta.vector if isinstance(eta, NullCutVector) else eta
    return complex(np.exp(-0.5 * (a.norm_sq() + b.norm_sq()) + a.inner(b)))


def reduced_state_vector(state: BMTState, C: ProfileLike, params: MassShellParams,
                         spec: QuadratureSpec = DEFAULT_SPEC,
                         nodes: np.ndarray | None = None,
                         weights: np.ndarray | None = None):
    """One-particle vector of the state after the zero-mode reduction.

    Per fibre, a compensator bump supported strictly below the cut is added
    so each lightlike profile has exact zero mean; the state is unchanged by
    anything localised above C.  Returns (vector, compensator vector); the
    latter is zero when h already has fibre-wise zero mean.
    """
    if nodes is None:
        nodes, weights = _entropy_nodes(state, spec)
    cuts = np.atleast_1d(np.asarray(C(nodes), dtype=float))
    lo, hi = state.h.lightlike_support()
    width = max(0.5, 0.25 * (hi - lo))
    profiles = []
    comp_profiles = []
    any_comp = False
    for j in range(nodes.shape[0]):
        prof = state.fibre_profile(nodes[j])
        mean = 0.0
        if not prof.zero_mean:
            mean = integrate_1d(prof, spec=spec)
        if abs(mean) > 0.0:
            any_comp = True
            # strictly below both the cut and the support of h, so the
            # compensator is invisible above C and orthogonal to h in the
            # deformation energy form
            top = min(float(cuts[j]), lo)
            unit = SmoothBump(top - 1.5 * width, width, 1.0, 0)
            unit_mass = integrate_1d(SmoothFn1D(((1.0, unit),)), spec=spec)
            comp = SmoothFn1D(((-mean / unit_mass, unit),))
        else:
            comp = SmoothFn1D(())
        comp_profiles.append(comp)
        profiles.append(SmoothFn1D(prof.terms + comp.terms))
    theta = spec.theta_grid()
    p = np.exp(-theta)
    fib = np.empty((nodes.shape[0], theta.size), dtype=complex)
    fib_c = np.zeros((nodes.shape[0], theta.size), dtype=complex)
    for j in range(nodes.shape[0]):
        fib[j] = INV_SQRT_2PI * fourier_transform(profiles[j], p, spec)
        if comp_profiles[j].terms:
            fib_c[j] = INV_SQRT_2PI * fourier_transform(comp_profiles[j], p, spec)
    vec = DirectIntegralVector(theta=theta, nodes=nodes, weights=weights, fibres=fib,
                               representation="spatial", params=params, source=None)
    comp_vec = DirectIntegralVector(theta=theta, nodes=nodes, weights=weights, fibres=fib_c,
                                    representation="spatial", params=params, source=None)
    return vec, (comp_vec if any_comp else None)


def _deformation_phase(v: DirectIntegralVector, a_vals: np.ndarray, s: float) -> DirectIntegralVector:
    phase = np.exp(1j * s * np.outer(a_vals, np.exp(-v.theta)))
    return DirectIntegralVector(theta=v.theta, nodes=v.nodes, weights=v.weights,
                                fibres=v.fibres * phase, representation=v.representation,
                                params=v.params, source=None)


def _overlap_derivative(v: DirectIntegralVector, a_vals: np.ndarray, step: float) -> float:
    """Im d/ds <w(v) Omega, Gamma(U_A(s)) w(v) Omega> at s = 0 by Richardson
    central differences of the Weyl overlap."""

    def diff(s: float) -> complex:
        fp = weyl_overlap(v, _deformation_phase(v, a_vals, s))
        fm = weyl_overlap(v, _deformation_phase(v, a_vals, -s))
        return (fp - fm) / (2.0 * s)

    d1 = diff(step)
    d2 = diff(step / 2.0)
    return float(((4.0 * d2 - d1) / 3.0).imag)


@dataclass(frozen=True)
class AnecReport:
    route_integral_second_derivative: float   # (1/2 pi) int dt S''(t)
    route_energy_density: float               # (1/2) int A h^2
    route_weyl_derivative: float              # overlap-derivative route
    t_window: tuple[float, float]

    @property
    def residual_integral_vs_density(self) -> float:
        return self.route_integral_second_derivative - self.route_energy_density

    @property
    def residual_weyl_vs_density(self) -> float:
        return self.route_weyl_derivative - self.route_energy_density

    def to_dict(self) -> dict:
        return {
            "route_a": self.route_integral_second_derivative,
            "route_b": self.route_energy_density,
            "route_c": self.route_weyl_derivative,
            "t_window": list(self.t_window),
            "residual_a_vs_b": self.residual_integral_vs_density,
            "residual_c_vs_b": self.residual_weyl_vs_density,
        }


def anec_identity(state: BMTState, C: ProfileLike, A: ProfileLike,
                  params: MassShellParams, spec: QuadratureSpec = DEFAULT_SPEC,
                  fd_step: float = 1e-3) -> AnecReport:
    """Three routes to the averaged deformation energy.

    (a) t-quadrature of the closed-form S''(t)/(2 pi) over a window from
        which the deformed cut clears the support of h on both sides;
    (b) direct quadrature of (1/2) int A h^2;
    (c) the Weyl-overlap derivative of the reduced one-particle vector under
        the fibre-wise deformation phase, with the compensator self-energy
        subtracted (its cross term with h vanishes by disjoint supports).

    Routes (a) and (b) never involve grids or vectors; route (c) exercises
    the full one-particle machinery.
    """
    nodes, weights = _entropy_nodes(state, spec)
    a_vals = _require_nonneg(A, nodes)
    c_vals = np.atleast_1d(np.asarray(C(nodes), dtype=float))
    lo, hi = state.h.lightlike_support()

    # route b
    panels = _fibre_panel_count(state, spec)
    perp = np.zeros(nodes.shape[0])
    for j in range(nodes.shape[0]):
        prof = state.fibre_profile(nodes[j])
        perp[j] = a_vals[j] * _fibre_mass_above(prof, prof.support[0] - 1.0, panels)
    route_b = 0.5 * float(kahan_sum(weights * perp))

    # route a: integrate S'' over t such that c + t a sweeps through supp h
    pos = a_vals > 1e-12
    if not np.any(pos):
        t_lo, t_hi = -1.0, 1.0
    else:
        t_lo = float(np.min((lo - c_vals[pos]) / a_vals[pos]))
        t_hi = float(np.max((hi - c_vals[pos]) / a_vals[pos]))
        pad = 0.2 * (t_hi - t_lo)
        t_lo, t_hi = t_lo - pad, t_hi + pad
    n_pan = max(8, math.ceil(2.0 * (t_hi - t_lo)))
    tq, tw = gauss_legendre_panels(t_lo, t_hi, 4 * n_pan)
    svals = np.zeros(tq.size)
    for i, t in enumerate(tq):
        _, s2 = entropy_derivatives(state, C, A, float(t), params, spec,
                                    nodes=nodes, weights=weights)
        svals[i] = s2
    route_a = float(np.dot(tw, svals)) / (2.0 * math.pi)

    # route c
    vec, comp = reduced_state_vector(state, C, params, spec, nodes=nodes, weights=weights)
    route_c = _overlap_derivative(vec, a_vals, fd_step)
    if comp is not None:
        route_c -= _overlap_derivative(comp, a_vals, fd_step)
    return AnecReport(route_integral_second_derivative=route_a,
                      route_energy_density=route_b,
                      route_weyl_derivative=route_c,
                      t_window=(t_lo, t_hi))


def energy_null_cut(state: BMTState, A: ProfileLike, C: ProfileLike,
                    params: MassShellParams, spec: QuadratureSpec = DEFAULT_SPEC,
                    nodes: np.ndarray | None = None,
                    weights: np.ndarray | None = None) -> float:
    """Deformation energy localised above the cut,
    int dx_perp A(x_perp) int_C^inf h^2 dx_+; non-negative, and equal to
    -S'(0)/pi for the same cut and deformation."""
    if nodes is None:
        nodes, weights = _entropy_nodes(state, spec)
    a_vals = _require_nonneg(A, nodes)
    cuts = np.atleast_1d(np.asarray(C(nodes), dtype=float))
    panels = _fibre_panel_count(state, spec)
    vals = np.zeros(nodes.shape[0])
    for j in range(nodes.shape[0]):
        prof = state.fibre_profile(nodes[j])
        vals[j] = a_vals[j] * _fibre_mass_above(prof, float(cuts[j]), panels)
    return float(kahan_sum(weights * vals))


@dataclass(frozen=True)
class SuperadditivityReport:
    S_union: float
    S_intersection: float
    S_first: float
    S_second: float
    residual: float
    scale: float

    def to_dict(self) -> dict:
        return {
            "S_union": self.S_union, "S_intersection": self.S_intersection,
            "S_first": self.S_first, "S_second": self.S_second,
            "residual": self.residual, "scale": self.scale,
        }


def superadditivity_check(state: BMTState, C1: ProfileLike, C2: ProfileLike,
                          params: MassShellParams, spec: QuadratureSpec = DEFAULT_SPEC) -> SuperadditivityReport:
    """S(min) + S(max) - S(C1) - S(C2); identically zero for these states
    because at every transverse point {min, max} = {C1, C2}."""
    nodes, weights = _entropy_nodes(state, spec)
    kw = dict(params=params, spec=spec, nodes=nodes, weights=weights)
    s_u = nullcut_entropy(state, profile_min(C1, C2), **kw).S
    s_i = nullcut_entropy(state, profile_max(C1, C2), **kw).S
    s_1 = nullcut_entropy(state, C1, **kw).S
    s_2 = nullcut_entropy(state, C2, **kw).S
    scale = max(abs(s_u), abs(s_i), abs(s_1), abs(s_2), 1e-300)
    return SuperadditivityReport(S_union=s_u, S_intersection=s_i, S_first=s_1,
                                 S_second=s_2, residual=(s_u + s_i) - (s_1 + s_2),
                                 scale=scale)
