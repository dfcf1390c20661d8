"""Null-cut geometry: transverse cut profiles, distorted translations and
dilations, the modular flow and generator of cut regions, and geometric
half-sided-invariance witnesses.

All distorted operations are transverse-diagonal: the fibre over x_perp is
transformed by the scalar value C(x_perp) and fibres never mix.  The sign
convention is fixed so that the inverse flow at positive parameter dilates
supports away from the cut,

    Delta^{-is}, s >= 0:   x_+  ->  C + e^{2 pi s} (x_+ - C),

which is the direction in which deeper cuts stay inside shallower ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ProfileOrderViolation
from .fibre import INV_SQRT_2PI, lagrange_shift
from .numerics import DEFAULT_SPEC, QuadratureSpec, SmoothBump, SmoothFn1D, fourier_transform, spectral_diff
from .oneparticle import DirectIntegralVector, MassShellParams, ThinTestFunction, spatial_restrict, transverse_position_grid

__all__ = [
    "CutProfile",
    "CombinedProfile",
    "ProfileLike",
    "NullCutVector",
    "profile_min",
    "profile_max",
    "nullcut_vector",
    "distorted_translate",
    "distorted_dilate",
    "modular_flow_nullcut",
    "modular_generator_apply",
    "hsmi_support_witness",
    "HsmiReport",
]

_NONNEG_PROBE = 4096


@dataclass(frozen=True)
class CutProfile:
    """Constant plus a finite sum of bump products over the transverse
    coordinates; bounded, with the variable part compactly supported."""

    base: float = 0.0
    bumps: tuple[tuple[float, tuple[SmoothBump, ...]], ...] = ()
    nonneg_flag: bool = False

    def __post_init__(self):
        if self.nonneg_flag:
            probe = self._probe_values()
            if probe.size and probe.min() < 0.0:
                raise ValueError(f"profile marked non-negative dips to {probe.min():.3e}")

    @classmethod
    def constant(cls, value: float, nonneg: bool | None = None) -> "CutProfile":
        return cls(base=value, nonneg_flag=(value >= 0.0) if nonneg is None else nonneg)

    @classmethod
    def of_bumps(cls, base: float, bumps, nonneg: bool = False) -> "CutProfile":
        packed = []
        for coeff, factors in bumps:
            if isinstance(factors, SmoothBump):
                factors = (factors,)
            packed.append((float(coeff), tuple(factors)))
        return cls(base=base, bumps=tuple(packed), nonneg_flag=nonneg)

    def _probe_values(self) -> np.ndarray:
        if not self.bumps:
            return np.asarray([self.base])
        dims = len(self.bumps[0][1])
        los = [min(f[k].support[0] for _, f in self.bumps) for k in range(dims)]
        his = [max(f[k].support[1] for _, f in self.bumps) for k in range(dims)]
        per_dim = max(8, int(round(_NONNEG_PROBE ** (1.0 / dims))))
        axes = [np.linspace(lo, hi, per_dim) for lo, hi in zip(los, his)]
        grids = np.meshgrid(*axes, indexing="ij")
        nodes = np.column_stack([g.ravel() for g in grids])
        return self(nodes)

    def __call__(self, x_perp) -> np.ndarray | float:
        nodes = np.atleast_2d(np.asarray(x_perp, dtype=float))
        out = np.full(nodes.shape[0], self.base)
        for coeff, factors in self.bumps:
            term = np.full(nodes.shape[0], coeff)
            for k, f in enumerate(factors):
                term = term * f(nodes[:, k])
            out += term
        return float(out[0]) if np.asarray(x_perp).ndim <= 1 else out

    def shifted(self, a: float) -> "CutProfile":
        return CutProfile(self.base + a, self.bumps, nonneg_flag=False)


@dataclass(frozen=True)
class CombinedProfile:
    """Pointwise min or max of two profiles; continuous, evaluable, and
    usable wherever a CutProfile is."""

    left: "ProfileLike"
    right: "ProfileLike"
    mode: str  # "min" | "max"

    def __call__(self, x_perp):
        a = np.atleast_1d(np.asarray(self.left(x_perp), dtype=float))
        b = np.atleast_1d(np.asarray(self.right(x_perp), dtype=float))
        out = np.minimum(a, b) if self.mode == "min" else np.maximum(a, b)
        return float(out[0]) if np.asarray(x_perp).ndim <= 1 else out


ProfileLike = CutProfile | CombinedProfile


def profile_min(a: ProfileLike, b: ProfileLike) -> CombinedProfile:
    return CombinedProfile(a, b, "min")


def profile_max(a: ProfileLike, b: ProfileLike) -> CombinedProfile:
    return CombinedProfile(a, b, "max")


@dataclass(frozen=True, eq=False)
class NullCutVector:
    """Spatial-representation vector together with per-fibre profile
    witnesses (the lightlike profile over each transverse node) and the cut
    it is claimed to be localised in."""

    vector: DirectIntegralVector
    witnesses: tuple[SmoothFn1D, ...]
    cut: ProfileLike | None = None

    @property
    def theta(self) -> np.ndarray:
        return self.vector.theta

    @property
    def nodes(self) -> np.ndarray:
        return self.vector.nodes

    def norm_sq(self) -> float:
        return self.vector.norm_sq()

    def witness_supports(self) -> np.ndarray:
        return np.asarray([w.support for w in self.witnesses])

    def localisation_margin(self) -> float | None:
        """Smallest distance of a witness lower edge above the cut, or None
        when no cut is attached."""
        if self.cut is None:
            return None
        cuts = np.atleast_1d(self.cut(self.nodes))
        lows = self.witness_supports()[:, 0]
        return float(np.min(lows - cuts))


def nullcut_vector(g: ThinTestFunction, params: MassShellParams,
                   spec: QuadratureSpec = DEFAULT_SPEC,
                   cut: ProfileLike | None = None,
                   nodes: np.ndarray | None = None,
                   weights: np.ndarray | None = None) -> NullCutVector:
    """Spatial vector of a thin profile with per-fibre witnesses attached."""
    vec = spatial_restrict(g, params, spec, nodes=nodes, weights=weights)
    witnesses = tuple(g.fibre_profile(vec.nodes[j]) for j in range(vec.nodes.shape[0]))
    return NullCutVector(vector=vec, witnesses=witnesses, cut=cut)


def _profile_at_nodes(C: ProfileLike, nodes: np.ndarray) -> np.ndarray:
    return np.atleast_1d(np.asarray(C(nodes), dtype=float))


def _phase_translate(fibres: np.ndarray, theta: np.ndarray, cuts: np.ndarray) -> np.ndarray:
    phase = np.exp(1j * np.outer(cuts, np.exp(-theta)))
    return fibres * phase


def distorted_translate(v: DirectIntegralVector | NullCutVector, C: ProfileLike):
    """Fibre at x_perp multiplied by e^{i C(x_perp) e^{-theta}}; witnesses
    translate by C(x_perp).  Exact (no interpolation)."""
    if isinstance(v, NullCutVector):
        vec = distorted_translate(v.vector, C)
        cuts = _profile_at_nodes(C, v.nodes)
        wits = tuple(w.translated(float(c)) for w, c in zip(v.witnesses, cuts))
        return NullCutVector(vector=vec, witnesses=wits, cut=v.cut)
    if v.representation != "spatial":
        raise ValueError("distorted translations act on the spatial representation")
    cuts = _profile_at_nodes(C, v.nodes)
    fib = _phase_translate(v.fibres, v.theta, cuts)
    return DirectIntegralVector(theta=v.theta, nodes=v.nodes, weights=v.weights,
                                fibres=fib, representation="spatial",
                                params=v.params, source=None)


def distorted_dilate(v: DirectIntegralVector | NullCutVector, C: ProfileLike,
                     spec: QuadratureSpec = DEFAULT_SPEC, method: str = "auto"):
    """Fibre-wise theta shift by C(x_perp); witnesses rescale
    x_+ -> e^{C(x_perp)} x_+."""
    if isinstance(v, NullCutVector):
        cuts = _profile_at_nodes(C, v.nodes)
        wits = tuple(w.dilated_shifted(float(c), 0.0) for w, c in zip(v.witnesses, cuts))
        if method in ("auto", "source"):
            fib = _resample_from_witnesses(wits, v.theta, spec)
        else:
            fib = _rowwise_shift(v.vector.fibres, v.vector.spacing, cuts, spec)
        vec = DirectIntegralVector(theta=v.theta, nodes=v.nodes, weights=v.vector.weights,
                                   fibres=fib, representation="spatial",
                                   params=v.vector.params, source=None)
        return NullCutVector(vector=vec, witnesses=wits, cut=v.cut)
    if v.representation != "spatial":
        raise ValueError("distorted dilations act on the spatial representation")
    cuts = _profile_at_nodes(C, v.nodes)
    fib = _rowwise_shift(v.fibres, v.spacing, cuts, spec)
    return DirectIntegralVector(theta=v.theta, nodes=v.nodes, weights=v.weights,
                                fibres=fib, representation="spatial",
                                params=v.params, source=None)


def _rowwise_shift(fibres: np.ndarray, spacing: float, shifts: np.ndarray,
                   spec: QuadratureSpec) -> np.ndarray:
    out = np.empty_like(fibres)
    for j in range(fibres.shape[0]):
        out[j] = lagrange_shift(fibres[j], spacing, float(shifts[j]), spec.abs_tol)
    return out


def _resample_from_witnesses(witnesses, theta: np.ndarray, spec: QuadratureSpec) -> np.ndarray:
    p = np.exp(-theta)
    fib = np.empty((len(witnesses), theta.size), dtype=complex)
    for j, w in enumerate(witnesses):
        fib[j] = INV_SQRT_2PI * fourier_transform(w, p, spec)
    return fib


def modular_flow_nullcut(v: NullCutVector, C: ProfileLike, s: float,
                         spec: QuadratureSpec = DEFAULT_SPEC, method: str = "auto") -> NullCutVector:
    """Modular unitary Delta^{is} of the cut region, fibre-wise the half-line
    flow conjugated by the translation to C(x_perp):

        values'(theta) = e^{i C (1 - e^{-2 pi s}) e^{-theta}} values(theta + 2 pi s),

    acting on witnesses as x_+ -> C + e^{-2 pi s}(x_+ - C).
    """
    cuts = _profile_at_nodes(C, v.nodes)
    alpha = -2.0 * math.pi * s
    scale = math.exp(alpha)
    wits = tuple(w.dilated_shifted(alpha, float(c) * (1.0 - scale))
                 for w, c in zip(v.witnesses, cuts))
    if method in ("auto", "source"):
        fib = _resample_from_witnesses(wits, v.theta, spec)
    else:
        fib = lagrange_shift(v.vector.fibres, v.vector.spacing, alpha, spec.abs_tol)
        phase = np.exp(1j * np.outer(cuts * (1.0 - scale), np.exp(-v.theta)))
        fib = fib * phase
    vec = DirectIntegralVector(theta=v.theta, nodes=v.nodes, weights=v.vector.weights,
                               fibres=fib, representation="spatial",
                               params=v.vector.params, source=None)
    return NullCutVector(vector=vec, witnesses=wits, cut=v.cut)


def modular_generator_apply(v: NullCutVector, C: ProfileLike,
                            spec: QuadratureSpec = DEFAULT_SPEC,
                            oversample: int = 9) -> DirectIntegralVector:
    """Apply the modular generator of the cut region fibre-wise:

        log(Delta_C) = -2 pi i d/dtheta + 2 pi C(x_perp) e^{-theta},

    the half-line generator conjugated to the cut.  The derivative is taken
    with the fourth-order stencil; with witnesses present the fibre is
    resampled on an odd oversampled grid (whose nodes contain the original
    ones) before differencing, which keeps the stencil error well below the
    flow's finite-difference scale.
    """
    theta = v.theta
    cuts = _profile_at_nodes(C, v.nodes)
    if v.witnesses is not None and oversample > 1:
        if oversample % 2 == 0:
            raise ValueError("oversample must be odd so grids nest")
        n_fine = theta.size * oversample
        spacing = (theta[-1] - theta[0] + v.vector.spacing) / n_fine
        start = theta[0] - 0.5 * v.vector.spacing
        fine = start + (np.arange(n_fine) + 0.5) * spacing
        fib_fine = _resample_from_witnesses(v.witnesses, fine, spec)
        d_fine = spectral_diff(fib_fine, spacing, spec.abs_tol)
        take = slice(oversample // 2, None, oversample)
        dv = d_fine[:, take]
    else:
        dv = spectral_diff(v.vector.fibres, v.vector.spacing, spec.abs_tol)
    mult = 2.0 * math.pi * np.outer(cuts, np.exp(-theta))
    out = -2j * math.pi * dv + mult * v.vector.fibres
    return DirectIntegralVector(theta=theta, nodes=v.nodes, weights=v.vector.weights,
                                fibres=out, representation="spatial",
                                params=v.vector.params, source=None)


@dataclass(frozen=True)
class HsmiReport:
    s_values: tuple[float, ...]
    margins: tuple[float, ...]            # min over fibres of (image lower edge - C2)
    initial_margin: float
    non_decreasing: bool

    @property
    def all_positive(self) -> bool:
        return all(m > 0.0 for m in self.margins)


def hsmi_support_witness(C1: ProfileLike, C2: ProfileLike, g: ThinTestFunction,
                         s_grid, params: MassShellParams,
                         spec: QuadratureSpec = DEFAULT_SPEC,
                         nodes: np.ndarray | None = None) -> HsmiReport:
    """Geometric half-sided invariance: transport the witness supports of a
    vector localised above C2 with the inverse flow of the C1 region and
    report the transverse-minimal clearance above C2 for each s >= 0.

    The lower support edge moves as C1 + e^{2 pi s}(edge - C1); with
    C1 < C2 <= edge every margin is positive and non-decreasing in s.
    """
    if nodes is None:
        nodes, _ = transverse_position_grid(g, spec)
    c1 = _profile_at_nodes(C1, nodes)
    c2 = _profile_at_nodes(C2, nodes)
    if np.any(c1 >= c2):
        worst = float(np.max(c1 - c2))
        raise ProfileOrderViolation(f"C1 >= C2 on the grid (worst excess {worst:.3e})")
    lows = np.asarray([g.fibre_profile(nodes[j]).support[0] for j in range(nodes.shape[0])])
    if np.any(lows <= c2):
        raise ValueError("witness support is not above C2; precondition violated")
    s_values = tuple(float(s) for s in s_grid)
    if any(s < 0 for s in s_values):
        raise ValueError("s_grid must be non-negative")
    margins = []
    for s in s_values:
        moved = c1 + math.exp(2.0 * math.pi * s) * (lows - c1)
        margins.append(float(np.min(moved - c2)))
    non_dec = all(b >= a - 1e-12 for a, b in zip(margins, margins[1:]))
    return HsmiReport(s_values=s_values, margins=tuple(margins),
                      initial_margin=float(np.min(lows - c2)), non_decreasing=non_dec)
