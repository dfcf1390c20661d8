"""Mass-shell geometry and the lightlike fibre decomposition.

One-particle vectors of thin profiles delta(x_-) g(x_+, x_perp) are realised
on a rapidity-type grid: the norm is

    ||v||^2 = integral dtheta d^{D-1}p_perp |ghat(e^{-theta}, p_perp)|^2

(with the symmetric Fourier normalisation, (2 pi)^{-1/2} per dimension),
which is finite exactly when g has zero lightlike mean on every transverse
line.  Momentum representation carries fibres over transverse momentum
nodes, spatial representation over transverse position nodes; the two are
related by a transverse Fourier transform, fibre-wise in theta.

The boost and lightlike-translation subgroup acts fibre-wise as a phase
times a theta shift and never mixes transverse nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .errors import ZeroMassZeroMomentum, ZeroModePresent
from .fibre import INV_SQRT_2PI, lagrange_shift
from .numerics import (
    DEFAULT_SPEC,
    QuadratureSpec,
    SmoothFn1D,
    fourier_transform,
    gauss_legendre_panels,
    integrate_1d,
    kahan_sum,
)

__all__ = [
    "MassShellParams",
    "ThinTerm",
    "ThinTestFunction",
    "DirectIntegralVector",
    "ZeroModeReport",
    "omega",
    "transverse_momentum_grid",
    "transverse_position_grid",
    "fourier_restrict",
    "spatial_restrict",
    "zero_mode_diagnose",
    "to_spatial",
    "to_momentum",
    "boost_translate",
    "momentum_norm_oracle",
    "truncated_norm_sq",
]

DEFAULT_P_PERP_MAX = 40.0


@dataclass(frozen=True)
class MassShellParams:
    """Mass m >= 0 and spacetime dimension D >= 2 (transverse dimension D-1)."""

    mass: float = 1.0
    dim: int = 2

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError("mass must be non-negative")
        if self.dim < 2:
            raise ValueError("spacetime dimension must be at least 2")

    @property
    def transverse_dim(self) -> int:
        return self.dim - 1


def omega(p_perp, params: MassShellParams) -> np.ndarray | float:
    """Transverse dispersion sqrt(m^2 + |p_perp|^2)."""
    p = np.atleast_2d(np.asarray(p_perp, dtype=float))
    sq = np.sum(p * p, axis=-1)
    if params.mass == 0.0 and np.any(sq == 0.0):
        raise ZeroMassZeroMomentum("massless dispersion is singular at p_perp = 0")
    out = np.sqrt(params.mass ** 2 + sq)
    return float(out[0]) if np.asarray(p_perp).ndim <= 1 else out


@dataclass(frozen=True)
class ThinTerm:
    """One separable term u(x_+) * prod_k v_k(x_perp,k)."""

    u: SmoothFn1D
    v: tuple[SmoothFn1D, ...]

    def transverse_value(self, nodes: np.ndarray) -> np.ndarray:
        nodes = np.atleast_2d(nodes)
        out = np.ones(nodes.shape[0])
        for k, vk in enumerate(self.v):
            out *= vk(nodes[:, k])
        return out


@dataclass(frozen=True)
class ThinTestFunction:
    """Finite sum of separable smooth compactly supported terms on the null
    plane; zero_mode_flag is exact (every lightlike factor an exact
    derivative), not a numerical test."""

    terms: tuple[ThinTerm, ...]

    @classmethod
    def separable(cls, u: SmoothFn1D, v: SmoothFn1D | tuple[SmoothFn1D, ...]):
        if isinstance(v, SmoothFn1D):
            v = (v,)
        return cls((ThinTerm(u=u, v=tuple(v)),))

    @property
    def transverse_dim(self) -> int:
        return len(self.terms[0].v) if self.terms else 1

    @property
    def zero_mode_flag(self) -> bool:
        return all(t.u.zero_mean for t in self.terms)

    def values(self, x_plus: np.ndarray, x_perp: np.ndarray) -> np.ndarray:
        """Matrix g(x_plus[k], x_perp[j]) of shape (nodes, points)."""
        xp = np.atleast_1d(np.asarray(x_plus, dtype=float))
        nodes = np.atleast_2d(np.asarray(x_perp, dtype=float))
        out = np.zeros((nodes.shape[0], xp.size))
        for t in self.terms:
            out += np.outer(t.transverse_value(nodes), t.u(xp))
        return out

    def __call__(self, x_plus: float, x_perp) -> float:
        return float(self.values(np.asarray([x_plus]), np.asarray(x_perp))[0, 0])

    def lightlike_support(self) -> tuple[float, float]:
        los, his = zip(*(t.u.support for t in self.terms))
        return (min(los), max(his))

    def transverse_support(self) -> list[tuple[float, float]]:
        dims = self.transverse_dim
        hull = []
        for k in range(dims):
            los, his = zip(*(t.v[k].support for t in self.terms))
            hull.append((min(los), max(his)))
        return hull

    def fibre_profile(self, x_perp_node: np.ndarray) -> SmoothFn1D:
        """The lightlike profile x_+ -> g(x_+, node) as a SmoothFn1D."""
        node = np.atleast_1d(np.asarray(x_perp_node, dtype=float)).reshape(1, -1)
        terms = []
        for t in self.terms:
            scale = float(t.transverse_value(node)[0])
            if scale != 0.0:
                terms.extend((scale * c, b) for c, b in t.u.terms)
        return SmoothFn1D(tuple(terms))

    def translated_in_xplus(self, a: float) -> "ThinTestFunction":
        return ThinTestFunction(tuple(replace(t, u=t.u.translated(a)) for t in self.terms))

    def boosted_translated(self, alpha: float, a_plus: float) -> "ThinTestFunction":
        return ThinTestFunction(
            tuple(replace(t, u=t.u.dilated_shifted(alpha, a_plus)) for t in self.terms)
        )


@dataclass(frozen=True, eq=False)
class DirectIntegralVector:
    """Transverse-quadrature family of fibre samples.

    fibres has shape (nodes, theta points); representation is "momentum" or
    "spatial"; the optional source witness records the thin profile the
    vector came from.
    """

    theta: np.ndarray
    nodes: np.ndarray              # (M, transverse_dim)
    weights: np.ndarray            # (M,)
    fibres: np.ndarray             # (M, N) complex
    representation: str
    params: MassShellParams
    source: ThinTestFunction | None = None

    @property
    def spacing(self) -> float:
        return float(self.theta[1] - self.theta[0])

    def fibre_norms_sq(self) -> np.ndarray:
        return np.real(np.einsum("ij,ij->i", np.conj(self.fibres), self.fibres)) * self.spacing

    def norm_sq(self) -> float:
        return float(kahan_sum(self.weights * self.fibre_norms_sq()))

    def inner(self, other: "DirectIntegralVector") -> complex:
        if self.representation != other.representation:
            raise ValueError("representations differ")
        per = np.einsum("ij,ij->i", np.conj(self.fibres), other.fibres) * self.spacing
        return complex(kahan_sum(self.weights * per))


def _tensor_grid(bounds: list[tuple[float, float]], points_per_dim: int):
    axes = []
    wts = []
    for lo, hi in bounds:
        n_pan = max(1, points_per_dim // 16)
        x, w = gauss_legendre_panels(lo, hi, n_pan)
        axes.append(x)
        wts.append(w)
    grids = np.meshgrid(*axes, indexing="ij")
    nodes = np.column_stack([g.ravel() for g in grids])
    weight = np.ones(nodes.shape[0])
    wgrids = np.meshgrid(*wts, indexing="ij")
    for wg in wgrids:
        weight = weight * wg.ravel()
    return nodes, weight


def transverse_momentum_grid(params: MassShellParams, spec: QuadratureSpec,
                             p_perp_max: float = DEFAULT_P_PERP_MAX):
    bounds = [(-p_perp_max, p_perp_max)] * params.transverse_dim
    nodes, weights = _tensor_grid(bounds, spec.transverse_points_per_dim)
    if params.mass == 0.0 and np.any(np.sum(nodes * nodes, axis=1) == 0.0):
        raise ZeroMassZeroMomentum("transverse grid touches p_perp = 0 at m = 0")
    return nodes, weights


def transverse_position_grid(g: ThinTestFunction, spec: QuadratureSpec, pad: float = 0.0):
    bounds = [(lo - pad, hi + pad) for lo, hi in g.transverse_support()]
    return _tensor_grid(bounds, spec.transverse_points_per_dim)


def _check_zero_mode(g: ThinTestFunction):
    if not g.zero_mode_flag:
        bad = [i for i, t in enumerate(g.terms) if not t.u.zero_mean]
        raise ZeroModePresent(f"terms {bad} carry a nonzero lightlike mean")


def fourier_restrict(g: ThinTestFunction, params: MassShellParams,
                     spec: QuadratureSpec = DEFAULT_SPEC,
                     p_perp_max: float = DEFAULT_P_PERP_MAX) -> DirectIntegralVector:
    """Momentum-representation vector of the thin profile g.

    Fibre at transverse node p_perp holds (2 pi)^{-D/2} ghat(e^{-theta},
    p_perp) with ghat the Fourier transform taken with e^{+i x_+ p_-} in the
    lightlike and e^{-i x_perp p_perp} in the transverse directions.
    """
    _check_zero_mode(g)
    nodes, weights = transverse_momentum_grid(params, spec, p_perp_max)
    theta = spec.theta_grid()
    p_minus = np.exp(-theta)
    fibres = np.zeros((nodes.shape[0], theta.size), dtype=complex)
    for term in g.terms:
        u_hat = INV_SQRT_2PI * fourier_transform(term.u, p_minus, spec, sign=+1.0)
        v_hat = np.ones(nodes.shape[0], dtype=complex)
        for k, vk in enumerate(term.v):
            v_hat = v_hat * (INV_SQRT_2PI * fourier_transform(vk, nodes[:, k], spec, sign=-1.0))
        fibres += np.outer(v_hat, u_hat)
    return DirectIntegralVector(theta=theta, nodes=nodes, weights=weights, fibres=fibres,
                                representation="momentum", params=params, source=g)


def spatial_restrict(g: ThinTestFunction, params: MassShellParams,
                     spec: QuadratureSpec = DEFAULT_SPEC,
                     nodes: np.ndarray | None = None,
                     weights: np.ndarray | None = None) -> DirectIntegralVector:
    """Spatial-representation vector built directly: the fibre at x_perp is
    the chiral vector of the lightlike profile x_+ -> g(x_+, x_perp)."""
    _check_zero_mode(g)
    if nodes is None:
        nodes, weights = transverse_position_grid(g, spec)
    theta = spec.theta_grid()
    p_minus = np.exp(-theta)
    fibres = np.zeros((nodes.shape[0], theta.size), dtype=complex)
    for term in g.terms:
        u_hat = INV_SQRT_2PI * fourier_transform(term.u, p_minus, spec, sign=+1.0)
        fibres += np.outer(term.transverse_value(nodes), u_hat)
    return DirectIntegralVector(theta=theta, nodes=nodes, weights=weights, fibres=fibres,
                                representation="spatial", params=params, source=g)


def _transverse_kernel(x_nodes, p_nodes, p_weights, dim: int, sign: float):
    """Matrix of (2 pi)^{-d/2} e^{i sign x.p} w_p."""
    phase = np.exp(1j * sign * (x_nodes @ p_nodes.T))
    return (INV_SQRT_2PI ** dim) * phase * p_weights[None, :]


def to_spatial(v: DirectIntegralVector, spec: QuadratureSpec = DEFAULT_SPEC,
               nodes: np.ndarray | None = None,
               weights: np.ndarray | None = None) -> DirectIntegralVector:
    """Inverse transverse Fourier transform onto a position grid, theta-fibre
    by theta-fibre; unitary up to quadrature tolerances."""
    if v.representation != "momentum":
        raise ValueError("to_spatial expects a momentum-representation vector")
    if nodes is None:
        if v.source is None:
            raise ValueError("need either a source witness or an explicit position grid")
        nodes, weights = transverse_position_grid(v.source, spec)
    K = _transverse_kernel(nodes, v.nodes, v.weights, v.params.transverse_dim, +1.0)
    return DirectIntegralVector(theta=v.theta, nodes=nodes, weights=weights,
                                fibres=K @ v.fibres, representation="spatial",
                                params=v.params, source=v.source)


def to_momentum(v: DirectIntegralVector, spec: QuadratureSpec = DEFAULT_SPEC,
                p_perp_max: float = DEFAULT_P_PERP_MAX) -> DirectIntegralVector:
    if v.representation != "spatial":
        raise ValueError("to_momentum expects a spatial-representation vector")
    p_nodes, p_weights = transverse_momentum_grid(v.params, spec, p_perp_max)
    K = _transverse_kernel(p_nodes, v.nodes, v.weights, v.params.transverse_dim, -1.0)
    return DirectIntegralVector(theta=v.theta, nodes=p_nodes, weights=p_weights,
                                fibres=K @ v.fibres, representation="momentum",
                                params=v.params, source=v.source)


def boost_translate(v: DirectIntegralVector, alpha: float, a_plus: float,
                    spec: QuadratureSpec = DEFAULT_SPEC, method: str = "auto") -> DirectIntegralVector:
    """Boost by rapidity alpha and lightlike translation by a_plus:
    multiply each fibre by e^{i a_+ e^{-theta}} and shift theta by alpha.

    The action is transverse-diagonal.  With a source witness the transform
    is evaluated exactly from the transformed profile; otherwise the shift
    uses fifth-order Lagrange interpolation on the grid.
    """
    new_source = v.source.boosted_translated(alpha, a_plus) if v.source is not None else None
    use_source = new_source is not None and method in ("auto", "source") and v.representation == "spatial"
    if method == "source" and new_source is None:
        raise ValueError("no source witness carried by this vector")
    if use_source:
        out = spatial_restrict(new_source, v.params, spec, nodes=v.nodes, weights=v.weights)
        return out
    shifted = lagrange_shift(v.fibres, v.spacing, alpha, spec.abs_tol)
    phase = np.exp(1j * a_plus * np.exp(-v.theta))
    return DirectIntegralVector(theta=v.theta, nodes=v.nodes, weights=v.weights,
                                fibres=shifted * phase[None, :], representation=v.representation,
                                params=v.params, source=new_source)


def momentum_norm_oracle(g: ThinTestFunction, params: MassShellParams,
                         spec: QuadratureSpec = DEFAULT_SPEC,
                         p_perp_max: float = DEFAULT_P_PERP_MAX) -> float:
    """Norm squared evaluated on the mass shell in (p_1, p_perp) coordinates
    with the invariant measure d^D p / omega(p), by adaptive quadrature in
    p_1 per transverse node.  Independent of the theta grid."""
    _check_zero_mode(g)
    nodes, weights = transverse_momentum_grid(params, spec, p_perp_max)
    m2 = params.mass ** 2
    v_hats = []
    for term in g.terms:
        vh = np.ones(nodes.shape[0], dtype=complex)
        for k, vk in enumerate(term.v):
            vh = vh * (INV_SQRT_2PI * fourier_transform(vk, nodes[:, k], spec, sign=-1.0))
        v_hats.append(vh)

    def fibre_integral(om_perp_sq: float, coeffs) -> float:
        def integrand(p1):
            om = math.sqrt(om_perp_sq + p1 * p1)
            p_minus = (om - p1) / math.sqrt(2.0)
            tot = 0.0 + 0.0j
            for ti, term in enumerate(g.terms):
                tot += coeffs[ti] * INV_SQRT_2PI * fourier_transform(term.u, p_minus, spec, sign=+1.0)
            return abs(tot) ** 2 / om

        return quad(integrand, -np.inf, np.inf, limit=800, epsabs=1e-12, epsrel=1e-10)[0]

    if len(g.terms) == 1:
        # the lightlike integral depends on the node only through m^2 + |p_perp|^2
        cache: dict[float, float] = {}
        per_node = np.zeros(nodes.shape[0])
        for j in range(nodes.shape[0]):
            key = round(m2 + float(np.sum(nodes[j] ** 2)), 14)
            if key not in cache:
                cache[key] = fibre_integral(key, [1.0])
            per_node[j] = cache[key]
        return float(kahan_sum(weights * np.abs(v_hats[0]) ** 2 * per_node))
    vals = np.array([
        fibre_integral(m2 + float(np.sum(nodes[j] ** 2)), [vh[j] for vh in v_hats])
        for j in range(nodes.shape[0])
    ])
    return float(kahan_sum(weights * vals))


def truncated_norm_sq(g: ThinTestFunction, params: MassShellParams, theta_cutoff: float,
                      spec: QuadratureSpec = DEFAULT_SPEC,
                      p_perp_max: float = DEFAULT_P_PERP_MAX) -> float:
    """Norm squared with the theta integral truncated to [-cutoff, cutoff],
    evaluated by fresh Gauss-Legendre quadrature in theta (not the fixed
    grid), so that the cutoff can be swept.  Defined for any thin profile,
    zero mode or not."""
    nodes, weights = transverse_momentum_grid(params, spec, p_perp_max)
    n_pan = max(8, math.ceil(2 * theta_cutoff))
    th, thw = gauss_legendre_panels(-theta_cutoff, theta_cutoff, 4 * n_pan)
    p_minus = np.exp(-th)
    total = np.zeros(nodes.shape[0])
    fib = np.zeros((nodes.shape[0], th.size), dtype=complex)
    for term in g.terms:
        u_hat = INV_SQRT_2PI * fourier_transform(term.u, p_minus, spec, sign=+1.0)
        v_hat = np.ones(nodes.shape[0], dtype=complex)
        for k, vk in enumerate(term.v):
            v_hat = v_hat * (INV_SQRT_2PI * fourier_transform(vk, nodes[:, k], spec, sign=-1.0))
        fib += np.outer(v_hat, u_hat)
    per_node = (np.abs(fib) ** 2) @ thw
    return float(kahan_sum(weights * per_node))


@dataclass(frozen=True)
class ZeroModeReport:
    term_means: tuple[float, ...]          # integral of u per term (exact zeros included)
    offending_terms: tuple[int, ...]
    truncated_norms: dict[float, float]    # theta cutoff -> truncated norm^2
    zero_mode_density: float               # transverse integral of |ghat(0, p_perp)|^2

    @property
    def has_zero_mode(self) -> bool:
        return bool(self.offending_terms)


def zero_mode_diagnose(g: ThinTestFunction, params: MassShellParams,
                       spec: QuadratureSpec = DEFAULT_SPEC,
                       cutoffs: tuple[float, ...] = (4.0, 6.0, 8.0, 10.0, 12.0),
                       p_perp_max: float = DEFAULT_P_PERP_MAX) -> ZeroModeReport:
    """Per-term lightlike means and the divergence witness: the truncated
    norm of a profile with a zero mode grows linearly in the cutoff at rate
    given by the transverse integral of |ghat(0, p_perp)|^2."""
    means = []
    offending = []
    for i, t in enumerate(g.terms):
        if t.u.zero_mean:
            means.append(0.0)
        else:
            m = integrate_1d(t.u, spec=spec)
            means.append(m)
            if abs(m) > spec.abs_tol:
                offending.append(i)
    nodes, weights = transverse_momentum_grid(params, spec, p_perp_max)
    ghat0 = np.zeros(nodes.shape[0], dtype=complex)
    for i, term in enumerate(g.terms):
        if means[i] == 0.0:
            continue
        v_hat = np.ones(nodes.shape[0], dtype=complex)
        for k, vk in enumerate(term.v):
            v_hat = v_hat * (INV_SQRT_2PI * fourier_transform(vk, nodes[:, k], spec, sign=-1.0))
        ghat0 += INV_SQRT_2PI * means[i] * v_hat
    density = float(kahan_sum(weights * np.abs(ghat0) ** 2))
    norms = {float(c): truncated_norm_sq(g, params, c, spec, p_perp_max) for c in cutoffs}
    return ZeroModeReport(term_means=tuple(means), offending_terms=tuple(offending),
                          truncated_norms=norms, zero_mode_density=density)
