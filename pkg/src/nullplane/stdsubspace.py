"""Finite-dimensional standard subspaces and their modular data.

A closed real subspace H of C^n with H + iH = C^n and H intersect iH = {0}
carries a closed antilinear involution (the Tomita operator) S: x + iy ->
x - iy for x, y in H.  Everything antilinear is represented on the
realification R^{2n}, where taking adjoints is plain matrix transposition.
The polar decomposition S = J Delta^{1/2} (with Delta = S*S positive and
complex linear, J an antiunitary involution) yields the modular data, and
spectral calculus of the realified Delta gives flows, generators and the
cutting projection

    P_H = a(Delta) + J b(Delta),
    a(lam) = lam^{-1/2} (lam^{-1/2} - lam^{1/2})^{-1},
    b(lam) = (lam^{-1/2} - lam^{1/2})^{-1},

which restricts to the identity on H and annihilates the symplectic
complement H'.  The one-particle entropy of a vector is

    S_H(psi) = Im <psi, P_H i log(Delta) psi>,

with the sign of the imaginary part fixed so that S_H(h) = -<h, log(Delta) h>
for h in H; the products a(lam) log(lam) and b(lam) log(lam) are evaluated in
a cancellation-free form, so spectrum merely close to 1 is harmless.  Exact
eigenvalue-1 spectrum is outside the domain and is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotCyclic, NotSeparating, SingularSpectrum

__all__ = [
    "StandardSubspaceFD",
    "CuttingProjectionFD",
    "ModularReport",
    "TrotterResult",
    "make_subspace",
    "subspace_from_family",
    "symplectic_complement",
    "verify_modular_relations",
    "cutting_projection",
    "entropy_cutting",
    "trotter_translation",
    "random_standard_subspace",
    "subspace_distance",
]

_RANK_TOL = 1e-8
_EIG1_WINDOW = 1e-10      # |lambda - 1| below this counts as singular spectrum
_SINGULAR_FRACTION = 1e-6


def realify(z: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(z).real, np.asarray(z).imag])


def unrealify(r: np.ndarray) -> np.ndarray:
    n = r.shape[0] // 2
    return r[:n] + 1j * r[n:]


def mult_i(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


@dataclass(frozen=True, eq=False)
class StandardSubspaceFD:
    """Standard subspace of C^n with precomputed modular data.

    h_basis columns are an orthonormal real basis of the realified subspace;
    eigenvalues/eigenvectors diagonalise the realified modular operator.
    """

    ambient_dim: int
    spanning: np.ndarray          # n x m complex
    h_basis: np.ndarray           # 2n x n real, orthonormal
    s_matrix: np.ndarray          # 2n x 2n real-linear Tomita operator
    eigenvalues: np.ndarray       # 2n positive reals
    eigenvectors: np.ndarray      # 2n x 2n orthogonal
    j_matrix: np.ndarray          # 2n x 2n modular conjugation

    @property
    def i_matrix(self) -> np.ndarray:
        return mult_i(self.ambient_dim)

    def delta_matrix(self) -> np.ndarray:
        return self._apply_spectral(self.eigenvalues)

    def _apply_spectral(self, fvals: np.ndarray) -> np.ndarray:
        V = self.eigenvectors
        return (V * fvals) @ V.T

    def log_delta(self) -> np.ndarray:
        return self._apply_spectral(np.log(self.eigenvalues))

    def delta_power(self, exponent: float) -> np.ndarray:
        return self._apply_spectral(self.eigenvalues ** exponent)

    def modular_unitary(self, t: float) -> np.ndarray:
        """Realification of Delta^{it}."""
        arg = t * np.log(self.eigenvalues)
        return self._apply_spectral(np.cos(arg)) + self.i_matrix @ self._apply_spectral(np.sin(arg))

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the realified subspace."""
        return self.h_basis @ self.h_basis.T

    def contains(self, psi: np.ndarray, tol: float = 1e-8) -> bool:
        r = realify(psi)
        return float(np.linalg.norm(r - self.projector() @ r)) <= tol * max(1.0, np.linalg.norm(r))


@dataclass(frozen=True, eq=False)
class CuttingProjectionFD:
    """Matrix form of a(Delta) + J b(Delta) on the realification, with the
    eigenvalue-1 spectral subspace excised."""

    matrix: np.ndarray
    excluded_dim: int
    window: float


def _orthonormal_range(columns: np.ndarray, tol: float = _RANK_TOL):
    U, s, _ = np.linalg.svd(columns, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return U[:, :0], 0
    r = int(np.sum(s > tol * s[0]))
    return U[:, :r], r


def make_subspace(spanning: Sequence[np.ndarray] | np.ndarray) -> StandardSubspaceFD:
    """Build a standard subspace from complex vectors spanning it over R.

    Raises NotCyclic / NotSeparating with the measured rank deficiency when
    the real span fails to be standard (thresholds relative to the largest
    singular value).
    """
    A = np.column_stack([np.asarray(v, dtype=complex) for v in np.atleast_2d(np.asarray(spanning, dtype=complex))]) \
        if isinstance(spanning, np.ndarray) and np.asarray(spanning).ndim == 2 else \
        np.column_stack([np.asarray(v, dtype=complex) for v in spanning])
    if A.ndim != 2 or A.shape[0] < 1:
        raise ValueError("spanning vectors must be nonempty complex vectors")
    if not np.all(np.linalg.norm(A, axis=0) > 0):
        raise ValueError("spanning vectors must be nonzero")
    n = A.shape[0]
    Ji = mult_i(n)
    R = np.column_stack([realify(A[:, j]) for j in range(A.shape[1])])
    U, r = _orthonormal_range(R)
    both, r2 = _orthonormal_range(np.hstack([U, Ji @ U]))
    if r2 < 2 * n:
        raise NotCyclic(2 * n - r2)
    if r2 < 2 * r:
        raise NotSeparating(2 * r - r2)
    # r2 = 2r = 2n here: the span is standard
    M = np.hstack([U, Ji @ U])
    D = np.diag(np.concatenate([np.ones(r), -np.ones(r)]))
    S = M @ D @ np.linalg.inv(M)
    delta = S.T @ S
    delta = 0.5 * (delta + delta.T)
    w, V = np.linalg.eigh(delta)
    if w[0] <= 0:
        raise NotSeparating(0)
    J = S @ ((V / np.sqrt(w)) @ V.T)
    return StandardSubspaceFD(
        ambient_dim=n, spanning=A, h_basis=U, s_matrix=S,
        eigenvalues=w, eigenvectors=V, j_matrix=J,
    )


def subspace_from_family(vectors: Sequence[np.ndarray], weights: np.ndarray | None = None):
    """Standard subspace generated by a family of grid-sampled vectors.

    The ambient space is the complex span of the family (coordinates via a
    Cholesky factor of the weighted Gram matrix).  Returns the subspace and
    the coordinate images of the family vectors.
    """
    B = np.column_stack([np.asarray(v, dtype=complex) for v in vectors])
    if weights is None:
        G = B.conj().T @ B
    else:
        G = B.conj().T @ (B * np.asarray(weights)[:, None])
    G = 0.5 * (G + G.conj().T)
    L = np.linalg.cholesky(G)
    coords = L.conj().T                       # column j: coordinates of vector j
    sub = make_subspace([coords[:, j] for j in range(coords.shape[1])])
    return sub, coords


def random_standard_subspace(n: int, rng: np.random.Generator) -> StandardSubspaceFD:
    for _ in range(32):
        spanning = [rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(n)]
        try:
            return make_subspace(spanning)
        except (NotCyclic, NotSeparating):
            continue
    raise RuntimeError("failed to draw a standard subspace")


def subspace_distance(h1: StandardSubspaceFD, h2: StandardSubspaceFD) -> float:
    return float(np.linalg.norm(h1.projector() - h2.projector(), 2))


def symplectic_complement(h: StandardSubspaceFD) -> StandardSubspaceFD:
    """The subspace of vectors with vanishing symplectic form against H,
    constructed as J_H H."""
    cols = h.j_matrix @ h.h_basis
    spanning = [unrealify(cols[:, j]) for j in range(cols.shape[1])]
    return make_subspace(spanning)


@dataclass(frozen=True)
class ModularReport:
    involution_residual: float          # ||S^2 - 1||
    conjugation_residual: float         # ||J^2 - 1||
    polar_residual: float               # ||S - J Delta^{1/2}||
    jdj_residual: float                 # ||J Delta J - Delta^{-1}|| / ||Delta^{-1}||
    flow_invariance: dict[float, float]  # t -> distance(Delta^{it} H, H)
    complement_residual: float          # distance(J H, H')

    @property
    def max_residual(self) -> float:
        return max(self.involution_residual, self.conjugation_residual,
                   self.polar_residual, self.jdj_residual,
                   self.complement_residual, *self.flow_invariance.values())


def verify_modular_relations(h: StandardSubspaceFD,
                             flow_times: Sequence[float] = (0.1, 0.5, 1.0)) -> ModularReport:
    eye = np.eye(2 * h.ambient_dim)
    inv_delta = h.delta_power(-1.0)
    s_res = float(np.linalg.norm(h.s_matrix @ h.s_matrix - eye, 2))
    j_res = float(np.linalg.norm(h.j_matrix @ h.j_matrix - eye, 2))
    polar = float(np.linalg.norm(h.s_matrix - h.j_matrix @ h.delta_power(0.5), 2))
    jdj = float(
        np.linalg.norm(h.j_matrix @ h.delta_matrix() @ h.j_matrix - inv_delta, 2)
        / np.linalg.norm(inv_delta, 2)
    )
    P = h.projector()
    flow = {}
    for t in flow_times:
        Ut = h.modular_unitary(t)
        cols, _ = _orthonormal_range(Ut @ h.h_basis)
        flow[float(t)] = float(np.linalg.norm(cols @ cols.T - P, 2))
    comp = symplectic_complement(h)
    jcols, _ = _orthonormal_range(h.j_matrix @ h.h_basis)
    comp_res = float(np.linalg.norm(jcols @ jcols.T - comp.projector(), 2))
    return ModularReport(s_res, j_res, polar, jdj, flow, comp_res)


def _stable_log_over_one_minus(lam: np.ndarray) -> np.ndarray:
    """log(lam) / (1 - lam), continuous through lam = 1."""
    x = lam - 1.0
    out = np.empty_like(lam)
    small = np.abs(x) < 1e-6
    xs = x[small]
    out[small] = -1.0 + xs / 2.0 - xs * xs / 3.0
    xl = x[~small]
    out[~small] = -np.log1p(xl) / xl
    return out


def cutting_projection(h: StandardSubspaceFD, window: float = _EIG1_WINDOW) -> CuttingProjectionFD:
    lam = h.eigenvalues
    keep = np.abs(lam - 1.0) > window
    a = np.where(keep, 1.0 / (1.0 - np.where(keep, lam, 2.0)), 0.0)
    b = np.where(keep, np.sqrt(lam) * a, 0.0)
    P = h._apply_spectral(a) + h.j_matrix @ h._apply_spectral(b)
    return CuttingProjectionFD(matrix=P, excluded_dim=int(np.sum(~keep)), window=window)


def entropy_cutting(h: StandardSubspaceFD, psi: np.ndarray,
                    singular_tol: float = _SINGULAR_FRACTION) -> float:
    """One-particle relative entropy of the coherent state of psi.

    Uses the cancellation-free products a(lam)log(lam), b(lam)log(lam); the
    exact eigenvalue-1 subspace is excluded, and a vector with more than
    singular_tol of its norm there is rejected.
    """
    r = realify(np.asarray(psi, dtype=complex))
    lam = h.eigenvalues
    sing = np.abs(lam - 1.0) <= _EIG1_WINDOW
    if np.any(sing):
        comp = h.eigenvectors[:, sing].T @ r
        if np.linalg.norm(comp) > singular_tol * max(np.linalg.norm(r), 1e-300):
            raise SingularSpectrum(
                f"{np.linalg.norm(comp):.3e} of the vector lies in the eigenvalue-1 subspace"
            )
    f_a = np.where(sing, 0.0, _stable_log_over_one_minus(lam))
    f_b = np.where(sing, 0.0, np.sqrt(lam) * f_a)
    Ji = h.i_matrix
    # realification of (a log Delta + J b log Delta) applied to i psi
    vec = Ji @ (h._apply_spectral(f_a) @ r) + h.j_matrix @ (Ji @ (h._apply_spectral(f_b) @ r))
    # Im<psi, .> paired so that S_H(h) = -<h, log Delta h> for h in H
    return -float((Ji @ r) @ vec)


@dataclass(frozen=True, eq=False)
class TrotterResult:
    product: np.ndarray           # (Delta_H^{it/n} Delta_K^{-it/n})^n at n = n_steps
    limit: np.ndarray             # realified e^{it(log Delta_H - log Delta_K)}
    errors: dict[int, float]
    observed_order: float


def trotter_translation(h: StandardSubspaceFD, k: StandardSubspaceFD,
                        t: float, n_steps: int = 64) -> TrotterResult:
    """Trotter product against its strong limit, with the convergence rate
    in 1/n estimated from successive halvings."""
    if h.ambient_dim != k.ambient_dim:
        raise ValueError("subspaces live on different ambient spaces")
    G = h.log_delta() - k.log_delta()
    G = 0.5 * (G + G.T)
    wG, VG = np.linalg.eigh(G)
    Ji = h.i_matrix
    limit = (VG * np.cos(t * wG)) @ VG.T + Ji @ ((VG * np.sin(t * wG)) @ VG.T)
    ns = sorted({max(1, n_steps // 8), max(1, n_steps // 4), max(1, n_steps // 2), n_steps})
    errors = {}
    product = None
    for n in ns:
        A = h.modular_unitary(t / n) @ k.modular_unitary(-t / n)
        Pn = np.linalg.matrix_power(A, n)
        errors[n] = float(np.linalg.norm(Pn - limit, 2))
        if n == n_steps:
            product = Pn
    orders = []
    ns_sorted = sorted(errors)
    for a, b in zip(ns_sorted, ns_sorted[1:]):
        if errors[b] > 0 and errors[a] > 0:
            orders.append(np.log(errors[a] / errors[b]) / np.log(b / a))
    observed = float(np.mean(orders)) if orders else float("inf")
    return TrotterResult(product=product, limit=limit, errors=errors, observed_order=observed)
