import numpy as np
import pytest
import scipy.linalg as sla

from nullplane.errors import NotCyclic, NotSeparating, SingularSpectrum
from nullplane.numerics import QuadratureSpec, SmoothFn1D
from nullplane.fibre import fibre_values, halfline_entropy
from nullplane.stdsubspace import (
    cutting_projection,
    entropy_cutting,
    make_subspace,
    random_standard_subspace,
    realify,
    subspace_distance,
    subspace_from_family,
    symplectic_complement,
    trotter_translation,
    unrealify,
    verify_modular_relations,
)


def random_h_vector(H, rng):
    return unrealify(H.h_basis @ rng.normal(size=H.h_basis.shape[1]))


class TestMakeSubspace:
    def test_real_line_is_trivial(self):
        H = make_subspace([np.array([1.0 + 0.0j])])
        assert np.allclose(H.eigenvalues, 1.0, atol=1e-12)
        # conjugation J is complex conjugation: J(i) = -i
        r = realify(np.array([1j]))
        assert np.allclose(H.j_matrix @ r, realify(np.array([-1j])), atol=1e-12)

    def test_one_and_i_not_separating(self):
        with pytest.raises(NotSeparating):
            make_subspace([np.array([1.0 + 0j]), np.array([1j])])

    def test_single_vector_in_c2_not_cyclic(self):
        with pytest.raises(NotCyclic):
            make_subspace([np.array([1.0 + 0j, 0.0 + 0j])])

    def test_rejects_zero_vector(self):
        with pytest.raises(ValueError):
            make_subspace([np.array([0.0 + 0j])])

    def test_generic_n2_against_polar_oracle(self):
        # independent oracle: scipy polar decomposition of the realified
        # Tomita matrix on the 4x4 realification
        rng = np.random.default_rng(5)
        H = random_standard_subspace(2, rng)
        J_o, P_o = sla.polar(H.s_matrix, side="left")  # S = P_o @ J_o is wrong side; see below
        # right polar: S = J sqrt(S^T S); scipy 'right' gives S = U P
        U_o, P_right = sla.polar(H.s_matrix, side="right")
        delta_o = P_right @ P_right
        w_o = np.sort(np.linalg.eigvalsh(delta_o))
        assert np.allclose(w_o, np.sort(H.eigenvalues), rtol=1e-10, atol=1e-12)
        assert np.linalg.norm(U_o - H.j_matrix) < 1e-10

    def test_invariants_on_random_draws(self, rng):
        eye2 = lambda n: np.eye(2 * n)
        for n in (1, 2, 3, 4, 5, 6):
            H = random_standard_subspace(n, rng)
            assert np.linalg.norm(H.s_matrix @ H.s_matrix - eye2(n)) < 1e-10
            assert np.linalg.norm(H.j_matrix @ H.j_matrix - eye2(n)) < 1e-10
            assert H.eigenvalues.min() > 0


class TestSymplecticComplement:
    def test_real_line_self_complement(self):
        H = make_subspace([np.array([1.0 + 0.0j])])
        Hp = symplectic_complement(H)
        assert subspace_distance(H, Hp) < 1e-12

    def test_double_complement(self, rng):
        H = random_standard_subspace(2, rng)
        Hpp = symplectic_complement(symplectic_complement(H))
        assert subspace_distance(H, Hpp) < 1e-8

    def test_symplectic_form_vanishes(self, rng):
        H = random_standard_subspace(2, rng)
        Hp = symplectic_complement(H)
        Ji = H.i_matrix
        worst = 0.0
        for a in range(H.h_basis.shape[1]):
            for b in range(Hp.h_basis.shape[1]):
                worst = max(worst, abs((Ji @ Hp.h_basis[:, b]) @ H.h_basis[:, a]))
        assert worst < 1e-10


class TestModularRelations:
    def test_trivial_line(self):
        rep = verify_modular_relations(make_subspace([np.array([1.0 + 0j])]))
        assert rep.max_residual < 1e-12

    def test_generic_draws(self, rng):
        for n in (2, 3, 4):
            rep = verify_modular_relations(random_standard_subspace(n, rng))
            assert rep.max_residual < 1e-8
            assert rep.polar_residual < 1e-10
            assert rep.jdj_residual < 1e-10

    def test_rejects_before_verification(self):
        with pytest.raises(NotSeparating):
            make_subspace([np.array([1.0 + 0j]), np.array([0.5j])])


class TestCuttingProjection:
    def test_projects_h_plus_hprime(self, rng):
        H = random_standard_subspace(2, rng)
        P = cutting_projection(H)
        assert P.excluded_dim == 0
        h = H.h_basis @ rng.normal(size=2)
        hp = H.j_matrix @ (H.h_basis @ rng.normal(size=2))
        assert np.linalg.norm(P.matrix @ h - h) < 1e-8 * np.linalg.norm(h)
        assert np.linalg.norm(P.matrix @ hp) < 1e-8 * np.linalg.norm(hp)


class TestEntropyCutting:
    def test_equals_log_delta_form_on_h(self, rng):
        for _ in range(5):
            H = random_standard_subspace(2, rng)
            h = random_h_vector(H, rng)
            r = realify(h)
            expected = -float(r @ (H.log_delta() @ r))
            assert entropy_cutting(H, h) == pytest.approx(expected, abs=1e-8, rel=1e-8)
            assert entropy_cutting(H, h) >= -1e-8

    def test_vanishes_on_complement(self, rng):
        H = random_standard_subspace(2, rng)
        hp = unrealify(H.j_matrix @ (H.h_basis @ rng.normal(size=2)))
        assert abs(entropy_cutting(H, hp)) < 1e-8

    def test_generic_vector_against_matrix_oracle(self, rng):
        H = random_standard_subspace(2, rng)
        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
        r = realify(psi)
        Ji = H.i_matrix
        # independent route: a(Delta), b(Delta) by LU inverse and scipy sqrtm
        delta = H.delta_matrix()
        aD = np.linalg.inv(np.eye(4) - delta)
        bD = sla.sqrtm(delta).real @ aD
        P = aD + H.j_matrix @ bD
        expected = -float((Ji @ r) @ (P @ (Ji @ (H.log_delta() @ r))))
        assert entropy_cutting(H, psi) == pytest.approx(expected, rel=1e-10, abs=1e-10)

    def test_rejects_singular_spectrum(self):
        # the full real subspace R^1 has Delta = 1: every vector is rejected
        H = make_subspace([np.array([1.0 + 0j])])
        with pytest.raises(SingularSpectrum):
            entropy_cutting(H, np.array([1.0 + 0j]))

    def test_odd_dimension_has_unit_eigenvalue(self, rng):
        # complex odd dimension forces a fixed point of the eigenvalue
        # pairing lam <-> 1/lam
        H = random_standard_subspace(3, rng)
        assert np.min(np.abs(H.eigenvalues - 1.0)) < 1e-8


class TestTrotter:
    def test_k_equals_h_is_identity(self, rng):
        H = random_standard_subspace(2, rng)
        res = trotter_translation(H, H, 0.7, 16)
        assert np.linalg.norm(res.product - np.eye(4)) < 1e-12
        assert np.linalg.norm(res.limit - np.eye(4)) < 1e-12

    def test_t_zero_is_identity(self, rng):
        H = random_standard_subspace(2, rng)
        K = random_standard_subspace(2, rng)
        res = trotter_translation(H, K, 0.0, 16)
        assert np.linalg.norm(res.product - np.eye(4)) < 1e-12

    def test_first_order_convergence(self, rng):
        H = random_standard_subspace(2, rng)
        K = random_standard_subspace(2, rng)
        res = trotter_translation(H, K, 0.3, 64)
        assert res.observed_order >= 0.9
        errs = [res.errors[n] for n in sorted(res.errors)]
        assert all(b <= a for a, b in zip(errs, errs[1:]))


class TestFibreFamilySubspace:
    def test_family_coordinates_preserve_gram(self, spec):
        theta = spec.theta_grid()
        fams = [SmoothFn1D.single(c, 0.9, derivative_order=1) for c in (1.0, 1.6, 2.2)]
        vecs = [fibre_values(g, theta, spec) for g in fams]
        sub, coords = subspace_from_family(vecs, np.full(theta.size, spec.theta_spacing))
        G_direct = np.array([[np.vdot(a, b) * spec.theta_spacing for b in vecs] for a in vecs])
        G_coords = coords.conj().T @ coords
        assert np.allclose(G_direct, G_coords, rtol=1e-10, atol=1e-12)

    def test_truncated_entropy_below_closed_form(self, spec):
        # entropy on a generated subfamily never exceeds the half-line value;
        # an even family size keeps the eigenvalue pairing fixed-point free
        k = SmoothFn1D.single(1.3, 1.2, derivative_order=1)
        fams = [k] + [k.dilated_shifted(a, 0.0) for a in (0.4, -0.4, 0.8)]
        theta = spec.theta_grid()
        vecs = [fibre_values(g, theta, spec) for g in fams]
        sub, coords = subspace_from_family(vecs, np.full(theta.size, spec.theta_spacing))
        s_trunc = entropy_cutting(sub, coords[:, 0])
        s_full = halfline_entropy(k, 0.0, spec)
        assert -1e-9 <= s_trunc <= s_full + 1e-9
