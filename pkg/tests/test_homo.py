"""Maurer-Cartan structures, constraint systems, solving, integration."""

import numpy as np
import pytest

from cartannet import fixtures, homo
from cartannet.spaces import SolvCoords, SpaceId

H3 = SpaceId.so(1, 2)
SL4 = SpaceId.sl(4)


def injection_system():
    return homo.build_constraints(homo.r1_mc(1), homo.borel_mc(4))


def restriction_system():
    return homo.build_constraints(homo.borel_mc(4), homo.r1_mc(1))


class TestRootSystem:
    def test_a3_counts(self):
        # oracle: A_3 has 12 roots, 6 positive
        roots, positives = homo.aN_root_system(3)
        assert len(roots) == 12 and len(positives) == 6

    def test_labels_partition_by_height(self):
        _, positives = homo.aN_root_system(3)
        by_h = {}
        for lab, vec in positives:
            by_h.setdefault(lab.h, []).append(vec)
            assert int(np.sum(vec)) == 0 and np.max(vec) == 1
        assert {h: len(v) for h, v in by_h.items()} == {1: 3, 2: 2, 3: 1}


class TestMCStructures:
    def test_r1_structure(self):
        # oracle: dE^1 = 0 and f^{1+a}_{1,1+a} = +1
        mc = homo.r1_mc(2)
        assert mc.d == 4
        assert np.max(np.abs(mc.f[0])) == 0.0
        for i in range(1, 4):
            assert mc.f[i, 0, i] == 1.0
            assert mc.f[i, i, 0] == -1.0

    def test_borel_sl4_spot_values(self):
        # oracle: hand-computed commutators of the triangular basis
        mc = homo.borel_mc(4)
        idx = {(l.h, l.k): i for i, l in enumerate(mc.labels)}
        f = mc.f
        assert f[idx[1, 1], idx[0, 1], idx[1, 1]] == -2.0
        assert f[idx[1, 2], idx[0, 1], idx[1, 2]] == 1.0
        assert f[idx[3, 1], idx[1, 1], idx[2, 2]] == 1.0
        assert f[idx[3, 1], idx[1, 3], idx[2, 1]] == -1.0

    def test_borel_antisymmetry_and_jacobi(self):
        # oracle: f^l_{im} f^m_{jk} + cyclic(i,j,k) = 0
        for n in (3, 4, 5):
            f = homo.borel_mc(n).f
            assert np.max(np.abs(f + np.swapaxes(f, 1, 2))) == 0.0
            t = np.einsum("lim,mjk->lijk", f, f)
            jac = (t + t.transpose(0, 2, 3, 1) + t.transpose(0, 3, 1, 2))
            assert np.max(np.abs(jac)) < 1e-12

    def test_two_routes_agree_n2_to_7(self):
        for n in range(2, 8):
            homo.borel_mc(n)  # raises on disagreement


class TestConstraints:
    def test_canonical_solution_residual(self):
        assert homo.residual(fixtures.W_canonical(), injection_system()) \
            <= 1e-12

    def test_zero_matrix_is_solution(self):
        C = injection_system()
        assert homo.residual(np.zeros(C.shape), C) == 0.0

    def test_perturbed_canonical_fails(self):
        W = fixtures.W_canonical().W.copy()
        W[2, 0] += 1e-3
        assert homo.residual(W, injection_system()) > 1e-5

    def test_identity_is_endomorphism_solution(self):
        mc = homo.r1_mc(2)
        C = homo.build_constraints(mc, mc)
        assert homo.residual(np.eye(mc.d), C) == 0.0

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            injection_system().residual_tensor(np.zeros((3, 9)))


class TestFixtures:
    def rng(self):
        return np.random.default_rng(0)

    def test_family_11(self):
        rng, C = self.rng(), injection_system()
        for _ in range(50):
            d = rng.uniform(-1, 1, 11)
            d[0] = np.sign(d[0] or 1) * (abs(d[0]) + 0.3)
            d[10] = np.sign(d[10] or 1) * (abs(d[10]) + 0.3)
            assert homo.residual(fixtures.W_family_11(d), C) <= 1e-10

    def test_family_12(self):
        rng, C = self.rng(), injection_system()
        for _ in range(50):
            d = rng.uniform(-1, 1, 12)
            d[7] = np.sign(d[7] or 1) * (abs(d[7]) + 0.3)
            assert homo.residual(fixtures.W_family_12(d), C) <= 1e-10

    def test_restrictions(self):
        rng, C = self.rng(), restriction_system()
        cases = [
            (fixtures.restriction_W1, 6, None),
            (fixtures.restriction_W2, 5, 0),
            (fixtures.restriction_W3, 4, None),
            (fixtures.restriction_W7, 4, None),
            (fixtures.restriction_W10, 3, None),
        ]
        for ctor, k, guard in cases:
            for _ in range(50):
                a = rng.uniform(-1, 1, k)
                if guard is not None:
                    a[guard] = np.sign(a[guard] or 1) * (abs(a[guard]) + 0.3)
                assert homo.residual(ctor(a), C) <= 1e-10

    def test_canonical_substitution(self):
        W12 = fixtures.W_family_12(fixtures.delta_canonical()).W
        assert np.array_equal(W12, fixtures.W_canonical().W)


class TestSolveNumeric:
    def test_finds_both_injection_branches(self):
        sols = homo.solve_numeric(injection_system(), seeds=6, seed=0)
        tags = {s.branch_tag for s in sols}
        assert "branch-11" in tags and "branch-12" in tags
        assert all(s.residual <= 1e-10 for s in sols)

    def test_finds_cartan_column_restriction(self):
        sols = homo.solve_numeric(restriction_system(), seeds=6, seed=0)
        assert any(s.branch_tag == "cartan-column-3" for s in sols)

    def test_deterministic(self):
        a = homo.solve_numeric(injection_system(), seeds=3, seed=5)
        b = homo.solve_numeric(injection_system(), seeds=3, seed=5)
        assert len(a) == len(b)
        for s, t in zip(a, b):
            assert np.array_equal(s.W, t.W)

    def test_solutions_deduplicated(self):
        sols = homo.solve_numeric(injection_system(), seeds=6, seed=1)
        for i, s in enumerate(sols):
            for t in sols[i + 1:]:
                assert np.max(np.abs(s.W - t.W)) > 1e-6


class TestHomomorphismLaw:
    def test_respects_group_product(self):
        # oracle: h(u . w) = h(u) . h(w) for the closed-form layer map
        from cartannet import spaces
        rng = np.random.default_rng(1)
        src, tgt = SpaceId.so(1, 4), SpaceId.so(1, 2)
        for _ in range(100):
            W = rng.uniform(-1, 1, (2, 4))
            b = rng.uniform(-1, 1, 2)
            u = SolvCoords(src, rng.uniform(-1, 1, 5))
            w = SolvCoords(src, rng.uniform(-1, 1, 5))
            lhs = homo.r1_homomorphism(W, b, spaces.group_product(u, w))
            rhs = spaces.group_product(
                homo.r1_homomorphism(W, b, u), homo.r1_homomorphism(W, b, w))
            assert np.max(np.abs(lhs.values - rhs.values)) < 1e-12

    def test_composition_identity(self):
        # oracle: composing layers gives (W2 W1, b2 + W2 b1)
        rng = np.random.default_rng(2)
        for _ in range(50):
            W1 = rng.uniform(-1, 1, (3, 4))
            b1 = rng.uniform(-1, 1, 3)
            W2 = rng.uniform(-1, 1, (2, 3))
            b2 = rng.uniform(-1, 1, 2)
            x = SolvCoords(SpaceId.so(1, 4), rng.uniform(-1, 1, 5))
            two_step = homo.r1_homomorphism(
                W2, b2, homo.r1_homomorphism(W1, b1, x))
            one_step = homo.r1_homomorphism(W2 @ W1, b2 + W2 @ b1, x)
            assert np.max(np.abs(two_step.values - one_step.values)) < 1e-12


class TestCoframe:
    def test_r1_closed_form(self):
        E = homo.coframe(H3, np.array([0.2, 0.5, -0.3]))
        want = np.eye(3)
        want[1, 0], want[2, 0] = 0.5, -0.3
        assert np.max(np.abs(E - want)) < 1e-14

    def test_mc_equations_close(self):
        # oracle: d e^i = -1/2 f^i_jk e^j ^ e^k, checked by finite
        # differences of the coframe matrix
        rng = np.random.default_rng(3)
        for space, mc in ((H3, homo.r1_mc(1)), (SL4, homo.borel_mc(4))):
            x = rng.uniform(-0.5, 0.5, space.dim)
            h = 1e-5
            d = space.dim
            E0 = homo.coframe(space, x)
            dE = np.zeros((d, d, d))  # dE[i, j, k] = d_j E^i_k
            for j in range(d):
                xp, xm = x.copy(), x.copy()
                xp[j] += h
                xm[j] -= h
                dE[:, j, :] = (homo.coframe(space, xp)
                               - homo.coframe(space, xm)) / (2 * h)
            # exterior derivative coefficient on dY_j ^ dY_k (j < k)
            ext = dE[:, :, :].transpose(0, 1, 2) - dE.transpose(0, 2, 1)
            quad = np.einsum("ijk,ja,kb->iab", mc.f, E0, E0)
            resid = ext + quad
            assert np.max(np.abs(resid)) < 1e-7


class TestIntegration:
    def test_canonical_embedding(self):
        rng = np.random.default_rng(4)
        for _ in range(3):
            w = rng.uniform(-0.7, 0.7, 3)
            got = homo.integrate_coordinate_map(
                fixtures.W_canonical(), SolvCoords(H3, w))
            want = fixtures.phi_canonical(w)
            assert np.max(np.abs(got.values - want.values)) < 1e-8

    def test_restriction_map_at_zero_offsets(self):
        # the closed-form restriction map has no constant offset when the
        # first and third parameters vanish, so it matches the integrator
        rng = np.random.default_rng(5)
        a = np.array([0.0, 0.8, 0.0, -0.3])
        x = rng.uniform(-0.5, 0.5, 9)
        got = homo.integrate_coordinate_map(
            fixtures.restriction_W3(a), SolvCoords(SL4, x))
        want = fixtures.phi_restriction_W3(a, x)
        assert np.max(np.abs(got.values - want.values)) < 1e-8

    def test_path_independence(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(-0.5, 0.5, 3)
        mid = rng.uniform(-0.5, 0.5, 3)
        direct = homo.integrate_along_path(fixtures.W_canonical(), [x])
        detour = homo.integrate_along_path(fixtures.W_canonical(), [mid, x])
        assert np.max(np.abs(direct.values - detour.values)) < 1e-7

    def test_zero_input_maps_to_origin(self):
        out = homo.integrate_coordinate_map(
            fixtures.W_canonical(), SolvCoords(H3, np.zeros(3)))
        assert np.max(np.abs(out.values)) < 1e-12


class TestNaming:
    def test_algebra_names(self):
        assert homo.space_for_name("r1(1)") == H3
        assert homo.space_for_name("borel_sl(4)") == SL4
        assert homo.space_for_name("solv_so(1,3)") == H3

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            homo.space_for_name("sp(4)")
