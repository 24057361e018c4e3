"""Separators, signed distances, probability heads and likelihoods."""

import numpy as np
import pytest

from cartannet import classify, spaces
from cartannet.spaces import SolvCoords, SpaceId

H2 = SpaceId.so(1, 1)
H3 = SpaceId.so(1, 2)


def rand_sep(rng, s=2):
    # draw until admissible
    while True:
        alpha, beta = rng.uniform(-1, 1, 2)
        w = rng.uniform(-1, 1, s)
        sep = classify.Separator(alpha, beta, w)
        if sep.admissible:
            return sep


class TestHValue:
    def test_linear_reduction(self):
        # oracle: alpha = beta = 0, w = e_j picks out coordinate 1+j
        sep = classify.Separator(0.0, 0.0, np.array([0.0, 1.0]))
        p = SolvCoords(H3, [0.4, 0.7, -0.3])
        assert np.isclose(classify.h_value(sep, p), -0.3)

    def test_origin_value(self):
        sep = classify.Separator(0.4, -0.1, np.array([1.0, 0.0]))
        o = SolvCoords(H3, np.zeros(3))
        assert np.isclose(classify.h_value(sep, o), 0.3)

    def test_full_formula(self):
        a, b = 0.5, -0.25
        w = np.array([0.3, -0.8])
        y = np.array([0.6, 0.2, -0.4])
        sep = classify.Separator(a, b, w)
        want = (a * np.exp(-0.6) + w @ y[1:]
                + b * np.exp(0.6) * (1 + (y[1] ** 2 + y[2] ** 2) / 4))
        assert np.isclose(classify.h_value(sep, SolvCoords(H3, y)), want)

    def test_dimension_mismatch(self):
        sep = classify.Separator(0.0, 0.0, np.array([1.0]))
        with pytest.raises(ValueError):
            classify.h_value(sep, SolvCoords(H3, np.zeros(3)))


class TestSignedDistance:
    def test_zero_on_surface(self):
        rng = np.random.default_rng(0)
        for seed in range(10):
            sep = rand_sep(rng)
            p = classify.find_surface_point(sep, H3, seed=seed)
            assert abs(classify.signed_distance(sep, p)) < 1e-10

    def test_axis_formula(self):
        # oracle: alpha = beta = 0, |w| = 1, p = (0, c w) gives
        # arcsinh(c / 2), the geodesic distance to the hyperplane
        w = np.array([0.6, 0.8])
        sep = classify.Separator(0.0, 0.0, w)
        for c in (-2.0, 0.3, 1.7):
            p = SolvCoords(H3, np.r_[0.0, c * w])
            assert np.isclose(classify.signed_distance(sep, p),
                              np.arcsinh(c / 2))

    def test_odd_in_parameters(self):
        rng = np.random.default_rng(1)
        sep = rand_sep(rng)
        neg = classify.Separator(-sep.alpha, -sep.beta, -sep.w)
        for _ in range(20):
            p = SolvCoords(H3, rng.uniform(-1, 1, 3))
            d1 = classify.signed_distance(sep, p)
            d2 = classify.signed_distance(neg, p)
            assert np.isclose(d1, -d2)

    def test_degenerate_rejected(self):
        sep = classify.Separator(1.0, 1.0, np.array([0.5, 0.0]))
        with pytest.raises(classify.DegenerateSeparatorError):
            classify.signed_distance(sep, SolvCoords(H3, np.zeros(3)))

    def test_matches_distance_minimization(self):
        # oracle: |signed distance| equals the minimum geodesic distance
        # to sampled points of the surface (H^2, scan over the surface)
        rng = np.random.default_rng(2)
        for _ in range(5):
            sep = rand_sep(rng, s=1)
            p = SolvCoords(H2, rng.uniform(-0.8, 0.8, 2))
            d = abs(classify.signed_distance(sep, p))
            best = np.inf
            for y2 in np.linspace(-24.0, 24.0, 8001):
                q = _surface_point_at(sep, y2)
                if q is None:
                    continue
                best = min(best, spaces.coords_distance(p, SolvCoords(H2, q)))
            assert np.isclose(d, best, atol=1e-3)


def _surface_point_at(sep, y2):
    """Solve h = 0 for Y1 at fixed scalar subPaint value y2 (H^2)."""
    a = sep.beta * (1.0 + 0.25 * y2 ** 2)
    b = float(sep.w[0]) * y2
    c = sep.alpha
    if a == 0.0:
        if b == 0.0:
            return None
        t = -c / b
        return np.array([np.log(t), y2]) if t > 0 else None
    disc = b * b - 4 * a * c
    if disc < 0:
        return None
    for t in ((-b + np.sqrt(disc)) / (2 * a), (-b - np.sqrt(disc)) / (2 * a)):
        if t > 0:
            return np.array([np.log(t), y2])
    return None


class TestSigmoids:
    def test_basic_values(self):
        assert classify.sigmoid(0.0) == 0.5
        assert classify.sigma_tilde(0.0) == 0.5

    def test_complement_symmetry(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-30, 30, 100)
        assert np.max(np.abs(classify.sigmoid(x)
                             + classify.sigmoid(-x) - 1.0)) < 1e-15
        assert np.max(np.abs(classify.sigma_tilde(x)
                             + classify.sigma_tilde(-x) - 1.0)) < 1e-15

    def test_overflow_safe(self):
        for x in (-1000.0, 1000.0):
            v = classify.sigmoid(x)
            assert np.isfinite(v) and 0.0 <= v <= 1.0

    def test_tilde_identity(self):
        # oracle: sigma_tilde(signed_distance) == sigmoid(normalized h)
        rng = np.random.default_rng(4)
        sep = rand_sep(rng)
        norm = 2 * np.sqrt(sep.w @ sep.w - sep.alpha * sep.beta)
        pts = rng.uniform(-1, 1, (100, 3))
        lhs = classify.sigma_tilde(classify.signed_distance(sep, pts))
        rhs = classify.sigmoid(classify.h_value(sep, pts) / norm)
        assert np.max(np.abs(lhs - rhs)) < 1e-14


class TestBinaryHead:
    def test_half_on_surface(self):
        rng = np.random.default_rng(5)
        sep = rand_sep(rng)
        p = classify.find_surface_point(sep, H3, seed=1)
        assert np.isclose(classify.binary_prob(sep, p), 0.5)

    def test_threshold_equals_sign_rule(self):
        rng = np.random.default_rng(6)
        sep = rand_sep(rng)
        pts = rng.uniform(-1.5, 1.5, (200, 3))
        by_prob = classify.binary_prob(sep, pts) > 0.5
        by_sign = classify.h_value(sep, pts) > 0
        assert np.array_equal(by_prob, by_sign)

    def test_nll_on_surface_is_log2(self):
        rng = np.random.default_rng(7)
        sep = rand_sep(rng)
        p = classify.find_surface_point(sep, H3, seed=2)
        pts = p.values[None, :]
        for y in (0, 1):
            nll = classify.binary_nll(pts, np.array([y]), sep)
            assert np.isclose(nll, np.log(2.0))

    def test_nll_matches_product_form(self):
        rng = np.random.default_rng(8)
        sep = rand_sep(rng)
        pts = rng.uniform(-1, 1, (20, 3))
        y = rng.integers(0, 2, 20)
        prob = classify.binary_prob(sep, pts)
        direct = -np.log(np.prod(np.where(y == 1, prob, 1 - prob)))
        assert np.isclose(classify.binary_nll(pts, y, sep), direct,
                          atol=1e-12)

    def test_empty_data(self):
        sep = classify.Separator(0.0, 0.0, np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            classify.binary_nll(np.zeros((0, 3)), np.zeros(0), sep)


class TestSoftmaxHead:
    def bank(self, rng, K=3):
        return classify.SeparatorBank(tuple(rand_sep(rng) for _ in range(K)))

    def test_identical_separators_uniform(self):
        rng = np.random.default_rng(9)
        sep = rand_sep(rng)
        bank = classify.SeparatorBank((sep, sep, sep))
        pts = rng.uniform(-1, 1, (10, 3))
        probs = classify.softmax_probs(bank, pts)
        assert np.max(np.abs(probs - 1.0 / 3.0)) < 1e-14

    def test_sums_to_one_and_positive(self):
        rng = np.random.default_rng(10)
        bank = self.bank(rng)
        pts = rng.uniform(-2, 2, (50, 3))
        probs = classify.softmax_probs(bank, pts)
        assert np.max(np.abs(probs.sum(axis=-1) - 1.0)) < 1e-12
        assert np.all(probs > 0)

    def test_k2_reduces_to_sigmoid(self):
        rng = np.random.default_rng(11)
        s1, s2 = rand_sep(rng), rand_sep(rng)
        bank = classify.SeparatorBank((s1, s2))
        pts = rng.uniform(-1, 1, (30, 3))
        probs = classify.softmax_probs(bank, pts)
        d1 = classify.signed_distance(s1, pts)
        d2 = classify.signed_distance(s2, pts)
        assert np.max(np.abs(probs[:, 0] - classify.sigmoid(d1 - d2))) < 1e-12

    def test_multiclass_nll_uniform(self):
        rng = np.random.default_rng(12)
        sep = rand_sep(rng)
        bank = classify.SeparatorBank((sep, sep, sep, sep))
        pts = rng.uniform(-1, 1, (10, 3))
        y = rng.integers(0, 4, 10)
        nll = classify.multiclass_nll(pts, y, bank)
        assert np.isclose(nll, 10 * np.log(4.0))

    def test_label_out_of_range(self):
        rng = np.random.default_rng(13)
        bank = self.bank(rng, K=2)
        with pytest.raises(ValueError):
            classify.multiclass_nll(np.zeros((1, 3)), np.array([2]), bank)
