import math

import numpy as np
import pytest

from vowelbench import gmm, modelio
from vowelbench.dataset import Dataset
from vowelbench.errors import DataError, SingularCovarianceError
from vowelbench.gmm import EmConfig, GaussianComponent, GaussianMixture


def naive_pdf(x, mean, cov):
    """Bivariate normal density by hand: explicit 2x2 inverse and determinant."""
    (a, b), (c, d) = cov
    det = a * d - b * c
    dx, dy = x[0] - mean[0], x[1] - mean[1]
    q = (d * dx * dx - (b + c) * dx * dy + a * dy * dy) / det
    return math.exp(-0.5 * q) / (2 * math.pi * math.sqrt(det))


def random_spd(rng, scale=1.0):
    A = rng.normal(size=(2, 2)) * scale
    return A @ A.T + 0.1 * scale * scale * np.eye(2)


def random_mixture(rng, k, kind="full"):
    comps = []
    for _ in range(k):
        S = random_spd(rng)
        if kind == "diag":
            S = np.diag(np.diag(S))
        comps.append(GaussianComponent(rng.normal(size=2) * 3, S))
    w = rng.uniform(0.2, 1.0, size=k)
    return GaussianMixture(tuple(comps), w / w.sum(), kind)


class TestDensities:
    def test_standard_normal_at_mean(self):
        comp = GaussianComponent(np.zeros(2), np.eye(2))
        assert gmm.component_pdf([0, 0], comp) == pytest.approx(0.15915494309189535, rel=1e-12)

    def test_standard_normal_one_unit_out(self):
        comp = GaussianComponent(np.zeros(2), np.eye(2))
        assert gmm.component_pdf([1, 0], comp) == pytest.approx(0.09653235263005391, rel=1e-12)

    def test_diagonal_covariance(self):
        # (2 pi)^-1 |S|^-1/2 exp(-(1/2)(1/2 + 4/0.5)), |S| = 1
        comp = GaussianComponent(np.zeros(2), np.diag([2.0, 0.5]))
        assert gmm.component_pdf([1, 2], comp) == pytest.approx(0.0022702233360362605, rel=1e-12)
        assert gmm.component_pdf([1, 2], comp) == pytest.approx(math.exp(-4.25) / (2 * math.pi), rel=1e-12)

    def test_component_pdf_vs_naive(self, rng):
        for _ in range(25):
            S = random_spd(rng, scale=rng.uniform(0.5, 3))
            mu = rng.normal(size=2)
            x = mu + rng.normal(size=2)
            got = gmm.component_pdf(x, GaussianComponent(mu, S))
            assert abs(got - naive_pdf(x, mu, S)) <= 1e-10 * max(1.0, naive_pdf(x, mu, S))

    def test_single_component_mixture_equals_component(self, rng):
        comp = GaussianComponent(rng.normal(size=2), random_spd(rng))
        gm = GaussianMixture((comp,), np.array([1.0]))
        x = rng.normal(size=2)
        assert gmm.mixture_pdf(x, gm) == pytest.approx(gmm.component_pdf(x, comp), rel=1e-13)

    def test_mixture_integrates_to_one(self, rng):
        gm = random_mixture(rng, 3)
        sig = np.sqrt(gm.covs[:, [0, 1], [0, 1]].max(axis=0))
        lo = gm.means.min(axis=0) - 8 * sig
        hi = gm.means.max(axis=0) + 8 * sig
        g1 = np.linspace(lo[0], hi[0], 601)
        g2 = np.linspace(lo[1], hi[1], 601)
        P = np.column_stack([np.repeat(g1, len(g2)), np.tile(g2, len(g1))])
        vals = gmm.mixture_pdf(P, gm).reshape(len(g1), len(g2))
        integral = np.trapezoid(np.trapezoid(vals, g2, axis=1), g1)
        assert abs(integral - 1.0) < 1e-3

    def test_responsibilities_vs_naive(self, rng):
        for _ in range(25):
            k = int(rng.integers(1, 5))
            gm = random_mixture(rng, k)
            X = rng.normal(size=(6, 2)) * 2
            got = gmm.responsibilities(X, gm)
            for i, x in enumerate(X):
                num = np.array([w * naive_pdf(x, c.mean, c.cov) for w, c in zip(gm.weights, gm.components)])
                np.testing.assert_allclose(got[i], num / num.sum(), rtol=0, atol=1e-10)
            np.testing.assert_allclose(got.sum(axis=1), 1.0, atol=1e-12)

    def test_responsibilities_far_tail_stay_finite(self):
        gm = GaussianMixture((GaussianComponent([0, 0], np.eye(2)), GaussianComponent([10, 0], np.eye(2))),
                             np.array([0.5, 0.5]))
        r = gmm.responsibilities([[1e3, 0.0]], gm)
        assert np.all(np.isfinite(r))
        assert r[0, 1] == pytest.approx(1.0)

    def test_singular_covariance_rejected(self):
        comp = GaussianComponent(np.zeros(2), np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(SingularCovarianceError):
            gmm.component_pdf([0, 0], comp)

    def test_bad_weights(self):
        comp = GaussianComponent(np.zeros(2), np.eye(2))
        with pytest.raises(ValueError):
            GaussianMixture((comp, comp), np.array([0.7, 0.7]))


def _two_blobs(rng, n=200, sep=20.0):
    X = np.vstack([rng.normal(size=(n, 2)), rng.normal(size=(n, 2)) + [sep, 0]])
    return X


class TestEm:
    def test_k1_is_closed_form(self, rng):
        X = rng.normal(size=(60, 2)) @ np.array([[2.0, 0.3], [0.0, 1.0]]) + [5, -1]
        gm, rep = gmm.em_fit(X, EmConfig(k=1, covariance_floor=1e-12), "full")
        np.testing.assert_allclose(gm.means[0], X.mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(gm.covs[0], np.cov(X.T, ddof=0), rtol=1e-10)
        assert rep.converged

    def test_diag_k1(self, rng):
        X = rng.normal(size=(50, 2)) * [3, 0.5]
        gm, _ = gmm.em_fit(X, EmConfig(k=1, covariance_floor=1e-12), "diag")
        np.testing.assert_allclose(np.diag(gm.covs[0]), X.var(axis=0), rtol=1e-10)
        assert gm.covs[0][0, 1] == 0.0 and gm.covs[0][1, 0] == 0.0

    def test_recovers_separated_components(self, rng):
        X = _two_blobs(rng)
        gm, rep = gmm.em_fit(X, EmConfig(k=2, rng_seed=1), "full")
        order = np.argsort(gm.means[:, 0])
        np.testing.assert_allclose(gm.means[order], [[0, 0], [20, 0]], atol=0.3)
        np.testing.assert_allclose(gm.weights, [0.5, 0.5], atol=0.01)
        for S in gm.covs:
            np.testing.assert_allclose(S, np.eye(2), atol=0.3)

    @pytest.mark.parametrize("kind", ["diag", "full"])
    def test_monotone(self, rng, kind):
        for k in (2, 4, 7):
            X = rng.normal(size=(80, 2)) * [100, 300]
            _, rep = gmm.em_fit(X, EmConfig(k=k, n_restarts=1, rng_seed=k), kind)
            d = np.diff(rep.ll_trace)
            assert np.all(d >= -1e-8 * max(1.0, abs(rep.ll_trace[-1])))

    def test_diag_off_diagonals_zero(self, rng):
        X = rng.normal(size=(120, 2)) @ np.array([[1.0, 0.9], [0.0, 0.3]])
        gm, _ = gmm.em_fit(X, EmConfig(k=3), "diag")
        for S in gm.covs:
            assert S[0, 1] == 0.0 and S[1, 0] == 0.0

    def test_full_covariances_symmetric_spd(self, rng):
        X = rng.normal(size=(120, 2)) @ np.array([[1.0, 0.9], [0.0, 0.3]])
        gm, _ = gmm.em_fit(X, EmConfig(k=3), "full")
        for S in gm.covs:
            np.testing.assert_array_equal(S, S.T)
            assert np.linalg.eigvalsh(S).min() > 0

    def test_floor_applies_to_duplicates(self):
        # five identical points: MLE covariance is zero, the floor keeps it PD
        X = np.vstack([np.zeros((5, 2)), np.ones((5, 2)) * 3])
        gm, _ = gmm.em_fit(X, EmConfig(k=2), "full")
        assert np.linalg.eigvalsh(gm.covs).min() > 0

    def test_deterministic_and_seed_sensitive(self, rng):
        X = rng.normal(size=(100, 2))
        a, _ = gmm.em_fit(X, EmConfig(k=4, rng_seed=3, n_restarts=1))
        b, _ = gmm.em_fit(X, EmConfig(k=4, rng_seed=3, n_restarts=1))
        np.testing.assert_array_equal(a.means, b.means)

    def test_too_few_points(self):
        with pytest.raises(DataError, match="cannot fit 3 components"):
            gmm.em_fit(np.zeros((2, 2)), EmConfig(k=3))

    def test_bad_config(self):
        with pytest.raises(ValueError):
            EmConfig(k=0)
        with pytest.raises(ValueError):
            EmConfig(covariance_floor=0)

    def test_floor_covariance_diag_and_full(self):
        floor = np.array([1.0, 1.0])
        np.testing.assert_array_equal(gmm.floor_covariance(np.diag([0.5, 4.0]), floor, "diag"), np.diag([1.0, 4.0]))
        S = np.array([[4.0, 0.0], [0.0, 0.25]])
        np.testing.assert_allclose(gmm.floor_covariance(S, floor, "full"), np.diag([4.0, 1.0]), atol=1e-14)
        big = np.array([[5.0, 1.0], [1.0, 3.0]])
        assert gmm.floor_covariance(big, floor, "full") is big


class TestClassifier:
    def test_separated_perfect(self, separated):
        train, test = separated
        for kind in ("diag", "full"):
            clf = gmm.fit_classifier(train, EmConfig(k=2), kind)
            assert np.array_equal(clf.predict(test.X), test.y)

    def test_priors_are_frequencies(self, separated):
        train, _ = separated
        clf = gmm.fit_classifier(train, EmConfig(k=1))
        np.testing.assert_allclose(clf.priors, 0.1)

    def test_tie_goes_to_smallest_label(self):
        comp = GaussianComponent(np.zeros(2), np.eye(2))
        gm = GaussianMixture((comp,), np.array([1.0]))
        clf = gmm.GmmClassifier(tuple([gm] * 10), np.full(10, 0.1))
        label, scores = gmm.classify([0.3, -0.2], clf)
        assert label == 0
        assert len(set(scores.tolist())) == 1

    def test_classify_matches_predict(self, standin):
        train, test = standin
        clf = gmm.fit_classifier(train, EmConfig(k=2), "full")
        preds = clf.predict(test.X[:20])
        assert [gmm.classify(x, clf)[0] for x in test.X[:20]] == preds.tolist()

    def test_permutation_invariant(self, standin, rng):
        train, _ = standin
        perm = rng.permutation(len(train))
        shuffled = Dataset.from_arrays(train.X[perm], train.y[perm])
        a = gmm.fit_classifier(train, EmConfig(k=2), "full")
        b = gmm.fit_classifier(shuffled, EmConfig(k=2), "full")
        g1, g2 = np.meshgrid(np.linspace(198, 1300, 40), np.linspace(550, 3369, 40))
        P = np.column_stack([g1.ravel(), g2.ravel()])
        np.testing.assert_array_equal(a.predict(P), b.predict(P))

    def test_missing_class(self):
        ds = Dataset.from_arrays(np.arange(18).reshape(9, 2), list(range(9)))
        with pytest.raises(DataError, match="no points for classes"):
            gmm.fit_classifier(ds, EmConfig(k=1))

    def test_class_smaller_than_k(self, separated):
        train, _ = separated
        with pytest.raises(DataError, match="fewer than k=25"):
            gmm.fit_classifier(train, EmConfig(k=25))

    def test_serialization_round_trip(self, standin, tmp_path):
        train, test = standin
        clf = gmm.fit_classifier(train, EmConfig(k=2), "full")
        p = tmp_path / "m.txt"
        modelio.save(clf, p)
        back = modelio.load(p)
        np.testing.assert_array_equal(back.log_scores(test.X), clf.log_scores(test.X))
