# tests/test_weak_learner.py
"""
Tests des souches de décision : ajustement exact, prédiction, erreur et edge.
"""

import itertools

import numpy as np
import pytest

from fairproj.core.exceptions import ArgumentError
from fairproj.models import DecisionStump, SimplexWeights
from fairproj.services.distributions import pinsker_delta, total_variation
from fairproj.services.weak_learner import edge, fit_stump, predict, predict_batch, weighted_error

from tests.helpers import make_dataset, random_simplex


def exhaustive_best_error(d, p: SimplexWeights) -> float:
    """Erreur minimale par énumération de toutes les souches candidates."""
    best = np.inf
    for feature in range(d.width):
        values = np.unique(d.features[:, feature])
        thresholds = [values[0] - 1.0] + [(a + b) / 2 for a, b in zip(values[:-1], values[1:])]
        for threshold, polarity in itertools.product(thresholds, (1, -1)):
            stump = DecisionStump(feature=feature, threshold=float(threshold), polarity=polarity)
            best = min(best, weighted_error(stump, d, p))
    return best


@pytest.fixture
def four_points():
    """x = (1, 2, 3, 4), y = (+, +, -, +)."""
    return make_dataset([1.0, 2.0, 3.0, 4.0], [0, 1, 0, 1], [1, 1, -1, 1])


class TestFitStump:
    """Tests de fit_stump"""

    def test_separable(self, separable_dataset):
        """Teste une erreur nulle et un seuil strictement entre les classes."""
        report = fit_stump(separable_dataset, SimplexWeights.uniform(separable_dataset.n))

        assert report.weighted_error == 0.0
        assert -0.5 < report.stump.threshold < 0.5
        assert report.stump.polarity == 1

    def test_uniform_weights(self, four_points):
        report = fit_stump(four_points, SimplexWeights.uniform(4))

        assert report.weighted_error == pytest.approx(0.25)

    def test_weights_change_minimizer(self, four_points):
        """Teste que les poids (0.1, 0.1, 0.1, 0.7) ramènent l'erreur à 0.1."""
        p = SimplexWeights(np.array([0.1, 0.1, 0.1, 0.7]))
        report = fit_stump(four_points, p)

        assert report.weighted_error == pytest.approx(0.1)
        assert weighted_error(report.stump, four_points, p) == pytest.approx(0.1)
        assert predict(report.stump, [4.0]) == 1

    def test_candidate_count(self, four_points):
        """Teste le nombre de candidats : (sentinelle + 3 milieux) x 2 polarités."""
        report = fit_stump(four_points, SimplexWeights.uniform(4))

        assert report.candidate_count == 8

    def test_single_class(self):
        """Teste qu'un jeu mono-classe donne une souche d'erreur nulle."""
        d = make_dataset([0.0, 1.0, 2.0], [0, 1, 0], [1, 1, 1])
        report = fit_stump(d, SimplexWeights.uniform(3))

        assert report.weighted_error == 0.0

    def test_matches_exhaustive_search(self, rng):
        """Teste l'optimalité contre une énumération sur 200 instances."""
        for _ in range(200):
            n, width = int(rng.integers(2, 12)), int(rng.integers(1, 4))
            features = rng.integers(0, 5, size=(n, width)).astype(float)
            labels = rng.choice([-1, 1], size=n)
            d = make_dataset(features, rng.integers(0, 2, size=n), labels)
            p = random_simplex(rng, n)

            report = fit_stump(d, p)

            assert report.weighted_error == pytest.approx(exhaustive_best_error(d, p), abs=1e-12)
            assert weighted_error(report.stump, d, p) == pytest.approx(report.weighted_error, abs=1e-12)

    def test_weight_length_mismatch(self, four_points):
        with pytest.raises(ArgumentError):
            fit_stump(four_points, SimplexWeights.uniform(3))


class TestPredict:
    """Tests de predict et predict_batch"""

    @pytest.mark.parametrize("x,expected", [([1.0], 1), ([0.0], -1), ([-2.0], -1)])
    def test_boundary_is_not_greater(self, x, expected):
        stump = DecisionStump(feature=0, threshold=0.0, polarity=1)

        assert predict(stump, x) == expected

    def test_negative_polarity(self):
        stump = DecisionStump(feature=1, threshold=0.5, polarity=-1)

        assert predict(stump, [9.0, 1.0]) == -1
        assert predict_batch(stump, np.array([[0.0, 1.0], [0.0, 0.0]])).tolist() == [-1, 1]

    def test_feature_out_of_range(self):
        stump = DecisionStump(feature=2, threshold=0.0, polarity=1)
        with pytest.raises(ArgumentError):
            predict(stump, [1.0, 2.0])

    def test_invalid_polarity(self):
        with pytest.raises(ValueError):
            DecisionStump(feature=0, threshold=0.0, polarity=0)


class TestEdge:
    """Tests de l'edge γ = ½ - erreur pondérée"""

    def test_perfect_stump(self, separable_dataset):
        stump = DecisionStump(feature=0, threshold=0.0, polarity=1)

        assert edge(stump, separable_dataset, SimplexWeights.uniform(10)) == pytest.approx(0.5)

    def test_edge_identity(self, rng, four_points):
        for _ in range(50):
            p = random_simplex(rng, 4)
            stump = DecisionStump(feature=0, threshold=float(rng.uniform(0, 5)), polarity=int(rng.choice([-1, 1])))
            assert edge(stump, four_points, p) == pytest.approx(0.5 - weighted_error(stump, four_points, p))

    def test_edge_transfer(self, rng, gap_dataset):
        """Teste γ_q >= γ_w - TV(w, q) >= γ_w - δ pour des paires aléatoires."""
        for _ in range(100):
            w, q = random_simplex(rng, gap_dataset.n), random_simplex(rng, gap_dataset.n)
            stump = fit_stump(gap_dataset, w).stump
            gamma_w, gamma_q = edge(stump, gap_dataset, w), edge(stump, gap_dataset, q)

            assert gamma_q >= gamma_w - total_variation(w, q) - 1e-12
            assert gamma_q >= gamma_w - pinsker_delta(w, q) - 1e-12
