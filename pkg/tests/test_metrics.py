# tests/test_metrics.py
"""
Tests des métriques : matrices de confusion par groupe, exactitude,
écarts EOpp et DP.
"""

import numpy as np
import pytest

from fairproj.core.exceptions import ArgumentError
from fairproj.models import ConfusionCounts, DecisionStump, Ensemble, EnsembleTerm, GroupConfusion
from fairproj.services.metrics import (
    accuracy,
    confusion,
    confusion_from_predictions,
    dp_gap,
    dp_gap_from_confusion,
    eopp_gap,
    evaluate,
)

from tests.helpers import make_dataset


@pytest.fixture
def hand_dataset():
    """Six lignes (a, y) : (1,+) (1,+) (1,-) (0,+) (0,-) (0,-)."""
    return make_dataset(np.arange(6, dtype=float), [1, 1, 1, 0, 0, 0], [1, 1, -1, 1, -1, -1])


HAND_PREDICTIONS = np.array([1, -1, 1, 1, -1, 1])


@pytest.fixture
def perfect_ensemble():
    """Souche x > 0 -> +1, parfaite sur le jeu séparable."""
    stump = DecisionStump(feature=0, threshold=0.0, polarity=1)
    return Ensemble(terms=[EnsembleTerm(alpha=1.0, stump=stump)])


class TestConfusion:
    """Tests des matrices de confusion"""

    def test_hand_counts(self, hand_dataset):
        """Teste les comptes énumérés à la main."""
        c = confusion_from_predictions(hand_dataset, HAND_PREDICTIONS)

        assert c.groups[1] == ConfusionCounts(tp=1, fp=1, tn=0, fn=1)
        assert c.groups[0] == ConfusionCounts(tp=1, fp=1, tn=1, fn=0)
        assert c.total == 6

    def test_perfect_classifier(self, separable_dataset, perfect_ensemble):
        c = confusion(separable_dataset, perfect_ensemble)

        for counts in c.groups.values():
            assert counts.fp == 0
            assert counts.fn == 0

    def test_constant_classifier(self, separable_dataset):
        """Teste le classifieur constant +1 (ensemble vide) : TP = n_a^+, FP = n_a^-."""
        c = confusion(separable_dataset, Ensemble())
        counts = separable_dataset.group_counts

        for a in (0, 1):
            assert c.groups[a].tp == counts.positives[a]
            assert c.groups[a].fp == counts.negatives[a]

    def test_length_mismatch(self, hand_dataset):
        with pytest.raises(ArgumentError):
            confusion_from_predictions(hand_dataset, np.ones(5))


class TestAccuracy:
    """Tests de l'exactitude"""

    def test_hand_value(self, hand_dataset):
        assert accuracy(confusion_from_predictions(hand_dataset, HAND_PREDICTIONS)) == pytest.approx(0.5)

    def test_perfect(self, separable_dataset, perfect_ensemble):
        assert evaluate(separable_dataset, perfect_ensemble).accuracy == 1.0

    def test_base_rate(self):
        """Teste un classifieur constant sur une répartition 60/40 : 0.6."""
        d = make_dataset(np.arange(10, dtype=float), [0, 1] * 5, [1] * 6 + [-1] * 4)

        assert evaluate(d, Ensemble()).accuracy == pytest.approx(0.6)

    def test_empty(self):
        empty = GroupConfusion(groups={0: ConfusionCounts(), 1: ConfusionCounts()})
        with pytest.raises(ArgumentError):
            accuracy(empty)


class TestGaps:
    """Tests des écarts EOpp et DP"""

    def test_hand_values(self, hand_dataset):
        """Teste TPR_1 = 1/2, TPR_0 = 1 et des taux de prédiction positive égaux."""
        c = confusion_from_predictions(hand_dataset, HAND_PREDICTIONS)

        assert eopp_gap(c) == pytest.approx(0.5)
        assert dp_gap_from_confusion(c) == pytest.approx(0.0)

    def test_tpr_difference(self):
        """Teste TPR 0.8 contre 0.6 -> 0.2, quel que soit le groupe nommé « 1 »."""
        high, low = ConfusionCounts(tp=8, fn=2), ConfusionCounts(tp=6, fn=4)

        assert eopp_gap(GroupConfusion(groups={1: high, 0: low})) == pytest.approx(0.2)
        assert eopp_gap(GroupConfusion(groups={1: low, 0: high})) == pytest.approx(0.2)

    def test_perfect_classifier(self, separable_dataset, perfect_ensemble):
        report = evaluate(separable_dataset, perfect_ensemble)

        assert report.eopp_gap == 0.0

    def test_constant_classifier_dp(self, separable_dataset):
        assert dp_gap(separable_dataset, Ensemble()) == 0.0

    def test_group_indicator_predictor(self, hand_dataset):
        """Teste le prédicteur « groupe » : écart DP = 1."""
        predictions = np.where(hand_dataset.protected == 1, 1, -1)
        c = confusion_from_predictions(hand_dataset, predictions)

        assert dp_gap_from_confusion(c) == 1.0
        assert accuracy(c) == pytest.approx(4 / 6)

    def test_undefined_eopp(self):
        """Teste qu'un groupe sans positif donne None, pas 0."""
        d = make_dataset([0.0, 1.0, 2.0], [1, 0, 0], [1, 1, -1])
        d_no_positive = make_dataset([0.0, 1.0, 2.0], [1, 0, 0], [-1, 1, -1])

        assert evaluate(d, Ensemble()).eopp_gap == 0.0
        assert evaluate(d_no_positive, Ensemble()).eopp_gap is None

    def test_undefined_dp(self):
        d = make_dataset([0.0, 1.0], [0, 0], [1, -1])
        report = evaluate(d, Ensemble())

        assert report.dp_gap is None
        assert report.eopp_gap is None
        assert report.accuracy == 0.5
