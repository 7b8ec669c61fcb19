# tests/test_distributions.py
"""
Tests des poids exponentiels, des divergences et des variables de contrainte.
"""

import math

import numpy as np
import pytest

from fairproj.core.exceptions import ArgumentError, DivergenceInfiniteError, NumericError
from fairproj.models import MarginVector, SimplexWeights
from fairproj.schemas import Surrogate
from fairproj.services.distributions import (
    build_constraints,
    constraint_moments,
    delta_from_kl,
    exponential_weights,
    kl_divergence,
    log_total_weight,
    pinsker_delta,
    total_variation,
)

from tests.helpers import make_dataset, random_simplex


def simplex(*values) -> SimplexWeights:
    return SimplexWeights(np.array(values, dtype=float))


class TestExponentialWeights:
    """Tests de exponential_weights"""

    def test_zero_margins_give_uniform(self):
        """Teste que f_0 = 0 donne la distribution uniforme."""
        q = exponential_weights(np.zeros(5))

        assert np.allclose(q.weights, 0.2)

    def test_closed_form(self):
        """Teste marges (ln 2, 0) -> (1/3, 2/3)."""
        q = exponential_weights(np.array([math.log(2), 0.0]))

        assert q.weights == pytest.approx([1 / 3, 2 / 3], abs=1e-12)

    def test_large_margins_do_not_overflow(self):
        """Teste marges (1000, 1001) -> (e/(e+1), 1/(e+1)) sans débordement."""
        q = exponential_weights(MarginVector(np.array([1000.0, 1001.0])))
        e = math.e

        assert q.weights == pytest.approx([e / (e + 1), 1 / (e + 1)], abs=1e-12)
        assert np.all(np.isfinite(q.log_weights))

    def test_shift_invariance(self, rng):
        """Teste que décaler toutes les marges d'une constante ne change rien."""
        margins = rng.normal(size=20)
        first = exponential_weights(margins)
        second = exponential_weights(margins + 37.5)

        assert np.allclose(first.weights, second.weights, atol=1e-12)

    def test_log_weights_consistent(self, rng):
        q = exponential_weights(rng.normal(size=10))

        assert np.allclose(np.exp(q.log_weights), q.weights, atol=1e-12)

    def test_base_log_weights_tilt(self):
        """Teste l'inclinaison q_i ∝ v_i exp(-m_i)."""
        base = np.log(np.array([0.25, 0.75]))
        q = exponential_weights(np.zeros(2), base)

        assert q.weights == pytest.approx([0.25, 0.75], abs=1e-12)

    def test_non_finite_margin(self):
        with pytest.raises(NumericError):
            exponential_weights(np.array([0.0, np.inf]))

    def test_log_total_weight(self):
        """Teste log Σ exp(-m_i) pour des marges nulles : log n."""
        assert log_total_weight(np.zeros(8)) == pytest.approx(math.log(8))


class TestDivergences:
    """Tests de KL, de la variation totale et du coût de Pinsker"""

    def test_kl_self_is_zero(self, rng):
        p = random_simplex(rng, 6)

        assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("p,q,expected", [
        ((1.0, 0.0), (0.5, 0.5), math.log(2)),
        ((0.5, 0.5), (0.9, 0.1), 0.5108256237659907),
    ])
    def test_kl_values(self, p, q, expected):
        assert kl_divergence(simplex(*p), simplex(*q)) == pytest.approx(expected, abs=1e-12)

    def test_kl_support_violation(self):
        """Teste que KL infinie lève DivergenceInfiniteError."""
        with pytest.raises(DivergenceInfiniteError):
            kl_divergence(simplex(0.5, 0.5), simplex(1.0, 0.0))

    def test_length_mismatch(self):
        with pytest.raises(ArgumentError):
            total_variation(simplex(0.5, 0.5), simplex(0.2, 0.3, 0.5))

    def test_total_variation(self):
        assert total_variation(simplex(1.0, 0.0), simplex(0.5, 0.5)) == pytest.approx(0.5)

    def test_pinsker_delta(self):
        """Teste KL = ln 2 -> δ ≈ 0.5887 et w = q -> 0."""
        assert pinsker_delta(simplex(1.0, 0.0), simplex(0.5, 0.5)) == pytest.approx(0.58870501, abs=1e-8)
        assert pinsker_delta(simplex(0.3, 0.7), simplex(0.3, 0.7)) == 0.0

    def test_delta_clamps_negative_roundoff(self):
        assert delta_from_kl(-1e-17) == 0.0

    def test_pinsker_inequality(self, rng):
        """Teste TV <= sqrt(KL / 2) sur 1000 paires aléatoires."""
        for _ in range(1000):
            n = int(rng.integers(2, 8))
            p, q = random_simplex(rng, n), random_simplex(rng, n)
            assert total_variation(p, q) <= pinsker_delta(p, q) + 1e-12

    def test_gibbs_inequality(self, rng):
        for _ in range(200):
            p, q = random_simplex(rng, 5), random_simplex(rng, 5)
            assert kl_divergence(p, q) >= 0.0


class TestConstraints:
    """Tests de build_constraints"""

    @pytest.fixture
    def four_cells(self):
        """Une ligne par cellule (a, y) : (1,+), (0,+), (1,-), (0,-)."""
        return make_dataset([0.0, 1.0, 2.0, 3.0], [1, 0, 1, 0], [1, 1, -1, -1])

    def test_eopp_row(self, four_cells):
        g = build_constraints(four_cells, Surrogate.EOPP)

        assert g.k == 1
        assert g.labels == ["eopp"]
        assert g.g[0].tolist() == [1.0, -1.0, 0.0, 0.0]

    def test_dp_row(self, four_cells):
        g = build_constraints(four_cells, "dp")

        assert g.g[0].tolist() == [1.0, -1.0, 1.0, -1.0]

    def test_eodds_rows(self, four_cells):
        g = build_constraints(four_cells, Surrogate.EODDS)

        assert g.k == 2
        assert g.g[0].tolist() == [1.0, -1.0, 0.0, 0.0]
        assert g.g[1].tolist() == [0.0, 0.0, 1.0, -1.0]
        assert g.bound == 1.0

    def test_unknown_surrogate(self, four_cells):
        with pytest.raises(ArgumentError):
            build_constraints(four_cells, "eqopp")

    def test_moments(self, four_cells):
        """Teste <p, g> et la violation maximale."""
        g = build_constraints(four_cells, Surrogate.EODDS)
        moments, violation = constraint_moments(g, simplex(0.4, 0.1, 0.2, 0.3))

        assert moments == pytest.approx([0.3, -0.1])
        assert violation == pytest.approx(0.3)
        assert violation == g.max_violation(simplex(0.4, 0.1, 0.2, 0.3))

    def test_moments_length_mismatch(self, four_cells):
        g = build_constraints(four_cells, Surrogate.DP)
        with pytest.raises(ArgumentError):
            constraint_moments(g, simplex(0.5, 0.5))
