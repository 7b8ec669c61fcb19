# tests/test_projection.py
"""
Tests du dual de projection KL, de la projection et de l'oracle par grille.
"""

import math

import numpy as np
import pytest

from fairproj.core.exceptions import ArgumentError, InfeasibleGridError, ProjectionFailureError
from fairproj.models import ConstraintFeatures, SimplexWeights
from fairproj.schemas import ProjectionConfig, SolverMode
from fairproj.services.dataset_service import make_rng
from fairproj.services.distributions import kl_divergence
from fairproj.services.projection_service import (
    brute_force_project,
    dual_objective,
    oracle_suite,
    primal_from_dual,
    project,
    random_instance,
    solve_dual,
)

TWO_POINT_G = ConstraintFeatures(g=np.array([[1.0, -1.0]]), bound=1.0)


@pytest.fixture
def skewed_q() -> SimplexWeights:
    """Instance (0.9, 0.1) : moment 0.8 pour g = (+1, -1)."""
    return SimplexWeights(np.array([0.9, 0.1]))


class TestDualObjective:
    """Tests de dual_objective"""

    def test_zero_lambda(self, rng):
        q = SimplexWeights.normalized(rng.random(5) + 0.1)
        g = ConstraintFeatures(g=rng.integers(-1, 2, size=(2, 5)).astype(float), bound=1.0)
        value, _ = dual_objective(np.zeros(2), q, g, epsilon=0.3)

        assert value == pytest.approx(0.0, abs=1e-15)

    def test_closed_form_value(self):
        """Teste log(0.5 e^-1 + 0.5 e) + 0.1 pour λ = 1."""
        q = SimplexWeights(np.array([0.5, 0.5]))
        value, grad = dual_objective([1.0], q, TWO_POINT_G, epsilon=0.1)

        assert value == pytest.approx(math.log(math.cosh(1.0)) + 0.1, abs=1e-12)
        assert value == pytest.approx(0.5338, abs=1e-4)
        assert grad[0] == pytest.approx(math.tanh(1.0) + 0.1, abs=1e-12)

    def test_gradient_matches_finite_differences(self, rng):
        """Teste le gradient contre des différences centrées sur 50 instances."""
        h = 1e-6
        for _ in range(50):
            n, k = int(rng.integers(2, 8)), int(rng.integers(1, 3))
            q = SimplexWeights.normalized(rng.random(n) + 0.05)
            g = ConstraintFeatures(g=rng.uniform(-1, 1, size=(k, n)), bound=1.0)
            lam = rng.uniform(0.2, 2.0, size=k) * rng.choice([-1.0, 1.0], size=k)
            epsilon = float(rng.uniform(0.0, 0.5))

            _, grad = dual_objective(lam, q, g, epsilon)
            for j in range(k):
                step = np.zeros(k)
                step[j] = h
                plus, _ = dual_objective(lam + step, q, g, epsilon)
                minus, _ = dual_objective(lam - step, q, g, epsilon)
                assert (plus - minus) / (2 * h) == pytest.approx(grad[j], abs=1e-6)

    def test_wrong_lambda_length(self, skewed_q):
        with pytest.raises(ArgumentError):
            dual_objective([1.0, 2.0], skewed_q, TWO_POINT_G, epsilon=0.1)


class TestSolveDual:
    """Tests de solve_dual et primal_from_dual"""

    def test_feasible_q(self):
        q = SimplexWeights(np.array([0.55, 0.45]))
        dual = solve_dual(q, TWO_POINT_G, ProjectionConfig(epsilon=0.2))

        assert dual.kl_value == pytest.approx(0.0, abs=1e-12)
        assert dual.lam == pytest.approx([0.0], abs=1e-8)

    def test_active_constraint(self, skewed_q):
        """Teste (0.9, 0.1), ε = 0.2 -> w = (0.6, 0.4), KL ≈ 0.3112."""
        dual = solve_dual(skewed_q, TWO_POINT_G, ProjectionConfig(epsilon=0.2))
        w = primal_from_dual(skewed_q, TWO_POINT_G, dual.lam)

        assert dual.converged
        assert dual.active == [1]
        assert dual.lam[0] == pytest.approx(math.log(6) / 2, abs=1e-6)
        assert w.weights == pytest.approx([0.6, 0.4], abs=1e-7)
        assert dual.kl_value == pytest.approx(0.3112386, abs=1e-6)

    def test_zero_margin(self, skewed_q):
        """Teste ε = 0 -> w = (0.5, 0.5), KL ≈ 0.5108."""
        dual = solve_dual(skewed_q, TWO_POINT_G, ProjectionConfig(epsilon=0.0))
        w = primal_from_dual(skewed_q, TWO_POINT_G, dual.lam)

        assert w.weights == pytest.approx([0.5, 0.5], abs=1e-7)
        assert dual.kl_value == pytest.approx(0.5108256, abs=1e-6)

    def test_primal_closed_form(self, skewed_q):
        """Teste λ = ln(3)/2 -> w ≈ (0.75, 0.25)."""
        w = primal_from_dual(skewed_q, TWO_POINT_G, [math.log(3) / 2])

        assert w.weights == pytest.approx([0.75, 0.25], abs=1e-12)

    def test_primal_identity_at_zero(self, skewed_q):
        assert primal_from_dual(skewed_q, TWO_POINT_G, [0.0]) is skewed_q

    def test_warm_start(self, skewed_q):
        """Teste qu'un départ à chaud à l'optimum converge immédiatement."""
        cfg = ProjectionConfig(epsilon=0.2)
        cold = solve_dual(skewed_q, TWO_POINT_G, cfg)
        warm = solve_dual(skewed_q, TWO_POINT_G, cfg, warm_start=cold.lambda_)

        assert warm.iterations <= cold.iterations
        assert warm.kl_value == pytest.approx(cold.kl_value, abs=1e-9)

    def test_requires_positive_q(self):
        with pytest.raises(ArgumentError):
            solve_dual(SimplexWeights(np.array([1.0, 0.0])), TWO_POINT_G, ProjectionConfig())


class TestProject:
    """Tests de project"""

    def test_feasible_shortcut(self):
        q = SimplexWeights(np.array([0.5, 0.5]))
        result = project(q, TWO_POINT_G, ProjectionConfig(epsilon=0.1))

        assert result.w is q
        assert result.max_violation == TWO_POINT_G.max_violation(q) == 0.0
        assert result.delta == 0.0
        assert result.dual.iterations == 0

    def test_delta(self, skewed_q):
        """Teste δ = sqrt(0.3112 / 2) ≈ 0.3945."""
        result = project(skewed_q, TWO_POINT_G, ProjectionConfig(epsilon=0.2))

        assert result.delta == pytest.approx(math.sqrt(0.3112386 / 2), abs=1e-6)
        assert result.max_violation <= 0.2 + 1e-6
        assert result.max_violation == TWO_POINT_G.max_violation(result.w)
        assert result.duality_gap <= 1e-6
        assert not result.accepted_with_warning

    def test_failure_when_iteration_cap_hit(self, skewed_q):
        """Teste qu'un solveur arrêté loin du polytope lève ProjectionFailureError."""
        cfg = ProjectionConfig(epsilon=0.2, max_iterations=1)
        with pytest.raises(ProjectionFailureError) as exc_info:
            project(skewed_q, TWO_POINT_G, cfg)

        assert exc_info.value.violation > 1e-4
        assert exc_info.value.round_index is None

    def test_monotone_in_epsilon(self, rng):
        """Teste que KL(w* || q) décroît quand ε augmente."""
        for _ in range(20):
            q, g = random_instance(rng, 6)
            kls = [project(q, g, ProjectionConfig(epsilon=eps)).kl_direct for eps in (0.0, 0.1, 0.3, 0.6)]
            assert all(a >= b - 1e-9 for a, b in zip(kls, kls[1:]))

    def test_complementary_slackness(self, rng):
        """Teste λ_k ≠ 0 -> <w, g_k> = ε sign(λ_k)."""
        for _ in range(30):
            q, g = random_instance(rng, 5)
            result = project(q, g, ProjectionConfig(epsilon=0.1))
            moments = g.moments(result.w)
            for lam_k, m_k in zip(result.dual.lam, moments):
                if abs(lam_k) > 1e-2:
                    assert m_k == pytest.approx(0.1 * np.sign(lam_k), abs=1e-6)
                assert abs(m_k) <= 0.1 + 1e-6

    def test_duality_consistency(self, rng):
        for _ in range(30):
            q, g = random_instance(rng, 4)
            result = project(q, g, ProjectionConfig(epsilon=0.05))
            assert result.dual.kl_value == pytest.approx(result.kl_direct, abs=1e-6)
            assert result.kl_direct == pytest.approx(kl_divergence(result.w, q), abs=1e-12)

    @pytest.mark.parametrize("solver,tolerance", [
        (SolverMode.LBFGSB, 1e-6),
        (SolverMode.SMOOTHED_L1, 1e-4),
    ])
    def test_solver_modes_agree(self, rng, solver, tolerance):
        """Teste que les formulations alternatives retrouvent la KL du gradient projeté."""
        for _ in range(10):
            q, g = random_instance(rng, 4)
            reference = project(q, g, ProjectionConfig(epsilon=0.2))
            other = project(q, g, ProjectionConfig(epsilon=0.2, solver=solver))
            assert other.kl_direct == pytest.approx(reference.kl_direct, abs=tolerance)


class TestBruteForce:
    """Tests de l'oracle par grille"""

    def test_active_instance(self, skewed_q):
        """Teste (0.9, 0.1), ε = 0.2, résolution 1000 -> (0.6, 0.4)."""
        w, kl = brute_force_project(skewed_q, TWO_POINT_G, 0.2, 1000)

        assert w.weights == pytest.approx([0.6, 0.4], abs=1e-12)
        assert kl == pytest.approx(0.3112386, abs=1e-3)

    def test_feasible_q_coarse_grid(self):
        q = SimplexWeights(np.array([0.5, 0.5]))
        w, kl = brute_force_project(q, TWO_POINT_G, 0.1, 10)

        assert w.weights == pytest.approx([0.5, 0.5])
        assert kl == pytest.approx(0.0, abs=1e-15)

    def test_loose_epsilon_returns_q(self):
        q = SimplexWeights(np.array([0.3, 0.7]))
        w, kl = brute_force_project(q, TWO_POINT_G, 2.0, 1000)

        assert w.weights == pytest.approx([0.3, 0.7], abs=1e-12)
        assert kl == pytest.approx(0.0, abs=1e-12)

    def test_infeasible_grid(self):
        """Teste qu'une contrainte impossible à satisfaire lève InfeasibleGridError."""
        g = ConstraintFeatures(g=np.array([[1.0, 1.0]]), bound=1.0)
        with pytest.raises(InfeasibleGridError):
            brute_force_project(SimplexWeights(np.array([0.5, 0.5])), g, 0.5, 100)

    def test_rejects_large_n(self):
        q = SimplexWeights.uniform(5)
        g = ConstraintFeatures(g=np.ones((1, 5)), bound=1.0)
        with pytest.raises(ArgumentError):
            brute_force_project(q, g, 0.1, 10)


class TestOracleSuite:
    """Tests du banc solveur / oracle"""

    def test_hundred_random_instances(self):
        """Teste 100 instances n ∈ {2, 3, 4} : KL à 1e-3 de l'oracle, sans violation."""
        report = oracle_suite(100, 1000, make_rng(0))

        assert len(report.cases) == 100
        assert report.failures == 0
        assert report.max_kl_error <= 1e-3
        assert report.max_violation <= 1e-6
