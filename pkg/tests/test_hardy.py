"""Tests for weighted Hardy constants."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspedge.errors import MeshTooCoarse, OutsideRegime
from cuspedge.hardy import (
    HardyProblem,
    Support,
    best_constant_numeric,
    boundary_variant_check,
    cutoff,
    empirical_cutoff_constant,
    log_scale_gap,
    multi_hardy_check,
    rayleigh_quotient,
    theoretical_constant,
)


class TestTheoreticalConstant:
    """Tests for the sharp constant 2 / (2 beta + alpha - 1)."""

    def test_values(self):
        assert theoretical_constant(3.0, 1.0) == pytest.approx(0.5)
        assert theoretical_constant(0.0, 1.0) == pytest.approx(2.0)
        assert theoretical_constant(3.0, 0.0) == pytest.approx(1.0)

    def test_outside_regime(self):
        with pytest.raises(OutsideRegime) as exc_info:
            theoretical_constant(3.0, -1.0)
        assert exc_info.value.exit_code == 2

    @pytest.mark.parametrize("t", [-0.5, 0.25, 1.0, 3.0])
    def test_invariant_along_alpha_plus_2t(self, t):
        """(alpha + 2t, beta - t) leaves the constant unchanged."""
        assert theoretical_constant(3.0 + 2 * t, 1.0 - t) == pytest.approx(
            theoretical_constant(3.0, 1.0)
        )

    def test_problem_rejects_outside_regime(self):
        with pytest.raises(OutsideRegime):
            HardyProblem(alpha=3.0, beta=-1.0)


class TestBestConstantNumeric:
    """Tests for the discrete best constant."""

    def test_cusp_weight(self):
        """alpha = 3, beta = 1: sqrt of the smallest eigenvalue approaches 2."""
        result = best_constant_numeric(HardyProblem(alpha=3.0, beta=1.0))
        assert result.theoretical_bound == pytest.approx(2.0)
        assert result.numeric_best >= 2.0 * (1 - 1e-9)
        assert result.numeric_best**2 <= 4.0 * 1.02
        assert result.ratio == pytest.approx(result.numeric_best / 2.0)
        assert result.mesh_cells == 4000

    @pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (3.0, 0.0)])
    def test_within_log_scale_gap(self, alpha, beta):
        problem = HardyProblem(alpha=alpha, beta=beta)
        result = best_constant_numeric(problem)
        bound = result.theoretical_bound
        assert result.numeric_best >= bound * (1 - 1e-9)
        assert result.numeric_best**2 <= bound**2 + 3 * log_scale_gap(problem)

    def test_log_scale_gap(self):
        """First node (1/4000)^2 gives (pi / log(1.6e7))^2."""
        gap = log_scale_gap(HardyProblem(alpha=3.0, beta=1.0))
        assert gap == pytest.approx((np.pi / np.log(4000.0**2)) ** 2)

    def test_coarse_mesh_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="cuspedge.hardy"):
            result = best_constant_numeric(HardyProblem(3.0, 1.0, cells=4))
        assert not result.converged
        assert "not converged" in caplog.text

    def test_coarse_mesh_strict(self):
        with pytest.raises(MeshTooCoarse) as exc_info:
            best_constant_numeric(HardyProblem(3.0, 1.0, cells=4), strict=True)
        assert exc_info.value.exit_code == 3

    @pytest.mark.slow
    def test_monotone_under_refinement(self):
        """Nested meshes only lower the discrete infimum."""
        values = [
            best_constant_numeric(HardyProblem(3.0, 1.0, cells=n)).numeric_best
            for n in (1000, 2000, 4000)
        ]
        assert values[0] >= values[1] >= values[2] >= 2.0 * (1 - 1e-9)


class TestRayleighQuotient:
    """Tests for Hardy quotients of explicit trial functions."""

    def test_midpoint_hat(self):
        """Any admissible trial stays above the squared bound."""
        q = rayleigh_quotient(3.0, 1.0, [0.0, 0.5, 1.0], [0.0, 1.0, 0.0])
        assert q >= 4.0

    def test_linear_trial(self):
        """u = 1 - rho with alpha = 0, beta = 1: int rho^2 / int (1 - rho)^2 = 1."""
        nodes = np.linspace(0.0, 1.0, 11)
        q = rayleigh_quotient(0.0, 1.0, nodes, 1.0 - nodes)
        assert q == pytest.approx(1.0)

    def test_zero_trial(self):
        with pytest.raises(ValueError):
            rayleigh_quotient(3.0, 1.0, [0.0, 1.0], [0.0, 0.0])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            rayleigh_quotient(3.0, 1.0, [0.0, 0.5, 1.0], [1.0, 0.0])


class TestBoundaryVariant:
    """Tests for the cutoff form of the inequality."""

    @pytest.fixture
    def problem(self):
        return HardyProblem(
            alpha=3.0, beta=1.0, eps=0.5, cells=200, support=Support.CUTOFF
        )

    def test_cutoff_profile(self):
        psi, dpsi = cutoff([0.5, 1.0, 1.25, 1.5, 2.0], 1.0, 0.5)
        np.testing.assert_allclose(psi, [1.0, 1.0, 0.5, 0.0, 0.0])
        assert dpsi[2] == pytest.approx(-3.0)
        assert dpsi[0] == 0.0

    def test_nodes_cover_margin(self, problem):
        nodes = problem.nodes
        assert nodes[-1] == pytest.approx(1.5)
        assert 1.0 in nodes.tolist()
        assert np.all(np.diff(nodes) > 0)

    def test_constant_trial(self, problem):
        report = boundary_variant_check(problem, np.ones(len(problem.nodes)))
        assert report.holds
        assert report.ratio < 1.0
        assert report.cutoff_constant <= theoretical_constant(3.0, 1.0)

    def test_oscillating_trials(self, problem):
        nodes = problem.nodes
        trials = [np.cos(j * nodes) for j in range(1, 6)]
        assert empirical_cutoff_constant(problem, trials) <= theoretical_constant(
            3.0, 1.0
        ) * (1 + 1e-9)

    def test_near_extremal_powers(self):
        """rho^s with s just above (1 - alpha) / 2 - beta pushes the ratio up."""
        problem = HardyProblem(
            alpha=3.0,
            beta=1.0,
            eps=0.5,
            cells=4000,
            grading=2.0,
            support=Support.CUTOFF,
        )
        nodes = problem.nodes
        critical = (1.0 - problem.alpha) / 2.0 - problem.beta
        reports = [
            boundary_variant_check(
                problem, np.maximum(nodes, nodes[1]) ** (critical + offset)
            )
            for offset in (0.5, 0.1, 0.01)
        ]
        ratios = [r.ratio for r in reports]
        assert all(r.holds for r in reports)
        assert ratios[0] < ratios[1] < ratios[2]
        assert ratios[2] > 0.7
        flat = boundary_variant_check(problem, np.ones(len(nodes)))
        assert ratios[2] > flat.ratio

    def test_needs_margin(self):
        with pytest.raises(ValueError):
            boundary_variant_check(HardyProblem(3.0, 1.0, cells=50), np.ones(51))

    def test_cutoff_support_needs_margin(self):
        with pytest.raises(ValueError):
            HardyProblem(3.0, 1.0, support=Support.CUTOFF)

    def test_no_trials(self, problem):
        with pytest.raises(ValueError):
            empirical_cutoff_constant(problem, [])


class TestMultiHardy:
    """Tests for the inequality on a tensor grid."""

    @pytest.fixture
    def grid(self):
        return np.linspace(0.0, 1.0, 9)

    def test_product_function(self, grid):
        u = np.outer(1.0 - grid, 1.0 + grid)
        report = multi_hardy_check((3.0, 3.0), (1.0, 1.0), 0, (grid, grid), u)
        assert report.holds
        assert report.constant == pytest.approx(0.5)

    def test_second_direction(self, grid):
        u = np.outer(1.0 + grid**2, np.sin(np.pi * grid))
        u[:, -1] = 0.0
        report = multi_hardy_check((3.0, 0.0), (1.0, 1.0), 1, (grid, grid), u)
        assert report.holds
        assert report.constant == pytest.approx(2.0)

    def test_must_vanish_on_outer_face(self, grid):
        u = np.ones((9, 9))
        with pytest.raises(ValueError):
            multi_hardy_check((3.0, 3.0), (1.0, 1.0), 0, (grid, grid), u)

    def test_direction_out_of_range(self, grid):
        with pytest.raises(ValueError):
            multi_hardy_check(
                (3.0, 3.0), (1.0, 1.0), 2, (grid, grid), np.zeros((9, 9))
            )

    def test_outside_regime(self, grid):
        u = np.outer(1.0 - grid, np.ones(9))
        with pytest.raises(OutsideRegime):
            multi_hardy_check((0.0, 3.0), (0.0, 1.0), 0, (grid, grid), u)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=-1.0, max_value=1.0, allow_nan=False),
            min_size=81,
            max_size=81,
        ),
        st.integers(min_value=0, max_value=1),
    )
    def test_random_tensor_functions(self, values, direction):
        """Any multilinear function vanishing on the outer face satisfies it."""
        grid = np.linspace(0.0, 1.0, 9)
        u = np.array(values).reshape(9, 9)
        if direction == 0:
            u[-1, :] = 0.0
        else:
            u[:, -1] = 0.0
        report = multi_hardy_check((3.0, 3.0), (1.0, 1.0), direction, (grid, grid), u)
        assert report.holds
