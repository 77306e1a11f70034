"""Tests for the dyadic schedule, block lattice counts, bracketing and Weyl fits."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspedge.errors import (
    ConfigError,
    GridMismatch,
    InsufficientData,
    ScheduleInverted,
)
from cuspedge.models import BoundaryCondition, CrossSection, CuspEdgeModel, MeshConfig
from cuspedge.spectrum import (
    CountingCurve,
    averaged_curve,
    counting_curve,
    cross_section_eigs,
)
from cuspedge.weyl import (
    block_lattice_count,
    build_partition,
    cusp_block_counts,
    cusp_count_exponent,
    cusp_error_bound,
    fit_weyl,
    outer_depth,
    partition,
    per_coordinate_bounds,
    per_coordinate_product,
    sandwich_check,
    schedule,
    split_sandwich,
    terminal_neighbor,
    weyl_ladder,
)

ACCEPTANCE_MODEL = CuspEdgeModel(ell=1, k=(3,), delta=0.5)
UNIT_INTERVAL = CrossSection(kind="box", lengths=(1.0,), bc="dirichlet")


def _curve(counts, grid=(50.0,), bc="dirichlet"):
    return CountingCurve(np.asarray(grid, dtype=float), np.asarray(counts, float), bc)


def _exact_curve(section, grid, label):
    grid = np.asarray(grid, dtype=float)
    values = np.sort(cross_section_eigs(section, float(grid[-1])))
    counts = np.searchsorted(values, grid, side="right").astype(float)
    return CountingCurve(grid, counts, label)


def split_interval_curves(section, grid):
    """Exact curves of a one-dimensional factor and of its two halves.

    The halves are intervals of half the length with Dirichlet, then Neumann,
    conditions at both ends; a box keeps its own condition on the full curve.
    """
    half = section.lengths[0] / 2
    parts = {
        bc: _exact_curve(CrossSection(kind="box", lengths=(half,), bc=bc), grid, bc)
        for bc in ("dirichlet", "neumann")
    }
    full = _exact_curve(section, grid, "full")
    return [parts["dirichlet"]] * 2, full, [parts["neumann"]] * 2


def _exhaustive_block_count(mu, k, cross_dim, lam):
    coefficients = [4.0**m for m in mu]
    coefficients += [2.0 ** (2 * m * kj) for m, kj in zip(mu, k)]
    coefficients += [1.0] * cross_dim
    total = 0
    axes = [range(-r, r + 1) for r in (math.isqrt(int(lam // c)) for c in coefficients)]
    for z in itertools.product(*axes):
        if sum(c * x * x for c, x in zip(coefficients, z)) <= lam:
            total += 1
    return total


class TestSchedule:
    """Tests for the dyadic depths."""

    def test_acceptance_model(self):
        """lam = 2^10, beta = 4: m = 5, m0 = round(10 / 4) = 3."""
        assert schedule(2.0**10, 4.0) == (3, 5)

    def test_smallest_lambda(self):
        assert schedule(4.0, 4.0) == (1, 1)

    def test_large_beta(self):
        assert schedule(16.0, 16.0) == (1, 2)

    def test_inverted(self):
        with pytest.raises(ScheduleInverted) as exc_info:
            schedule(2.0**10, 1.0)
        assert exc_info.value.exit_code == 2

    def test_lambda_too_small(self):
        with pytest.raises(ValueError):
            schedule(3.0, 4.0)


class TestPartition:
    """Tests for dyadic block partitions."""

    def test_blocks_tile_the_cube(self):
        part = partition(2, 2, 4)
        assert len(part.blocks) == 16
        assert part.tiles_exactly()
        assert part.delta == 0.25

    def test_interval_lengths(self):
        """I_mu = (2^-(mu+1), 2^-mu); the terminal block is (0, 2^-(m+1))."""
        part = partition(1, 1, 3)
        assert [part.interval_length(mu) for mu in (1, 2, 3, 4)] == [
            Fraction(1, 4),
            Fraction(1, 8),
            Fraction(1, 16),
            Fraction(1, 16),
        ]

    def test_terminal_blocks(self):
        part = partition(2, 1, 2)
        assert part.is_terminal((3, 1))
        assert not part.is_terminal((2, 2))
        assert terminal_neighbor((3, 1), 2) == (2, 1)

    def test_from_schedule(self):
        part = build_partition(1, 2.0**10, 4.0)
        assert (part.m0, part.m) == (3, 5)

    def test_inverted_depths(self):
        with pytest.raises(ScheduleInverted):
            partition(1, 4, 3)


class TestBlockLatticeCount:
    """Tests for lattice counts of the block model problems."""

    def test_cusp_block(self):
        """16 xi^2 <= 100 with zeta = 0 forced."""
        assert block_lattice_count((2,), (3,), 0, 100.0) == 5

    def test_zero_lambda(self):
        assert block_lattice_count((1, 2), (3, 4), 2, 0.0) == 1

    def test_with_cross_section(self):
        assert block_lattice_count((1,), (3,), 1, 5.0) == 11

    def test_per_coordinate_bounds(self):
        assert per_coordinate_bounds(2, 3, 100.0) == (5, 1, 21)
        assert per_coordinate_bounds(2, 3, 0.0) == (1, 1, 1)
        assert per_coordinate_bounds(1, 3, 64.0) == (9, 3, 17)

    @settings(max_examples=200, deadline=None)
    @given(
        st.data(),
        st.integers(min_value=1, max_value=2),
        st.integers(min_value=0, max_value=1),
        st.integers(min_value=0, max_value=40),
    )
    def test_exact_and_bounded(self, data, ell, cross_dim, lam):
        """Equals exhaustive enumeration and never exceeds the bound product."""
        mu = tuple(data.draw(st.integers(1, 3)) for _ in range(ell))
        k = tuple(float(data.draw(st.integers(1, 4))) for _ in range(ell))
        count = block_lattice_count(mu, k, cross_dim, float(lam))
        assert count == _exhaustive_block_count(mu, k, cross_dim, lam)
        assert count <= per_coordinate_product(mu, k, cross_dim, float(lam))

    def test_terminal_uses_neighbor(self):
        """Terminal blocks carry the count of their non-terminal neighbour."""
        blocks = {b.mu: b for b in cusp_block_counts((3.0,), 0, 1024.0, 3, 5)}
        assert blocks[(6,)].terminal
        assert blocks[(6,)].lattice_count == blocks[(5,)].lattice_count

    def test_threads_agree(self):
        one = cusp_block_counts((3.0, 3.0), 0, 2.0**12, 2, 6, threads=1)
        many = cusp_block_counts((3.0, 3.0), 0, 2.0**12, 2, 6, threads=4)
        assert one == many


class TestCuspErrorBound:
    """Tests for the summed cusp-block coefficient."""

    def test_single_block(self):
        """m0 = m = 3 gives 2^-12, matching delta^4 with delta = 2^-3."""
        model = CuspEdgeModel(ell=1, k=(3,), delta=0.125)
        bound = cusp_error_bound(model, 1e4, m=3)
        assert bound.coefficient == pytest.approx(2.0**-12)
        assert bound.closed_form_coefficient == pytest.approx(2.0**-12)
        assert bound.summed_bound == pytest.approx(2.0**-12 * 1e4)

    def test_zero_lambda(self):
        model = CuspEdgeModel(ell=1, k=(3,), delta=0.125)
        assert cusp_error_bound(model, 0.0, m=3).summed_bound == 0.0

    def test_two_directions(self):
        model = CuspEdgeModel(ell=2, k=(3, 3), delta=0.25)
        bound = cusp_error_bound(model, 100.0, m=3)
        assert bound.coefficient == pytest.approx((2.0**-8 + 2.0**-12) ** 2)

    @pytest.mark.parametrize(
        ("delta", "m0"), [(0.3, 2), (1.0, 1), (0.75, 1), (2.0, 1), (0.0625, 4)]
    )
    def test_any_delta(self, delta, m0):
        """Every valid radius gets a bound; the closed form uses delta itself."""
        model = CuspEdgeModel(ell=1, k=(3,), delta=delta)
        bound = cusp_error_bound(model, 100.0)
        assert bound.m0 == m0
        assert bound.m >= bound.m0
        assert math.isfinite(bound.summed_bound)
        assert bound.coefficient > 0
        assert bound.closed_form_coefficient == pytest.approx(delta**4)

    def test_outer_depth(self):
        assert outer_depth(0.125) == 3
        assert outer_depth(0.3) == 2
        assert outer_depth(0.26) == 2
        assert outer_depth(0.25) == 2
        assert outer_depth(1.0) == 1
        with pytest.raises(ValueError):
            outer_depth(0.0)

    def test_count_exponent_needs_dyadic_radii(self):
        with pytest.raises(ConfigError) as exc_info:
            cusp_count_exponent((3.0,), 0, 2.0**20, [0.3, 0.15])
        assert exc_info.value.exit_code == 2

    def test_count_exponent(self):
        """Block counts scale like delta^(ell + |k|) = delta^4."""
        exponent = cusp_count_exponent(
            (3.0,), 0, 2.0**44, [2.0**-3, 2.0**-4, 2.0**-5]
        )
        assert exponent == pytest.approx(4.0, abs=0.3)


class TestSandwich:
    """Tests for the Dirichlet-Neumann bracketing check."""

    def test_split_interval(self):
        """(0, 1) split at 1/2, lam = 50: 2 <= 2 <= 4."""
        lower, full, upper = split_interval_curves(UNIT_INTERVAL, [50.0])
        assert [c.counts[0] for c in lower] == [1.0, 1.0]
        assert full.counts[0] == 2.0
        assert [c.counts[0] for c in upper] == [2.0, 2.0]
        report = sandwich_check(lower, full, upper)
        assert report.passed
        assert report.violations == []

    @pytest.mark.parametrize(
        "section",
        [UNIT_INTERVAL, CrossSection(kind="box", lengths=(3.0,), bc="dirichlet")],
    )
    def test_split_interval_grid(self, section):
        """No violations anywhere on a dense grid."""
        grid = np.linspace(0.0, 2000.0, 401)
        report = sandwich_check(*split_interval_curves(section, grid))
        assert report.passed
        assert report.points == 401

    def test_split_torus(self):
        """A circle of length 2 pi cut into two arcs of length pi."""
        circle = CrossSection(kind="flat-torus", lengths=(2 * math.pi,))
        grid = np.arange(0.5, 400.0, 1.0)
        lower, full, upper = split_interval_curves(circle, grid)
        report = sandwich_check(lower, full, upper)
        assert report.passed
        # 2 floor(sqrt(lam)) <= 1 + 2 floor(sqrt(lam)) <= 2 floor(sqrt(lam)) + 2
        assert np.all(full.counts - sum(c.counts for c in lower) == 1.0)
        assert np.all(sum(c.counts for c in upper) - full.counts == 1.0)

    def test_below_everything(self):
        """Only the Neumann zero modes are counted."""
        lower, full, upper = split_interval_curves(UNIT_INTERVAL, [1.0])
        assert sum(c.counts[0] for c in lower) == 0.0
        assert full.counts[0] == 0.0
        assert sum(c.counts[0] for c in upper) == 2.0
        assert sandwich_check(lower, full, upper).passed

    def test_cusp_split(self):
        """Discretized cusp model cut at delta/2 stays within its tolerance."""
        grid = np.linspace(0.0, 500.0, 51)
        report = split_sandwich(
            ACCEPTANCE_MODEL, MeshConfig(cells=200), grid, rtol=1e-2
        )
        assert report.passed
        assert report.points == 51

    def test_cusp_split_off_center(self):
        grid = np.linspace(20.0, 400.0, 20)
        report = split_sandwich(
            ACCEPTANCE_MODEL, MeshConfig(cells=200), grid, cut=0.1, rtol=1e-2
        )
        assert report.passed

    def test_identical_partition(self):
        grid = [10.0, 40.0, 90.0]
        full = _curve([1.0, 2.0, 3.0], grid)
        report = sandwich_check([full], full, [full])
        assert report.passed

    def test_violation_reported(self):
        report = sandwich_check([_curve([3.0])], _curve([2.0]), [_curve([4.0])])
        assert not report.passed
        assert report.violations[0].lower == 3.0
        assert report.to_dict()["violations"][0]["lambda"] == 50.0

    def test_tolerance(self):
        report = sandwich_check(
            [_curve([3.0])], _curve([2.0]), [_curve([4.0])], tolerance=1.0
        )
        assert report.passed

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatch):
            sandwich_check([_curve([1.0], [40.0])], _curve([1.0]), [_curve([1.0])])


class TestFitWeyl:
    """Tests for Weyl slope fits."""

    def test_exact_law(self):
        grid = np.linspace(1000.0, 10000.0, 64)
        curve = CountingCurve(grid, grid / 128.0, "average")
        fit = fit_weyl(curve, ACCEPTANCE_MODEL)
        assert fit.slope == pytest.approx(1 / 128)
        assert fit.rel_error < 1e-10
        assert fit.n == 2
        assert fit.lambda_range[1] == 10000.0

    def test_zero_curve(self):
        grid = np.linspace(1.0, 100.0, 30)
        fit = fit_weyl(CountingCurve(grid, np.zeros(30), "average"), ACCEPTANCE_MODEL)
        assert fit.slope == 0.0
        assert fit.rel_error == pytest.approx(1.0)

    def test_too_few_points(self):
        grid = np.linspace(1.0, 100.0, 18)
        with pytest.raises(InsufficientData) as exc_info:
            fit_weyl(CountingCurve(grid, grid, "average"), ACCEPTANCE_MODEL)
        assert exc_info.value.exit_code == 2

    def test_uses_top_half(self):
        """Counts below the middle of the grid do not move the slope."""
        grid = np.linspace(1.0, 100.0, 40)
        counts = grid / 128.0
        counts[:20] = 1e6
        fit = fit_weyl(CountingCurve(grid, counts, "average"), ACCEPTANCE_MODEL)
        assert fit.slope == pytest.approx(1 / 128)

    def test_ladder(self):
        """One fit per lambda_max over the top half of its grid."""
        fits = weyl_ladder(ACCEPTANCE_MODEL, MeshConfig(cells=200), [300.0, 600.0], 20)
        assert [f.lambda_range[1] for f in fits] == [300.0, 600.0]
        assert fits[0].lambda_range[0] > 150.0
        assert all(f.theoretical == pytest.approx(1 / 128) for f in fits)

    @pytest.mark.slow
    def test_acceptance_slope(self):
        """Averaged curve on [1e3, 1e4] at N = 2000 fits 1/128 within 10%."""
        grid = np.linspace(1000.0, 10000.0, 64)
        mesh = MeshConfig(cells=2000, grading=3)
        curves = [
            counting_curve(ACCEPTANCE_MODEL, mesh, bc, grid, strict=True)
            for bc in (BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN)
        ]
        fit = fit_weyl(averaged_curve(*curves), ACCEPTANCE_MODEL)
        assert fit.theoretical == pytest.approx(1 / 128)
        assert fit.rel_error <= 0.10

    @pytest.mark.slow
    def test_ladder_improves(self):
        """The fit error shrinks along lam_max = 2.5e3, 5e3, 1e4."""
        fits = weyl_ladder(
            ACCEPTANCE_MODEL, MeshConfig(cells=2000, grading=3), [2.5e3, 5e3, 1e4]
        )
        errors = [f.rel_error for f in fits]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] <= 0.10
