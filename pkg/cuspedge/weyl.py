"""Weyl-law fits, dyadic bracketing partitions and cusp-block lattice counts."""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigError, GridMismatch, InsufficientData, ScheduleInverted
from .geometry import weyl_constant
from .lattice import Domain, axis_count, count_points
from .models import BoundaryCondition, CuspEdgeModel, MeshConfig, WeylFit
from .spectrum import (
    CountingCurve,
    averaged_curve,
    counting_curve,
    resolve_threads,
    split_counting_curves,
)

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 10
MIN_SCHEDULE_LAMBDA = 4.0

MultiIndex = tuple[int, ...]


# =============================================================================
# Dyadic schedule and partition
# =============================================================================


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def schedule(lam: float, beta: float) -> tuple[int, int]:
    """Dyadic depths (m0, m) for a spectral parameter lam.

    m = round(log2(lam) / 2) and m0 = max(1, round(log2(lam) / beta)), rounding
    halves up.

    Raises:
        ScheduleInverted: If m0 > m
    """
    if lam < MIN_SCHEDULE_LAMBDA:
        raise ValueError(f"schedule needs lambda >= {MIN_SCHEDULE_LAMBDA}, got {lam}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    log_lam = math.log2(lam)
    m = _round_half_up(0.5 * log_lam)
    m0 = max(1, _round_half_up(log_lam / beta))
    if m0 > m:
        raise ScheduleInverted(
            f"Outer depth m0 = {m0} exceeds inner depth m = {m}",
            suggestion="Use a larger lambda or a model with larger ell + |k|",
            context={"stage": "schedule", "lambda": lam, "beta": beta},
        )
    return m0, m


@dataclass(frozen=True)
class BracketingPartition:
    """Blocks I_mu covering (0, 2^-m0)^ell.

    I_mu = (2^(-mu-1), 2^-mu) for mu <= m; the terminal index m + 1 stands for
    (0, 2^(-m-1)).
    """

    m0: int
    m: int
    ell: int
    blocks: tuple[MultiIndex, ...] = field(repr=False)

    @property
    def delta(self) -> float:
        return 2.0**-self.m0

    def interval_length(self, mu: int) -> Fraction:
        """Exact length of the dyadic interval I_mu."""
        if not self.m0 <= mu <= self.m + 1:
            raise ValueError(f"Index {mu} outside {self.m0}..{self.m + 1}")
        return Fraction(1, 2 ** (min(mu, self.m) + 1))

    def block_lengths(self, mu: MultiIndex) -> tuple[Fraction, ...]:
        """Side lengths of the block I_mu."""
        return tuple(self.interval_length(mu_j) for mu_j in mu)

    def is_terminal(self, mu: MultiIndex) -> bool:
        return any(mu_j == self.m + 1 for mu_j in mu)

    def tiles_exactly(self) -> bool:
        """Block volumes add up to (2^-m0)^ell, in exact arithmetic."""
        total = sum(
            (
                math.prod(self.block_lengths(mu), start=Fraction(1))
                for mu in self.blocks
            ),
            start=Fraction(0),
        )
        return total == Fraction(1, 2**self.m0) ** self.ell


def partition(ell: int, m0: int, m: int) -> BracketingPartition:
    """All multi-indices in {m0, ..., m + 1}^ell, sorted."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if m0 < 1:
        raise ValueError("m0 must be >= 1")
    if m0 > m:
        raise ScheduleInverted(
            f"Outer depth m0 = {m0} exceeds inner depth m = {m}",
            context={"stage": "partition"},
        )
    blocks = tuple(sorted(itertools.product(range(m0, m + 2), repeat=ell)))
    return BracketingPartition(m0=m0, m=m, ell=ell, blocks=blocks)


def build_partition(ell: int, lam: float, beta: float) -> BracketingPartition:
    """Partition with depths taken from ``schedule(lam, beta)``."""
    m0, m = schedule(lam, beta)
    return partition(ell, m0, m)


def terminal_neighbor(mu: MultiIndex, m: int) -> MultiIndex:
    """The adjacent non-terminal block: every index m + 1 replaced by m."""
    return tuple(m if mu_j == m + 1 else mu_j for mu_j in mu)


# =============================================================================
# Block lattice counts
# =============================================================================


def _block_coefficients(
    mu: MultiIndex, k: Sequence[float], cross_dim: int
) -> list[float]:
    if len(mu) != len(k):
        raise ValueError(f"Multi-index {mu} does not match k = {tuple(k)}")
    xi = [4.0**mu_j for mu_j in mu]
    zeta = [2.0 ** (2.0 * mu_j * k_j) for mu_j, k_j in zip(mu, k)]
    return xi + zeta + [1.0] * cross_dim


def block_lattice_count(
    mu: MultiIndex, k: Sequence[float], cross_dim: int, lam: float
) -> int:
    """#{(xi, zeta, eta) in Z^ell x Z^ell x Z^d :
    sum 4^mu_j xi_j^2 + sum 2^(2 mu_j k_j) zeta_j^2 + |eta|^2 <= lam}."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return count_points(_block_coefficients(mu, k, cross_dim), lam, Domain.ALL)


def per_coordinate_bounds(mu_j: int, k_j: float, lam: float) -> tuple[int, int, int]:
    """One-dimensional counts 2 floor(sqrt(lam) / c) + 1 for xi, zeta and eta."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return (
        axis_count(4.0**mu_j, lam),
        axis_count(2.0 ** (2.0 * mu_j * k_j), lam),
        axis_count(1.0, lam),
    )


def per_coordinate_product(
    mu: MultiIndex, k: Sequence[float], cross_dim: int, lam: float
) -> int:
    """Product of the per-coordinate bounds over a whole block."""
    product = axis_count(1.0, lam) ** cross_dim
    for mu_j, k_j in zip(mu, k):
        xi, zeta, _ = per_coordinate_bounds(mu_j, k_j, lam)
        product *= xi * zeta
    return product


@dataclass(frozen=True)
class BlockCount:
    """Lattice count of one block; terminal blocks carry their neighbour's count."""

    mu: MultiIndex
    lattice_count: int
    per_coord_bound_product: int
    terminal: bool


def cusp_block_counts(
    k: Sequence[float],
    cross_dim: int,
    lam: float,
    m0: int,
    m: int,
    threads: int = 1,
) -> list[BlockCount]:
    """Counts for every block of the partition, in sorted mu order."""
    part = partition(len(k), m0, m)

    def count(mu: MultiIndex) -> BlockCount:
        terminal = part.is_terminal(mu)
        effective = terminal_neighbor(mu, m) if terminal else mu
        return BlockCount(
            mu=mu,
            lattice_count=block_lattice_count(effective, k, cross_dim, lam),
            per_coord_bound_product=per_coordinate_product(
                effective, k, cross_dim, lam
            ),
            terminal=terminal,
        )

    logger.debug(
        "Counting %d blocks (m0=%d, m=%d, lambda=%g)", len(part.blocks), m0, m, lam
    )
    with ThreadPoolExecutor(max_workers=resolve_threads(threads)) as pool:
        return list(pool.map(count, part.blocks))


def _dyadic_depth(delta: float) -> int:
    m0 = round(-math.log2(delta))
    if m0 < 1 or 2.0**-m0 != delta:
        raise ConfigError(
            f"delta must be 2^-m0 with m0 >= 1, got {delta}",
            suggestion="Regress over dyadic radii such as 2^-3, 2^-4, 2^-5",
            context={"stage": "cusp_count_exponent"},
        )
    return m0


def outer_depth(delta: float) -> int:
    """Smallest m0 >= 1 with 2^-m0 <= delta.

    The dyadic cube (0, 2^-m0)^ell then lies inside the cusp region; the
    shell between 2^-m0 and delta belongs to the interior part.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    exponent = -math.log2(delta)
    nearest = round(exponent)
    if 2.0**-nearest == delta:
        return max(1, nearest)
    return max(1, math.ceil(exponent))


def cusp_count_exponent(
    k: Sequence[float],
    cross_dim: int,
    lam: float,
    deltas: Sequence[float],
    m: int | None = None,
) -> float:
    """Log-log slope of the summed non-terminal block counts against delta.

    The counts scale like delta^(ell + |k|) once the leading lattice term
    dominates.
    """
    if len(deltas) < 2:
        raise InsufficientData("Need at least two delta values for an exponent fit")
    inner = m if m is not None else _round_half_up(0.5 * math.log2(lam))
    totals = []
    for delta in deltas:
        blocks = cusp_block_counts(k, cross_dim, lam, _dyadic_depth(delta), inner)
        totals.append(sum(b.lattice_count for b in blocks if not b.terminal))
    if min(totals) <= 0:
        raise InsufficientData("Some block counts are zero; increase lambda")
    slope, _ = np.polyfit(np.log(deltas), np.log(totals), 1)
    logger.debug("Cusp count totals %s give exponent %.4f", totals, slope)
    return float(slope)


@dataclass(frozen=True)
class CuspErrorBound:
    """Summed block coefficient and the closed-form delta^(ell + |k|) bound."""

    coefficient: float
    closed_form_coefficient: float
    lambda_power: float
    m0: int
    m: int

    @property
    def summed_bound(self) -> float:
        return self.coefficient * self.lambda_power

    @property
    def closed_form_bound(self) -> float:
        return self.closed_form_coefficient * self.lambda_power


def cusp_error_bound(
    model: CuspEdgeModel, lam: float, m: int | None = None
) -> CuspErrorBound:
    """Cusp-block contribution prod_j sum_mu 2^(-(1 + k_j) mu) lam^(n/2).

    The outer depth is the smallest m0 >= 1 with 2^-m0 <= delta (exactly
    delta = 2^-m0 for dyadic radii); the inner depth defaults to
    round(log2(lam) / 2), never below m0. The closed form always uses the
    model's own delta. The constant in front is taken as 1.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    m0 = outer_depth(model.delta)
    if m is None:
        if lam < MIN_SCHEDULE_LAMBDA:
            m = m0
        else:
            m = max(m0, _round_half_up(0.5 * math.log2(lam)))
    if m < m0:
        raise ScheduleInverted(
            f"Inner depth m = {m} below m0 = {m0}",
            context={"stage": "cusp_error_bound"},
        )
    coefficient = math.prod(
        sum(2.0 ** (-(1.0 + k_j) * mu) for mu in range(m0, m + 1)) for k_j in model.k
    )
    return CuspErrorBound(
        coefficient=coefficient,
        closed_form_coefficient=model.delta**model.beta,
        lambda_power=lam ** (model.n / 2),
        m0=m0,
        m=m,
    )


# =============================================================================
# Dirichlet-Neumann sandwich
# =============================================================================


@dataclass
class SandwichViolation:
    """A grid point where N_D <= N <= N_N fails."""

    lam: float
    lower: float
    count: float
    upper: float


@dataclass
class SandwichReport:
    """Outcome of the bracketing check on a shared grid."""

    tolerance: float
    points: int
    passed: bool = True
    violations: list[SandwichViolation] = field(default_factory=list)

    def add_violation(self, violation: SandwichViolation) -> None:
        self.violations.append(violation)
        self.passed = False

    def to_dict(self) -> dict[str, object]:
        return {
            "passed": self.passed,
            "points": self.points,
            "tolerance": self.tolerance,
            "violations": [
                {"lambda": v.lam, "lower": v.lower, "count": v.count, "upper": v.upper}
                for v in self.violations
            ],
        }


def _summed_counts(curves: Sequence[CountingCurve], grid: np.ndarray) -> np.ndarray:
    total = np.zeros(len(grid))
    for curve in curves:
        if not np.array_equal(curve.lambdas, grid):
            raise GridMismatch(
                "Partition curves do not share the lambda grid",
                context={"stage": "sandwich_check"},
            )
        total = total + curve.counts
    return total


def sandwich_check(
    curve_d_parts: Sequence[CountingCurve],
    curve_full: CountingCurve,
    curve_n_parts: Sequence[CountingCurve],
    tolerance: float = 0.0,
) -> SandwichReport:
    """Check sum N_D(parts) <= N(full) <= sum N_N(parts) at every grid point.

    ``tolerance`` is the allowed count slack for discretized spectra.

    Raises:
        GridMismatch: If any curve uses a different grid
    """
    grid = curve_full.lambdas
    lower = _summed_counts(curve_d_parts, grid)
    upper = _summed_counts(curve_n_parts, grid)
    report = SandwichReport(tolerance=tolerance, points=len(grid))
    for lam, lo, count, hi in zip(grid, lower, curve_full.counts, upper):
        if lo > count + tolerance or count > hi + tolerance:
            report.add_violation(
                SandwichViolation(float(lam), float(lo), float(count), float(hi))
            )
    if not report.passed:
        logger.warning("Bracketing violated at %d grid points", len(report.violations))
    return report


def split_sandwich(
    model: CuspEdgeModel,
    mesh: MeshConfig,
    lambda_grid: Sequence[float],
    cut: float | None = None,
    rtol: float = 1e-3,
    strict: bool = False,
    threads: int = 1,
) -> SandwichReport:
    """Bracket the model's Dirichlet curve by its two-block split at ``cut``.

    The allowed slack is the discretization tolerance of the split curves.
    """
    split = split_counting_curves(
        model, mesh, lambda_grid, cut=cut, rtol=rtol, strict=strict, threads=threads
    )
    return sandwich_check(
        split.dirichlet_parts,
        split.full,
        split.neumann_parts,
        tolerance=split.tolerance,
    )


# =============================================================================
# Weyl fit
# =============================================================================


def fit_weyl(curve: CountingCurve, model: CuspEdgeModel) -> WeylFit:
    """Least-squares slope of count against lam^(n/2) on the top half of the grid.

    The fit passes through the origin; no lower-order term is fitted.

    Raises:
        InsufficientData: If the top half holds fewer than 10 points
    """
    top = len(curve) // 2
    lambdas = curve.lambdas[top:]
    counts = curve.counts[top:]
    if len(lambdas) < MIN_FIT_POINTS:
        raise InsufficientData(
            f"Weyl fit needs {MIN_FIT_POINTS} points in the upper half, "
            f"got {len(lambdas)}",
            suggestion="Use a denser lambda grid",
            context={"stage": "fit_weyl", "grid_points": len(curve)},
        )
    x = lambdas ** (model.n / 2)
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise InsufficientData(
            "All fit abscissae are zero", context={"stage": "fit_weyl"}
        )
    slope = float(np.dot(x, counts)) / denom
    theoretical = weyl_constant(model)
    return WeylFit(
        slope=slope,
        theoretical=theoretical,
        rel_error=abs(slope - theoretical) / theoretical,
        n=model.n,
        lambda_range=(float(lambdas[0]), float(lambdas[-1])),
    )


def weyl_ladder(
    model: CuspEdgeModel,
    mesh: MeshConfig,
    lambda_maxes: Sequence[float],
    points: int = 64,
    rtol: float = 1e-3,
    threads: int = 1,
) -> list[WeylFit]:
    """Fits of the Dirichlet/Neumann averaged curve on [lam_max / 10, lam_max]."""
    fits = []
    for lambda_max in lambda_maxes:
        grid = np.linspace(lambda_max / 10.0, lambda_max, points)
        curves = [
            counting_curve(model, mesh, bc, grid, rtol=rtol, threads=threads)
            for bc in (BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN)
        ]
        fit = fit_weyl(averaged_curve(*curves), model)
        logger.info(
            "lambda_max=%g: slope %.6g, rel_error %.3g",
            lambda_max,
            fit.slope,
            fit.rel_error,
        )
        fits.append(fit)
    return fits
