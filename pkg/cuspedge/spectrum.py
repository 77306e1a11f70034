"""Model spectrum as sums of separated eigenvalues, and its counting function."""

from __future__ import annotations

import itertools
import logging
import os
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from .errors import GridMismatch, IndexIncomplete
from .geometry import warn_if_not_self_adjoint
from .lattice import Domain, enumerate_values
from .models import (
    BoundaryCondition,
    CrossSection,
    CrossSectionKind,
    CuspEdgeModel,
    MeshConfig,
)
from .sturm import (
    DEFAULT_RTOL,
    EigResult,
    GradedMesh,
    RadialProblem,
    mode_cutoff,
    solve_eigs,
)

logger = logging.getLogger(__name__)

_PRUNE_SLACK = 1e-12
# eigenvalue margin for split curves, in units of the certification rtol
SPLIT_MARGIN = 2.0


def resolve_threads(threads: int) -> int:
    """Worker count for a --threads value (0 means one per CPU)."""
    if threads < 0:
        raise ValueError("threads must be >= 0")
    return threads or (os.cpu_count() or 1)


def cross_section_eigs(cs: CrossSection, lambda_max: float) -> list[float]:
    """Eigenvalues of the flat cross-section Laplacian up to lambda_max.

    point -> [0]; torus -> sum (2 pi z_j / L_j)^2 over z in Z^d; box ->
    sum (pi z_j / L_j)^2 with z_j >= 1 (Dirichlet) or z_j >= 0 (Neumann).
    """
    if lambda_max < 0:
        raise ValueError("lambda_max must be nonnegative")
    if cs.kind == CrossSectionKind.POINT:
        return [0.0]
    if cs.kind == CrossSectionKind.FLAT_TORUS:
        coeffs = [(2 * np.pi / length) ** 2 for length in cs.lengths]
        return enumerate_values(coeffs, lambda_max, Domain.ALL)
    coeffs = [(np.pi / length) ** 2 for length in cs.lengths]
    if cs.bc == BoundaryCondition.DIRICHLET:
        domain = Domain.POSITIVE
    else:
        domain = Domain.NONNEGATIVE
    return enumerate_values(coeffs, lambda_max, domain)


@dataclass(frozen=True, eq=False)
class SpectrumIndex:
    """Per-direction radial eigenvalues by angular mode, plus the cross-section list.

    ``per_direction[i][m]`` holds the ascending radial eigenvalues of direction i
    in angular mode m; modes m and -m share one list and count as distinct
    tuples. Modes beyond the certified cutoff are absent.
    """

    per_direction: list[dict[int, NDArray[np.float64]]]
    cross: NDArray[np.float64]
    lambda_max: float
    bc: BoundaryCondition
    certified: bool = True
    uncertified_modes: list[tuple[int, int]] = field(default_factory=list)

    @cached_property
    def direction_lists(self) -> list[NDArray[np.float64]]:
        """Every direction's radial eigenvalues merged over modes, ascending."""
        merged = []
        for modes in self.per_direction:
            parts = [modes[m] for m in sorted(modes)]
            values = np.concatenate(parts) if parts else np.zeros(0)
            merged.append(np.sort(values, kind="stable"))
        return merged

    @property
    def tuple_count(self) -> int:
        """Size of the full Cartesian product of index lists."""
        total = len(self.cross)
        for values in self.direction_lists:
            total *= len(values)
        return total


@dataclass(frozen=True)
class RadialSegment:
    """Radial range (inner, outer) of one cusp coordinate with its end conditions.

    ``inner = 0`` is the cusp itself; ``inner_bc`` then does not apply.
    """

    inner: float
    outer: float
    outer_bc: BoundaryCondition
    inner_bc: BoundaryCondition = BoundaryCondition.NEUMANN

    @classmethod
    def whole(cls, model: CuspEdgeModel, bc: BoundaryCondition) -> RadialSegment:
        return cls(0.0, model.delta, bc)

    def problem(self, k: float, m: int) -> RadialProblem:
        """Radial operator of cusp order k in angular mode m on this segment."""
        return RadialProblem(
            alpha=k,
            k=k,
            m=m,
            delta=self.outer,
            outer_bc=self.outer_bc,
            inner=self.inner,
            inner_bc=self.inner_bc,
        )

    def mesh(self, config: MeshConfig) -> GradedMesh:
        """Graded toward the cusp; uniform on an annulus, where nothing is singular."""
        grading = config.grading if self.inner == 0.0 else 1.0
        return GradedMesh.build(config.cells, self.outer, grading, self.inner)


def _solve_mode(
    args: tuple[float, int, RadialSegment, MeshConfig, float, float, bool],
) -> EigResult:
    k, m, segment, mesh_config, lambda_max, rtol, strict = args
    problem = segment.problem(k, m)
    return solve_eigs(
        problem, segment.mesh(mesh_config), lambda_max, rtol=rtol, strict=strict
    )


def build_index(
    model: CuspEdgeModel,
    mesh: MeshConfig,
    bc: BoundaryCondition,
    lambda_max: float,
    rtol: float = DEFAULT_RTOL,
    strict: bool = False,
    threads: int = 1,
    segments: Sequence[RadialSegment] | None = None,
) -> SpectrumIndex:
    """Solve every radial mode that can contribute below lambda_max.

    ``segments`` gives each cusp coordinate its radial range (default: the
    whole (0, delta) with ``bc`` at delta). Directions with equal k_i and
    segment, and modes +m and -m, share one solve. Solves run on a thread pool
    and are collected in submission order.
    """
    if segments is None:
        segments = [RadialSegment.whole(model, bc)] * model.ell
    if len(segments) != model.ell:
        raise ValueError(f"Need {model.ell} radial segments, got {len(segments)}")
    lam = max(lambda_max, np.finfo(float).tiny)
    keys = list(dict.fromkeys(zip(model.k, segments)))
    tasks: list[tuple[float, RadialSegment, int]] = []
    for k, segment in keys:
        m = 0
        while not mode_cutoff(segment.problem(k, m), lam):
            tasks.append((k, segment, m))
            m += 1

    logger.debug("Building spectrum index: %d radial solves (%s)", len(tasks), bc.value)
    payload = [(k, m, segment, mesh, lam, rtol, strict) for k, segment, m in tasks]
    with ThreadPoolExecutor(max_workers=resolve_threads(threads)) as pool:
        results = list(pool.map(_solve_mode, payload))
    solved = dict(zip(tasks, results))

    per_direction: list[dict[int, NDArray[np.float64]]] = []
    for key in zip(model.k, segments):
        modes: dict[int, NDArray[np.float64]] = {}
        for (k_task, segment, m), result in solved.items():
            if (k_task, segment) != key:
                continue
            modes[m] = result.eigenvalues
            if m != 0:
                modes[-m] = result.eigenvalues
        per_direction.append(modes)

    uncertified = [
        (int(k), m)
        for (k, _, m), result in solved.items()
        if not result.certified_complete
    ]
    return SpectrumIndex(
        per_direction=per_direction,
        cross=np.asarray(cross_section_eigs(model.cross_section, lam)),
        lambda_max=lam,
        bc=bc,
        certified=not uncertified,
        uncertified_modes=uncertified,
    )


def assemble_count(idx: SpectrumIndex, lam: float) -> int:
    """#{(m, n, eta): sum_i lambda_(i, m_i, n_i) + lambda_eta <= lam}.

    Depth-first over directions; a prefix is abandoned as soon as its partial
    sum plus the smallest possible remainder exceeds lam.

    Raises:
        IndexIncomplete: If lam exceeds the threshold the index was built for
    """
    if lam > idx.lambda_max:
        raise IndexIncomplete(
            f"Requested count at {lam} above the index threshold {idx.lambda_max}",
            suggestion="Rebuild the index with a larger lambda_max",
            context={"stage": "assemble_count"},
        )
    lists = idx.direction_lists
    cross = idx.cross
    if len(cross) == 0 or any(len(values) == 0 for values in lists):
        return 0

    # smallest achievable remainder after each level
    tail_min = [0.0] * (len(lists) + 1)
    tail_min[len(lists)] = float(cross[0])
    for level in range(len(lists) - 1, -1, -1):
        tail_min[level] = tail_min[level + 1] + float(lists[level][0])

    slack = _PRUNE_SLACK * max(abs(lam), 1.0)

    def descend(level: int, partial: float) -> int:
        if level == len(lists):
            return int(np.searchsorted(partial + cross, lam, side="right"))
        total = 0
        for x in lists[level]:
            s = partial + float(x)
            if s + tail_min[level + 1] > lam + slack:
                break
            total += descend(level + 1, s)
        return total

    return descend(0, 0.0)


def brute_force_count(idx: SpectrumIndex, lam: float) -> int:
    """Count over the full Cartesian product (oracle for assemble_count)."""
    count = 0
    for combo in itertools.product(*idx.direction_lists, idx.cross):
        s = 0.0
        for x in combo:
            s += float(x)
        if s <= lam:
            count += 1
    return count


# =============================================================================
# Counting curves
# =============================================================================


@dataclass(frozen=True, eq=False)
class CountingCurve:
    """Counting function N(lambda) on an ascending grid."""

    lambdas: NDArray[np.float64]
    counts: NDArray[np.float64]
    bc: str
    certified: bool = True

    def __post_init__(self) -> None:
        if len(self.lambdas) != len(self.counts):
            raise ValueError("lambdas and counts differ in length")
        if np.any(np.diff(self.lambdas) < 0):
            raise ValueError("lambda grid must be ascending")

    @property
    def points(self) -> list[tuple[float, float]]:
        """(lambda, count) pairs."""
        return list(zip(self.lambdas.tolist(), self.counts.tolist()))

    def __len__(self) -> int:
        return len(self.lambdas)


def counting_curve(
    model: CuspEdgeModel,
    mesh: MeshConfig,
    bc: BoundaryCondition,
    lambda_grid: Sequence[float],
    rtol: float = DEFAULT_RTOL,
    strict: bool = False,
    threads: int = 1,
) -> CountingCurve:
    """Counting function of the model Laplacian with outer condition ``bc``.

    Raises:
        MeshTooCoarse: If ``strict`` and a radial solve cannot be certified
        IndexIncomplete: Propagated from assemble_count
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda_grid is empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("lambda_grid must be ascending")
    warn_if_not_self_adjoint(model, "counting_curve")

    idx = build_index(model, mesh, bc, float(grid[-1]), rtol, strict, threads)
    return curve_from_index(idx, grid)


def curve_from_index(idx: SpectrumIndex, lambda_grid: Sequence[float]) -> CountingCurve:
    """Evaluate assemble_count on every grid point of an existing index."""
    grid = np.asarray(lambda_grid, dtype=float)
    counts = np.array([assemble_count(idx, float(lam)) for lam in grid], dtype=float)
    return CountingCurve(grid, counts, idx.bc.value, idx.certified)


def averaged_curve(curve_d: CountingCurve, curve_n: CountingCurve) -> CountingCurve:
    """(N_D + N_N) / 2 on the shared grid.

    Raises:
        GridMismatch: If the two curves use different grids
    """
    same_grid = len(curve_d) == len(curve_n) and np.array_equal(
        curve_d.lambdas, curve_n.lambdas
    )
    if not same_grid:
        raise GridMismatch("Dirichlet and Neumann curves use different lambda grids")
    return CountingCurve(
        curve_d.lambdas,
        0.5 * (curve_d.counts + curve_n.counts),
        "average",
        curve_d.certified and curve_n.certified,
    )


# =============================================================================
# Two-block splits for bracketing
# =============================================================================


class SplitCurves(NamedTuple):
    """Full curve and the part curves of a cusp coordinate cut in two."""

    dirichlet_parts: list[CountingCurve]
    full: CountingCurve
    neumann_parts: list[CountingCurve]
    tolerance: float


def split_counting_curves(
    model: CuspEdgeModel,
    mesh: MeshConfig,
    lambda_grid: Sequence[float],
    cut: float | None = None,
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET,
    rtol: float = DEFAULT_RTOL,
    strict: bool = False,
    threads: int = 1,
) -> SplitCurves:
    """Counting curves of the model and of its split at rho_1 = cut.

    The first cusp coordinate is cut into (0, cut) and (cut, delta) with
    Dirichlet, then Neumann, conditions on both sides of the cut; every other
    factor is kept whole. ``cut`` defaults to delta / 2.

    Discrete eigenvalues lie above the exact ones by at most the certified
    relative change, so exact bracketing survives discretization up to the
    count growth over [lam, lam (1 + SPLIT_MARGIN rtol)]. The largest such
    growth of the full and the summed Neumann curves is the ``tolerance``.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda_grid is empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("lambda_grid must be ascending")
    cut = 0.5 * model.delta if cut is None else cut
    if not 0 < cut < model.delta:
        raise ValueError(f"cut must lie in (0, {model.delta}), got {cut}")

    stretch = 1.0 + SPLIT_MARGIN * rtol
    stretched = grid * stretch
    others = [RadialSegment.whole(model, bc)] * (model.ell - 1)

    def curves(segment: RadialSegment, label: str) -> tuple[CountingCurve, ...]:
        idx = build_index(
            model,
            mesh,
            bc,
            float(grid[-1]) * stretch,
            rtol,
            strict,
            threads,
            segments=[segment, *others],
        )
        return tuple(
            replace(curve_from_index(idx, g), bc=label) for g in (grid, stretched)
        )

    full, full_up = curves(RadialSegment.whole(model, bc), bc.value)
    parts: dict[BoundaryCondition, list[tuple[CountingCurve, ...]]] = {}
    for cut_bc in BoundaryCondition:
        label = f"{cut_bc.value}-cut"
        parts[cut_bc] = [
            curves(RadialSegment(0.0, cut, cut_bc), label),
            curves(RadialSegment(cut, model.delta, bc, inner_bc=cut_bc), label),
        ]

    neumann = parts[BoundaryCondition.NEUMANN]
    growth_full = full_up.counts - full.counts
    growth_neumann = sum(up.counts - at.counts for at, up in neumann)
    tolerance = float(max(0.0, np.max(growth_full), np.max(growth_neumann)))
    logger.debug("Split at rho_1 = %g: count tolerance %g", cut, tolerance)
    return SplitCurves(
        dirichlet_parts=[at for at, _ in parts[BoundaryCondition.DIRICHLET]],
        full=full,
        neumann_parts=[at for at, _ in neumann],
        tolerance=tolerance,
    )
