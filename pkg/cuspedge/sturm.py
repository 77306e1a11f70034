"""Radial eigenproblem -u'' - (alpha/rho) u' + m^2 rho^(-2k) u = lambda u.

The problem lives on (0, delta), or on an annulus (r0, delta) when a cusp
coordinate is split for bracketing. The operator is discretized by conforming
piecewise-linear finite elements on the graded mesh
rho_j = r0 + (delta - r0) (j/N)^g in the weighted space L^2(rho^alpha d rho).
Stiffness and mass are symmetric tridiagonal, and eigenvalues are extracted by
Sturm-sequence bisection on the pencil K - lambda M, so every count below a
threshold is an exact inertia count of the discrete problem.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import MeshTooCoarse, NumericalFailure
from .models import BoundaryCondition

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

GAUSS_ORDER = 8
GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_ORDER)

DEFAULT_GRADING = 3.0
DEFAULT_RTOL = 1e-3
BISECTION_RTOL = 1e-14
_PIVMIN = 1e-300


@dataclass(frozen=True)
class RadialProblem:
    """One separated radial operator with weight rho^alpha on (inner, delta).

    At ``inner = 0`` the origin carries the Friedrichs realization and
    ``inner_bc`` is ignored; an annulus takes ``inner_bc`` at its inner radius.
    """

    alpha: float
    k: float
    m: int
    delta: float
    outer_bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    inner: float = 0.0
    inner_bc: BoundaryCondition = BoundaryCondition.NEUMANN

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if not 0 <= self.inner < self.delta:
            raise ValueError(
                f"inner radius must lie in [0, {self.delta}), got {self.inner}"
            )

    @property
    def is_annulus(self) -> bool:
        return self.inner > 0

    @property
    def potential_floor(self) -> float:
        """m^2 delta^(-2k), a lower bound for every eigenvalue of this mode."""
        if self.m == 0:
            return 0.0
        return float(self.m**2 * self.delta ** (-2.0 * self.k))

    @property
    def clamped_nodes(self) -> int:
        """Number of leading mesh nodes fixed to zero (Friedrichs realization).

        u(0) = 0 is imposed when the endpoint is regular (alpha < 1) or the
        angular potential is present. When the first-cell potential integral
        diverges (alpha - 2k + 3 <= 0) the first interior node is fixed as well.
        On an annulus only a Dirichlet inner condition fixes a node.
        """
        if self.is_annulus:
            return 1 if self.inner_bc == BoundaryCondition.DIRICHLET else 0
        if self.m != 0:
            return 2 if self.alpha - 2.0 * self.k + 3.0 <= 0 else 1
        return 1 if self.alpha < 1 else 0

    @property
    def has_constant_mode(self) -> bool:
        """True when constants lie in the form domain and have zero energy.

        That needs m = 0, no fixed node and Neumann at delta; the constant is
        then an exact discrete eigenvector with eigenvalue 0.
        """
        return (
            self.m == 0
            and self.clamped_nodes == 0
            and self.outer_bc == BoundaryCondition.NEUMANN
        )

    def with_bc(self, bc: BoundaryCondition) -> RadialProblem:
        """Same problem with another outer boundary condition."""
        return replace(self, outer_bc=bc)


@dataclass(frozen=True, eq=False)
class GradedMesh:
    """Nodes rho_j = r0 + (delta - r0) (j/N)^g, j = 0..N (r0 = 0 by default)."""

    cells: int
    grading: float
    nodes: FloatArray

    @classmethod
    def build(
        cls,
        cells: int,
        delta: float,
        grading: float = DEFAULT_GRADING,
        start: float = 0.0,
    ) -> GradedMesh:
        """Create the graded mesh on (start, delta)."""
        if cells < 1:
            raise ValueError("A mesh needs at least one cell")
        if grading < 1:
            raise ValueError("Grading exponent must be >= 1")
        if not 0 <= start < delta:
            raise ValueError(f"Mesh start {start} must lie in [0, {delta})")
        nodes = start + (delta - start) * (np.arange(cells + 1) / cells) ** grading
        nodes[0] = start
        nodes[-1] = delta
        mesh = cls(cells=cells, grading=grading, nodes=nodes)
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("Mesh nodes are not strictly increasing")
        return mesh

    @property
    def delta(self) -> float:
        """Right end of the mesh."""
        return float(self.nodes[-1])

    @property
    def start(self) -> float:
        return float(self.nodes[0])

    def refine(self) -> GradedMesh:
        """Uniform refinement N -> 2N with the same grading (nested nodes)."""
        return GradedMesh.build(2 * self.cells, self.delta, self.grading, self.start)


@dataclass(frozen=True, eq=False)
class EigResult:
    """Eigenvalues at most lambda_max with their certification status."""

    eigenvalues: FloatArray
    lambda_max: float
    certified_complete: bool
    refinement_change: float = 0.0

    def __len__(self) -> int:
        return len(self.eigenvalues)


class ElementBlocks(NamedTuple):
    """Local 2x2 stiffness and mass blocks of one cell."""

    stiffness: FloatArray
    mass: FloatArray


@dataclass(frozen=True, eq=False)
class TridiagonalPencil:
    """Symmetric tridiagonal K and M restricted to the free nodes."""

    k_diag: FloatArray
    k_off: FloatArray
    m_diag: FloatArray
    m_off: FloatArray
    first_free: int

    @property
    def size(self) -> int:
        return len(self.k_diag)


# =============================================================================
# Element integrals
# =============================================================================


def _stable_power_integral(a: FloatArray, b: FloatArray, s: float) -> FloatArray:
    """int_a^b rho^s d rho for a > 0, without cancellation for b close to a."""
    log_ratio = np.log1p((b - a) / a)
    x = (s + 1.0) * log_ratio
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(x == 0.0, 1.0, np.expm1(x) / np.where(x == 0.0, 1.0, x))
    return a ** (s + 1.0) * log_ratio * factor


def power_integral(a: ArrayLike, b: ArrayLike, p: float) -> FloatArray:
    """int_a^b rho^p d rho per cell; inf where the integral diverges at 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty(np.broadcast(a, b).shape)
    at_origin = a == 0.0
    if np.any(at_origin):
        h = np.broadcast_to(b, out.shape)[at_origin]
        out[at_origin] = h ** (p + 1.0) / (p + 1.0) if p > -1 else np.inf
    inner = ~at_origin
    if np.any(inner):
        out[inner] = _stable_power_integral(
            np.broadcast_to(a, out.shape)[inner],
            np.broadcast_to(b, out.shape)[inner],
            p,
        )
    return out


def _origin_hat_moments(h: FloatArray, p: float) -> tuple[FloatArray, ...]:
    """Hat-function moments on [0, h]: h^(p+1) times Beta-function integrals."""
    scale = h ** (p + 1.0)
    diverged = np.full_like(h, np.inf)
    m00 = scale * 2.0 / ((p + 1.0) * (p + 2.0) * (p + 3.0)) if p > -1 else diverged
    m01 = scale / ((p + 2.0) * (p + 3.0)) if p > -2 else diverged
    m11 = scale / (p + 3.0) if p > -3 else diverged
    return m00, m01, m11


def _closed_form_hat_moments(
    a: FloatArray, b: FloatArray, p: float
) -> tuple[FloatArray, ...]:
    """Hat-function moments from the exact power integrals (cells with b >= 2a > 0)."""
    h = b - a
    j0 = _stable_power_integral(a, b, p)
    j1 = _stable_power_integral(a, b, p + 1.0)
    j2 = _stable_power_integral(a, b, p + 2.0)
    h2 = h * h
    m00 = (b * b * j0 - 2.0 * b * j1 + j2) / h2
    m01 = (-a * b * j0 + (a + b) * j1 - j2) / h2
    m11 = (a * a * j0 - 2.0 * a * j1 + j2) / h2
    return m00, m01, m11


def _gauss_hat_moments(
    a: FloatArray, b: FloatArray, p: float
) -> tuple[FloatArray, ...]:
    """Hat-function moments by order-8 Gauss-Legendre (cells with b < 2a)."""
    h = (b - a)[:, None]
    t = 0.5 * (1.0 + GAUSS_NODES)[None, :]
    rho = a[:, None] + h * t
    w = 0.5 * h * GAUSS_WEIGHTS[None, :] * rho**p
    m00 = np.sum(w * (1.0 - t) ** 2, axis=1)
    m01 = np.sum(w * (1.0 - t) * t, axis=1)
    m11 = np.sum(w * t * t, axis=1)
    return m00, m01, m11


def hat_moments(a: ArrayLike, b: ArrayLike, p: float) -> tuple[FloatArray, ...]:
    """int_a^b rho^p phi_i phi_j for the two hat functions of each cell.

    Returns the (00, 01, 11) entries. Cells touching or near the origin
    (b >= 2a) use exact antiderivatives; the others use Gauss-Legendre, where
    the integrand is analytic on the cell.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    m00 = np.empty_like(a)
    m01 = np.empty_like(a)
    m11 = np.empty_like(a)

    origin = a == 0.0
    closed = (~origin) & (b >= 2.0 * a)
    gauss = ~(origin | closed)
    for mask, fn in (
        (closed, _closed_form_hat_moments),
        (gauss, _gauss_hat_moments),
    ):
        if np.any(mask):
            m00[mask], m01[mask], m11[mask] = fn(a[mask], b[mask], p)
    if np.any(origin):
        m00[origin], m01[origin], m11[origin] = _origin_hat_moments(b[origin], p)
    return m00, m01, m11


def element_integrals(
    cell: tuple[float, float], alpha: float, k: float, m: int
) -> ElementBlocks:
    """Exact local stiffness and mass blocks of one cell [rho_a, rho_b].

    On the first cell [0, h] with m != 0 the node at the origin is fixed, so
    only int rho^(alpha-2k) (rho/h)^2 enters the potential block.

    Raises:
        NumericalFailure: If any needed integral diverges or is not finite
    """
    rho_a, rho_b = cell
    if not 0 <= rho_a < rho_b:
        raise ValueError(f"Invalid cell [{rho_a}, {rho_b}]")

    h = rho_b - rho_a
    grad = float(power_integral(rho_a, rho_b, alpha)) / (h * h)
    stiffness = grad * np.array([[1.0, -1.0], [-1.0, 1.0]])
    mass = _block(hat_moments(rho_a, rho_b, alpha))

    if m != 0:
        potential = _block(hat_moments(rho_a, rho_b, alpha - 2.0 * k))
        if rho_a == 0.0:
            potential[0, :] = 0.0
            potential[:, 0] = 0.0
        stiffness = stiffness + m * m * potential

    if not (np.all(np.isfinite(stiffness)) and np.all(np.isfinite(mass))):
        raise NumericalFailure(
            f"Element integrals on [{rho_a}, {rho_b}] are not finite",
            suggestion="The weighted integrals diverge at rho = 0 for these exponents",
            context={"stage": "element_integrals", "alpha": alpha, "k": k, "m": m},
        )
    return ElementBlocks(stiffness, mass)


def _block(moments: tuple[FloatArray, ...]) -> FloatArray:
    m00, m01, m11 = (float(x[0]) for x in moments)
    return np.array([[m00, m01], [m01, m11]])


# =============================================================================
# Assembly
# =============================================================================


def assemble_weighted_pencil(
    nodes: FloatArray,
    stiffness_exponent: float,
    mass_exponent: float,
    potential_coefficient: float = 0.0,
    potential_exponent: float = 0.0,
    clamped_nodes: int = 0,
    clamp_last: bool = True,
    stage: str = "assemble",
) -> TridiagonalPencil:
    """Assemble int rho^s u'v' + c int rho^q uv against int rho^p uv.

    Cells lying entirely in the clamped region are skipped, so their
    (possibly divergent) integrals never enter the pencil.
    """
    a = nodes[:-1]
    b = nodes[1:]
    h = b - a
    n_cells = len(a)
    active = np.arange(n_cells) >= max(clamped_nodes - 1, 0)

    grad = np.zeros(n_cells)
    mass = [np.zeros(n_cells) for _ in range(3)]
    pot = [np.zeros(n_cells) for _ in range(3)]

    weights = power_integral(a[active], b[active], stiffness_exponent)
    grad[active] = weights / h[active] ** 2
    for target, values in zip(mass, hat_moments(a[active], b[active], mass_exponent)):
        target[active] = values
    if potential_coefficient != 0.0:
        moments = hat_moments(a[active], b[active], potential_exponent)
        for target, values in zip(pot, moments):
            target[active] = potential_coefficient * values

    k_diag = np.zeros(n_cells + 1)
    m_diag = np.zeros(n_cells + 1)
    k_diag[:-1] += grad + pot[0]
    k_diag[1:] += grad + pot[2]
    k_off = -grad + pot[1]
    m_diag[:-1] += mass[0]
    m_diag[1:] += mass[2]
    m_off = mass[1].copy()

    first = clamped_nodes
    last = n_cells if clamp_last else n_cells + 1
    pencil = TridiagonalPencil(
        k_diag=k_diag[first:last].copy(),
        k_off=k_off[first : last - 1].copy(),
        m_diag=m_diag[first:last].copy(),
        m_off=m_off[first : last - 1].copy(),
        first_free=first,
    )

    finite = all(
        np.all(np.isfinite(arr))
        for arr in (pencil.k_diag, pencil.k_off, pencil.m_diag, pencil.m_off)
    )
    if not finite or pencil.size == 0:
        raise NumericalFailure(
            "Assembled radial matrices are not finite",
            suggestion="Check the weight exponents or use fewer cells near rho = 0",
            context={
                "stage": stage,
                "stiffness_exponent": stiffness_exponent,
                "potential_exponent": potential_exponent,
            },
        )
    return pencil


def assemble_pencil(problem: RadialProblem, mesh: GradedMesh) -> TridiagonalPencil:
    """Stiffness and mass of the radial problem on the mesh."""
    if not np.isclose(mesh.delta, problem.delta, rtol=1e-12, atol=0.0):
        raise ValueError(
            f"Mesh ends at {mesh.delta} but the problem has delta = {problem.delta}"
        )
    if not np.isclose(mesh.start, problem.inner, rtol=1e-12, atol=0.0):
        raise ValueError(
            f"Mesh starts at {mesh.start} but the problem has inner = {problem.inner}"
        )
    return assemble_weighted_pencil(
        mesh.nodes,
        stiffness_exponent=problem.alpha,
        mass_exponent=problem.alpha,
        potential_coefficient=float(problem.m**2),
        potential_exponent=problem.alpha - 2.0 * problem.k,
        clamped_nodes=problem.clamped_nodes,
        clamp_last=problem.outer_bc == BoundaryCondition.DIRICHLET,
        stage=f"radial solve (m={problem.m}, bc={problem.outer_bc.value})",
    )


# =============================================================================
# Sturm-sequence counting and bisection
# =============================================================================


def sturm_count(pencil: TridiagonalPencil, shifts: ArrayLike) -> NDArray[np.int64]:
    """Number of generalized eigenvalues strictly below each shift.

    Counts the negative pivots of the LDL^T factorization of K - shift M
    (Sylvester's law of inertia; M is positive definite).
    """
    sigma = np.atleast_1d(np.asarray(shifts, dtype=float))
    a = pencil.k_diag.tolist()
    b = pencil.m_diag.tolist()
    e = pencil.k_off.tolist()
    f = pencil.m_off.tolist()

    count = np.zeros(sigma.shape, dtype=np.int64)
    d = a[0] - sigma * b[0]
    for i in range(1, len(a)):
        count += d < 0.0
        d = np.where(d == 0.0, _PIVMIN, d)
        off = e[i - 1] - sigma * f[i - 1]
        d = (a[i] - sigma * b[i]) - off * off / d
    count += d < 0.0
    return count


def bisect_eigenvalues(
    pencil: TridiagonalPencil,
    indices: ArrayLike,
    lower: float,
    upper: float,
    rtol: float = BISECTION_RTOL,
) -> FloatArray:
    """Eigenvalues with the given 0-based indices, all bracketed by [lower, upper].

    All indices are bisected simultaneously, one Sturm sweep per step.
    """
    idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
    if idx.size == 0:
        return np.zeros(0)
    lo = np.full(idx.shape, float(lower))
    hi = np.full(idx.shape, float(upper))
    for _ in range(200):
        width = hi - lo
        if np.all(width <= rtol * np.maximum(np.abs(hi), np.abs(lo)) + 1e-300):
            break
        mid = 0.5 * (lo + hi)
        above = sturm_count(pencil, mid) > idx
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return 0.5 * (lo + hi)


def pencil_eigenvalues(
    pencil: TridiagonalPencil,
    upper: float,
    lower: float = -1.0,
    constant_mode: bool = False,
) -> FloatArray:
    """All generalized eigenvalues in [lower, upper], ascending.

    With ``constant_mode`` the pencil is known to annihilate the constant
    vector (K 1 = 0, K positive semidefinite). Index 0 is then reported as an
    exact 0 for any ``upper >= 0``, since the sign of its computed pivot is
    rounding noise.
    """
    upper_open = np.nextafter(upper, np.inf)
    n_lo, n_up = (int(c) for c in sturm_count(pencil, [lower, upper_open]))
    logger.debug(
        "Sturm counts: %d below %.6g, %d at most %.6g", n_lo, lower, n_up, upper
    )
    if constant_mode and upper >= 0.0 and lower < 0.0:
        # the other eigenvalues are bounded away from 0; only index 0 can be
        # miscounted near a zero shift
        indices = np.arange(1, max(n_up, 1))
        rest = bisect_eigenvalues(pencil, indices, lower, upper_open)
        values = np.concatenate([[0.0], np.sort(rest)])
        return np.minimum(values, upper)
    values = bisect_eigenvalues(pencil, np.arange(n_lo, n_up), lower, upper_open)
    return np.minimum(np.sort(values), upper)


def smallest_eigenvalue(pencil: TridiagonalPencil, lower: float = 0.0) -> float:
    """Lowest generalized eigenvalue, bracketed by doubling from ``lower``."""
    while sturm_count(pencil, [lower])[0] > 0:
        lower = -2.0 * abs(lower) - 1.0
    upper = max(abs(lower), 1.0)
    for _ in range(2100):
        if sturm_count(pencil, [upper])[0] > 0:
            break
        upper *= 2.0
    else:
        raise NumericalFailure(
            "Could not bracket the smallest eigenvalue",
            context={"stage": "smallest_eigenvalue"},
        )
    return float(bisect_eigenvalues(pencil, [0], lower, upper)[0])


# =============================================================================
# Public solver
# =============================================================================


def mode_cutoff(problem: RadialProblem, lam: float) -> bool:
    """True when mode m contributes no spectrum <= lam (m^2 delta^(-2k) > lam)."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return problem.m != 0 and problem.potential_floor > lam


def solve_eigs(
    problem: RadialProblem,
    mesh: GradedMesh,
    lambda_max: float,
    rtol: float = DEFAULT_RTOL,
    strict: bool = False,
    certify: bool = True,
) -> EigResult:
    """All discrete eigenvalues <= lambda_max, ascending.

    The eigenvalues are upper bounds for the continuum ones. With ``certify``
    the largest one is recomputed on the once-refined mesh; a relative change
    above ``rtol`` marks the result uncertified, or raises with ``strict``.

    Raises:
        NumericalFailure: If the element integrals are not finite
        MeshTooCoarse: If ``strict`` and the refinement check fails
    """
    if lambda_max <= 0:
        raise ValueError("lambda_max must be positive")
    if mode_cutoff(problem, lambda_max):
        return EigResult(np.zeros(0), lambda_max, True)

    floor = problem.potential_floor
    lower = -1.0 if floor == 0.0 else floor * (1.0 - 1e-10)

    pencil = assemble_pencil(problem, mesh)
    eigenvalues = pencil_eigenvalues(
        pencil, lambda_max, lower, constant_mode=problem.has_constant_mode
    )
    logger.debug(
        "Mode m=%d (alpha=%g, k=%g, %s): %d eigenvalues <= %g on %d cells",
        problem.m,
        problem.alpha,
        problem.k,
        problem.outer_bc.value,
        len(eigenvalues),
        lambda_max,
        mesh.cells,
    )

    exact_only = problem.has_constant_mode and len(eigenvalues) == 1
    if not certify or len(eigenvalues) == 0 or exact_only:
        return EigResult(eigenvalues, lambda_max, True)

    # refinement only lowers eigenvalues, so the coarse value brackets from above
    top = len(eigenvalues) - 1
    index = int(sturm_count(pencil, [lower])[0]) + top
    upper = float(eigenvalues[top]) * (1.0 + 1e-9) + 1e-12
    fine = assemble_pencil(problem, mesh.refine())
    refined = float(bisect_eigenvalues(fine, [index], lower, upper)[0])
    # unit floor so a zero mode is compared in absolute terms
    scale = max(abs(float(eigenvalues[top])), 1.0)
    change = abs(eigenvalues[top] - refined) / scale
    certified = bool(change <= rtol)

    if not certified:
        message = (
            f"Eigenvalue {eigenvalues[top]:.6g} of mode m={problem.m} moved by "
            f"{change:.2e} (relative) under refinement"
        )
        if strict:
            raise MeshTooCoarse(
                message,
                suggestion="Increase mesh cells or the grading exponent",
                context={"stage": f"radial solve (m={problem.m})", "rtol": rtol},
            )
        logger.warning("%s; result is not certified", message)

    return EigResult(eigenvalues, lambda_max, certified, change)
