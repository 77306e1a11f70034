"""Weighted Hardy inequalities in L^2(rho^alpha d rho).

For 2 beta + alpha > 1 and u vanishing near rho0,

    || rho^(beta - 1) u || <= 2 / (2 beta + alpha - 1) || rho^beta u' ||,

and the constant is sharp. The best discrete constant is the smallest
eigenvalue of the pencil

    (int rho^(2 beta + alpha) u'v', int rho^(2 beta + alpha - 2) uv).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import MeshTooCoarse, OutsideRegime
from .models import HardyResult
from .sturm import (
    GAUSS_NODES,
    GAUSS_WEIGHTS,
    GradedMesh,
    assemble_weighted_pencil,
    hat_moments,
    power_integral,
    smallest_eigenvalue,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

DEFAULT_HARDY_CELLS = 4000
DEFAULT_HARDY_GRADING = 2.0
HARDY_RTOL = 1e-2


def theoretical_constant(alpha: float, beta: float) -> float:
    """The sharp constant 2 / (2 beta + alpha - 1).

    Raises:
        OutsideRegime: If 2 beta + alpha <= 1
    """
    gap = 2.0 * beta + alpha - 1.0
    if gap <= 0:
        raise OutsideRegime(
            f"Hardy inequality needs 2*beta + alpha > 1, got {2.0 * beta + alpha}",
            context={"stage": "hardy", "alpha": alpha, "beta": beta},
        )
    return 2.0 / gap


class Support(str, Enum):
    """Where trial functions must vanish."""

    COMPACT = "compact"  # u(rho0) = 0
    CUTOFF = "cutoff"  # u(rho0 + eps) = 0


@dataclass(frozen=True)
class HardyProblem:
    """Hardy quotient on (0, rho0 + eps) with measure rho^alpha d rho.

    Nodes are graded toward 0 on (0, rho0) and uniform on (rho0, rho0 + eps),
    so rho0 is always a mesh node.
    """

    alpha: float
    beta: float
    rho0: float = 1.0
    eps: float = 0.0
    cells: int = DEFAULT_HARDY_CELLS
    grading: float = DEFAULT_HARDY_GRADING
    support: Support = Support.COMPACT

    def __post_init__(self) -> None:
        theoretical_constant(self.alpha, self.beta)
        if self.rho0 <= 0:
            raise ValueError("rho0 must be positive")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if self.support == Support.CUTOFF and self.eps == 0:
            raise ValueError("cutoff support needs eps > 0")

    @property
    def mesh(self) -> GradedMesh:
        """Graded mesh on (0, rho0)."""
        return GradedMesh.build(self.cells, self.rho0, self.grading)

    @property
    def margin_cells(self) -> int:
        return max(16, self.cells // 10) if self.eps > 0 else 0

    @property
    def nodes(self) -> FloatArray:
        """All nodes on (0, rho0 + eps)."""
        core = self.mesh.nodes
        if self.eps == 0:
            return core
        margin = np.linspace(self.rho0, self.rho0 + self.eps, self.margin_cells + 1)
        return np.concatenate([core, margin[1:]])

    @property
    def stiffness_exponent(self) -> float:
        return 2.0 * self.beta + self.alpha

    @property
    def mass_exponent(self) -> float:
        return 2.0 * self.beta + self.alpha - 2.0

    def refine(self) -> HardyProblem:
        return HardyProblem(
            self.alpha,
            self.beta,
            self.rho0,
            self.eps,
            2 * self.cells,
            self.grading,
            self.support,
        )


def log_scale_gap(p: HardyProblem) -> float:
    """(pi / log(rho0 / rho1))^2, the excess of the discrete infimum.

    rho1 is the first interior node; the mesh only resolves a log-range of
    that length, and the Rayleigh infimum sits above the continuum value by
    about this much.
    """
    rho1 = float(p.mesh.nodes[1])
    return (math.pi / math.log(p.rho0 / rho1)) ** 2


def _discrete_best(p: HardyProblem) -> float:
    nodes = p.mesh.nodes if p.support == Support.COMPACT else p.nodes
    pencil = assemble_weighted_pencil(
        nodes,
        stiffness_exponent=p.stiffness_exponent,
        mass_exponent=p.mass_exponent,
        clamped_nodes=0,
        clamp_last=True,
        stage="hardy",
    )
    return math.sqrt(smallest_eigenvalue(pencil))


def best_constant_numeric(
    p: HardyProblem, rtol: float = HARDY_RTOL, strict: bool = False
) -> HardyResult:
    """Smallest Hardy quotient over the discrete space, checked under refinement.

    numeric_best is sqrt of the smallest eigenvalue; it decreases toward
    (2 beta + alpha - 1) / 2 as the mesh resolves more of the log-range.

    Raises:
        MeshTooCoarse: If ``strict`` and numeric_best moves by more than rtol
            under one refinement
    """
    bound = 1.0 / theoretical_constant(p.alpha, p.beta)
    coarse = _discrete_best(p)
    fine = _discrete_best(p.refine())
    change = abs(coarse - fine) / fine
    converged = change <= rtol
    logger.debug(
        "Hardy (alpha=%g, beta=%g): %.8g on %d cells, %.8g on %d",
        p.alpha,
        p.beta,
        coarse,
        p.cells,
        fine,
        2 * p.cells,
    )
    if not converged:
        message = f"Hardy constant moved by {change:.2e} (relative) under refinement"
        if strict:
            raise MeshTooCoarse(
                message,
                suggestion="Increase cells or the grading exponent",
                context={"stage": "hardy", "alpha": p.alpha, "beta": p.beta},
            )
        logger.warning("%s; result is not converged", message)
    return HardyResult(
        alpha=p.alpha,
        beta=p.beta,
        numeric_best=coarse,
        theoretical_bound=bound,
        ratio=coarse / bound,
        mesh_cells=p.cells,
        converged=converged,
    )


# =============================================================================
# Trial functions
# =============================================================================


def rayleigh_quotient(
    alpha: float, beta: float, nodes: ArrayLike, u: ArrayLike
) -> float:
    """||rho^beta u'||^2 / ||rho^(beta-1) u||^2 for the P1 function with values u."""
    nodes = np.asarray(nodes, dtype=float)
    u = np.asarray(u, dtype=float)
    if nodes.shape != u.shape:
        raise ValueError("nodes and u differ in shape")
    a, b = nodes[:-1], nodes[1:]
    slope = np.diff(u) / (b - a)
    grad = float(np.sum(slope**2 * power_integral(a, b, 2.0 * beta + alpha)))
    mass = _p1_mass(a, b, u[:-1], u[1:], 2.0 * beta + alpha - 2.0)
    if mass == 0:
        raise ValueError("Trial function is identically zero")
    return grad / mass


def _p1_mass(
    a: FloatArray, b: FloatArray, ua: FloatArray, ub: FloatArray, p: float
) -> float:
    m00, m01, m11 = hat_moments(a, b, p)
    return float(np.sum(ua * ua * m00 + 2.0 * ua * ub * m01 + ub * ub * m11))


def cutoff(rho: ArrayLike, rho0: float, eps: float) -> tuple[FloatArray, FloatArray]:
    """Cubic smoothstep psi (1 on (0, rho0], 0 from rho0 + eps) and psi'."""
    rho = np.asarray(rho, dtype=float)
    if eps == 0:
        return (rho <= rho0).astype(float), np.zeros_like(rho)
    t = np.clip((rho - rho0) / eps, 0.0, 1.0)
    psi = 1.0 - t * t * (3.0 - 2.0 * t)
    dpsi = -6.0 * t * (1.0 - t) / eps
    return psi, dpsi


@dataclass(frozen=True)
class BoundaryVariantReport:
    """Both sides of the cutoff Hardy inequality for one trial function."""

    lhs: float
    rhs: float
    holds: bool
    ratio: float
    cutoff_constant: float


def _cutoff_norms(p: HardyProblem, u: FloatArray) -> tuple[float, float, float]:
    """||rho^(beta-1) psi u||, ||rho^beta psi u'||, ||rho^beta psi' u||."""
    nodes = p.nodes
    if u.shape != nodes.shape:
        raise ValueError(f"u has {u.size} values, mesh has {nodes.size} nodes")
    a, b = nodes[:-1], nodes[1:]
    slope = np.diff(u) / (b - a)

    # psi = 1 up to rho0: exact moments
    core = b <= p.rho0 * (1.0 + 1e-14)
    mass = _p1_mass(a[core], b[core], u[:-1][core], u[1:][core], p.mass_exponent)
    weights = power_integral(a[core], b[core], p.stiffness_exponent)
    grad = float(np.sum(slope[core] ** 2 * weights))
    tail = 0.0

    outer = ~core
    if np.any(outer):
        h = (b - a)[outer][:, None]
        t = 0.5 * (1.0 + GAUSS_NODES)[None, :]
        rho = a[outer][:, None] + h * t
        w = 0.5 * h * GAUSS_WEIGHTS[None, :]
        values = u[:-1][outer][:, None] * (1.0 - t) + u[1:][outer][:, None] * t
        psi, dpsi = cutoff(rho, p.rho0, p.eps)
        mass += float(np.sum(w * rho**p.mass_exponent * (psi * values) ** 2))
        grad += float(
            np.sum(w * rho**p.stiffness_exponent * (psi * slope[outer][:, None]) ** 2)
        )
        tail = float(np.sum(w * rho**p.stiffness_exponent * (dpsi * values) ** 2))
    return math.sqrt(mass), math.sqrt(grad), math.sqrt(tail)


def boundary_variant_check(p: HardyProblem, u: ArrayLike) -> BoundaryVariantReport:
    """Check ((2 beta + alpha - 1) / 2) ||rho^(beta-1) psi u||
    <= ||rho^beta psi u'|| + ||rho^beta psi' u||.

    ``u`` holds nodal values on ``p.nodes``; it need not vanish anywhere.
    """
    if p.eps <= 0:
        raise ValueError("The cutoff variant needs eps > 0")
    weighted, grad, tail = _cutoff_norms(p, np.asarray(u, dtype=float))
    lhs = weighted / theoretical_constant(p.alpha, p.beta)
    rhs = grad + tail
    if rhs == 0:
        raise ValueError("Trial function has no gradient energy")
    return BoundaryVariantReport(
        lhs=lhs,
        rhs=rhs,
        holds=lhs <= rhs * (1.0 + 1e-12),
        ratio=lhs / rhs,
        cutoff_constant=weighted / rhs,
    )


def empirical_cutoff_constant(p: HardyProblem, trials: Sequence[ArrayLike]) -> float:
    """Largest ||rho^(beta-1) psi u|| / (||rho^beta psi u'|| + ||rho^beta psi' u||)."""
    if not trials:
        raise ValueError("Need at least one trial function")
    return max(boundary_variant_check(p, u).cutoff_constant for u in trials)


# =============================================================================
# Several variables
# =============================================================================


@dataclass(frozen=True)
class MultiHardyReport:
    """Tensor-grid check of the Hardy inequality in one direction."""

    direction: int
    lhs: float
    rhs: float
    constant: float
    holds: bool


def _global_matrix(nodes: FloatArray, exponent: float, stiffness: bool) -> FloatArray:
    pencil = assemble_weighted_pencil(
        nodes,
        stiffness_exponent=exponent,
        mass_exponent=exponent,
        clamped_nodes=0,
        clamp_last=False,
        stage="multi_hardy",
    )
    if stiffness:
        diag, off = pencil.k_diag, pencil.k_off
    else:
        diag, off = pencil.m_diag, pencil.m_off
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def _tensor_norm_sq(u: FloatArray, matrices: Sequence[FloatArray]) -> float:
    v = u
    for axis, mat in enumerate(matrices):
        v = np.moveaxis(np.tensordot(mat, v, axes=([1], [axis])), 0, axis)
    return float(np.sum(u * v))


def multi_hardy_check(
    alpha: Sequence[float],
    beta: Sequence[float],
    direction: int,
    grids: Sequence[ArrayLike],
    u: ArrayLike,
) -> MultiHardyReport:
    """||rho^beta rho_i^-1 u|| <= 2 / (2 beta_i + alpha_i - 1) ||rho^beta d_i u||.

    ``u`` holds the nodal values of a multilinear function on the tensor grid,
    weights are rho^beta = prod rho_j^beta_j and mu = prod rho_j^alpha_j d rho_j.
    The norms are computed exactly from one-dimensional element matrices.

    Raises:
        OutsideRegime: If 2 beta_i + alpha_i <= 1
    """
    ell = len(grids)
    if not (len(alpha) == len(beta) == ell):
        raise ValueError("alpha, beta and grids must have one entry per direction")
    if not 0 <= direction < ell:
        raise ValueError(f"direction must be in 0..{ell - 1}")
    constant = theoretical_constant(alpha[direction], beta[direction])

    nodes = [np.asarray(g, dtype=float) for g in grids]
    u = np.asarray(u, dtype=float)
    if u.shape != tuple(len(g) for g in nodes):
        raise ValueError("u does not match the tensor grid")
    if np.any(np.take(u, -1, axis=direction) != 0):
        raise ValueError("u must vanish on the outer face in the checked direction")

    weights = [2.0 * b + a for a, b in zip(alpha, beta)]
    lhs_mats = [_global_matrix(g, w, False) for g, w in zip(nodes, weights)]
    rhs_mats = list(lhs_mats)
    lhs_mats[direction] = _global_matrix(
        nodes[direction], weights[direction] - 2.0, False
    )
    rhs_mats[direction] = _global_matrix(nodes[direction], weights[direction], True)

    lhs = math.sqrt(_tensor_norm_sq(u, lhs_mats))
    rhs = constant * math.sqrt(_tensor_norm_sq(u, rhs_mats))
    return MultiHardyReport(
        direction=direction,
        lhs=lhs,
        rhs=rhs,
        constant=constant,
        holds=lhs <= rhs * (1.0 + 1e-12),
    )
