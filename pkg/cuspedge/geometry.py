"""Volumes, Weyl constants and decay admissibility for the model geometry."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from .errors import InsufficientSamples
from .models import CrossSection, CrossSectionKind, CuspEdgeModel, PerturbationSample

logger = logging.getLogger(__name__)

SELF_ADJOINT_MIN_ORDER = 3.0
DEFAULT_TOL_SLOPE = 0.1
ABSOLUTE_FLOOR = 1e-14
MIN_SAMPLES = 8


def cross_section_volume(cs: CrossSection) -> float:
    """Volume of the cross-section B (1 for a point)."""
    if cs.kind == CrossSectionKind.POINT:
        return 1.0
    return float(math.prod(cs.lengths))


def unit_ball_volume(n: int) -> float:
    """Volume omega_n of the unit ball in R^n."""
    return float(np.pi ** (n / 2) / gamma(n / 2 + 1))


def requires_self_adjointness_warning(model: CuspEdgeModel) -> bool:
    """True when some k_i < 3, outside the essentially self-adjoint regime."""
    return any(k_i < SELF_ADJOINT_MIN_ORDER for k_i in model.k)


def warn_if_not_self_adjoint(model: CuspEdgeModel, operation: str) -> None:
    """Log a warning when an operation assumes k_i >= 3 but the model has less."""
    if requires_self_adjointness_warning(model):
        logger.warning(
            "%s assumes essential self-adjointness (every k_i >= 3) but k = %s; "
            "results refer to the Friedrichs extension",
            operation,
            list(model.k),
        )


def volume(model: CuspEdgeModel) -> float:
    """Riemannian volume of the exact model metric.

    Vol = (2 pi)^ell * Vol(B) * prod_i delta^(k_i + 1) / (k_i + 1).
    """
    radial = math.prod(model.delta ** (k_i + 1) / (k_i + 1) for k_i in model.k)
    angular = (2 * math.pi) ** model.ell
    return angular * cross_section_volume(model.cross_section) * radial


def weyl_constant(model: CuspEdgeModel) -> float:
    """Leading Weyl coefficient omega_n / (2 pi)^n * Vol."""
    warn_if_not_self_adjoint(model, "weyl_constant")
    return weyl_constant_for_volume(model.n, volume(model))


def weyl_constant_for_volume(n: int, vol: float) -> float:
    """Weyl coefficient for an n-dimensional region of volume ``vol``."""
    return unit_ball_volume(n) / (2 * math.pi) ** n * vol


# =============================================================================
# Decay admissibility of metric perturbations
# =============================================================================


@dataclass
class CoefficientFit:
    """Decay fit for one perturbation coefficient."""

    name: str
    slope: float | None
    passed: bool
    via_floor: bool
    samples_used: int


@dataclass
class AdmissibilityReport:
    """Result of checking |coefficient| <= C |rho|^eta on samples."""

    eta: float
    tol_slope: float
    passed: bool = True
    coefficients: dict[str, CoefficientFit] = field(default_factory=dict)

    def add_fit(self, fit: CoefficientFit) -> None:
        """Record a coefficient fit, failing the report if the fit fails."""
        self.coefficients[fit.name] = fit
        if not fit.passed:
            self.passed = False

    def to_dict(self) -> dict[str, object]:
        """Plain-data form for JSON output."""
        return {
            "eta": self.eta,
            "tol_slope": self.tol_slope,
            "passed": self.passed,
            "coefficients": {
                name: {
                    "slope": fit.slope,
                    "passed": fit.passed,
                    "via_floor": fit.via_floor,
                    "samples_used": fit.samples_used,
                }
                for name, fit in sorted(self.coefficients.items())
            },
        }


def check_admissibility(
    p: PerturbationSample,
    tol_slope: float = DEFAULT_TOL_SLOPE,
    floor: float = ABSOLUTE_FLOOR,
) -> AdmissibilityReport:
    """Fit log|value| against log|rho| for every sampled coefficient.

    A coefficient passes when its fitted slope is at least ``eta - tol_slope`` or
    all of its values sit below ``floor``.

    Raises:
        InsufficientSamples: If there are fewer than 8 samples or |rho| spans
            less than a factor of 10
    """
    if len(p.samples) < MIN_SAMPLES:
        raise InsufficientSamples(
            f"Need at least {MIN_SAMPLES} samples, got {len(p.samples)}",
            suggestion="Sample the coefficients at more points toward rho = 0",
        )

    radii = np.array([np.linalg.norm(record.rho) for record in p.samples])
    if radii.max() < 10 * radii.min():
        raise InsufficientSamples(
            "Sample radii span less than a decade",
            suggestion="Include points with |rho| ten times smaller",
            context={
                "min_radius": float(radii.min()),
                "max_radius": float(radii.max()),
            },
        )

    names = sorted({name for record in p.samples for name in record.values})
    report = AdmissibilityReport(eta=p.eta, tol_slope=tol_slope)

    for name in names:
        pairs = [
            (radius, abs(record.values[name]))
            for radius, record in zip(radii, p.samples)
            if name in record.values
        ]
        r = np.array([pair[0] for pair in pairs])
        v = np.array([pair[1] for pair in pairs])

        if np.all(v < floor):
            report.add_fit(CoefficientFit(name, None, True, True, len(v)))
            continue

        keep = v >= floor
        if keep.sum() < 2 or r[keep].max() == r[keep].min():
            # not enough nonzero values to regress; treat as a failed fit
            logger.debug("Coefficient %s has too few nonzero samples", name)
            report.add_fit(CoefficientFit(name, None, False, False, int(keep.sum())))
            continue

        slope, _ = np.polyfit(np.log(r[keep]), np.log(v[keep]), 1)
        passed = bool(slope >= p.eta - tol_slope)
        logger.debug("Coefficient %s: fitted decay slope %.4f", name, slope)
        report.add_fit(
            CoefficientFit(name, float(slope), passed, False, int(keep.sum()))
        )

    return report
