"""Limit-point/limit-circle classification at the cusp and the constant windows.

The radial operator -u'' - (alpha / rho) u' is unitarily equivalent, via
u = rho^(-alpha/2) v, to -v'' + c_eff rho^-2 v with
c_eff = (alpha / 2)(alpha / 2 - 1). Weyl's classical criterion makes rho = 0
limit point exactly when c_eff >= 3/4, that is alpha >= 3.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import Inconclusive
from .models import ClassificationReport, ConstantWindows, Verdict

logger = logging.getLogger(__name__)

LIMIT_POINT_THRESHOLD = 0.75

CUT_LEVELS = 40
TAIL_POINTS = 10
CAUCHY_TOL = 1e-6
GROWTH_FACTOR = 10.0
CONVERGENT_RATIO = 0.99
DIVERGENT_RATIO = 0.999
BLOWUP = 1e150
ODE_RTOL = 1e-10
ODE_ATOL = 1e-14
SIGMA_GRID_POINTS = 101


def effective_coefficient(alpha: float) -> float:
    """Inverse-square coefficient (alpha/2)(alpha/2 - 1) after the Liouville map."""
    return (alpha / 2.0) * (alpha / 2.0 - 1.0)


def indicial_exponents(alpha: float) -> tuple[tuple[float, float], tuple[bool, bool]]:
    """Roots {0, 1 - alpha} of s(s - 1) + alpha s = 0 and their L^2(rho^alpha) flags.

    rho^s is square integrable near 0 against rho^alpha iff 2s + alpha > -1.
    """
    exponents = (0.0, 1.0 - alpha)
    flags = (
        bool(2.0 * exponents[0] + alpha > -1.0),
        bool(2.0 * exponents[1] + alpha > -1.0),
    )
    return exponents, flags


def classify(alpha: float) -> ClassificationReport:
    """Verdict at rho = 0 for the weight rho^alpha (alpha = k for the cusp model)."""
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    c_eff = effective_coefficient(alpha)
    exponents, flags = indicial_exponents(alpha)
    if c_eff >= LIMIT_POINT_THRESHOLD:
        verdict = Verdict.LIMIT_POINT
    else:
        verdict = Verdict.LIMIT_CIRCLE
    if verdict == Verdict.LIMIT_CIRCLE:
        logger.info("alpha=%g is limit circle; the Friedrichs extension is used", alpha)
    return ClassificationReport(
        alpha=alpha, c_eff=c_eff, verdict=verdict, indicial=exponents, l2_flags=flags
    )


# =============================================================================
# Constant windows
# =============================================================================


def sigma_window(k: float) -> tuple[float, float]:
    """(-(k - 2) / 4, (k - 1) / 2)."""
    return (-(k - 2.0) / 4.0, (k - 1.0) / 2.0)


def c_window(k: float, sigma: float, beta: float) -> tuple[float, float]:
    """(2(sigma + beta)(2(sigma + beta) + k - 1), (2 sigma + k - 1)^2 / 2)."""
    s = sigma + beta
    return (2.0 * s * (2.0 * s + k - 1.0), (2.0 * sigma + k - 1.0) ** 2 / 2.0)


def gamma0(k: float, sigma: float) -> float | None:
    """Smallest positive root of 2A g^2 - 4B g + C = 0, or None.

    A = sigma - (k - 1)/2, B = sigma + (k - 1)/4, C = sigma + (k - 1)/2.
    """
    a = sigma - (k - 1.0) / 2.0
    b = sigma + (k - 1.0) / 4.0
    c = sigma + (k - 1.0) / 2.0
    coefficients = np.array([2.0 * a, -4.0 * b, c])
    if np.all(coefficients == 0):
        return None
    roots = np.roots(np.trim_zeros(coefficients, "f"))
    positive = [float(r.real) for r in roots if abs(r.imag) <= 1e-12 and r.real > 0]
    return min(positive) if positive else None


def windows(k: float, sigma: float, beta: float = 0.0) -> ConstantWindows:
    """Both windows and gamma0 for (k, sigma, beta); empty windows are valid."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    s_lo, s_hi = sigma_window(k)
    c_lo, c_hi = c_window(k, sigma, beta)
    return ConstantWindows(
        k=k,
        sigma=sigma,
        beta=beta,
        sigma_window=(s_lo, s_hi),
        c_window=(c_lo, c_hi),
        c_window_nonempty=c_lo < c_hi,
        sigma_in_window=s_lo < sigma < s_hi,
        gamma0=gamma0(k, sigma),
    )


def gamma0_for_k(k: float, points: int = SIGMA_GRID_POINTS) -> float | None:
    """Infimum of gamma0 over an evenly spaced grid of the closed sigma-window."""
    if points < 2:
        raise ValueError("points must be >= 2")
    lo, hi = sigma_window(k)
    candidates = (gamma0(k, s) for s in np.linspace(lo, hi, points))
    values = [g for g in candidates if g is not None]
    return min(values) if values else None


def c_window_nonempty_region(k: float) -> tuple[float, float]:
    """Sigma range (-(k - 1)/2, (k - 1)/2) where the beta = 0 C-window is nonempty."""
    return (-(k - 1.0) / 2.0, (k - 1.0) / 2.0)


# =============================================================================
# Numeric endpoint test
# =============================================================================


@dataclass(frozen=True)
class _Tail:
    norms: np.ndarray
    blew_up: bool


def _tail_behaviour(tail: _Tail) -> str | None:
    """'converge', 'diverge' or None for one solution's cumulative norms."""
    if tail.blew_up:
        return "diverge"
    norms = tail.norms
    if len(norms) <= TAIL_POINTS + 1:
        return None
    last, earlier = norms[-1], norms[-1 - TAIL_POINTS]
    if last == 0:
        return "converge"
    if (last - earlier) / last <= CAUCHY_TOL:
        return "converge"
    if earlier > 0 and last / earlier > GROWTH_FACTOR:
        return "diverge"
    increments = np.diff(norms)[-TAIL_POINTS - 1 :]
    if np.any(increments[:-1] <= 0):
        return None
    ratio = float(np.mean(increments[1:] / increments[:-1]))
    if ratio <= CONVERGENT_RATIO:
        return "converge"
    if ratio >= DIVERGENT_RATIO:
        return "diverge"
    return None


def _integrate_tails(c_eff: float, k: float, m: int, delta: float) -> list[_Tail]:
    start = delta / 2.0
    cuts = delta * 2.0 ** -np.arange(2, CUT_LEVELS + 1, dtype=float)
    m2 = float(m * m)

    def rhs(rho: float, y: np.ndarray) -> np.ndarray:
        q = c_eff / rho**2 + (m2 * rho ** (-2.0 * k) if m2 else 0.0)
        out = np.empty(10)
        for base in (0, 5):
            x, dx, yy, dy = y[base : base + 4]
            out[base : base + 5] = (dx, q * x + yy, dy, q * yy - x, -(x * x + yy * yy))
        return out

    def blowup(rho: float, y: np.ndarray) -> float:
        return BLOWUP - float(np.max(np.abs(y)))

    blowup.terminal = True  # type: ignore[attr-defined]

    # (v, v') = (1, 0) and (0, 1) at the start
    y0 = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
    sol = solve_ivp(
        rhs,
        (start, float(cuts[-1])),
        y0,
        method="DOP853",
        t_eval=cuts,
        events=blowup,
        rtol=ODE_RTOL,
        atol=ODE_ATOL,
    )
    if sol.status == -1:
        raise Inconclusive(
            f"Endpoint integration failed: {sol.message}",
            context={"stage": "weyl_circle_numeric", "c_eff": c_eff, "m": m},
        )
    blew_up = sol.status == 1
    return [_Tail(sol.y[4], blew_up), _Tail(sol.y[9], blew_up)]


def weyl_circle_numeric(alpha: float, k: float, m: int, delta: float) -> Verdict:
    """Integrate two solutions of (tau - i) u = 0 from delta/2 toward 0.

    The weighted norms on (eps_j, delta/2), eps_j = delta 2^-j, decide: both
    settle -> LimitCircle, one grows without bound -> LimitPoint.

    Raises:
        Inconclusive: If neither criterion is met
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if m != 0 and k < 1:
        raise ValueError("k must be >= 1 when m != 0")

    c_eff = effective_coefficient(alpha)
    behaviours = [_tail_behaviour(t) for t in _integrate_tails(c_eff, k, m, delta)]
    logger.debug("Endpoint test alpha=%g, m=%d: %s", alpha, m, behaviours)
    if "diverge" in behaviours:
        return Verdict.LIMIT_POINT
    if all(b == "converge" for b in behaviours):
        return Verdict.LIMIT_CIRCLE
    raise Inconclusive(
        "Weighted norms neither settle nor grow decisively",
        suggestion="Treat the analytic classification as authoritative",
        context={"stage": "weyl_circle_numeric", "alpha": alpha, "m": m},
    )
