"""Integer points under a diagonal quadratic form sum_j c_j z_j^2 <= lam."""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from enum import Enum


class Domain(str, Enum):
    """Range of each integer coordinate."""

    ALL = "all"  # z in Z
    NONNEGATIVE = "nonnegative"  # z >= 0
    POSITIVE = "positive"  # z >= 1


def axis_radius(c: float, lam: float) -> int:
    """Largest r >= 0 with c r^2 <= lam (-1 when lam < 0)."""
    if lam < 0:
        return -1
    if c <= 0:
        raise ValueError("Quadratic form coefficients must be positive")
    r = math.isqrt(int(lam / c)) if lam / c < 2**62 else int(math.sqrt(lam / c))
    while c * (r + 1) ** 2 <= lam:
        r += 1
    while r > 0 and c * r * r > lam:
        r -= 1
    return r


def axis_count(c: float, lam: float, domain: Domain = Domain.ALL) -> int:
    """Number of integers z in ``domain`` with c z^2 <= lam."""
    r = axis_radius(c, lam)
    if r < 0:
        return 0
    if domain == Domain.ALL:
        return 2 * r + 1
    if domain == Domain.NONNEGATIVE:
        return r + 1
    return r


def _axis_values(r: int, domain: Domain) -> range:
    if domain == Domain.POSITIVE:
        return range(1, r + 1)
    return range(0, r + 1)


def _multiplicity(z: int, domain: Domain) -> int:
    return 2 if domain == Domain.ALL and z != 0 else 1


def count_points(
    coefficients: Sequence[float], lam: float, domain: Domain = Domain.ALL
) -> int:
    """Exact number of z with sum_j c_j z_j^2 <= lam.

    Coordinates are visited largest coefficient first; the last coordinate is
    counted in closed form, so the work is the product of the outer radii.
    """
    if lam < 0:
        return 0
    if not coefficients:
        return 1
    coeffs = sorted(coefficients, reverse=True)
    return _count(coeffs, 0, float(lam), domain)


def _count(coeffs: list[float], j: int, remaining: float, domain: Domain) -> int:
    c = coeffs[j]
    if j == len(coeffs) - 1:
        return axis_count(c, remaining, domain)
    total = 0
    for z in _axis_values(axis_radius(c, remaining), domain):
        rest = remaining - c * z * z
        if rest < 0:
            break
        total += _multiplicity(z, domain) * _count(coeffs, j + 1, rest, domain)
    return total


def enumerate_values(
    coefficients: Sequence[float], lam: float, domain: Domain = Domain.ALL
) -> list[float]:
    """All values sum_j c_j z_j^2 <= lam, ascending, with multiplicity."""
    if lam < 0:
        return []
    values = list(_values(list(coefficients), 0, 0.0, float(lam), domain))
    values.sort()
    return values


def _values(
    coeffs: list[float], j: int, partial: float, lam: float, domain: Domain
) -> Iterator[float]:
    if j == len(coeffs):
        yield partial
        return
    c = coeffs[j]
    for z in _axis_values(axis_radius(c, lam - partial), domain):
        value = partial + c * z * z
        if value > lam:
            break
        for _ in range(_multiplicity(z, domain)):
            yield from _values(coeffs, j + 1, value, lam, domain)
