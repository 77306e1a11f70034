"""Tests for volumes, Weyl constants and decay admissibility."""

import logging
import math

import pytest

from cuspedge.errors import InsufficientSamples
from cuspedge.geometry import (
    check_admissibility,
    unit_ball_volume,
    volume,
    weyl_constant,
    weyl_constant_for_volume,
)
from cuspedge.models import CrossSection, CuspEdgeModel, PerturbationSample


def _samples(name: str, eta: float, fn) -> PerturbationSample:
    radii = [0.5 * 2.0**-j for j in range(10)]
    return PerturbationSample(
        eta=eta,
        samples=[{"rho": [r], "values": {name: fn(r)}} for r in radii],
    )


class TestVolume:
    """Tests for the model volume."""

    def test_unit_cusp(self):
        """k = 3, delta = 1: 2 pi / 4."""
        model = CuspEdgeModel(ell=1, k=(3,), delta=1.0)
        assert volume(model) == pytest.approx(math.pi / 2)

    def test_half_cusp(self):
        """k = 3, delta = 1/2: pi / 32."""
        model = CuspEdgeModel(ell=1, k=(3,), delta=0.5)
        assert volume(model) == pytest.approx(math.pi / 32)

    def test_two_crossing_cusps(self):
        """Product of two unit cusps: (2 pi)^2 / 16."""
        model = CuspEdgeModel(ell=2, k=(3, 3), delta=1.0)
        assert volume(model) == pytest.approx((2 * math.pi) ** 2 / 16)

    def test_box_cross_section(self):
        """A box multiplies the volume by the product of its sides."""
        base = CuspEdgeModel(ell=1, k=(3,), delta=1.0)
        boxed = CuspEdgeModel(
            ell=1,
            k=(3,),
            delta=1.0,
            cross_section=CrossSection(kind="box", lengths=(2.0, 3.0)),
        )
        assert volume(boxed) == pytest.approx(6.0 * volume(base))

    @pytest.mark.parametrize("k", [(3,), (4,), (3, 3), (3, 5)])
    @pytest.mark.parametrize("delta", [1.0, 0.3])
    def test_halving_delta(self, k, delta):
        """Halving delta divides the volume by 2^(sum of k_i + 1)."""

        def model(d: float) -> CuspEdgeModel:
            return CuspEdgeModel(ell=len(k), k=k, delta=d)

        ratio = volume(model(delta)) / volume(model(delta / 2))
        assert ratio == pytest.approx(2.0 ** sum(ki + 1 for ki in k))


class TestWeylConstant:
    """Tests for the leading Weyl coefficient."""

    def test_acceptance_model(self):
        """n = 2, Vol = pi / 32 gives 1/128."""
        model = CuspEdgeModel(ell=1, k=(3,), delta=0.5)
        assert weyl_constant(model) == pytest.approx(1 / 128)

    def test_flat_torus_sanity(self):
        assert weyl_constant_for_volume(2, 4 * math.pi**2) == pytest.approx(math.pi)

    def test_four_dimensions(self):
        """omega_4 = pi^2 / 2."""
        assert unit_ball_volume(4) == pytest.approx(math.pi**2 / 2)
        assert weyl_constant_for_volume(4, 1.0) == pytest.approx(
            1 / (32 * math.pi**2)
        )

    def test_linear_in_box_volume(self):
        """Doubling every side of a d-box multiplies the constant by 2^d."""

        def model(scale: float) -> CuspEdgeModel:
            return CuspEdgeModel(
                ell=1,
                k=(3,),
                delta=0.5,
                cross_section=CrossSection(
                    kind="box", lengths=(scale * 1.0, scale * 1.5)
                ),
            )

        assert weyl_constant(model(2.0)) == pytest.approx(4 * weyl_constant(model(1.0)))

    def test_low_order_warning(self, caplog):
        """k < 3 logs a self-adjointness warning."""
        with caplog.at_level(logging.WARNING, logger="cuspedge.geometry"):
            weyl_constant(CuspEdgeModel(ell=1, k=(2,), delta=0.5))
        assert "self-adjoint" in caplog.text


class TestAdmissibility:
    """Tests for decay admissibility of perturbation samples."""

    def test_exact_power_law_passes(self):
        report = check_admissibility(_samples("a_11", 1.0, lambda r: r))
        fit = report.coefficients["a_11"]
        assert fit.slope == pytest.approx(1.0)
        assert fit.passed
        assert report.passed

    def test_zero_coefficient_passes_via_floor(self):
        report = check_admissibility(_samples("a_1", 2.0, lambda r: 0.0))
        fit = report.coefficients["a_1"]
        assert fit.passed
        assert fit.via_floor
        assert fit.slope is None

    def test_slow_decay_fails(self):
        report = check_admissibility(_samples("c_11", 1.0, lambda r: r**0.5))
        fit = report.coefficients["c_11"]
        assert fit.slope == pytest.approx(0.5)
        assert not fit.passed
        assert not report.passed

    def test_tolerance_admits_near_miss(self):
        report = check_admissibility(
            _samples("a_11", 1.0, lambda r: r**0.95), tol_slope=0.1
        )
        assert report.passed

    def test_too_few_samples(self):
        samples = PerturbationSample(
            eta=1.0,
            samples=[
                {"rho": [0.1 * (j + 1)], "values": {"a_1": 0.1}} for j in range(5)
            ],
        )
        with pytest.raises(InsufficientSamples):
            check_admissibility(samples)

    def test_radii_span_too_small(self):
        samples = PerturbationSample(
            eta=1.0,
            samples=[
                {"rho": [0.1 + 0.01 * j], "values": {"a_1": 0.1}} for j in range(10)
            ],
        )
        with pytest.raises(InsufficientSamples) as exc_info:
            check_admissibility(samples)
        assert exc_info.value.exit_code == 2

    def test_report_dict(self):
        report = check_admissibility(_samples("a_11", 1.0, lambda r: r))
        data = report.to_dict()
        assert data["passed"] is True
        assert set(data["coefficients"]) == {"a_11"}

    @pytest.mark.parametrize("scale", [1e-3, 7.5, 1e3])
    def test_constant_factor_does_not_matter(self, scale):
        """Multiplying every value by a constant keeps slopes and verdicts."""
        laws = {"a_11": lambda r: r, "a_1": lambda r: r**0.5, "c_11": lambda r: r**1.5}
        for name, law in laws.items():
            base = check_admissibility(_samples(name, 1.0, law))
            scaled = check_admissibility(
                _samples(name, 1.0, lambda r, law=law: scale * law(r))
            )
            expected, fit = base.coefficients[name], scaled.coefficients[name]
            assert fit.slope == pytest.approx(expected.slope)
            assert fit.passed == expected.passed
            assert scaled.passed == base.passed
