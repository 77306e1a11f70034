"""Pydantic models for the cusp-edge geometry, run configuration and reports."""

import re
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class BoundaryCondition(str, Enum):
    """Boundary condition at the outer end rho = delta (or on a box)."""

    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def _missing_(cls, value: object) -> "BoundaryCondition | None":
        if isinstance(value, str):
            lowered = value.lower()
            for member in cls:
                if member.value == lowered:
                    return member
        return None


class CrossSectionKind(str, Enum):
    """Supported cross-section factors B."""

    POINT = "point"
    FLAT_TORUS = "flat-torus"
    BOX = "box"


class CrossSection(BaseModel):
    """The compact factor B of Z = (S^1)^ell x B."""

    model_config = ConfigDict(frozen=True)

    kind: CrossSectionKind = Field(
        default=CrossSectionKind.POINT, description="Cross-section type"
    )
    dim: int = Field(default=0, ge=0, description="Dimension of the cross-section")
    lengths: tuple[float, ...] = Field(
        default=(), description="Torus circumferences or box side lengths"
    )
    bc: BoundaryCondition = Field(
        default=BoundaryCondition.DIRICHLET,
        description="Boundary condition on the box faces (box only)",
    )

    @model_validator(mode="before")
    @classmethod
    def infer_dim(cls, data: Any) -> Any:
        """Let dim default to the number of lengths."""
        if isinstance(data, dict) and "dim" not in data and "lengths" in data:
            data = dict(data)
            data["dim"] = len(data["lengths"] or ())
        return data

    @field_validator("bc", mode="before")
    @classmethod
    def normalize_bc(cls, v: Any) -> Any:
        """Accept 'Dirichlet'/'Neumann' in any case."""
        return v.lower() if isinstance(v, str) else v

    @field_validator("lengths")
    @classmethod
    def validate_lengths(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        """Every length must be positive."""
        if any(length <= 0 for length in v):
            raise ValueError("Cross-section lengths must be positive")
        return v

    @model_validator(mode="after")
    def validate_shape(self) -> "CrossSection":
        """Point has dimension zero; lengths match dim."""
        if self.kind == CrossSectionKind.POINT and self.dim != 0:
            raise ValueError("A point cross-section must have dim = 0")
        if len(self.lengths) != self.dim:
            raise ValueError(
                f"Cross-section has dim {self.dim} but {len(self.lengths)} lengths"
            )
        return self


class CuspEdgeModel(BaseModel):
    """Model space (0, delta)^ell x (S^1)^ell x B with cusp multi-order k."""

    model_config = ConfigDict(frozen=True)

    ell: int = Field(..., ge=1, description="Number of cusp directions")
    k: tuple[float, ...] = Field(..., description="Cusp multi-order, one per direction")
    delta: float = Field(..., gt=0, description="Outer radius of each cusp coordinate")
    cross_section: CrossSection = Field(
        default_factory=CrossSection, description="Cross-section factor B"
    )

    @field_validator("k")
    @classmethod
    def validate_orders(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        """Cusp orders are at least one."""
        if any(k_i < 1 for k_i in v):
            raise ValueError("Every cusp order k_i must be >= 1")
        return v

    @model_validator(mode="after")
    def validate_k_length(self) -> "CuspEdgeModel":
        """One order per cusp direction."""
        if len(self.k) != self.ell:
            raise ValueError(
                f"k has {len(self.k)} entries but ell = {self.ell}"
            )
        return self

    @property
    def n(self) -> int:
        """Total dimension 2*ell + dim(B)."""
        return 2 * self.ell + self.cross_section.dim

    @property
    def beta(self) -> float:
        """The exponent ell + |k| governing the cusp-block error."""
        return self.ell + sum(self.k)

    def with_delta(self, delta: float) -> "CuspEdgeModel":
        """Copy of this model with a different outer radius."""
        return self.model_copy(update={"delta": delta})


# =============================================================================
# Perturbation samples (decay admissibility)
# =============================================================================

COEFFICIENT_FAMILIES = ("a", "b", "bt", "c")
_COEFFICIENT_RE = re.compile(r"^(a|b|bt|c)_(\d+)$")


def parse_coefficient_name(name: str, ell: int) -> tuple[str, tuple[int, ...]]:
    """Split a coefficient name like ``a_12`` into family and indices.

    ``a_i`` takes one index; ``a_ij``, ``b_ij``, ``bt_ij`` and ``c_ij`` take two.

    Raises:
        ValueError: If the name or its indices are not valid for ``ell``
    """
    match = _COEFFICIENT_RE.match(name)
    if not match:
        raise ValueError(f"Unknown coefficient name '{name}'")
    family, digits = match.group(1), match.group(2)
    indices = tuple(int(d) for d in digits)
    allowed = {1, 2} if family == "a" else {2}
    if len(indices) not in allowed:
        raise ValueError(f"Coefficient '{name}' has the wrong number of indices")
    if any(i < 1 or i > ell for i in indices):
        raise ValueError(f"Coefficient '{name}' has an index outside 1..{ell}")
    return family, indices


class PerturbationRecord(BaseModel):
    """Metric-perturbation coefficients sampled at one point rho."""

    rho: tuple[float, ...] = Field(..., min_length=1)
    values: dict[str, float] = Field(default_factory=dict)

    @field_validator("rho")
    @classmethod
    def validate_rho(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        """Sample points lie in the open positive orthant."""
        if any(r <= 0 for r in v):
            raise ValueError("Every rho entry must be positive")
        return v


class PerturbationSample(BaseModel):
    """Samples of the perturbation coefficients together with the decay order."""

    eta: float = Field(..., gt=0, description="Required decay order")
    delta: float | None = Field(
        default=None, gt=0, description="Outer radius bounding every rho entry"
    )
    samples: list[PerturbationRecord] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_samples(self) -> "PerturbationSample":
        """Consistent dimension, rho inside (0, delta], valid coefficient names."""
        if not self.samples:
            return self
        ell = len(self.samples[0].rho)
        for record in self.samples:
            if len(record.rho) != ell:
                raise ValueError("All samples must have the same number of rho entries")
            if self.delta is not None and any(r > self.delta for r in record.rho):
                raise ValueError(f"Sample rho {record.rho} leaves (0, {self.delta}]")
            for name in record.values:
                parse_coefficient_name(name, ell)
        return self

    @property
    def ell(self) -> int:
        """Number of cusp directions in the samples."""
        return len(self.samples[0].rho) if self.samples else 0


# =============================================================================
# Run configuration
# =============================================================================


class BCChoice(str, Enum):
    """Which outer boundary conditions a run computes."""

    BOTH = "both"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def _missing_(cls, value: object) -> "BCChoice | None":
        if isinstance(value, str):
            lowered = value.lower()
            for member in cls:
                if member.value == lowered:
                    return member
        return None

    def conditions(self) -> list[BoundaryCondition]:
        """Boundary conditions covered by this choice, Dirichlet first."""
        if self == BCChoice.BOTH:
            return [BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN]
        return [BoundaryCondition(self.value)]


class MeshConfig(BaseModel):
    """Graded radial mesh settings."""

    cells: int = Field(default=400, ge=16, description="Number of radial cells")
    grading: float = Field(default=3.0, ge=1.0, description="Grading exponent g")


class HardyConfig(BaseModel):
    """Settings for the Hardy best-constant sweep."""

    alpha: list[float] = Field(default_factory=lambda: [3.0])
    beta: list[float] = Field(default_factory=lambda: [1.0])
    rho0: float = Field(default=1.0, gt=0)
    eps: float = Field(default=0.0, ge=0)
    cells: int = Field(default=4000, ge=16, description="Cells on (0, rho0)")
    grading: float = Field(default=2.0, ge=1.0)


class RunConfig(BaseModel):
    """Complete configuration of a cuspedge run."""

    model: CuspEdgeModel
    mesh: MeshConfig = Field(default_factory=MeshConfig)
    lambda_max: float = Field(..., gt=0, description="Largest spectral value")
    lambda_min: float = Field(default=0.0, ge=0, description="Smallest grid value")
    lambda_grid: int | list[float] = Field(
        default=64, description="Grid size or explicit ascending grid"
    )
    bc: BCChoice = Field(default=BCChoice.BOTH)
    rtol: float = Field(default=1e-3, gt=0, description="Refinement tolerance")
    strict: bool = Field(
        default=True, description="Abort when a mesh cannot be certified"
    )
    output_dir: str | None = Field(default=None)
    hardy: HardyConfig | None = Field(default=None)

    @field_validator("bc", mode="before")
    @classmethod
    def normalize_bc(cls, v: Any) -> Any:
        """Accept 'Both'/'Dirichlet'/'Neumann' in any case."""
        return v.lower() if isinstance(v, str) else v

    @field_validator("lambda_grid")
    @classmethod
    def validate_grid(cls, v: int | list[float]) -> int | list[float]:
        """Counts are positive; explicit grids are ascending and nonnegative."""
        if isinstance(v, int):
            if v < 1:
                raise ValueError("lambda_grid count must be at least 1")
            return v
        if not v:
            raise ValueError("lambda_grid list cannot be empty")
        if any(x < 0 for x in v):
            raise ValueError("lambda_grid values must be nonnegative")
        if any(b < a for a, b in zip(v, v[1:])):
            raise ValueError("lambda_grid must be ascending")
        return v

    @model_validator(mode="after")
    def validate_range(self) -> "RunConfig":
        """The grid stays below lambda_max."""
        grid = self.lambda_grid
        if isinstance(grid, list) and grid[-1] > self.lambda_max:
            raise ValueError("lambda_grid exceeds lambda_max")
        if self.lambda_min > self.lambda_max:
            raise ValueError("lambda_min exceeds lambda_max")
        return self

    def grid(self) -> list[float]:
        """The lambda grid as an explicit ascending list."""
        if isinstance(self.lambda_grid, list):
            return list(self.lambda_grid)
        count = self.lambda_grid
        if count == 1:
            return [self.lambda_max]
        step = (self.lambda_max - self.lambda_min) / (count - 1)
        grid = [self.lambda_min + i * step for i in range(count - 1)]
        grid.append(self.lambda_max)
        return grid


# =============================================================================
# Report models (emitted as JSON by the CLI)
# =============================================================================


class Verdict(str, Enum):
    """Weyl endpoint classification at rho = 0."""

    LIMIT_POINT = "LimitPoint"
    LIMIT_CIRCLE = "LimitCircle"


class ClassificationReport(BaseModel):
    """Limit-point/limit-circle classification of the radial model operator."""

    alpha: float
    c_eff: float = Field(..., description="Inverse-square coefficient after Liouville")
    verdict: Verdict
    indicial: tuple[float, float]
    l2_flags: tuple[bool, bool]


class ConstantWindows(BaseModel):
    """The sigma-window, the C_j-window and gamma0 for given (k, sigma, beta)."""

    k: float
    sigma: float
    beta: float
    sigma_window: tuple[float, float]
    c_window: tuple[float, float]
    c_window_nonempty: bool
    sigma_in_window: bool
    gamma0: float | None


class WeylFit(BaseModel):
    """Least-squares Weyl slope against the theoretical coefficient."""

    slope: float
    theoretical: float
    rel_error: float
    n: int
    lambda_range: tuple[float, float]


class HardyResult(BaseModel):
    """Discrete best Hardy constant against the continuum bound."""

    alpha: float
    beta: float
    numeric_best: float = Field(..., description="sqrt of the smallest Rayleigh value")
    theoretical_bound: float = Field(..., description="(2 beta + alpha - 1) / 2")
    ratio: float
    mesh_cells: int
    converged: bool = True
