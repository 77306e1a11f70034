"""Cusp-edge spectra - spectral toolkit for crossing cusp-edge model Laplacians."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    CuspEdgeError,
    GridMismatch,
    Inconclusive,
    IndexIncomplete,
    InsufficientData,
    InsufficientSamples,
    MeshTooCoarse,
    NumericalFailure,
    OutsideRegime,
    ScheduleInverted,
)
from .geometry import (  # noqa: E402
    AdmissibilityReport,
    check_admissibility,
    volume,
    weyl_constant,
)

# Solver imports
from .hardy import (  # noqa: E402
    HardyProblem,
    best_constant_numeric,
    boundary_variant_check,
    multi_hardy_check,
    theoretical_constant,
)
from .models import (  # noqa: E402
    BoundaryCondition,
    ClassificationReport,
    ConstantWindows,
    CrossSection,
    CuspEdgeModel,
    HardyResult,
    MeshConfig,
    PerturbationSample,
    RunConfig,
    Verdict,
    WeylFit,
)
from .saclass import (  # noqa: E402
    classify,
    indicial_exponents,
    weyl_circle_numeric,
    windows,
)
from .spectrum import (  # noqa: E402
    CountingCurve,
    RadialSegment,
    SpectrumIndex,
    SplitCurves,
    assemble_count,
    averaged_curve,
    build_index,
    counting_curve,
    cross_section_eigs,
    split_counting_curves,
)
from .sturm import (  # noqa: E402
    EigResult,
    GradedMesh,
    RadialProblem,
    mode_cutoff,
    solve_eigs,
)
from .weyl import (  # noqa: E402
    BracketingPartition,
    block_lattice_count,
    cusp_error_bound,
    fit_weyl,
    per_coordinate_bounds,
    sandwich_check,
    schedule,
    split_sandwich,
)

__all__ = [
    # Models
    "CuspEdgeModel",
    "CrossSection",
    "BoundaryCondition",
    "PerturbationSample",
    "MeshConfig",
    "RunConfig",
    "ClassificationReport",
    "ConstantWindows",
    "HardyResult",
    "Verdict",
    "WeylFit",
    # Geometry
    "volume",
    "weyl_constant",
    "check_admissibility",
    "AdmissibilityReport",
    # Radial solver
    "RadialProblem",
    "GradedMesh",
    "EigResult",
    "mode_cutoff",
    "solve_eigs",
    # Spectrum
    "SpectrumIndex",
    "CountingCurve",
    "cross_section_eigs",
    "build_index",
    "assemble_count",
    "counting_curve",
    "averaged_curve",
    "RadialSegment",
    "SplitCurves",
    "split_counting_curves",
    # Weyl law and bracketing
    "BracketingPartition",
    "schedule",
    "block_lattice_count",
    "per_coordinate_bounds",
    "cusp_error_bound",
    "sandwich_check",
    "split_sandwich",
    "fit_weyl",
    # Hardy
    "HardyProblem",
    "theoretical_constant",
    "best_constant_numeric",
    "boundary_variant_check",
    "multi_hardy_check",
    # Classification
    "classify",
    "indicial_exponents",
    "windows",
    "weyl_circle_numeric",
    # Exceptions
    "CuspEdgeError",
    "ConfigError",
    "InsufficientSamples",
    "InsufficientData",
    "GridMismatch",
    "OutsideRegime",
    "ScheduleInverted",
    "NumericalFailure",
    "MeshTooCoarse",
    "IndexIncomplete",
    "Inconclusive",
]
