"""Command-line interface for cusp-edge spectral computations."""

import functools
import itertools
import json
import logging
from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Any, TypeVar

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from . import __version__
from .config import config_hash, load_config, load_curve, load_samples
from .errors import ConfigError, CuspEdgeError, NumericalFailure
from .formatters import ResultTable, get_formatter
from .geometry import (
    check_admissibility,
    volume,
    warn_if_not_self_adjoint,
    weyl_constant,
)
from .hardy import HardyProblem, Support, best_constant_numeric
from .manifest import RunManifest, write_result
from .models import BoundaryCondition, HardyConfig, RunConfig
from .saclass import classify, gamma0_for_k, weyl_circle_numeric, windows
from .spectrum import (
    CountingCurve,
    SpectrumIndex,
    assemble_count,
    averaged_curve,
    brute_force_count,
    build_index,
    curve_from_index,
    resolve_threads,
)
from .weyl import (
    block_lattice_count,
    cusp_block_counts,
    fit_weyl,
    per_coordinate_product,
    schedule,
    split_sandwich,
)

console = Console(stderr=True)

F = TypeVar("F", bound=Callable[..., Any])

ORACLE_TUPLE_LIMIT = 10_000


def handle_error(e: CuspEdgeError) -> None:
    """Display a cuspedge error and exit with its exit code.

    Args:
        e: The CuspEdgeError to display

    Raises:
        SystemExit: Always, with ``e.exit_code``
    """
    stage = escape(f" [{e.stage}]") if e.stage else ""
    console.print(f"[red]Error{stage}:[/red] {escape(e.message)}", highlight=False)
    if e.suggestion:
        console.print(
            f"[yellow]Suggestion:[/yellow] {escape(e.suggestion)}", highlight=False
        )
    raise SystemExit(e.exit_code)


@contextmanager
def reading_inputs() -> Iterator[None]:
    """Report argument checks that fail while inputs are assembled as input errors."""
    try:
        yield
    except ValueError as e:
        raise ConfigError(str(e), context={"stage": "input"}) from e


def reports_errors(fn: F) -> F:
    """Turn library exceptions into messages and exit codes.

    A bare ValueError that escapes a computation was not caused by the inputs
    (those pass through ``reading_inputs``), so it is reported as a failure.
    """
    command = fn.__name__.removesuffix("_command")

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except CuspEdgeError as e:
            handle_error(e)
        except ValueError as e:
            handle_error(
                NumericalFailure(
                    f"Unexpected failure: {e}",
                    suggestion="Rerun with --verbose and report the configuration",
                    context={"stage": command},
                )
            )

    return wrapper  # type: ignore[return-value]


def threads_option(fn: F) -> F:
    return click.option(
        "--threads",
        "-j",
        default=1,
        show_default=True,
        type=click.IntRange(min=0),
        help="Worker threads (0 = one per CPU)",
    )(fn)


def out_option(fn: F) -> F:
    return click.option(
        "--out",
        "-o",
        "out_dir",
        type=click.Path(file_okay=False),
        help="Directory for result files (default: stdout)",
    )(fn)


def emit(
    data: ResultTable | dict[str, Any],
    fmt: str,
    stem: str,
    out_dir: str | None,
    manifest: RunManifest,
) -> None:
    """Write a result to ``out_dir`` with its manifest, or to stdout."""
    formatter = get_formatter(fmt)
    text = formatter.format(data)
    if out_dir is None:
        click.echo(text, nl=False)
        return
    target = write_result(out_dir, f"{stem}.{formatter.extension}", text, manifest)
    console.print(f"[green]Wrote[/green] {target}", highlight=False)


@click.group()
@click.version_option(version=__version__, prog_name="cuspedge")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging on stderr")
def cli(verbose: bool) -> None:
    """Cusp-edge spectra - spectral computations on crossing cusp-edge models.

    Use 'cuspedge COMMAND --help' for more information on a command.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


# =============================================================================
# Spectra and Weyl law
# =============================================================================


def _curves(
    config: RunConfig,
    threads: int,
    manifest: RunManifest,
    verify: bool = False,
) -> dict[BoundaryCondition, CountingCurve]:
    grid = config.grid()
    warn_if_not_self_adjoint(config.model, "spectrum")
    curves = {}
    for bc in config.bc.conditions():
        with manifest.stage(f"index_{bc.value}"):
            idx = build_index(
                config.model,
                config.mesh,
                bc,
                grid[-1],
                rtol=config.rtol,
                strict=config.strict,
                threads=threads,
            )
        with manifest.stage(f"count_{bc.value}"):
            curves[bc] = curve_from_index(idx, grid)
        manifest.certify(bc.value, idx.certified)
        if verify:
            manifest.certify(f"oracle_{bc.value}", _verify_index(idx, grid))
    return curves


def _verify_index(idx: SpectrumIndex, grid: list[float]) -> bool:
    if idx.tuple_count > ORACLE_TUPLE_LIMIT:
        logging.getLogger(__name__).warning(
            "Skipping oracle check: %d tuples exceed %d",
            idx.tuple_count,
            ORACLE_TUPLE_LIMIT,
        )
        return True
    return all(
        assemble_count(idx, lam) == brute_force_count(idx, lam) for lam in grid
    )


@cli.command("spectrum")
@click.option("--config", "-c", "config_path", required=True, type=click.Path())
@out_option
@threads_option
@click.option("--verify", is_flag=True, help="Check counts against full enumeration")
@reports_errors
def spectrum_command(
    config_path: str, out_dir: str | None, threads: int, verify: bool
) -> None:
    """Counting function N(lambda) of the model Laplacian as CSV."""
    config = load_config(config_path)
    manifest = RunManifest(command="spectrum", config_hash=config_hash(config))
    curves = _curves(config, threads, manifest, verify=verify)

    bcs = list(curves)
    columns = ["lambda"] + [f"count_{bc.value}" for bc in bcs]
    average = None
    if len(bcs) == 2:
        columns.append("count_avg")
        average = averaged_curve(curves[bcs[0]], curves[bcs[1]])

    table = ResultTable(columns)
    for i, lam in enumerate(config.grid()):
        row: list[Any] = [float(lam)]
        row.extend(int(curves[bc].counts[i]) for bc in bcs)
        if average is not None:
            row.append(float(average.counts[i]))
        table.add_row(*row)

    mismatched = [
        name
        for name, ok in manifest.certification.items()
        if name.startswith("oracle_") and not ok
    ]
    if mismatched:
        raise NumericalFailure(
            "Assembled counts disagree with full enumeration",
            suggestion="Rerun with --verbose to inspect the pruned search",
            context={"stage": "spectrum --verify", "checks": ", ".join(mismatched)},
        )
    emit(table, "csv", "spectrum", out_dir or config.output_dir, manifest)


@cli.command("weyl-fit")
@click.option("--config", "-c", "config_path", required=True, type=click.Path())
@click.option("--curve", "curve_path", type=click.Path(), help="Counting curve CSV")
@out_option
@threads_option
@reports_errors
def weyl_fit_command(
    config_path: str, curve_path: str | None, out_dir: str | None, threads: int
) -> None:
    """Fit N(lambda) against lambda^(n/2) and compare with the Weyl constant."""
    config = load_config(config_path)
    manifest = RunManifest(command="weyl-fit", config_hash=config_hash(config))
    if curve_path is not None:
        curve = load_curve(curve_path)
    else:
        values = list(_curves(config, threads, manifest).values())
        curve = averaged_curve(*values) if len(values) == 2 else values[0]
    with manifest.stage("fit"):
        fit = fit_weyl(curve, config.model)
    out_dir = out_dir or config.output_dir
    emit(fit.model_dump(mode="json"), "json", "weyl_fit", out_dir, manifest)


@cli.command("sandwich")
@click.option("--config", "-c", "config_path", required=True, type=click.Path())
@click.option(
    "--cut",
    type=click.FloatRange(min=0.0, min_open=True),
    help="Split radius of the first cusp coordinate (default delta/2)",
)
@out_option
@threads_option
@reports_errors
def sandwich_command(
    config_path: str, cut: float | None, out_dir: str | None, threads: int
) -> None:
    """Bracket N(lambda) between Dirichlet and Neumann two-block splits, as JSON."""
    config = load_config(config_path)
    if cut is not None and cut >= config.model.delta:
        raise ConfigError(
            f"--cut {cut} must be below delta = {config.model.delta}",
            context={"stage": "input"},
        )
    manifest = RunManifest(command="sandwich", config_hash=config_hash(config))
    with manifest.stage("split"):
        report = split_sandwich(
            config.model,
            config.mesh,
            config.grid(),
            cut=cut,
            rtol=config.rtol,
            strict=config.strict,
            threads=threads,
        )
    manifest.certify("sandwich", report.passed)
    emit(report.to_dict(), "json", "sandwich", out_dir or config.output_dir, manifest)


# =============================================================================
# Hardy, classification and windows
# =============================================================================


@cli.command("hardy")
@click.option("--config", "-c", "config_path", type=click.Path())
@click.option("--alpha", "-a", multiple=True, type=float, help="Weight exponent(s)")
@click.option("--beta", "-b", multiple=True, type=float, help="Hardy exponent(s)")
@click.option("--rho0", type=click.FloatRange(min=0.0, min_open=True))
@click.option("--eps", type=click.FloatRange(min=0.0), help="Cutoff margin")
@click.option("--cells", type=click.IntRange(min=16), help="Cells on (0, rho0)")
@click.option("--grading", type=click.FloatRange(min=1.0), help="Grading exponent")
@out_option
@threads_option
@reports_errors
def hardy_command(
    config_path: str | None,
    alpha: tuple[float, ...],
    beta: tuple[float, ...],
    rho0: float | None,
    eps: float | None,
    cells: int | None,
    grading: float | None,
    out_dir: str | None,
    threads: int,
) -> None:
    """Best discrete Hardy constants for every (alpha, beta) pair, as CSV."""
    settings = HardyConfig()
    manifest = RunManifest(command="hardy")
    if config_path is not None:
        config = load_config(config_path)
        manifest.config_hash = config_hash(config)
        settings = config.hardy or settings
        out_dir = out_dir or config.output_dir
    overrides = {
        "alpha": list(alpha) or None,
        "beta": list(beta) or None,
        "rho0": rho0,
        "eps": eps,
        "cells": cells,
        "grading": grading,
    }
    with reading_inputs():
        settings = HardyConfig.model_validate(
            settings.model_dump()
            | {key: value for key, value in overrides.items() if value is not None}
        )
        problems = [
            HardyProblem(
                alpha=a,
                beta=b,
                rho0=settings.rho0,
                eps=settings.eps,
                cells=settings.cells,
                grading=settings.grading,
                support=Support.CUTOFF if settings.eps > 0 else Support.COMPACT,
            )
            for a, b in itertools.product(settings.alpha, settings.beta)
        ]
    with manifest.stage("hardy"):
        with ThreadPoolExecutor(max_workers=resolve_threads(threads)) as pool:
            results = list(pool.map(best_constant_numeric, problems))

    table = ResultTable(
        ["alpha", "beta", "theoretical", "numeric_best", "ratio", "mesh_cells"]
    )
    for r in results:
        manifest.certify(f"alpha={r.alpha:g},beta={r.beta:g}", r.converged)
        table.add_row(
            r.alpha, r.beta, r.theoretical_bound, r.numeric_best, r.ratio, r.mesh_cells
        )
    emit(table, "csv", "hardy", out_dir, manifest)


@cli.command("classify")
@click.option("--alpha", "-a", required=True, type=click.FloatRange(min=0.0))
@click.option("--numeric", is_flag=True, help="Also integrate the radial ODE")
@click.option("--k", "k", type=click.FloatRange(min=1.0), help="Cusp order")
@click.option("--m", "m", default=0, show_default=True, type=int, help="Angular mode")
@click.option(
    "--delta",
    default=0.5,
    show_default=True,
    type=click.FloatRange(min=0.0, min_open=True),
)
@out_option
@reports_errors
def classify_command(
    alpha: float,
    numeric: bool,
    k: float | None,
    m: int,
    delta: float,
    out_dir: str | None,
) -> None:
    """Limit-point / limit-circle verdict at rho = 0 as JSON.

    The numeric test defaults to k = max(alpha, 1).
    """
    manifest = RunManifest(command="classify")
    report: dict[str, Any] = classify(alpha).model_dump(mode="json")
    if numeric:
        order = k if k is not None else max(alpha, 1.0)
        with manifest.stage("weyl_circle_numeric"):
            verdict = weyl_circle_numeric(alpha, order, m, delta)
        report["numeric_verdict"] = verdict.value
    emit(report, "json", "classify", out_dir, manifest)


@cli.command("windows")
@click.option("--k", "k", required=True, type=click.FloatRange(min=1.0))
@click.option("--sigma", required=True, type=float)
@click.option("--beta", default=0.0, show_default=True, type=float)
@out_option
@reports_errors
def windows_command(k: float, sigma: float, beta: float, out_dir: str | None) -> None:
    """Sigma-window, C-window and gamma0 as JSON."""
    report: dict[str, Any] = windows(k, sigma, beta).model_dump(mode="json")
    report["gamma0_k"] = gamma0_for_k(k)
    emit(report, "json", "windows", out_dir, RunManifest(command="windows"))


# =============================================================================
# Bracketing blocks
# =============================================================================


def _mu_label(mu: tuple[int, ...]) -> str:
    return ";".join(str(x) for x in mu)


@cli.command("bracket")
@click.option("--config", "-c", "config_path", type=click.Path())
@click.option("--k", "k", multiple=True, type=float, help="Cusp order per direction")
@click.option("--cross-dim", default=0, show_default=True, type=click.IntRange(min=0))
@click.option("--lambda-max", "lam", type=click.FloatRange(min=0.0))
@click.option("--mu", multiple=True, type=int, help="Single block multi-index")
@click.option("--m0", type=click.IntRange(min=1), help="Outer dyadic depth")
@click.option("--m", "m", type=click.IntRange(min=1), help="Inner dyadic depth")
@out_option
@threads_option
@reports_errors
def bracket_command(
    config_path: str | None,
    k: tuple[float, ...],
    cross_dim: int,
    lam: float | None,
    mu: tuple[int, ...],
    m0: int | None,
    m: int | None,
    out_dir: str | None,
    threads: int,
) -> None:
    """Block lattice counts and per-coordinate bound products as CSV.

    Without --mu every block of the partition is listed; depths not given
    come from the dyadic schedule.
    """
    manifest = RunManifest(command="bracket")
    orders = list(k)
    if config_path is not None:
        config = load_config(config_path)
        manifest.config_hash = config_hash(config)
        orders = orders or list(config.model.k)
        cross_dim = cross_dim or config.model.cross_section.dim
        lam = lam if lam is not None else config.lambda_max
        out_dir = out_dir or config.output_dir
    if not orders or lam is None:
        raise ConfigError(
            "bracket needs cusp orders and a lambda value",
            suggestion="Pass --k and --lambda-max, or --config",
        )
    if mu and len(mu) != len(orders):
        raise ConfigError(
            f"--mu has {len(mu)} entries but there are {len(orders)} cusp orders",
            suggestion="Give one --mu value per --k value",
        )
    if not mu and (m0 is None or m is None):
        with reading_inputs():
            s0, s = schedule(lam, len(orders) + sum(orders))
        m0 = m0 if m0 is not None else s0
        m = m if m is not None else s

    table = ResultTable(["mu", "lattice_count", "per_coord_bound_product"])
    with manifest.stage("bracket"):
        if mu:
            block = tuple(mu)
            table.add_row(
                _mu_label(block),
                block_lattice_count(block, orders, cross_dim, lam),
                per_coordinate_product(block, orders, cross_dim, lam),
            )
        else:
            assert m0 is not None and m is not None
            blocks = cusp_block_counts(orders, cross_dim, lam, m0, m, threads=threads)
            for b in blocks:
                table.add_row(
                    _mu_label(b.mu), b.lattice_count, b.per_coord_bound_product
                )
    emit(table, "csv", "bracket", out_dir, manifest)


# =============================================================================
# Configuration helpers
# =============================================================================


@cli.command("admissibility")
@click.option("--samples", "-s", "samples_path", required=True, type=click.Path())
@click.option("--tol-slope", default=0.1, show_default=True, type=float)
@out_option
@reports_errors
def admissibility_command(
    samples_path: str, tol_slope: float, out_dir: str | None
) -> None:
    """Fit decay slopes of metric-perturbation samples, as JSON."""
    samples = load_samples(samples_path)
    report = check_admissibility(samples, tol_slope=tol_slope)
    manifest = RunManifest(command="admissibility", config_hash=config_hash(samples))
    manifest.certify("admissible", report.passed)
    emit(report.to_dict(), "json", "admissibility", out_dir, manifest)


@cli.command("validate")
@click.argument("file", type=click.Path())
@reports_errors
def validate_command(file: str) -> None:
    """Validate a run configuration and show derived quantities."""
    config = load_config(file)
    model = config.model
    out = Console()
    out.print(f"[green]✓[/green] Configuration '{file}' is valid", highlight=False)
    click.echo(f"config hash: {config_hash(config)}")

    table = Table(title="Derived quantities")
    table.add_column("Quantity", style="cyan", no_wrap=True)
    table.add_column("Value")
    table.add_row("dimension n", str(model.n))
    table.add_row("volume", f"{volume(model):.10g}")
    table.add_row("Weyl constant", f"{weyl_constant(model):.10g}")
    table.add_row("grid points", str(len(config.grid())))
    table.add_row(
        "boundary conditions", ", ".join(bc.value for bc in config.bc.conditions())
    )
    out.print(table)


_POINT_MODEL = {"ell": 1, "k": [3], "delta": 0.5, "cross_section": {"kind": "point"}}

EXAMPLE_CONFIGS: dict[str, dict[str, Any]] = {
    "acceptance.json": {
        "model": _POINT_MODEL,
        "mesh": {"cells": 2000, "grading": 3},
        "lambda_min": 1000,
        "lambda_max": 10000,
        "lambda_grid": 64,
        "bc": "both",
        "strict": True,
    },
    "tiny.json": {
        "model": _POINT_MODEL,
        "mesh": {"cells": 200, "grading": 3},
        "lambda_max": 500,
        "lambda_grid": 11,
        "bc": "both",
        "strict": False,
    },
    "hardy.json": {
        "model": _POINT_MODEL,
        "lambda_max": 1,
        "hardy": {
            "alpha": [3, 0],
            "beta": [1],
            "rho0": 1.0,
            "cells": 4000,
            "grading": 2,
        },
    },
}


@cli.command("init")
@click.option("--path", "-p", default="configs", help="Directory to create")
def init_command(path: str) -> None:
    """Write example run configurations."""
    directory = Path(path)
    if not directory.exists():
        directory.mkdir(parents=True)
        console.print(f"[green]Created directory:[/green] {directory}", highlight=False)

    for filename, content in EXAMPLE_CONFIGS.items():
        target = directory / filename
        if target.exists():
            console.print(f"[yellow]Skipped[/yellow] {target}", highlight=False)
            continue
        target.write_text(json.dumps(content, indent=2) + "\n", encoding="utf-8")
        console.print(f"[green]Created[/green] {target}", highlight=False)


def main() -> None:
    """Entry point."""
    cli()


if __name__ == "__main__":
    main()
