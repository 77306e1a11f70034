"""Loading run configurations, perturbation samples and counting curves."""

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
import yaml
from pydantic import BaseModel, ValidationError

from .errors import ConfigError
from .models import PerturbationSample, RunConfig
from .spectrum import CountingCurve

ModelT = TypeVar("ModelT", bound=BaseModel)

YAML_SUFFIXES = (".yaml", ".yml")


def read_text(path: str | Path) -> str:
    """Read a UTF-8 file, raising ConfigError instead of OSError."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(
            f"File not found: {path}",
            suggestion="Check the file path and ensure the file exists",
            context={"path": str(path.absolute())},
        )
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"Failed to read file: {e}", context={"path": str(path)})


def parse_document(
    content: str, source: str = "<string>", yaml_syntax: bool = False
) -> Any:
    """Parse JSON (or YAML) text, reporting the error location."""
    if yaml_syntax:
        try:
            return yaml.safe_load(content)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            where = ""
            if mark is not None:
                where = f" at line {mark.line + 1}, column {mark.column + 1}"
            raise ConfigError(
                f"Malformed YAML{where}: {e}",
                suggestion="Check YAML syntax and indentation",
                context={"source": source},
            )
    try:
        return json.loads(content)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"Malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}",
            suggestion="Check for trailing commas and unquoted keys",
            context={"source": source},
        )


def validate_document(cls: type[ModelT], data: Any, source: str = "<string>") -> ModelT:
    """Validate parsed data against a pydantic model, flattening the errors."""
    if not isinstance(data, dict):
        raise ConfigError(
            f"{cls.__name__} must be a JSON object",
            suggestion="Ensure the document starts with key-value pairs, not a list",
            context={"source": source, "got_type": type(data).__name__},
        )
    try:
        return cls(**data)
    except ValidationError as e:
        errors = []
        for err in e.errors():
            loc = ".".join(str(x) for x in err["loc"])
            errors.append(f"  {loc}: {err['msg']}")
        raise ConfigError(
            f"Invalid {cls.__name__}:\n" + "\n".join(errors),
            context={"source": source},
        )


def load_document(cls: type[ModelT], path: str | Path) -> ModelT:
    """Load and validate a JSON or YAML document from disk."""
    path = Path(path)
    data = parse_document(
        read_text(path),
        source=str(path),
        yaml_syntax=path.suffix.lower() in YAML_SUFFIXES,
    )
    return validate_document(cls, data, source=str(path))


def load_config(path: str | Path) -> RunConfig:
    """Load a run configuration.

    Raises:
        ConfigError: If the file is missing, malformed or invalid
    """
    return load_document(RunConfig, path)


def load_samples(path: str | Path) -> PerturbationSample:
    """Load perturbation samples for the admissibility check."""
    return load_document(PerturbationSample, path)


def config_hash(config: BaseModel) -> str:
    """SHA-256 of the canonical JSON dump (sorted keys, no whitespace)."""
    canonical = json.dumps(
        config.model_dump(mode="json"), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_curve(path: str | Path, column: str | None = None) -> CountingCurve:
    """Read a counting curve from CSV with a ``lambda`` column.

    The count column defaults to the first of count_avg, count,
    count_dirichlet or count_neumann present in the header.
    """
    source = str(path)
    reader = csv.DictReader(io.StringIO(read_text(path)))
    header = reader.fieldnames or []
    if "lambda" not in header:
        raise ConfigError(
            "Curve file has no 'lambda' column", context={"source": source}
        )
    if column is None:
        candidates = ("count_avg", "count", "count_dirichlet", "count_neumann")
        column = next((c for c in candidates if c in header), None)
    if column is None or column not in header:
        raise ConfigError(
            "Curve file has no count column",
            suggestion="Name the column count or count_avg",
            context={"source": source, "columns": ",".join(header)},
        )
    try:
        rows = [(float(r["lambda"]), float(r[column])) for r in reader]
    except (TypeError, ValueError) as e:
        raise ConfigError(
            f"Curve file has a non-numeric value: {e}", context={"source": source}
        )
    if not rows:
        raise ConfigError("Curve file has no rows", context={"source": source})
    lambdas, counts = (np.array(col) for col in zip(*rows))
    if np.any(np.diff(lambdas) < 0):
        raise ConfigError("Curve lambdas must be ascending", context={"source": source})
    if column in ("count", "count_avg"):
        label = "average"
    else:
        label = column.removeprefix("count_")
    return CountingCurve(lambdas, counts, label)
