"""Output formatters for result tables and reports."""

import json
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

FLOAT_FORMAT = "%.17g"


@dataclass
class ResultTable:
    """Column names plus rows of scalar values."""

    columns: list[str]
    rows: list[Sequence[Any]] = field(default_factory=list)

    def add_row(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(
                f"Row has {len(values)} values for {len(self.columns)} columns"
            )
        self.rows.append(values)

    def records(self) -> list[dict[str, Any]]:
        """Rows as dictionaries in column order."""
        return [dict(zip(self.columns, row)) for row in self.rows]


def format_scalar(value: Any) -> str:
    """One CSV cell: integers plain, floats with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    if value is None:
        return ""
    return str(value)


def to_plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into JSON-ready values."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


class OutputFormatter(ABC):
    """Base class for output formatters."""

    extension: str = ""

    @abstractmethod
    def format(self, data: ResultTable | dict[str, Any]) -> str:
        """Format a result table or a report dictionary.

        Args:
            data: Table of rows or a report mapping

        Returns:
            Formatted output string, newline terminated
        """
        pass


class CSVFormatter(OutputFormatter):
    """Comma separated values with a header row."""

    extension = "csv"

    def format(self, data: ResultTable | dict[str, Any]) -> str:
        """Return the table as CSV."""
        if not isinstance(data, ResultTable):
            data = ResultTable(list(data.keys()), [tuple(data.values())])
        lines = [",".join(data.columns)]
        for row in data.rows:
            lines.append(",".join(format_scalar(v) for v in row))
        return "\n".join(lines) + "\n"


class JSONFormatter(OutputFormatter):
    """JSON with keys in declared order."""

    extension = "json"

    def __init__(self, indent: int = 2) -> None:
        self.indent = indent

    def format(self, data: ResultTable | dict[str, Any]) -> str:
        """Return JSON; tables become a list of records."""
        payload = data.records() if isinstance(data, ResultTable) else data
        return json.dumps(to_plain(payload), indent=self.indent, allow_nan=False) + "\n"


# Format name to formatter class mapping
FORMATTERS: dict[str, type[OutputFormatter]] = {
    "csv": CSVFormatter,
    "json": JSONFormatter,
}


def get_formatter(format_name: str) -> OutputFormatter:
    """Get a formatter instance by name.

    Args:
        format_name: Name of the format (csv, json)

    Returns:
        OutputFormatter instance

    Raises:
        ValueError: If format name is not recognized
    """
    if format_name not in FORMATTERS:
        valid = ", ".join(FORMATTERS.keys())
        raise ValueError(f"Unknown format '{format_name}'. Valid formats: {valid}")

    return FORMATTERS[format_name]()
