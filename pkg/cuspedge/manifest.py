"""Run manifests and atomic result files."""

import os
import tempfile
import time
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

from pydantic import BaseModel, Field

from . import __version__


class RunManifest(BaseModel):
    """Provenance written next to every result file."""

    command: str
    config_hash: str | None = None
    tool_version: str = __version__
    stage_seconds: dict[str, float] = Field(default_factory=dict)
    certification: dict[str, bool] = Field(default_factory=dict)
    outputs: list[str] = Field(default_factory=list)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Record the wall time of a block under ``name``."""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.stage_seconds[name] = round(time.perf_counter() - start, 6)

    def certify(self, name: str, ok: bool) -> None:
        self.certification[name] = bool(ok)

    @property
    def all_certified(self) -> bool:
        return all(self.certification.values())


def atomic_write(path: str | Path, content: str) -> Path:
    """Write ``content`` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(content)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def write_result(
    out_dir: str | Path, filename: str, content: str, manifest: RunManifest
) -> Path:
    """Write a result file and its ``<stem>.manifest.json`` companion."""
    target = Path(out_dir) / filename
    manifest.outputs.append(target.name)
    atomic_write(target, content)
    atomic_write(
        target.with_name(f"{target.stem}.manifest.json"),
        manifest.model_dump_json(indent=2) + "\n",
    )
    return target
