"""
Run manifests.

Every CLI output is accompanied by a manifest recording the subcommand, its
resolved parameters and seed, the package version and the files written, so a
run can be replayed.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field

from qbattery import __version__

UTC = timezone.utc

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


class RunManifest(BaseModel):
    """Record of one CLI invocation."""

    subcommand: str
    parameters: dict[str, Any]
    seed: int | None = None
    version: str = __version__
    outputs: list[str] = Field(default_factory=list)
    wall_time_s: float = 0.0
    created_at: str = Field(default_factory=lambda: datetime.now(UTC).isoformat())

    def write(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Manifest written to {path}")
        return path

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        """Read a manifest.

        Raises:
            ValueError: If the file is not a valid manifest.
        """
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            msg = f"Manifest {path} is not valid JSON: {e}"
            raise ValueError(msg) from e
        return cls.model_validate(raw)


def manifest_path(output: Path) -> Path:
    """Manifest location next to an output file."""
    return output.with_name(output.name + MANIFEST_SUFFIX)


def json_safe(value: Any) -> Any:
    """Convert CLI parameter values (paths, tuples) to JSON types."""
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple | list):
        return [json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    return value
