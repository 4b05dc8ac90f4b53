"""
Writing reports and run manifests.

JSON is written with sorted keys and a fixed float representation, so
identical inputs give byte-identical report files.
"""

import csv
import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import ujson

from faltings_height.logging.logger import get_logger

logger = get_logger(__name__)


def to_jsonable(obj):
    """Plain json types for reports, dataclasses via their `to_dict` if present"""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        # ujson has no representation for inf and nan
        if obj != obj or obj in (float("inf"), float("-inf")):
            return str(obj)
        return obj
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return ujson.dumps(to_jsonable(obj), sort_keys=True, indent=2, double_precision=15)


def write_json(path: Path | str, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj) + "\n")
    logger.debug(f"Wrote {path=}")
    return path


def write_csv(path: Path | str, rows: list[dict]) -> Path:
    path = Path(path)
    fieldnames = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: to_jsonable(v) for k, v in row.items()})
    logger.debug(f"Wrote {path=} with {len(rows)} rows")
    return path


def inputs_hash(inputs: dict) -> str:
    """sha256 of the canonical json of the inputs"""
    canonical = ujson.dumps(to_jsonable(inputs), sort_keys=True, double_precision=15)
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class RunManifest:
    command: str
    inputs_hash: str
    tool_version: str
    inputs: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    exit_code: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def run_directory(out: Path | str, command: str, digest: str) -> Path:
    run_dir = Path(out) / f"{command}-{digest[:12]}"
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def write_manifest(run_dir: Path | str, manifest: RunManifest) -> Path:
    return write_json(Path(run_dir) / "manifest.json", manifest)
