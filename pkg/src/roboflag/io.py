"""File formats: instance/result JSON, study CSVs, event logs and run manifests.

Floats are written with Python's shortest round-trip repr, so reading a
file back reproduces every value bit for bit.  Wall-clock measurements and
timestamps live only in the ``<out>.manifest.json`` sidecar; the primary
outputs are pure functions of the inputs and seeds.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field, is_dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__
from .dynamics import ValidationError
from .instances import GENERATOR_ID, InstanceSpec
from .solver import SolverResult

TOOL_NAME = "roboflag"


class InputError(ValidationError):
    """An input file is missing, unreadable or malformed."""


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, Enum):
        return obj.value
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return obj.item()
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path: str | os.PathLike, obj: Any) -> Path:
    return atomic_write_text(path, dumps(obj))


def read_json(path: str | os.PathLike) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def save_instance(path, instance: InstanceSpec) -> Path:
    return write_json(path, instance.to_dict())


def load_instance(path) -> InstanceSpec:
    data = read_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    try:
        return InstanceSpec.from_dict(data)
    except ValidationError as exc:
        raise InputError(f"{path}: {exc}") from exc


def save_result(path, result: SolverResult, extra: dict | None = None) -> Path:
    payload = result.to_dict()
    if extra:
        payload.update(extra)
    return write_json(path, payload)


def load_result(path) -> SolverResult:
    data = read_json(path)
    try:
        return SolverResult.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed result: {exc!r}") from exc


def format_trace(trace: Iterable[tuple[int, float]]) -> str:
    """``k:J`` pairs joined by ``;``, e.g. ``1:2.05;7:1.03``."""
    return ";".join(f"{k}:{j!r}" for k, j in trace)


def parse_trace(text: str) -> list[tuple[int, float]]:
    if not text:
        return []
    out = []
    for item in text.split(";"):
        k, j = item.split(":")
        out.append((int(k), float(j)))
    return out


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        unknown = set(row) - set(header)
        if unknown:
            raise ValueError(f"row has columns outside the header: {sorted(unknown)}")
        writer.writerow([_cell(row.get(col)) for col in header])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[dict]) -> Path:
    return atomic_write_text(path, csv_text(header, rows))


def read_csv(path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_jsonl(path, records: Iterable[dict]) -> Path:
    lines = [json.dumps(_jsonable(r), sort_keys=True, allow_nan=False) for r in records]
    return atomic_write_text(path, "".join(line + "\n" for line in lines))


@dataclass
class RunManifest:
    command: str
    seed: Any
    config: dict
    outputs: list[str] = field(default_factory=list)
    tool: str = TOOL_NAME
    version: str = __version__
    generator: str = GENERATOR_ID
    started_at: str = ""
    finished_at: str = ""
    wall_seconds: float | None = None
    status: str = "ok"

    def start(self) -> "RunManifest":
        self.started_at = _now()
        return self

    def finish(self, wall_seconds: float, status: str = "ok") -> "RunManifest":
        self.finished_at = _now()
        self.wall_seconds = wall_seconds
        self.status = status
        return self


# manifest keys that vary between otherwise identical runs
VOLATILE_MANIFEST_KEYS = ("started_at", "finished_at", "wall_seconds", "instance_wall_seconds")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def manifest_path(out: str | os.PathLike) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def write_manifest(out, manifest: RunManifest) -> Path:
    return write_json(manifest_path(out), manifest)
