"""Result serialization and run manifests."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if hasattr(obj, "item"):
        return dumps(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, float) else ("" if v is None else v) for v in row])
    return buf.getvalue()


@dataclass
class RunManifest:
    command: str
    model_digest: Optional[str]
    parameters: dict
    seed: Optional[int] = None
    tool_version: str = __version__
    wall_time: float = 0.0
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def finish(self) -> "RunManifest":
        self.wall_time = time.perf_counter() - self._t0
        return self

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("_t0")
        return d


def write_result(text: str, output: Optional[str], manifest: RunManifest) -> None:
    """Write the result once; the manifest goes to a sidecar file or stderr."""
    manifest.finish()
    if output:
        Path(output).write_text(text)
        Path(str(output) + ".manifest.json").write_text(dumps(manifest.to_json()) + "\n")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()
        sys.stderr.write("manifest: " + json.dumps(manifest.to_json(), sort_keys=True) + "\n")
