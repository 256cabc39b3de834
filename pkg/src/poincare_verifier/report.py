"""Check records, deterministic JSON/CSV emission."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np

VERDICTS = ("pass", "fail", "info")


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def plain(obj: Any) -> Any:
    """Convert numpy scalars, tuples, Fractions and non-finite floats to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, Fraction)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _emit(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + _emit(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(k, ensure_ascii=False) + ": " + _emit(v, indent, level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits; NaN and inf become null."""
    return _emit(plain(obj), indent, 0) + "\n"


@dataclass
class Record:
    suite: str
    check: str
    anchor: str
    params: Dict[str, Any]
    measured: Any
    reference: Any
    tolerance: Any
    verdict: str
    diagnostics: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"bad verdict {self.verdict!r}")

    def as_dict(self) -> Dict[str, Any]:
        return plain({
            "suite": self.suite, "check": self.check, "anchor": self.anchor, "params": self.params,
            "measured": self.measured, "reference": self.reference, "tolerance": self.tolerance,
            "verdict": self.verdict, "diagnostics": self.diagnostics,
        })


@dataclass
class Report:
    records: List[Record]
    config: Dict[str, Any]
    seed: int
    version: str
    tables: Dict[str, tuple] = field(default_factory=dict)  # suite -> (header, rows)

    @property
    def summary(self) -> Dict[str, int]:
        out = {v: 0 for v in VERDICTS}
        for r in self.records:
            out[r.verdict] += 1
        out["total"] = len(self.records)
        return out

    @property
    def ok(self) -> bool:
        return self.summary["fail"] == 0

    def as_dict(self) -> Dict[str, Any]:
        return {
            "tool": "poincare-verifier",
            "version": self.version,
            "seed": self.seed,
            "config": plain(self.config),
            "summary": self.summary,
            "records": [r.as_dict() for r in self.records],
        }

    def write(self, out: Union[str, Path], fmt: str = "both") -> List[Path]:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if fmt in ("json", "both"):
            p = out / "report.json"
            p.write_text(dumps(self.as_dict()), encoding="utf-8")
            written.append(p)
        if fmt in ("csv", "both"):
            for suite, (header, rows) in self.tables.items():
                p = out / f"{suite}.csv"
                write_csv(p, header, rows)
                written.append(p)
        return written


def csv_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating, Fraction)):
        return fmt_float(v)
    s = str(v)
    return '"' + s.replace('"', '""') + '"' if any(c in s for c in ',"\n') else s


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(csv_cell(v) for v in row) + "\n")


def load_report(path: Union[str, Path]) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
