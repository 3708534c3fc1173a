"""Reading and writing clusterings.

Label files hold a header line ``ell m`` followed by one clustering per line,
each a list of ``m`` integer labels in ``[0, ell)`` separated by spaces or
commas.  Blank lines and ``#`` comments are ignored.  Soft partitions use JSON
objects ``{"ell": ..., "m": ..., "rows": [[...], ...]}``; a file may hold one
such object, a list of them, or ``{"partitions": [...]}``.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import InvalidMatrixError, LabelOutOfRangeError, ParseError
from .frechet import Sample
from .jury import GroundTruth
from .partition import LabeledPartition, Partition

_SPLIT = re.compile(r"[,\s]+")


def _ints(text: str, lineno: int) -> list:
    try:
        return [int(tok) for tok in _SPLIT.split(text.strip()) if tok]
    except ValueError as exc:
        raise ParseError(f"expected integers: {exc}", lineno) from None


def read_label_rows(path):
    """Return ``(ell, m, rows)`` from a label file, rows as integer arrays."""
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            values = _ints(line, lineno)
            if header is None:
                if len(values) != 2 or values[0] < 1 or values[1] < 1:
                    raise ParseError("header must be two positive integers 'ell m'", lineno)
                header = values
                continue
            ell, m = header
            if len(values) != m:
                raise ParseError(f"expected {m} labels, found {len(values)}", lineno)
            bad = [v for v in values if not 0 <= v < ell]
            if bad:
                raise LabelOutOfRangeError(f"label {bad[0]} outside [0, {ell})", lineno)
            rows.append(np.array(values, dtype=int))
    if header is None:
        raise ParseError("missing 'ell m' header")
    if not rows:
        raise ParseError("no clusterings found")
    return header[0], header[1], rows


def parse_labels(path) -> Sample:
    ell, _, rows = read_label_rows(path)
    return Sample.from_labels(rows, ell)


def write_labels(path, partitions, ell: int | None = None) -> None:
    """Write hard partitions (or labeled representatives) as a label file."""
    reps = [p.canonical if isinstance(p, Partition) else p for p in partitions]
    if not reps:
        raise ValueError("nothing to write")
    ell = reps[0].ell if ell is None else ell
    lines = [f"{ell} {reps[0].m}"]
    lines += [" ".join(str(int(v)) for v in r.labels()) for r in reps]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _soft(obj, where) -> LabeledPartition:
    try:
        rows = obj["rows"]
        rep = LabeledPartition(np.array(rows, dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidMatrixError):
            raise
        raise ParseError(f"{where}: expected an object with 'rows'") from None
    for key, actual in (("ell", rep.ell), ("m", rep.m)):
        if key in obj and obj[key] != actual:
            raise ParseError(f"{where}: '{key}' is {obj[key]} but rows give {actual}")
    return rep


def read_soft(path) -> list:
    """Labeled representatives stored in a JSON file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if isinstance(data, dict) and "partitions" in data:
        data = data["partitions"]
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise ParseError("expected a partition object or a non-empty list of them")
    return [_soft(obj, f"partition {i}") for i, obj in enumerate(data)]


def write_soft(path, partitions) -> None:
    reps = [p.canonical if isinstance(p, Partition) else p for p in partitions]
    payload = reps[0].to_dict() if len(reps) == 1 else {"partitions": [r.to_dict() for r in reps]}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_reps(path) -> list:
    if str(path).endswith(".json"):
        return read_soft(path)
    ell, _, rows = read_label_rows(path)
    return [LabeledPartition.from_labels(r, ell) for r in rows]


def load_sample(path) -> Sample:
    return Sample(tuple(Partition(r) for r in load_reps(path)))


def load_truth(path) -> GroundTruth:
    """Ground truth from the first clustering in a file; its labels fix the representative."""
    return GroundTruth.of(load_reps(path)[0])
