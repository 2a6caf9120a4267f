"""JSON reports: numpy-aware serialization and atomic file output."""

from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile

import numpy as np

SCHEMA_VERSION = "1.0"


def to_jsonable(obj):
    """Convert dataclasses, numpy values and tuples into plain JSON types.

    Floats keep their full repr (round-trips exactly); non-finite floats are
    written as the strings "inf", "-inf" and "nan" so the output stays strict
    JSON.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def dumps(doc) -> str:
    return json.dumps(to_jsonable(doc), indent=2, allow_nan=False) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".json", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def envelope(command: str, inputs: dict, result, status: str) -> dict:
    """One report document: schema version, echoed inputs, status and payload."""
    return {"schema_version": SCHEMA_VERSION, "command": command, "inputs": inputs,
            "status": status, "result": result}
