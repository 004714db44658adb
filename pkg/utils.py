import hashlib
import json
import logging
import string
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def to_jsonable(obj: Any) -> Any:
    """Recursively convert dataclasses and numpy values into plain JSON types"""
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(obj: Any) -> str:
    """Short SHA-256 of the canonical JSON form"""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()[:16]


def write_json(data: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(exist_ok=True, parents=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(to_jsonable(data), indent=4, sort_keys=True))
        f.write("\n")
    logger.debug(f"Wrote {path}")
    return path


def write_csv(df: pd.DataFrame, path: Path, run_hash: str | None = None) -> Path:
    """Write a CSV, prefixed with a `# config_hash: ...` comment line when a hash is given"""
    path = Path(path)
    path.parent.mkdir(exist_ok=True, parents=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if run_hash is not None:
            f.write(f"# config_hash: {run_hash}\n")
        df.to_csv(f, index=False, lineterminator="\n", float_format="%.12g")
    logger.debug(f"Wrote {path}")
    return path


def read_csv(path: Path, **kwargs) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", **kwargs)


def group_labels(n: int) -> list[str]:
    """A, B, ..., Z, AA, AB, ..."""
    letters = string.ascii_uppercase
    labels = []
    for i in range(n):
        label = ""
        k = i
        while True:
            label = letters[k % 26] + label
            k = k // 26 - 1
            if k < 0:
                break
        labels.append(label)
    return labels
