# -*- coding: utf-8 -*-
from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pandas as pd

from src.features.records import CSV_COLUMNS, EstimateRecord

log = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


@contextmanager
def atomic_path(path: Path):
    """Yield a temporary sibling of path; it replaces path only if the block succeeds."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    os.close(fd)
    try:
        yield Path(temp)
        os.replace(temp, path)
    except BaseException:
        Path(temp).unlink(missing_ok=True)
        raise
    log.info("wrote %s", path)


def records_frame(records: list[EstimateRecord], timing: bool = False) -> pd.DataFrame:
    df = pd.DataFrame([record.as_row() for record in records], columns=CSV_COLUMNS)
    if not timing:
        df["wall_time_s"] = ""
    return df


def export_csv(path: Path, records: list[EstimateRecord], timing: bool = False) -> None:
    df = records_frame(records, timing)
    with atomic_path(path) as temp:
        df.to_csv(temp, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")


def export_xlsx(path: Path, records: list[EstimateRecord], timing: bool = False) -> None:
    df = records_frame(records, timing)
    with atomic_path(path) as temp:
        df.to_excel(temp, index=False, engine="openpyxl")


def _json_safe(value):
    if isinstance(value, dict):
        return {str(key): _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def export_json(path: Path, data: dict) -> None:
    text = json.dumps(_json_safe(data), indent=2, ensure_ascii=False)
    with atomic_path(path) as temp:
        temp.write_text(text + "\n", encoding="utf-8")


def export_xy(path: Path, xs, ys) -> None:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    lines = [f"{FLOAT_FORMAT % x} {FLOAT_FORMAT % y}" for x, y in zip(xs, ys)]
    with atomic_path(path) as temp:
        temp.write_text("\n".join(lines) + "\n", encoding="utf-8")
