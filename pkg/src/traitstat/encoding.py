"""Raw demographics to ordinal predictor codes.

Every predictor is a small integer code with 0 meaning missing.  Ages and
family sizes are bucketed; everything else goes through the recode map of
the dataset manifest.  Predictors a dataset does not carry encode as 0.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields
from typing import Mapping

import numpy as np

from .ingest import DatasetManifest, IngestError, RawRecord, Table
from .variables import PREDICTOR_MAX, PREDICTORS

__all__ = [
    "AGE_WINDOW",
    "EncodedPredictors",
    "bucket_growth",
    "bucket_family",
    "recode_category",
    "encode_value",
    "encode_record",
    "encode_table",
]

# ages outside this window are junk entries in the raw files
AGE_WINDOW = (12, 100)


def _as_int(raw) -> int | None:
    if raw is None:
        return None
    if isinstance(raw, (int, np.integer)):
        return int(raw)
    text = str(raw).strip()
    if text.isdigit() or (text[:1] in ("+", "-") and text[1:].isdigit()):
        return int(text)
    try:
        value = float(text)
    except ValueError:
        return None
    if value != value or value in (float("inf"), float("-inf")) or value != int(value):
        return None
    return int(value)


def bucket_growth(age) -> int:
    """Life stage: 12-24 -> 1, 25-40 -> 2, 41-60 -> 3, 61+ -> 4; outside 12..100 -> 0."""
    age = _as_int(age)
    if age is None or not AGE_WINDOW[0] <= age <= AGE_WINDOW[1]:
        return 0
    if age <= 24:
        return 1
    if age <= 40:
        return 2
    if age <= 60:
        return 3
    return 4


def bucket_family(size) -> int:
    """Family size: 1-3 -> 1, 4-10 -> 2, 11+ -> 3, non-positive or unparseable -> 0."""
    size = _as_int(size)
    if size is None or size <= 0:
        return 0
    if size <= 3:
        return 1
    if size <= 10:
        return 2
    return 3


def recode_category(raw, mapping: Mapping[str, int]) -> int:
    if raw is None:
        return 0
    key = str(raw).strip()
    if key in mapping:
        return mapping[key]
    as_int = _as_int(key)
    return mapping.get(str(as_int), 0) if as_int is not None else 0


@dataclass(frozen=True)
class EncodedPredictors:
    growth: int = 0
    gender: int = 0
    hand: int = 0
    education: int = 0
    urban: int = 0
    engnat: int = 0
    orientation: int = 0
    married: int = 0
    family: int = 0
    voted: int = 0
    religion: int = 0
    race: int = 0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not 0 <= value <= PREDICTOR_MAX[f.name]:
                raise ValueError(f"{f.name} code {value} outside 0..{PREDICTOR_MAX[f.name]}")

    def __getitem__(self, name: str) -> int:
        return getattr(self, name)

    def as_tuple(self) -> tuple[int, ...]:
        return astuple(self)


def encode_value(predictor: str, raw, manifest: DatasetManifest) -> int:
    """Code for one raw cell of ``predictor`` under ``manifest``; never raises."""
    if predictor not in manifest.demographic_columns:
        return 0
    if predictor == "growth":
        code = bucket_growth(raw)
    elif predictor == "family":
        code = bucket_family(raw)
    else:
        code = recode_category(raw, manifest.recode_maps.get(predictor, {}))
    return code if 0 <= code <= PREDICTOR_MAX[predictor] else 0


def encode_record(record: RawRecord, manifest: DatasetManifest) -> EncodedPredictors:
    codes = {}
    for p in PREDICTORS:
        col = manifest.demographic_columns.get(p)
        codes[p] = encode_value(p, record.cells.get(col), manifest) if col else 0
    return EncodedPredictors(**codes)


def encode_table(table: Table, manifest: DatasetManifest | None = None) -> np.ndarray:
    """Vectorized :func:`encode_record`: an ``(n, 12)`` int16 array in ``PREDICTORS`` order."""
    manifest = manifest or table.manifest
    out = np.zeros((len(table), len(PREDICTORS)), dtype=np.int16)
    for j, p in enumerate(PREDICTORS):
        col = manifest.demographic_columns.get(p)
        if not col:
            continue
        if not table.has_column(col):
            raise IngestError(f"{table.dataset_id}: no column {col!r} for predictor {p!r}")
        cache: dict[str, int] = {}
        values = []
        for cell in table.column(col):
            code = cache.get(cell)
            if code is None:
                code = cache[cell] = encode_value(p, cell, manifest)
            values.append(code)
        out[:, j] = values
    return out
