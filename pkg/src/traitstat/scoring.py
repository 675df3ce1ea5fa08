"""Trait scores from the 50 item answers.

A trait score is the sum of ten items where a ``+`` keyed item contributes
its answer X and a ``-`` keyed item contributes 6 - X.  An answer outside
1..5 (0 marks a skipped question) makes that trait missing, which keeps
every present score inside [10, 50].
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._toml import load_toml
from .ingest import DatasetManifest, IngestError, ManifestError, RawRecord, Table
from .variables import TRAITS

__all__ = [
    "KEYINGS",
    "KeyTable",
    "TraitScores",
    "load_key_table",
    "builtin_key_table",
    "score_trait",
    "score_record",
    "score_table",
]

KEYINGS = ("codebook", "eq1")

_SIGNS = {"+": "+", "-": "-", "−": "-"}


@dataclass(frozen=True)
class KeyTable:
    """Per trait, ten ``(column, key)`` pairs with key ``+`` or ``-``."""

    keying_id: str
    entries: Mapping[str, tuple[tuple[str, str], ...]]

    def __post_init__(self) -> None:
        if set(self.entries) != set(TRAITS):
            raise ManifestError(f"key table {self.keying_id!r} must cover exactly {TRAITS}")
        for trait, pairs in self.entries.items():
            if len(pairs) != 10:
                raise ManifestError(f"key table {self.keying_id!r}: trait {trait} has {len(pairs)} entries")
            cols = [c for c, _ in pairs]
            if len(set(cols)) != 10:
                raise ManifestError(f"key table {self.keying_id!r}: column repeated in trait {trait}")
            if any(k not in ("+", "-") for _, k in pairs):
                raise ManifestError(f"key table {self.keying_id!r}: keys must be '+' or '-'")

    def columns(self, trait: str) -> tuple[str, ...]:
        return tuple(c for c, _ in self.entries[trait])

    def keys(self, trait: str) -> tuple[str, ...]:
        return tuple(k for _, k in self.entries[trait])

    @classmethod
    def from_signs(cls, keying_id: str, signs: Mapping[str, str], manifest: DatasetManifest) -> "KeyTable":
        """Bind positional sign strings (e.g. ``"+-+-+-+-+-"``) to a manifest's item columns."""
        entries = {}
        for trait in TRAITS:
            raw = signs.get(trait)
            if raw is None:
                raise ManifestError(f"keying {keying_id!r} lacks trait {trait}")
            keys = [_SIGNS.get(ch) for ch in raw.replace(" ", "")]
            if None in keys or len(keys) != 10:
                raise ManifestError(f"keying {keying_id!r}: trait {trait} needs ten '+'/'-' signs, got {raw!r}")
            entries[trait] = tuple(zip(manifest.item_columns[trait], keys))
        return cls(keying_id, entries)


def load_key_table(path: str | Path, manifest: DatasetManifest) -> KeyTable:
    data = load_toml(path)
    keying_id = str(data.get("keying_id", Path(path).stem))
    if "keys" not in data:
        raise ManifestError(f"{path}: no [keys] table")
    return KeyTable.from_signs(keying_id, data["keys"], manifest)


def builtin_key_table(keying_id: str, manifest: DatasetManifest) -> KeyTable:
    if keying_id not in KEYINGS:
        raise ManifestError(f"unknown keying {keying_id!r} (have {', '.join(KEYINGS)})")
    ref = resources.files("traitstat") / "data" / "keys" / f"{keying_id}.toml"
    with resources.as_file(ref) as path:
        return load_key_table(path, manifest)


@dataclass(frozen=True)
class TraitScores:
    e: int | None = None
    n: int | None = None
    a: int | None = None
    c: int | None = None
    o: int | None = None

    def __getitem__(self, trait: str) -> int | None:
        return getattr(self, trait.lower())

    def as_tuple(self) -> tuple[int | None, ...]:
        return (self.e, self.n, self.a, self.c, self.o)


def score_trait(items: Sequence[int], keys: Sequence[str]) -> int | None:
    if len(keys) != len(items) or len(keys) != 10:
        raise ValueError(f"need 10 items and 10 keys, got {len(items)} and {len(keys)}")
    total = 0
    for x, k in zip(items, keys):
        if x not in (1, 2, 3, 4, 5):
            return None
        total += x if _SIGNS[k] == "+" else 6 - x
    return total


# answer text -> value, anything else -> 0 (invalid)
_ITEM_LUT = {str(v): v for v in range(1, 6)}


def _parse_item(cell: str) -> int:
    return _ITEM_LUT.get(cell.strip(), 0)


def score_record(record: RawRecord, key_table: KeyTable, manifest: DatasetManifest | None = None) -> TraitScores:
    values = []
    for trait in TRAITS:
        items = []
        for col in key_table.columns(trait):
            if col not in record.cells:
                who = manifest.dataset_id if manifest else record.source
                raise ManifestError(f"{who}: item column {col!r} not in record")
            items.append(_parse_item(record.cells[col]))
        values.append(score_trait(items, key_table.keys(trait)))
    return TraitScores(*values)


def score_table(table: Table, key_table: KeyTable) -> np.ndarray:
    """Vectorized scoring: an ``(n, 5)`` float array, NaN where a trait is missing."""
    n = len(table)
    out = np.full((n, len(TRAITS)), np.nan)
    if n == 0:
        return out
    for j, trait in enumerate(TRAITS):
        items = np.empty((n, 10), dtype=np.int8)
        for i, col in enumerate(key_table.columns(trait)):
            if not table.has_column(col):
                raise IngestError(f"{table.dataset_id}: item column {col!r} not in table")
            cells = table.column(col)
            items[:, i] = [_ITEM_LUT.get(c.strip(), 0) for c in cells]
        valid = (items > 0).all(axis=1)
        reversed_ = np.array([k == "-" for k in key_table.keys(trait)])
        contrib = np.where(reversed_, 6 - items.astype(np.int16), items.astype(np.int16))
        total = contrib.sum(axis=1).astype(float)
        out[:, j] = np.where(valid, total, np.nan)
    return out

