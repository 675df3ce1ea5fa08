"""Scored and encoded rows ready for the models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import encode_table
from .ingest import Table
from .scoring import KeyTable, builtin_key_table, score_table
from .variables import PREDICTORS, TRAITS

__all__ = ["AnalysisFrame", "build_frame"]


@dataclass(frozen=True)
class AnalysisFrame:
    """Column arrays for one table.

    ``scores`` is ``(n, 5)`` float with NaN for a missing trait;
    ``predictors`` is ``(n, 12)`` int16 in ``PREDICTORS`` order, 0 = missing.
    """

    scores: np.ndarray
    predictors: np.ndarray
    sources: np.ndarray
    country: np.ndarray | None
    available: frozenset[str]
    dataset_ids: tuple[str, ...]
    keying_id: str

    def __post_init__(self) -> None:
        for arr in (self.scores, self.predictors, self.sources):
            arr.setflags(write=False)
        if self.country is not None:
            self.country.setflags(write=False)

    def __len__(self) -> int:
        return self.scores.shape[0]

    @property
    def dataset_label(self) -> str:
        return "+".join(self.dataset_ids)

    def trait(self, trait: str) -> np.ndarray:
        return self.scores[:, TRAITS.index(trait)]

    def predictor(self, name: str) -> np.ndarray:
        return self.predictors[:, PREDICTORS.index(name)]

    def complete(self) -> np.ndarray:
        """Mask of rows whose five trait scores are all present."""
        return ~np.isnan(self.scores).any(axis=1)

    def subset(self, mask: np.ndarray) -> "AnalysisFrame":
        return AnalysisFrame(
            scores=self.scores[mask],
            predictors=self.predictors[mask],
            sources=self.sources[mask],
            country=None if self.country is None else self.country[mask],
            available=self.available,
            dataset_ids=self.dataset_ids,
            keying_id=self.keying_id,
        )


def build_frame(table: Table, keying: str | KeyTable | None = None) -> AnalysisFrame:
    """Score and encode every row of ``table``.

    ``keying`` is a built-in keying id, an already-bound KeyTable, or None
    for the manifest's default.
    """
    manifest = table.manifest
    if keying is None:
        keying = manifest.key_table_ref
    key_table = keying if isinstance(keying, KeyTable) else builtin_key_table(keying, manifest)
    country = None
    if manifest.country_column and table.has_column(manifest.country_column):
        country = np.array([c.strip() for c in table.column(manifest.country_column)], dtype=object)
    return AnalysisFrame(
        scores=score_table(table, key_table),
        predictors=encode_table(table),
        sources=np.array(table.sources(), dtype=object),
        country=country,
        available=frozenset(manifest.demographic_columns),
        dataset_ids=table.source_ids,
        keying_id=key_table.keying_id,
    )
