"""Reading the raw survey files described by a dataset manifest.

A manifest is a small TOML file (one per dataset, see ``data/manifests``)
that transcribes the archive's codebook: which columns hold the 50 item
answers, which columns feed each predictor, and how raw answer codes map
onto the ordinal categories used downstream.  The loader keeps every
column of the file as text; interpretation happens in ``scoring`` and
``encoding``.
"""

from __future__ import annotations

import bisect
import fnmatch
import io
import zipfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

from ._toml import TOMLDecodeError, load_toml
from .variables import BUCKETED, PREDICTOR_MAX, PREDICTORS, TRAITS

__all__ = [
    "IngestError",
    "ManifestError",
    "DatasetManifest",
    "RawRecord",
    "Table",
    "Issue",
    "ValidationReport",
    "load_manifest",
    "builtin_manifest",
    "BUILTIN_DATASETS",
    "load_dataset",
    "iter_dataset",
    "validate_table",
    "merge_samples",
]

BUILTIN_DATASETS = ("sample1", "sample2", "sample3")

ITEM_VALUES = frozenset({"0", "1", "2", "3", "4", "5"})


class IngestError(Exception):
    """A data file could not be read as the manifest describes it."""


class ManifestError(ValueError):
    """A manifest is malformed or internally inconsistent."""


@dataclass(frozen=True)
class DatasetManifest:
    dataset_id: str
    delimiter: str
    item_columns: Mapping[str, tuple[str, ...]]
    demographic_columns: Mapping[str, str]
    recode_maps: Mapping[str, Mapping[str, int]]
    key_table_ref: str = "codebook"
    unavailable: tuple[str, ...] = ()
    country_column: str | None = None
    archive_member: str | None = None
    url: str | None = None
    sha256: str | None = None
    description: str = ""

    def __post_init__(self) -> None:
        if not self.dataset_id:
            raise ManifestError("dataset_id must be non-empty")
        if len(self.delimiter) != 1:
            raise ManifestError(f"{self.dataset_id}: delimiter must be a single character")
        if set(self.item_columns) != set(TRAITS):
            raise ManifestError(f"{self.dataset_id}: item_columns must cover exactly {TRAITS}")
        seen: set[str] = set()
        for trait, cols in self.item_columns.items():
            if len(cols) != 10:
                raise ManifestError(f"{self.dataset_id}: trait {trait} has {len(cols)} item columns, expected 10")
            dup = seen.intersection(cols)
            if dup or len(set(cols)) != 10:
                raise ManifestError(f"{self.dataset_id}: item column repeated in trait {trait}")
            seen.update(cols)
        unknown = (set(self.demographic_columns) | set(self.unavailable)) - set(PREDICTORS)
        if unknown:
            raise ManifestError(f"{self.dataset_id}: unknown predictor(s) {sorted(unknown)}")
        both = set(self.demographic_columns) & set(self.unavailable)
        if both:
            raise ManifestError(f"{self.dataset_id}: predictor(s) both mapped and unavailable: {sorted(both)}")
        uncovered = set(PREDICTORS) - set(self.demographic_columns) - set(self.unavailable)
        if uncovered:
            raise ManifestError(f"{self.dataset_id}: predictor(s) neither mapped nor marked unavailable: {sorted(uncovered)}")
        for name in self.recode_maps:
            if name not in self.demographic_columns:
                raise ManifestError(f"{self.dataset_id}: recode map for {name!r} has no demographic column")
        for name in self.demographic_columns:
            if name not in BUCKETED and name not in self.recode_maps:
                raise ManifestError(f"{self.dataset_id}: predictor {name!r} needs a recode map")
        for name, mapping in self.recode_maps.items():
            bad = [v for v in mapping.values() if not 0 <= v <= PREDICTOR_MAX[name]]
            if bad:
                raise ManifestError(f"{self.dataset_id}: recode map {name!r} yields out-of-range codes {bad}")

    @property
    def all_item_columns(self) -> tuple[str, ...]:
        return tuple(c for t in TRAITS for c in self.item_columns[t])

    @property
    def required_columns(self) -> tuple[str, ...]:
        cols = list(self.all_item_columns)
        cols.extend(self.demographic_columns[p] for p in PREDICTORS if p in self.demographic_columns)
        if self.country_column:
            cols.append(self.country_column)
        out: list[str] = []
        for c in cols:
            if c not in out:
                out.append(c)
        return tuple(out)

    def column_for(self, variable: str) -> str:
        """Column holding a shared variable (a predictor name or ``country``)."""
        if variable == "country":
            if not self.country_column:
                raise ManifestError(f"{self.dataset_id}: no country column")
            return self.country_column
        if variable in self.demographic_columns:
            return self.demographic_columns[variable]
        raise ManifestError(f"{self.dataset_id}: variable {variable!r} is not available")

    @classmethod
    def from_dict(cls, data: Mapping) -> "DatasetManifest":
        try:
            items = {t: tuple(cols) for t, cols in data["item_columns"].items()}
            recode = {
                name: {str(k).strip(): int(v) for k, v in mapping.items()}
                for name, mapping in data.get("recode_maps", {}).items()
            }
            return cls(
                dataset_id=str(data["dataset_id"]),
                delimiter=str(data.get("delimiter", "\t")),
                item_columns=items,
                demographic_columns=dict(data.get("demographic_columns", {})),
                recode_maps=recode,
                key_table_ref=str(data.get("key_table_ref", "codebook")),
                unavailable=tuple(data.get("unavailable", ())),
                country_column=data.get("country_column") or None,
                archive_member=data.get("archive_member") or None,
                url=data.get("url") or None,
                sha256=data.get("sha256") or None,
                description=str(data.get("description", "")),
            )
        except KeyError as exc:
            raise ManifestError(f"manifest lacks required key {exc.args[0]!r}") from None


def load_manifest(path: str | Path) -> DatasetManifest:
    try:
        return DatasetManifest.from_dict(load_toml(path))
    except TOMLDecodeError as exc:
        raise ManifestError(f"{path}: {exc}") from None


def builtin_manifest(dataset_id: str) -> DatasetManifest:
    if dataset_id not in BUILTIN_DATASETS:
        raise ManifestError(f"no built-in manifest named {dataset_id!r} (have {', '.join(BUILTIN_DATASETS)})")
    ref = resources.files("traitstat") / "data" / "manifests" / f"{dataset_id}.toml"
    with resources.as_file(ref) as path:
        return load_manifest(path)


@dataclass(frozen=True)
class RawRecord:
    cells: Mapping[str, str]
    source: str
    row_index: int


@dataclass(frozen=True)
class Table:
    """Rows of one (or several merged) survey files, all cells kept as text.

    ``segments`` run-length encodes the source dataset of each row, in row
    order, so merged tables remember where every row came from.
    """

    manifest: DatasetManifest
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    segments: tuple[tuple[str, int], ...] = ()
    _index: Mapping[str, int] = field(default=None, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not self.segments:
            object.__setattr__(self, "segments", ((self.manifest.dataset_id, len(self.rows)),))
        if sum(n for _, n in self.segments) != len(self.rows):
            raise ValueError("segments do not add up to the row count")
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(self.header)})

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def dataset_id(self) -> str:
        return self.manifest.dataset_id

    @property
    def source_ids(self) -> tuple[str, ...]:
        out: list[str] = []
        for sid, _ in self.segments:
            if sid not in out:
                out.append(sid)
        return tuple(out)

    def source_of(self, row_index: int) -> str:
        bounds = []
        total = 0
        for _, n in self.segments:
            total += n
            bounds.append(total)
        return self.segments[bisect.bisect_right(bounds, row_index)][0]

    def sources(self) -> list[str]:
        out: list[str] = []
        for sid, n in self.segments:
            out.extend([sid] * n)
        return out

    def has_column(self, name: str) -> bool:
        return name in self._index

    def column(self, name: str) -> list[str]:
        try:
            i = self._index[name]
        except KeyError:
            raise IngestError(f"{self.dataset_id}: no column {name!r}") from None
        return [row[i] for row in self.rows]

    def record(self, row_index: int) -> RawRecord:
        row = self.rows[row_index]
        return RawRecord(dict(zip(self.header, row)), self.source_of(row_index), row_index)

    def records(self) -> Iterator[RawRecord]:
        for i in range(len(self.rows)):
            yield self.record(i)

    def to_text(self, delimiter: str | None = None) -> str:
        """Serialize header and rows back to delimited text."""
        d = self.manifest.delimiter if delimiter is None else delimiter
        lines = [d.join(self.header)]
        lines.extend(d.join(row) for row in self.rows)
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def _open_text(manifest: DatasetManifest, path: Path) -> io.TextIOBase:
    if not path.exists():
        raise IngestError(f"{manifest.dataset_id}: file not found: {path}")
    if zipfile.is_zipfile(path):
        zf = zipfile.ZipFile(path)
        names = [n for n in zf.namelist() if not n.endswith("/")]
        if manifest.archive_member:
            matches = [n for n in names if fnmatch.fnmatch(n, manifest.archive_member)]
        else:
            matches = [n for n in names if n.lower().endswith((".csv", ".tsv", ".txt")) and "codebook" not in n.lower()]
        if not matches:
            zf.close()
            raise IngestError(f"{manifest.dataset_id}: no member matching {manifest.archive_member!r} in {path}")
        raw = zf.open(sorted(matches)[0])
    else:
        raw = open(path, "rb")
    return io.TextIOWrapper(raw, encoding="utf-8", errors="replace", newline="")


def _read_header(manifest: DatasetManifest, fh: io.TextIOBase, path: Path) -> tuple[str, ...]:
    first = fh.readline()
    if not first.strip():
        raise IngestError(f"{manifest.dataset_id}: {path} is empty (no header row)")
    header = tuple(first.rstrip("\r\n").split(manifest.delimiter))
    missing = [c for c in manifest.required_columns if c not in header]
    if missing:
        raise IngestError(f"{manifest.dataset_id}: header lacks required column(s): {', '.join(missing)}")
    return header


def iter_dataset(manifest: DatasetManifest, path: str | Path, chunk_rows: int = 100_000) -> Iterator[Table]:
    """Yield the file as consecutive tables of at most ``chunk_rows`` rows."""
    path = Path(path)
    with _open_text(manifest, path) as fh:
        header = _read_header(manifest, fh, path)
        width = len(header)
        d = manifest.delimiter
        rows: list[tuple[str, ...]] = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            fields = tuple(line.split(d))
            if len(fields) != width:
                raise IngestError(
                    f"{manifest.dataset_id}: line {lineno} has {len(fields)} fields, header has {width}"
                )
            rows.append(fields)
            if len(rows) >= chunk_rows:
                yield Table(manifest, header, tuple(rows))
                rows = []
        if rows:
            yield Table(manifest, header, tuple(rows))


def load_dataset(manifest: DatasetManifest, path: str | Path) -> Table:
    """Read a delimited file (or the data member of a zip archive) into a Table."""
    path = Path(path)
    chunks = list(iter_dataset(manifest, path, chunk_rows=1 << 62))
    if chunks:
        return chunks[0]
    with _open_text(manifest, path) as fh:
        header = _read_header(manifest, fh, path)
    return Table(manifest, header, ())


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


class Issue(NamedTuple):
    row_index: int
    column: str
    kind: str  # out-of-range | non-numeric | missing-column


@dataclass(frozen=True)
class ValidationReport:
    row_count: int
    issues: tuple[Issue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for issue in self.issues:
            out[issue.kind] = out.get(issue.kind, 0) + 1
        return out


def _is_int(text: str) -> bool:
    text = text.strip()
    if text[:1] in "+-":
        text = text[1:]
    return text.isdigit()


def validate_table(table: Table, manifest: DatasetManifest | None = None) -> ValidationReport:
    """Flag item cells outside 0..5 and non-numeric demographic cells.

    Row-level issues are ordered by row, then by column in manifest order.
    A column the manifest names but the table lacks is reported once with
    ``row_index = -1``.
    """
    manifest = manifest or table.manifest
    issues: list[Issue] = []
    item_cols = [(c, table._index.get(c)) for c in manifest.all_item_columns]
    demo_cols = [
        (c, table._index.get(c))
        for c in dict.fromkeys(manifest.demographic_columns[p] for p in PREDICTORS if p in manifest.demographic_columns)
    ]
    for name, idx in item_cols + demo_cols:
        if idx is None:
            issues.append(Issue(-1, name, "missing-column"))
    item_cols = [(c, i) for c, i in item_cols if i is not None]
    demo_cols = [(c, i) for c, i in demo_cols if i is not None]
    for r, row in enumerate(table.rows):
        for name, idx in item_cols:
            cell = row[idx].strip()
            if cell in ITEM_VALUES:
                continue
            issues.append(Issue(r, name, "out-of-range" if _is_int(cell) else "non-numeric"))
        for name, idx in demo_cols:
            cell = row[idx]
            if cell.strip() and not _is_int(cell):
                issues.append(Issue(r, name, "non-numeric"))
    return ValidationReport(len(table.rows), tuple(issues))


# ---------------------------------------------------------------------------
# merging
# ---------------------------------------------------------------------------


def _canonical_items() -> dict[str, tuple[str, ...]]:
    return {t: tuple(f"{t}{i}" for i in range(1, 11)) for t in TRAITS}


def merge_samples(tables: Sequence[Table], shared_variables: Iterable[str]) -> Table:
    """Stack tables row-wise on the variables they share plus all 50 items.

    Categorical predictors are recoded to their common ordinal codes during
    the merge (each source has its own codebook); ages and family sizes
    stay raw so the usual bucketing applies afterwards.  Item columns are
    renamed to ``E1 .. O10`` by position.
    """
    shared = list(dict.fromkeys(shared_variables))
    if not tables:
        raise ValueError("merge_samples needs at least one table")
    if not shared:
        raise ValueError("merge_samples needs at least one shared variable")
    for v in shared:
        if v != "country" and v not in PREDICTORS:
            raise ManifestError(f"unknown shared variable {v!r}")
    plans = []
    for table in tables:
        m = table.manifest
        cols = []
        for v in shared:
            try:
                col = m.column_for(v)
            except ManifestError as exc:
                raise ManifestError(f"cannot merge: {exc}") from None
            if not table.has_column(col):
                raise ManifestError(f"cannot merge: {m.dataset_id} lacks column {col!r} for {v!r}")
            cols.append((v, table._index[col], m.recode_maps.get(v)))
        items = [table._index[c] for c in m.all_item_columns]
        plans.append((table, cols, items))

    canon = _canonical_items()
    header = tuple(shared) + tuple(c for t in TRAITS for c in canon[t])
    rows: list[tuple[str, ...]] = []
    segments: list[tuple[str, int]] = []
    for table, cols, items in plans:
        for row in table.rows:
            out = []
            for _, idx, recode in cols:
                cell = row[idx]
                if recode is not None:
                    cell = str(recode.get(cell.strip(), 0))
                out.append(cell)
            out.extend(row[i] for i in items)
            rows.append(tuple(out))
        segments.extend(table.segments)

    source_ids = list(dict.fromkeys(sid for t in tables for sid in t.source_ids))
    predictors = [v for v in shared if v != "country"]
    recode = {
        v: {str(c): c for c in range(1, PREDICTOR_MAX[v] + 1)} for v in predictors if v not in BUCKETED
    }
    merged = DatasetManifest(
        dataset_id="+".join(source_ids),
        delimiter=tables[0].manifest.delimiter,
        item_columns=canon,
        demographic_columns={v: v for v in predictors},
        recode_maps=recode,
        key_table_ref=tables[0].manifest.key_table_ref,
        unavailable=tuple(p for p in PREDICTORS if p not in predictors),
        country_column="country" if "country" in shared else None,
        description="merged: " + ", ".join(source_ids),
    )
    return Table(merged, header, tuple(rows), tuple(segments))
