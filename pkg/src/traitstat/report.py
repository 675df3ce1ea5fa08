"""Tables for regression results, descriptives and per-country aggregates.

Every numeric cell carries its own print precision and is formatted with
round-half-away-from-zero on the decimal expansion of the float, so output
does not depend on the locale or on binary rounding artefacts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

import numpy as np

from .frame import AnalysisFrame
from .published import EQUATIONS
from .regress import RegressionFit
from .statcore import Summary, oneway_anova
from .variables import TRAITS

__all__ = [
    "Num",
    "TableDoc",
    "format_fixed",
    "regression_table",
    "descriptives",
    "score_summary",
    "CountryAccumulator",
    "country_aggregates",
    "country_anova",
    "sample_anova",
    "boxplot_summary",
    "render",
    "FORMATS",
]

FORMATS = ("text", "csv", "json")

MISSING_COUNTRY = frozenset({"", "NONE", "NA", "NULL"})


def format_fixed(x: float, places: int = 3) -> str:
    """Fixed-point text rounded half away from zero; ``-0.000`` prints as ``0.000``."""
    if isinstance(x, (int, np.integer)) and places == 0:
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    q = Decimal(1).scaleb(-places)
    d = Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP)
    if d.is_zero():
        d = abs(d)
    return f"{d:f}"


@dataclass(frozen=True)
class Num:
    """A number with its print precision."""

    value: float
    places: int = 3

    def __str__(self) -> str:
        return format_fixed(self.value, self.places)


@dataclass(frozen=True)
class TableDoc:
    title: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...] = ()
    notes: tuple[str, ...] = ()
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"{self.title}: row {i} has {len(row)} cells, expected {width}")

    def text_rows(self) -> list[list[str]]:
        return [[_cell_text(c) for c in row] for row in self.rows]


def _cell_text(cell) -> str:
    if isinstance(cell, Num):
        return str(cell)
    if isinstance(cell, bool):
        return "yes" if cell else "no"
    if isinstance(cell, (int, np.integer)):
        return str(int(cell))
    if isinstance(cell, float):
        return format_fixed(cell, 3)
    return "" if cell is None else str(cell)


def _is_text(cell) -> bool:
    return not isinstance(cell, (Num, int, float, np.integer, np.floating)) or isinstance(cell, bool)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def regression_table(fits: Sequence[RegressionFit]) -> TableDoc:
    """One block per trait: constant row, then a row per predictor."""
    if not fits:
        raise ValueError("no fits to tabulate")
    sets = {f.metadata.get("factor_set") for f in fits}
    if len(sets) != 1:
        raise ValueError(f"fits mix factor sets: {sorted(map(str, sets))}")
    factor_set = sets.pop()
    rows = []
    for fit in fits:
        trait = fit.metadata.get("trait", "?")
        eq = EQUATIONS.get((factor_set, trait), (None,))[0]
        for i, term in enumerate(fit.terms):
            first = i == 0
            rows.append(
                (
                    f"Y_{trait}" if first else "",
                    "Constant" if term == "const" else f"X_{term}",
                    Num(fit.coef[i]),
                    Num(fit.se[i]),
                    Num(fit.t[i]),
                    Num(fit.p[i]),
                    Num(fit.f) if first else "",
                    Num(fit.p_model) if first else "",
                    f"({eq})" if first and eq is not None else "",
                    fit.n if first else "",
                )
            )
    title = f"Linear regression of trait scores on {factor_set} factors" if factor_set else "Linear regression"
    meta = {k: v for k, v in fits[0].metadata.items() if k not in ("trait",)}
    return TableDoc(
        title=title,
        columns=("Model", "Term", "B", "SE", "T", "P", "F", "P(model)", "Equation", "N"),
        rows=tuple(rows),
        metadata=meta,
    )


def score_summary(values: np.ndarray) -> Summary:
    """Summary of the non-missing entries of a score column."""
    v = values[~np.isnan(values)]
    if v.size == 0:
        return Summary()
    mean = float(v.mean())
    return Summary(int(v.size), mean, float(((v - mean) ** 2).sum()))


def descriptives(frame: AnalysisFrame, label: str | None = None) -> TableDoc:
    """Per trait n, mean and sd over the rows where that trait is present."""
    rows = []
    for t in TRAITS:
        s = score_summary(frame.trait(t)) if len(frame) else Summary()
        rows.append((t, s.n, Num(s.mean, 2), Num(s.sd, 2)))
    label = label or frame.dataset_label
    return TableDoc(
        title=f"Trait descriptives: {label}",
        columns=("Trait", "N", "Mean", "SD"),
        rows=tuple(rows),
        metadata={"datasets": list(frame.dataset_ids), "keying": frame.keying_id},
    )


class CountryAccumulator:
    """Streaming per-country summaries over rows whose five scores are all present.

    Feed it chunk by chunk with :meth:`add`; chunks combine with the
    pairwise summary update, so any chunking gives the same result up to
    rounding.
    """

    def __init__(self) -> None:
        self.summaries: dict[str, list[Summary]] = {}
        self.valid_rows = 0
        self.missing_country = 0

    def add(self, country: Sequence[str], scores: np.ndarray) -> None:
        country = np.asarray(country, dtype=object)
        complete = ~np.isnan(scores).any(axis=1)
        self.valid_rows += int(complete.sum())
        codes = np.array([c.strip() if isinstance(c, str) else "" for c in country], dtype=object)
        known = np.array([c not in MISSING_COUNTRY for c in codes], dtype=bool)
        self.missing_country += int((complete & ~known).sum())
        keep = complete & known
        if not keep.any():
            return
        codes = codes[keep].astype(str)
        sc = scores[keep]
        uniq, inv = np.unique(codes, return_inverse=True)
        counts = np.bincount(inv)
        for j in range(len(TRAITS)):
            y = sc[:, j]
            means = np.bincount(inv, weights=y) / counts
            m2 = np.bincount(inv, weights=(y - means[inv]) ** 2)
            for k, code in enumerate(uniq):
                part = Summary(int(counts[k]), float(means[k]), float(m2[k]))
                slot = self.summaries.setdefault(str(code), [Summary()] * len(TRAITS))
                slot[j] = slot[j].merge(part)

    def add_frame(self, frame: AnalysisFrame) -> None:
        if frame.country is None:
            raise ValueError(f"{frame.dataset_label} has no country column")
        self.add(frame.country, frame.scores)

    def ordered(self) -> list[tuple[str, list[Summary]]]:
        """Countries by row count descending, then code."""
        return sorted(self.summaries.items(), key=lambda kv: (-kv[1][0].n, kv[0]))

    def __len__(self) -> int:
        return len(self.summaries)


def country_aggregates(source: AnalysisFrame | CountryAccumulator) -> TableDoc:
    """One row per country: count and per-trait mean and sd."""
    acc = source
    if isinstance(source, AnalysisFrame):
        acc = CountryAccumulator()
        acc.add_frame(source)
    columns = ["Country", "N"]
    for t in TRAITS:
        columns += [f"{t}_mean", f"{t}_sd"]
    rows = []
    for code, parts in acc.ordered():
        row = [code, parts[0].n]
        for s in parts:
            row += [Num(s.mean), Num(s.sd)]
        rows.append(tuple(row))
    return TableDoc(
        title="Per-country trait aggregates",
        columns=tuple(columns),
        rows=tuple(rows),
        notes=(f"valid rows: {acc.valid_rows}", f"valid rows without a country code: {acc.missing_country}"),
        metadata={"countries": len(acc), "valid_rows": acc.valid_rows},
    )


def _anova_rows(groups_by_trait: Mapping[str, Sequence[Summary]]) -> list[tuple]:
    rows = []
    for t in TRAITS:
        groups = [g for g in groups_by_trait[t] if g.n > 0]
        try:
            res = oneway_anova(groups)
            rows.append((t, len(groups), res.df_between, res.df_within, Num(res.f), Num(res.p)))
        except ValueError:
            rows.append((t, len(groups), 0, 0, "", ""))
    return rows


def country_anova(acc: CountryAccumulator, countries: Iterable[str] | None = None) -> TableDoc:
    """One-way ANOVA of each trait across countries (all, or the listed ones)."""
    selected = [(c, p) for c, p in acc.ordered() if countries is None or c in set(countries)]
    by_trait = {t: [parts[j] for _, parts in selected] for j, t in enumerate(TRAITS)}
    label = "all countries" if countries is None else ", ".join(c for c, _ in selected)
    return TableDoc(
        title=f"Trait differences between countries ({label})",
        columns=("Trait", "Groups", "df1", "df2", "F", "P"),
        rows=tuple(_anova_rows(by_trait)),
    )


def sample_anova(frames: Sequence[AnalysisFrame]) -> TableDoc:
    """One-way ANOVA of each trait across samples."""
    by_trait = {t: [score_summary(f.trait(t)) for f in frames] for t in TRAITS}
    return TableDoc(
        title="Trait differences between samples (" + ", ".join(f.dataset_label for f in frames) + ")",
        columns=("Trait", "Groups", "df1", "df2", "F", "P"),
        rows=tuple(_anova_rows(by_trait)),
    )


def boxplot_summary(frame: AnalysisFrame, countries: Sequence[str]) -> TableDoc:
    """Quartiles and 1.5 IQR whiskers per trait for each listed country."""
    if frame.country is None:
        raise ValueError(f"{frame.dataset_label} has no country column")
    codes = np.array([str(c).strip() for c in frame.country])
    complete = frame.complete()
    rows = []
    for code in countries:
        mask = complete & (codes == code)
        for j, t in enumerate(TRAITS):
            y = frame.scores[mask, j]
            if y.size == 0:
                rows.append((code, t, 0, "", "", "", "", ""))
                continue
            q1, med, q3 = np.percentile(y, [25, 50, 75])
            iqr = q3 - q1
            lo = float(y[y >= q1 - 1.5 * iqr].min())
            hi = float(y[y <= q3 + 1.5 * iqr].max())
            rows.append((code, t, int(y.size), Num(lo, 2), Num(q1, 2), Num(med, 2), Num(q3, 2), Num(hi, 2)))
    return TableDoc(
        title="Box-plot summary by country",
        columns=("Country", "Trait", "N", "Whisker_low", "Q1", "Median", "Q3", "Whisker_high"),
        rows=tuple(rows),
    )


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def render(doc: TableDoc, fmt: str = "text") -> str:
    """Serialize ``doc`` as aligned text, CSV or JSON."""
    if fmt == "text":
        return _render_text(doc)
    if fmt == "csv":
        return _render_csv(doc)
    if fmt == "json":
        return _render_json(doc)
    raise ValueError(f"unknown format {fmt!r} (have {', '.join(FORMATS)})")


def _render_text(doc: TableDoc) -> str:
    cells = doc.text_rows()
    widths = [len(c) for c in doc.columns]
    for row in cells:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    numeric = [all(not _is_text(r[i]) or r[i] == "" for r in doc.rows) and bool(doc.rows) for i in range(len(doc.columns))]

    def line(values):
        out = [v.rjust(w) if num else v.ljust(w) for v, w, num in zip(values, widths, numeric)]
        return "  ".join(out).rstrip()

    lines = [doc.title, line(doc.columns), "  ".join("-" * w for w in widths)]
    lines += [line(row) for row in cells]
    lines += [f"# {n}" for n in doc.notes]
    return "\n".join(lines) + "\n"


def _csv_quote(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


def _render_csv(doc: TableDoc) -> str:
    """Comma-separated; header and text cells quoted, numbers bare."""
    lines = [",".join(_csv_quote(c) for c in doc.columns)]
    for row, texts in zip(doc.rows, doc.text_rows()):
        lines.append(",".join(_csv_quote(t) if _is_text(c) else t for c, t in zip(row, texts)))
    return "\n".join(lines) + "\n"


def _json_cell(cell):
    if isinstance(cell, Num):
        text = str(cell)
        try:
            value = float(text)
        except ValueError:
            return text
        return value if math.isfinite(value) else text
    if isinstance(cell, (int, np.integer)) and not isinstance(cell, bool):
        return int(cell)
    if isinstance(cell, float):
        return _json_cell(Num(cell))
    return cell


def _render_json(doc: TableDoc) -> str:
    payload = {
        "title": doc.title,
        "columns": list(doc.columns),
        "rows": [[_json_cell(c) for c in row] for row in doc.rows],
        "notes": list(doc.notes),
        "metadata": dict(doc.metadata),
    }
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"
