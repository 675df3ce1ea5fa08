"""Dataset resolution, download cache and the end-to-end reproduction run.

Outputs are deterministic: jobs run on a thread pool but results are
assembled in submission order, nothing time- or host-dependent is written,
and file names carry a hash of the run configuration (thread count and
output directory excluded).
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import shutil
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import __version__
from .chaid import ChaidParams, ChaidTree, assign_rows, grow_tree
from .frame import AnalysisFrame, build_frame
from .ingest import (
    BUILTIN_DATASETS,
    DatasetManifest,
    IngestError,
    builtin_manifest,
    iter_dataset,
    load_dataset,
    load_manifest,
    merge_samples,
)
from .published import (
    DESCRIPTIVES,
    EQUATIONS,
    EXPECTED_DELTAS,
    FLAGGED_LEAVES,
    TABLE_BIOLOGICAL_LABELS,
    TABLE_F,
    TOLERANCE_B,
    TREE_FACTORS,
)
from .regress import MISSING_POLICIES, RegressionFit, fit_factor_model
from .report import (
    CountryAccumulator,
    Num,
    TableDoc,
    boxplot_summary,
    country_aggregates,
    country_anova,
    descriptives,
    regression_table,
    render,
    sample_anova,
    score_summary,
)
from .scoring import KEYINGS, builtin_key_table, score_table
from .statcore import Summary
from .variables import FACTOR_SETS, PREDICTORS, TRAITS

__all__ = [
    "CACHE_ENV",
    "DataError",
    "RunConfig",
    "cache_dir",
    "file_sha256",
    "fetch_dataset",
    "resolve_manifest",
    "resolve_path",
    "factor_datasets",
    "choose_keying",
    "compare_fits",
    "reproduce",
]

log = logging.getLogger(__name__)

CACHE_ENV = "TRAITSTAT_CACHE"

# datasets feeding each factor set; biological merges whatever of these is present
FACTOR_DATASETS = {
    "biological": ("sample1", "sample2"),
    "family": ("sample2",),
    "culture": ("sample2",),
}

BOX_COUNTRIES = ("CA", "US")


class DataError(Exception):
    """Input data missing, unreadable or unusable (CLI exit code 2)."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    data: Mapping[str, str] = field(default_factory=dict)
    manifests: Mapping[str, str] = field(default_factory=dict)
    cache: str | None = None
    keying: str = "auto"
    missing_policy: str = "zero-include"
    chaid: ChaidParams = field(default_factory=ChaidParams)
    out: str = "traitstat-out"
    threads: int = 1

    def __post_init__(self) -> None:
        if self.keying not in KEYINGS + ("auto",):
            raise ValueError(f"keying must be one of {KEYINGS + ('auto',)}")
        if self.missing_policy not in MISSING_POLICIES:
            raise ValueError(f"missing policy must be one of {MISSING_POLICIES}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        unknown = set(self.data) - set(BUILTIN_DATASETS)
        if unknown:
            raise ValueError(f"unknown dataset name(s): {sorted(unknown)}")

    def identity(self) -> dict:
        """The parts of the configuration that determine the outputs."""
        return {
            "keying": self.keying,
            "missing_policy": self.missing_policy,
            "chaid": self.chaid.to_dict(),
            "manifests": {k: file_sha256(v) for k, v in sorted(self.manifests.items())},
        }


def cache_dir(explicit: str | None = None) -> Path:
    if explicit:
        return Path(explicit)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "traitstat"


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def resolve_manifest(name: str, overrides: Mapping[str, str] | None = None) -> DatasetManifest:
    overrides = overrides or {}
    if name in overrides:
        return load_manifest(overrides[name])
    return builtin_manifest(name)


def _cached_name(manifest: DatasetManifest) -> str:
    suffix = Path(manifest.url.split("?")[0]).suffix if manifest.url else ""
    return manifest.dataset_id + (suffix or ".dat")


def resolve_path(name: str, config: RunConfig) -> Path | None:
    """Local file for a dataset: explicit path first, then the cache; None if absent."""
    if name in config.data:
        path = Path(config.data[name])
        if not path.exists():
            raise DataError(f"{name}: file not found: {path}")
        return path
    manifest = resolve_manifest(name, config.manifests)
    base = cache_dir(config.cache)
    for candidate in (base / _cached_name(manifest), *sorted(base.glob(f"{name}.*"))):
        if candidate.is_file() and not candidate.name.endswith((".sha256", ".part")):
            return candidate
    return None


def fetch_dataset(
    manifest: DatasetManifest,
    cache: str | Path | None = None,
    opener: Callable = urllib.request.urlopen,
) -> Path:
    """Download a dataset archive into the cache and verify its checksum.

    With a pinned ``sha256`` in the manifest a mismatch is an error.
    Without one the first download's digest is recorded next to the file
    and later downloads must match it.
    """
    if not manifest.url:
        raise DataError(f"{manifest.dataset_id}: manifest has no download URL")
    base = cache_dir(str(cache) if cache else None)
    base.mkdir(parents=True, exist_ok=True)
    target = base / _cached_name(manifest)
    digest_file = target.with_name(target.name + ".sha256")
    expected = manifest.sha256 or (digest_file.read_text().strip() if digest_file.exists() else "")
    if target.exists() and expected and file_sha256(target) == expected:
        log.info("%s: cached copy verified", manifest.dataset_id)
        return target
    partial = target.with_name(target.name + ".part")
    try:
        with opener(manifest.url) as response, open(partial, "wb") as fh:
            shutil.copyfileobj(response, fh)
    except OSError as exc:
        partial.unlink(missing_ok=True)
        raise DataError(f"{manifest.dataset_id}: download failed: {exc}") from None
    digest = file_sha256(partial)
    if expected and digest != expected:
        partial.unlink()
        raise DataError(f"{manifest.dataset_id}: checksum mismatch (expected {expected}, got {digest})")
    partial.replace(target)
    digest_file.write_text(digest + "\n")
    return target


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------


def factor_datasets(factor_set: str, available: Sequence[str]) -> tuple[str, ...]:
    return tuple(d for d in FACTOR_DATASETS[factor_set] if d in available)


def _trait_means(frame: AnalysisFrame) -> dict[str, float]:
    return {t: float(np.nanmean(frame.trait(t))) for t in TRAITS}


def choose_keying(table, reference: Mapping[str, tuple[float, float]]) -> tuple[str, dict]:
    """Keying whose trait means lie closest (summed absolute distance) to ``reference``."""
    distances = {}
    for keying in KEYINGS:
        means = _trait_means(build_frame(table, keying))
        distances[keying] = sum(abs(means[t] - reference[t][0]) for t in TRAITS)
    best = min(KEYINGS, key=lambda k: (distances[k], k))
    return best, distances


def merged_frame(tables: Mapping[str, object], names: Sequence[str], shared: Sequence[str], keying: str) -> AnalysisFrame:
    if len(names) == 1:
        return build_frame(tables[names[0]], keying)
    return build_frame(merge_samples([tables[n] for n in names], shared), keying)


# ---------------------------------------------------------------------------
# comparison with the published values
# ---------------------------------------------------------------------------

COMPARISON_COLUMNS = (
    "factor_set", "trait", "equation", "term", "table_label", "published", "computed",
    "delta", "sign_agrees", "within_tolerance", "flag", "note",
)


def compare_fits(
    fits: Sequence[RegressionFit],
    reference: Mapping[tuple[str, str], tuple[int, Mapping[str, float]]] = EQUATIONS,
    tolerance: float = TOLERANCE_B,
    expected: Mapping[tuple[str, str, str], str] = EXPECTED_DELTAS,
    table_f: Mapping[tuple[str, str], float] = TABLE_F,
) -> TableDoc:
    """Per-coefficient deltas against published equations.

    ``flag`` is ``ok`` within tolerance with matching sign, ``EXPECTED`` for
    a listed inconsistency of the published values, else ``DELTA``.  A model
    row per fit reports the F statistic and whether its p is below 0.001.
    """
    rows = []
    for fit in fits:
        key = (fit.metadata["factor_set"], fit.metadata["trait"])
        if key not in reference:
            continue
        eq, coefs = reference[key]
        for i, term in enumerate(fit.terms):
            pub = coefs.get(term)
            label = "Constant" if term == "const" else term
            if key[0] == "biological" and term != "const" and len(fit.terms) == 4:
                label = TABLE_BIOLOGICAL_LABELS[i - 1]
            if pub is None:
                rows.append((key[0], key[1], eq, term, label, "", Num(fit.coef[i]), "", "", "", "DELTA", "no published value"))
                continue
            delta = fit.coef[i] - pub
            sign_ok = (pub == 0) or (math.copysign(1, pub) == math.copysign(1, fit.coef[i]))
            within = abs(delta) <= tolerance
            note = expected.get((key[0], key[1], term), "")
            flag = "ok" if within and sign_ok else ("EXPECTED" if note else "DELTA")
            rows.append((key[0], key[1], eq, term, label, Num(pub), Num(fit.coef[i]), Num(delta), sign_ok, within, flag, note))
        pub_f = table_f.get(key)
        sig = fit.p_model < 0.001
        rows.append((
            key[0], key[1], eq, "F", "F", "" if pub_f is None else Num(pub_f), Num(fit.f),
            "" if pub_f is None else Num(fit.f - pub_f), "", sig, "ok" if sig else "DELTA",
            "model p < 0.001" if sig else f"model p = {fit.p_model:.3g}",
        ))
    return TableDoc(title="Computed coefficients against the published equations", columns=COMPARISON_COLUMNS, rows=tuple(rows))


def tree_summary(trees: Sequence[tuple[str, ChaidTree, np.ndarray]]) -> TableDoc:
    """Per tree: split predictors against the published factor list and the flagged leaves."""
    rows = []
    for factor_set, tree, X in trees:
        key = (factor_set, tree.target)
        used = tree.split_predictors()
        pub, pub_max = TREE_FACTORS.get(key, (frozenset(), None))
        flagged = ""
        if key in FLAGGED_LEAVES:
            desc, _, target = FLAGGED_LEAVES[key]
            leaf = flagged_leaf(tree, X, key)
            flagged = f"{desc}: published {target:.2f}, " + (
                "no such leaf" if leaf is None else f"node {leaf.id} mean {leaf.mean:.2f}"
            )
        rows.append((
            factor_set, tree.target, len(tree), tree.depth, ";".join(sorted(used)), ";".join(sorted(pub)),
            used <= pub, "" if pub_max is None else pub_max + 1, flagged,
        ))
    return TableDoc(
        title="Tree structure against the published factor lists",
        columns=("factor_set", "trait", "nodes", "depth", "split_predictors", "published_factors",
                 "subset", "published_nodes", "flagged_leaf"),
        rows=tuple(rows),
    )


def flagged_leaf(tree: ChaidTree, X: np.ndarray, key: tuple[str, str]):
    """Leaf closest to the published flagged mean among leaves dominated by the flagged profile.

    A leaf is dominated by the profile when more than half of its rows
    carry the profile's codes.
    """
    _, profile, target = FLAGGED_LEAVES[key]
    leaves = assign_rows(tree, X)
    match = np.ones(len(X), dtype=bool)
    for name, codes in profile.items():
        col = X[:, tree.predictors.index(name)]
        match &= np.isin(col, sorted(codes))
    best = None
    for leaf in tree.leaves():
        in_leaf = leaves == leaf.id
        if in_leaf.sum() and match[in_leaf].mean() > 0.5:
            if best is None or abs(leaf.mean - target) < abs(best.mean - target):
                best = leaf
    return best


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------


@dataclass
class Bundle:
    files: dict[str, str] = field(default_factory=dict)
    skipped: list[dict] = field(default_factory=list)
    run: dict = field(default_factory=dict)


def _with_meta(text: str, meta: Mapping, ext: str) -> str:
    lines = [f"run.{k}: {json.dumps(v, sort_keys=True)}" for k, v in sorted(meta.items())]
    prefix = "// " if ext == "dot" else "# "
    return "".join(prefix + line + "\n" for line in lines) + text


def _json_with_meta(payload: dict, meta: Mapping) -> str:
    return json.dumps({"run": dict(meta), **payload}, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _table_files(stem: str, doc: TableDoc, meta: Mapping) -> dict[str, str]:
    return {
        f"{stem}.txt": _with_meta(render(doc, "text"), meta, "txt"),
        f"{stem}.csv": _with_meta(render(doc, "csv"), meta, "csv"),
    }


def reproduce(config: RunConfig) -> Bundle:
    """Run every analysis the available data supports and write the bundle to ``config.out``."""
    paths = {name: resolve_path(name, config) for name in BUILTIN_DATASETS}
    available = [n for n, p in paths.items() if p is not None]
    bundle = Bundle()
    for name, path in paths.items():
        if path is None:
            bundle.skipped.append({"item": f"dataset {name}", "reason": "no local file (run fetch or pass --data)"})

    manifests = {n: resolve_manifest(n, config.manifests) for n in available}
    hashes = {n: file_sha256(paths[n]) for n in available}
    tables = {}
    for n in available:
        if n == "sample3":
            continue  # streamed below
        try:
            tables[n] = load_dataset(manifests[n], paths[n])
        except IngestError as exc:
            raise DataError(str(exc)) from None

    keying = config.keying
    keying_note = "requested"
    if keying == "auto":
        ref_name = next((n for n in ("sample1", "sample2") if n in tables), None)
        if ref_name is None:
            keying, keying_note = "eq1", "default (no sample for automatic choice)"
        else:
            keying, dist = choose_keying(tables[ref_name], DESCRIPTIVES[ref_name])
            keying_note = f"auto on {ref_name}: " + ", ".join(f"{k} {v:.3f}" for k, v in sorted(dist.items()))

    identity = config.identity()
    identity.update({"datasets": hashes, "keying_resolved": keying, "version": __version__})
    run_hash = hashlib.sha256(json.dumps(identity, sort_keys=True).encode()).hexdigest()[:10]
    meta = {
        "version": __version__,
        "config_hash": run_hash,
        "dataset_sha256": hashes,
        "keying": keying,
        "keying_choice": keying_note,
        "missing_policy": config.missing_policy,
        "chaid": config.chaid.to_dict(),
    }
    bundle.run = meta

    frames = {n: build_frame(t, keying) for n, t in tables.items()}
    jobs: list[tuple[str, Callable[[], object]]] = []

    for n in ("sample1", "sample2"):
        if n in frames:
            jobs.append((f"describe:{n}", lambda n=n: descriptives(frames[n])))
    if "sample3" in available:
        jobs.append(("country:sample3", lambda: _country_pass(manifests["sample3"], paths["sample3"], keying)))

    factor_frames = {}
    for fs in FACTOR_SETS:
        names = factor_datasets(fs, tables)
        if not names:
            need = " or ".join(FACTOR_DATASETS[fs])
            bundle.skipped.append({"item": f"{fs} models and trees", "reason": f"needs {need}"})
            continue
        factor_frames[fs] = merged_frame(tables, names, FACTOR_SETS[fs], keying)
        for t in TRAITS:
            jobs.append((f"fit:{fs}:{t}", lambda fs=fs, t=t: fit_factor_model(factor_frames[fs], fs, t, config.missing_policy)))
            jobs.append((f"tree:{fs}:{t}", lambda fs=fs, t=t: grow_tree(factor_frames[fs], t, FACTOR_SETS[fs], config.chaid)))

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        futures = [(name, pool.submit(fn)) for name, fn in jobs]
        results = {name: fut.result() for name, fut in futures}

    files = bundle.files
    # descriptives and cross-sample comparison
    desc_frames = []
    for n in ("sample1", "sample2"):
        if f"describe:{n}" in results:
            files.update(_table_files(f"describe_{n}_{run_hash}", results[f"describe:{n}"], meta))
            desc_frames.append(frames[n])
    if "country:sample3" in results:
        desc3, acc, box = results["country:sample3"]
        files.update(_table_files(f"describe_sample3_{run_hash}", desc3, meta))
        files.update(_table_files(f"countries_sample3_{run_hash}", country_aggregates(acc), meta))
        files.update(_table_files(f"country-anova_sample3_{run_hash}", country_anova(acc), meta))
        files.update(_table_files(f"country-anova-CA-US_sample3_{run_hash}", country_anova(acc, BOX_COUNTRIES), meta))
        files.update(_table_files(f"boxplot-CA-US_sample3_{run_hash}", box, meta))
    if desc_frames:
        files.update(_table_files(f"sample-anova_{'-'.join(f.dataset_label for f in desc_frames)}_{run_hash}",
                                  sample_anova(desc_frames), meta))

    all_fits: list[RegressionFit] = []
    tree_rows = []
    for fs, frame in factor_frames.items():
        ds = frame.dataset_label.replace("+", "-")
        fits = [results[f"fit:{fs}:{t}"] for t in TRAITS]
        all_fits.extend(fits)
        files.update(_table_files(f"regress_{fs}_all_{ds}_{run_hash}", regression_table(fits), meta))
        for t, fit in zip(TRAITS, fits):
            files[f"fit_{fs}_{t}_{ds}_{run_hash}.json"] = _json_with_meta(fit.to_dict(), meta)
            tree: ChaidTree = results[f"tree:{fs}:{t}"]
            stem = f"tree_{fs}_{t}_{ds}_{run_hash}"
            files[f"{stem}.json"] = _json_with_meta(tree.to_dict(), meta)
            files[f"{stem}.dot"] = _with_meta(tree.to_dot(), meta, "dot")
            keep = ~np.isnan(frame.trait(t))
            X = np.column_stack([frame.predictor(p) for p in FACTOR_SETS[fs]])[keep]
            tree_rows.append((fs, tree, X))
    if all_fits:
        files.update(_table_files(f"comparison_{run_hash}", compare_fits(all_fits), meta))
        files.update(_table_files(f"trees_{run_hash}", tree_summary(tree_rows), meta))

    files[f"manifest_{run_hash}.json"] = _json_with_meta(
        {"files": sorted(files), "skipped": bundle.skipped}, meta
    )
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        (out / name).write_text(files[name], encoding="utf-8", newline="\n")
    return bundle


def _country_pass(manifest: DatasetManifest, path: Path, keying: str):
    """Stream the large sample once: descriptives, country aggregates and CA/US box plots."""
    acc = CountryAccumulator()
    key_table = builtin_key_table(keying, manifest)
    parts: list[list[Summary]] = []
    box_scores: dict[str, list[np.ndarray]] = {c: [] for c in BOX_COUNTRIES}
    try:
        for chunk in iter_dataset(manifest, path):
            scores = score_table(chunk, key_table)
            country = np.array([c.strip() for c in chunk.column(manifest.country_column)], dtype=object)
            acc.add(country, scores)
            parts.append([score_summary(scores[:, j]) for j in range(len(TRAITS))])
            for c in BOX_COUNTRIES:
                box_scores[c].append(scores[country == c])
    except IngestError as exc:
        raise DataError(str(exc)) from None

    combined = [Summary.combine(p[j] for p in parts) for j in range(len(TRAITS))]
    desc = TableDoc(
        title=f"Trait descriptives: {manifest.dataset_id}",
        columns=("Trait", "N", "Mean", "SD"),
        rows=tuple((t, s.n, Num(s.mean, 2), Num(s.sd, 2)) for t, s in zip(TRAITS, combined)),
        metadata={"datasets": [manifest.dataset_id], "keying": keying},
    )
    blocks = [(c, np.vstack(v) if v else np.empty((0, len(TRAITS)))) for c, v in box_scores.items()]
    stacked = np.vstack([b for _, b in blocks])
    box_frame = AnalysisFrame(
        scores=stacked,
        predictors=np.zeros((len(stacked), len(PREDICTORS)), dtype=np.int16),
        sources=np.full(len(stacked), manifest.dataset_id, dtype=object),
        country=np.array([c for c, b in blocks for _ in range(len(b))], dtype=object),
        available=frozenset(),
        dataset_ids=(manifest.dataset_id,),
        keying_id=keying,
    )
    return desc, acc, boxplot_summary(box_frame, BOX_COUNTRIES)

