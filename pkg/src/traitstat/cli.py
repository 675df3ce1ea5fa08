"""Command-line entry point: ``traitstat <command> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
Diagnostics go to stderr; results go to files or stdout.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from ._toml import TOMLDecodeError, load_toml
from .chaid import ChaidParams, grow_tree
from .ingest import (
    BUILTIN_DATASETS,
    IngestError,
    ManifestError,
    iter_dataset,
    load_dataset,
    validate_table,
)
from .pipeline import (
    FACTOR_DATASETS,
    DataError,
    RunConfig,
    choose_keying,
    fetch_dataset,
    merged_frame,
    reproduce,
    resolve_manifest,
    resolve_path,
)
from .published import DESCRIPTIVES
from .regress import DesignError, fit_factor_model
from .report import (
    FORMATS,
    CountryAccumulator,
    Num,
    TableDoc,
    country_aggregates,
    regression_table,
    render,
    score_summary,
)
from .scoring import KEYINGS, builtin_key_table, score_table
from .statcore import Summary
from .variables import FACTOR_SETS, TRAITS

log = logging.getLogger("traitstat")

MISSING_FLAGS = {"zero": "zero-include", "drop": "drop-row"}

DEFAULTS = {
    "keying": "auto",
    "missing": "zero",
    "alpha": 0.05,
    "alpha_merge": 0.05,
    "max_depth": 3,
    "min_parent": 100,
    "min_child": 50,
    "threads": 1,
    "format": "text",
    "cache": None,
    "out": None,
}


class UsageError(Exception):
    """Bad flags or configuration (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2, which is reserved for data errors
        raise UsageError(f"{self.prog}: {message}")


def _pair(text: str) -> tuple[str, str]:
    name, sep, value = text.partition("=")
    if not sep or not name or not value:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH, got {text!r}")
    return name, value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML file with defaults (flags take precedence)")
    common.add_argument("--cache", help="download cache directory (default $TRAITSTAT_CACHE or ~/.cache/traitstat)")
    common.add_argument("--data", action="append", type=_pair, default=[], metavar="NAME=PATH",
                        help="use a local file for a dataset")
    common.add_argument("--manifest", action="append", type=_pair, default=[], metavar="NAME=PATH",
                        help="override a dataset's column manifest")
    common.add_argument("--keying", choices=KEYINGS + ("auto",), help="item key table (default auto)")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--format", choices=FORMATS, help="table format (default text)")
    common.add_argument("-v", "--verbose", action="store_true")

    dataset = _Parser(add_help=False)
    dataset.add_argument("--dataset", action="append", choices=BUILTIN_DATASETS, help="dataset (repeatable)")

    model = _Parser(add_help=False)
    model.add_argument("--factors", choices=tuple(FACTOR_SETS), required=True)
    model.add_argument("--trait", choices=TRAITS, help="one trait (default: all five)")

    missing = _Parser(add_help=False)
    missing.add_argument("--missing", choices=tuple(MISSING_FLAGS), help="0-coded predictors: zero (keep) or drop")

    chaid = _Parser(add_help=False)
    chaid.add_argument("--alpha", type=float, help="split significance level (default 0.05)")
    chaid.add_argument("--alpha-merge", type=float, dest="alpha_merge", help="merge significance level")
    chaid.add_argument("--max-depth", type=int, dest="max_depth")
    chaid.add_argument("--min-parent", type=int, dest="min_parent")
    chaid.add_argument("--min-child", type=int, dest="min_child")

    threads = _Parser(add_help=False)
    threads.add_argument("--threads", type=int, help="worker threads (default 1)")

    parser = _Parser(prog="traitstat", description="Big-Five trait scores, regressions and CHAID trees.")
    parser.add_argument("--version", action="version", version=f"traitstat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("fetch", parents=[common, dataset], help="download datasets into the cache")
    p = sub.add_parser("validate", parents=[common, dataset], help="check a dataset's cells")
    p.add_argument("--strict", action="store_true", help="exit 2 when any cell is invalid")
    sub.add_parser("score", parents=[common, dataset], help="write trait scores per row")
    p = sub.add_parser("describe", parents=[common, dataset], help="trait means and SDs")
    p.add_argument("--by-country", action="store_true", help="per-country aggregates instead")
    sub.add_parser("regress", parents=[common, dataset, model, missing], help="linear regressions on a factor set")
    sub.add_parser("tree", parents=[common, dataset, model, chaid, threads], help="CHAID trees on a factor set")
    sub.add_parser("reproduce", parents=[common, missing, chaid, threads], help="run every analysis the local data supports")
    return parser


# ---------------------------------------------------------------------------
# settings
# ---------------------------------------------------------------------------


def _settings(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over built-in defaults."""
    config: Mapping = {}
    if args.config:
        try:
            config = load_toml(args.config)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except TOMLDecodeError as exc:
            raise UsageError(f"{args.config}: {exc}") from None
        unknown = set(config) - set(DEFAULTS) - {"data", "manifests"}
        if unknown:
            raise UsageError(f"{args.config}: unknown key(s): {', '.join(sorted(unknown))}")
    out = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else config.get(key, default)
    out["data"] = {**dict(config.get("data", {})), **dict(args.data)}
    out["manifests"] = {**dict(config.get("manifests", {})), **dict(args.manifest)}
    if out["missing"] not in MISSING_FLAGS:
        raise UsageError(f"missing must be one of {tuple(MISSING_FLAGS)}")
    return out


def _chaid_params(s: Mapping) -> ChaidParams:
    try:
        return ChaidParams(
            alpha_split=float(s["alpha"]),
            alpha_merge=float(s["alpha_merge"]),
            max_depth=int(s["max_depth"]),
            min_parent=int(s["min_parent"]),
            min_child=int(s["min_child"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _run_config(s: Mapping, chaid: ChaidParams | None = None) -> RunConfig:
    try:
        return RunConfig(
            data=s["data"],
            manifests=s["manifests"],
            cache=s["cache"],
            keying=s["keying"],
            missing_policy=MISSING_FLAGS[s["missing"]],
            chaid=chaid or ChaidParams(),
            out=s["out"] or "traitstat-out",
            threads=int(s["threads"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _require_path(name: str, cfg: RunConfig) -> Path:
    path = resolve_path(name, cfg)
    if path is None:
        raise DataError(f"{name}: no local copy; run 'traitstat fetch --dataset {name}' or pass --data {name}=PATH")
    return path


def _resolve_keying(keying: str, name: str, manifest, path: Path) -> str:
    if keying != "auto":
        return keying
    first = next(iter_dataset(manifest, path), None)
    if first is None or name not in DESCRIPTIVES:
        return "eq1"
    choice, dist = choose_keying(first, DESCRIPTIVES[name])
    log.info("keying auto-selected on %s: %s (%s)", name, choice,
             ", ".join(f"{k} {v:.3f}" for k, v in sorted(dist.items())))
    return choice


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8", newline="\n")
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_fetch(args, s) -> int:
    cfg = _run_config(s)
    for name in args.dataset or BUILTIN_DATASETS:
        path = fetch_dataset(resolve_manifest(name, cfg.manifests), cfg.cache)
        print(f"{name}\t{path}")
    return 0


def cmd_validate(args, s) -> int:
    cfg = _run_config(s)
    bad = False
    for name in args.dataset or BUILTIN_DATASETS:
        manifest = resolve_manifest(name, cfg.manifests)
        path = _require_path(name, cfg)
        rows = 0
        counts: dict[str, int] = {}
        for chunk in iter_dataset(manifest, path):
            report = validate_table(chunk, manifest)
            rows += report.row_count
            for kind, n in report.counts().items():
                counts[kind] = counts.get(kind, 0) + n
        bad |= bool(counts)
        detail = ", ".join(f"{k} {v}" for k, v in sorted(counts.items())) or "no issues"
        print(f"{name}\trows {rows}\t{detail}")
    return 2 if bad and args.strict else 0


def cmd_score(args, s) -> int:
    cfg = _run_config(s)
    names = args.dataset or []
    if len(names) != 1:
        raise UsageError("score needs exactly one --dataset")
    name = names[0]
    manifest = resolve_manifest(name, cfg.manifests)
    path = _require_path(name, cfg)
    key_table = builtin_key_table(_resolve_keying(cfg.keying, name, manifest, path), manifest)
    lines = ["row,source," + ",".join(TRAITS)]
    offset = 0
    for chunk in iter_dataset(manifest, path):
        scores = score_table(chunk, key_table)
        for i, row in enumerate(scores):
            cells = ["" if np.isnan(v) else str(int(v)) for v in row]
            lines.append(f"{offset + i},{name}," + ",".join(cells))
        offset += len(chunk)
    _emit("\n".join(lines) + "\n", s["out"])
    return 0


def cmd_describe(args, s) -> int:
    cfg = _run_config(s)
    names = args.dataset or [n for n in BUILTIN_DATASETS if resolve_path(n, cfg) is not None]
    if not names:
        raise DataError("no dataset available locally; run 'traitstat fetch' or pass --data NAME=PATH")
    blocks = []
    for name in names:
        manifest = resolve_manifest(name, cfg.manifests)
        path = _require_path(name, cfg)
        key_table = builtin_key_table(_resolve_keying(cfg.keying, name, manifest, path), manifest)
        if args.by_country:
            if not manifest.country_column:
                raise UsageError(f"{name} has no country column")
            acc = CountryAccumulator()
            for chunk in iter_dataset(manifest, path):
                acc.add(chunk.column(manifest.country_column), score_table(chunk, key_table))
            blocks.append(render(country_aggregates(acc), s["format"]))
            continue
        parts = []
        for chunk in iter_dataset(manifest, path):
            scores = score_table(chunk, key_table)
            parts.append([score_summary(scores[:, j]) for j in range(len(TRAITS))])
        combined = [Summary.combine(p[j] for p in parts) for j in range(len(TRAITS))]
        doc = TableDoc(
            title=f"Trait descriptives: {name} (keying {key_table.keying_id})",
            columns=("Trait", "N", "Mean", "SD"),
            rows=tuple((t, c.n, Num(c.mean, 2), Num(c.sd, 2)) for t, c in zip(TRAITS, combined)),
            metadata={"datasets": [name], "keying": key_table.keying_id},
        )
        blocks.append(render(doc, s["format"]))
    _emit("\n".join(blocks), s["out"])
    return 0


def _model_frame(args, cfg: RunConfig):
    """Frame for a factor set: the requested datasets, or every default one present locally."""
    fs = args.factors
    if args.dataset:
        names = tuple(dict.fromkeys(args.dataset))
        for n in names:
            manifest = resolve_manifest(n, cfg.manifests)
            if not any(p in manifest.demographic_columns for p in FACTOR_SETS[fs]):
                raise UsageError(f"{n} carries none of the {fs} predictors")
    else:
        names = tuple(n for n in FACTOR_DATASETS[fs] if resolve_path(n, cfg) is not None)
        if not names:
            raise DataError(f"{fs} models need {' or '.join(FACTOR_DATASETS[fs])}; none available locally")
    tables = {}
    for n in names:
        tables[n] = load_dataset(resolve_manifest(n, cfg.manifests), _require_path(n, cfg))
    keying = cfg.keying
    if keying == "auto":
        ref = names[0]
        keying = choose_keying(tables[ref], DESCRIPTIVES[ref])[0] if ref in DESCRIPTIVES else "eq1"
    return merged_frame(tables, names, FACTOR_SETS[fs], keying)


def cmd_regress(args, s) -> int:
    cfg = _run_config(s)
    frame = _model_frame(args, cfg)
    traits = [args.trait] if args.trait else list(TRAITS)
    fits = [fit_factor_model(frame, args.factors, t, cfg.missing_policy) for t in traits]
    _emit(render(regression_table(fits), s["format"]), s["out"])
    return 0


def cmd_tree(args, s) -> int:
    params = _chaid_params(s)
    cfg = _run_config(s, params)
    frame = _model_frame(args, cfg)
    traits = [args.trait] if args.trait else list(TRAITS)
    out = Path(s["out"] or ".")
    out.mkdir(parents=True, exist_ok=True)
    ds = frame.dataset_label.replace("+", "-")
    for t in traits:
        tree = grow_tree(frame, t, FACTOR_SETS[args.factors], params)
        stem = out / f"tree_{args.factors}_{t}_{ds}"
        stem.with_suffix(".json").write_text(tree.to_json() + "\n", encoding="utf-8", newline="\n")
        stem.with_suffix(".dot").write_text(tree.to_dot(), encoding="utf-8", newline="\n")
        print(f"{t}\t{len(tree)} nodes\t{stem}.json\t{stem}.dot")
    return 0


def cmd_reproduce(args, s) -> int:
    cfg = _run_config(s, _chaid_params(s))
    bundle = reproduce(cfg)
    for item in bundle.skipped:
        print(f"SKIPPED {item['item']}: {item['reason']}", file=sys.stderr)
    print(f"keying {bundle.run['keying']} ({bundle.run['keying_choice']})", file=sys.stderr)
    print(f"wrote {len(bundle.files)} files to {cfg.out}")
    return 0


COMMANDS = {
    "fetch": cmd_fetch,
    "validate": cmd_validate,
    "score": cmd_score,
    "describe": cmd_describe,
    "regress": cmd_regress,
    "tree": cmd_tree,
    "reproduce": cmd_reproduce,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(message)s",
            stream=sys.stderr,
        )
        settings = _settings(args)
        return COMMANDS[args.command](args, settings)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, IngestError, DesignError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (ManifestError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
