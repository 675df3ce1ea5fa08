"""Exhaustive CHAID regression trees over integer-coded categorical predictors.

For a continuous target every test is a one-way ANOVA F-test.  At each node
and for each predictor the observed categories are merged into groups:

* when the number of admissible groupings is small (``max_enumeration``),
  all of them are scored and the one with the smallest Bonferroni-adjusted
  p-value wins;
* otherwise the exhaustive merge sequence is used: repeatedly join the
  admissible pair of groups whose pairwise test is least significant, down
  to two groups, and keep the level with the smallest adjusted p-value.

Ordinal predictors may only join groups that are adjacent in code order;
code 0 (missing) floats and may join any group.  Nominal predictors join
freely.  The Bonferroni multiplier is the number of admissible groupings
with the chosen number of groups.  Among predictors the smallest adjusted
p-value splits the node if it is below ``alpha_split`` and every child keeps
at least ``min_child`` rows.

p-values are compared in log space so that highly significant splits on
large samples still rank correctly after the plain values underflow.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .frame import AnalysisFrame
from .statcore import DomainError, Summary, oneway_anova, welford_summary
from .variables import CATEGORY_LABELS, NOMINAL_PREDICTORS, PREDICTORS, TRAITS

__all__ = [
    "ChaidParams",
    "SplitCandidate",
    "ChaidNode",
    "ChaidTree",
    "stirling2",
    "bonferroni_multiplier",
    "admissible_partitions",
    "merge_categories",
    "best_split",
    "grow",
    "grow_tree",
    "assign_node",
    "assign_rows",
]

TEST_STATISTIC = "one-way ANOVA F-test (continuous target)"

KINDS = ("ordinal", "nominal")


def _default_kinds() -> dict[str, str]:
    return {p: ("nominal" if p in NOMINAL_PREDICTORS else "ordinal") for p in PREDICTORS}


@dataclass(frozen=True)
class ChaidParams:
    alpha_split: float = 0.05
    # kept for parameter compatibility; the exhaustive variant merges down to two groups regardless
    alpha_merge: float = 0.05
    max_depth: int = 3
    min_parent: int = 100
    min_child: int = 50
    bonferroni: bool = True
    predictor_kinds: Mapping[str, str] = field(default_factory=_default_kinds)
    max_enumeration: int = 5000

    def __post_init__(self) -> None:
        for name in ("alpha_split", "alpha_merge"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_child < 1:
            raise ValueError("min_child must be >= 1")
        if self.min_child > self.min_parent:
            raise ValueError("min_child must not exceed min_parent")
        bad = {k: v for k, v in self.predictor_kinds.items() if v not in KINDS}
        if bad:
            raise ValueError(f"predictor kinds must be ordinal or nominal: {bad}")
        if self.max_enumeration < 0:
            raise ValueError("max_enumeration must be >= 0")

    def kind(self, predictor: str) -> str:
        return self.predictor_kinds.get(predictor, "nominal" if predictor in NOMINAL_PREDICTORS else "ordinal")

    def to_dict(self) -> dict:
        return {
            "alpha_split": self.alpha_split,
            "alpha_merge": self.alpha_merge,
            "max_depth": self.max_depth,
            "min_parent": self.min_parent,
            "min_child": self.min_child,
            "bonferroni": self.bonferroni,
            "predictor_kinds": dict(sorted(self.predictor_kinds.items())),
            "max_enumeration": self.max_enumeration,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ChaidParams":
        data = dict(data)
        if "predictor_kinds" in data:
            kinds = _default_kinds()
            kinds.update(data["predictor_kinds"])
            data["predictor_kinds"] = kinds
        return cls(**data)


# ---------------------------------------------------------------------------
# counting and enumerating groupings
# ---------------------------------------------------------------------------


def stirling2(n: int, k: int) -> int:
    """Number of ways to partition ``n`` labelled items into ``k`` non-empty blocks."""
    if n < 0 or k < 0:
        raise DomainError("stirling2 needs non-negative arguments")
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    row = [1] + [0] * k
    for i in range(1, n + 1):
        for j in range(min(i, k), 0, -1):
            row[j] = j * row[j] + row[j - 1]
        row[0] = 0
    return row[k]


def bonferroni_multiplier(c: int, r: int, kind: str, floating: bool = False) -> int:
    """Number of admissible ways to reduce ``c`` categories to ``r`` groups.

    Nominal: Stirling number of the second kind S(c, r).  Ordinal:
    C(c - 1, r - 1) adjacent cut placements.  Ordinal with a floating
    missing category (counted in ``c``): C(c - 2, r - 2) + r * C(c - 2, r - 1).
    """
    if kind not in KINDS:
        raise DomainError(f"kind must be ordinal or nominal, got {kind!r}")
    if not 1 <= r <= c:
        raise DomainError(f"need 1 <= r <= c, got c={c}, r={r}")
    if kind == "nominal":
        return stirling2(c, r)
    if floating and c >= 2:
        alone = math.comb(c - 2, r - 2) if r >= 2 else 0
        return alone + r * math.comb(c - 2, r - 1)
    return math.comb(c - 1, r - 1)


def _group_key(group: Sequence[int]) -> tuple:
    real = [c for c in group if c != 0]
    return (min(real) if real else math.inf, tuple(group))


def _canonical(groups: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted((tuple(sorted(g)) for g in groups), key=_group_key))


def _set_partitions(items: Sequence[int]) -> Iterator[list[list[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def _ordinal_partitions(codes: Sequence[int], floating: bool) -> Iterator[list[list[int]]]:
    m = len(codes)
    if m == 0:
        if floating:
            yield [[0]]
        return
    for mask in range(1 << (m - 1)):
        groups: list[list[int]] = []
        current = [codes[0]]
        for i in range(1, m):
            if mask >> (i - 1) & 1:
                groups.append(current)
                current = [codes[i]]
            else:
                current.append(codes[i])
        groups.append(current)
        if not floating:
            yield groups
            continue
        yield groups + [[0]]
        for i in range(len(groups)):
            yield groups[:i] + [[0] + groups[i]] + groups[i + 1 :]


def admissible_partitions(codes: Sequence[int], kind: str) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Every admissible grouping of ``codes`` (any number of groups), canonicalised."""
    codes = sorted(set(int(c) for c in codes))
    if kind == "nominal":
        source = _set_partitions(codes)
    else:
        floating = 0 in codes
        source = _ordinal_partitions([c for c in codes if c != 0], floating)
    for groups in source:
        yield _canonical(groups)


def _admissible_count(c: int, kind: str, floating: bool) -> int:
    return sum(bonferroni_multiplier(c, r, kind, floating) for r in range(2, c + 1))


# ---------------------------------------------------------------------------
# merging
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitCandidate:
    predictor: str
    groups: tuple[tuple[int, ...], ...]
    raw_p: float
    multiplier: int
    adjusted_p: float
    statistic: float
    log_adjusted_p: float = 0.0
    df: tuple[int, int] = (0, 0)
    sizes: tuple[int, ...] = ()

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def to_dict(self) -> dict:
        return {
            "predictor": self.predictor,
            "groups": [list(g) for g in self.groups],
            "sizes": list(self.sizes),
            "statistic": _finite_or_str(self.statistic),
            "df": list(self.df),
            "raw_p": self.raw_p,
            "multiplier": self.multiplier,
            "adjusted_p": self.adjusted_p,
            "log_adjusted_p": _finite_or_str(self.log_adjusted_p),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SplitCandidate":
        return cls(
            predictor=data["predictor"],
            groups=tuple(tuple(g) for g in data["groups"]),
            raw_p=float(data["raw_p"]),
            multiplier=int(data["multiplier"]),
            adjusted_p=float(data["adjusted_p"]),
            statistic=float(data["statistic"]),
            log_adjusted_p=float(data["log_adjusted_p"]),
            df=tuple(data["df"]),
            sizes=tuple(data["sizes"]),
        )


def _finite_or_str(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _anova(parts: Sequence[Summary]) -> tuple[float, float, tuple[int, int]]:
    """(F, log p, df) with a no-evidence fallback when there is no within-group df."""
    n = sum(s.n for s in parts)
    k = len(parts)
    if k < 2 or n <= k:
        return 0.0, 0.0, (max(k - 1, 0), max(n - k, 0))
    res = oneway_anova(parts)
    return res.f, res.log_p, (res.df_between, res.df_within)


class _Scorer:
    """Scores groupings of one predictor's categories at one node."""

    def __init__(self, summaries: Mapping[int, Summary], kind: str, params: ChaidParams):
        self.summaries = summaries
        self.kind = kind
        self.params = params
        self.c = len(summaries)
        self.floating = kind == "ordinal" and 0 in summaries

    def merged(self, group: Sequence[int]) -> Summary:
        return Summary.combine(self.summaries[c] for c in group)

    def score(self, groups: tuple[tuple[int, ...], ...], predictor: str) -> SplitCandidate:
        parts = [self.merged(g) for g in groups]
        f, log_p, df = _anova(parts)
        r = len(groups)
        mult = bonferroni_multiplier(self.c, r, self.kind, self.floating) if self.params.bonferroni else 1
        log_adj = min(0.0, log_p + math.log(mult))
        return SplitCandidate(
            predictor=predictor,
            groups=groups,
            raw_p=math.exp(log_p),
            multiplier=mult,
            adjusted_p=math.exp(log_adj),
            statistic=f,
            log_adjusted_p=log_adj,
            df=df,
            sizes=tuple(p.n for p in parts),
        )


def _selection_key(cand: SplitCandidate) -> tuple:
    return (cand.log_adjusted_p, cand.n_groups, cand.groups)


def _merge_sequence(scorer: _Scorer) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Groupings visited by the pairwise merge sequence, from c groups down to 2."""
    codes = sorted(scorer.summaries)
    if scorer.floating:
        groups = [[c] for c in codes if c != 0] + [[0]]
    else:
        groups = [[c] for c in codes]
    yield _canonical(groups)
    while len(groups) > 2:
        if scorer.kind == "nominal":
            pairs = [(i, j) for i in range(len(groups)) for j in range(i + 1, len(groups))]
        else:
            ordered = sorted(range(len(groups)), key=lambda i: _group_key(groups[i]))
            float_idx = [i for i in ordered if groups[i] == [0]]
            chain = [i for i in ordered if groups[i] != [0]]
            pairs = [tuple(sorted(p)) for p in zip(chain, chain[1:])]
            for fi in float_idx:
                pairs.extend(tuple(sorted((fi, j))) for j in chain)
        best = None
        best_log_p = -math.inf
        for i, j in pairs:
            _, log_p, _ = _anova([scorer.merged(groups[i]), scorer.merged(groups[j])])
            if best is None or log_p > best_log_p:
                best, best_log_p = (i, j), log_p
        i, j = best
        merged = sorted(groups[i] + groups[j])
        groups = [g for k, g in enumerate(groups) if k not in (i, j)] + [merged]
        yield _canonical(groups)


def _as_summary(values) -> Summary:
    if isinstance(values, Summary):
        return values
    return welford_summary(values)


def merge_categories(
    groups: Mapping[int, Summary | Sequence[float]],
    kind: str = "ordinal",
    params: ChaidParams | None = None,
    predictor: str = "x",
) -> SplitCandidate:
    """Best grouping of one predictor's categories by adjusted p-value.

    ``groups`` maps each observed category code to its target values (or a
    precomputed Summary).  Groupings where some group has fewer than
    ``params.min_child`` rows are passed over when any grouping satisfies
    the limit.
    """
    params = params or ChaidParams(min_parent=1, min_child=1)
    if kind not in KINDS:
        raise ValueError(f"kind must be ordinal or nominal, got {kind!r}")
    summaries = {int(code): _as_summary(v) for code, v in groups.items()}
    summaries = {c: s for c, s in summaries.items() if s.n > 0}
    if len(summaries) < 2:
        raise ValueError(f"{predictor}: at least two observed categories are needed to split")
    scorer = _Scorer(summaries, kind, params)
    if _admissible_count(scorer.c, kind, scorer.floating) <= params.max_enumeration:
        candidates = (g for g in admissible_partitions(summaries, kind) if len(g) >= 2)
    else:
        candidates = _merge_sequence(scorer)

    best = best_ok = None
    for grouping in candidates:
        cand = scorer.score(grouping, predictor)
        if best is None or _selection_key(cand) < _selection_key(best):
            best = cand
        if min(cand.sizes) >= params.min_child and (best_ok is None or _selection_key(cand) < _selection_key(best_ok)):
            best_ok = cand
    return best_ok if best_ok is not None else best


def _code_summaries(codes: np.ndarray, y: np.ndarray) -> dict[int, Summary]:
    uniq, inv = np.unique(codes, return_inverse=True)
    counts = np.bincount(inv)
    means = np.bincount(inv, weights=y) / counts
    m2 = np.bincount(inv, weights=(y - means[inv]) ** 2)
    return {int(u): Summary(int(n), float(m), float(s)) for u, n, m, s in zip(uniq, counts, means, m2)}


def best_split(X: np.ndarray, y: np.ndarray, predictors: Sequence[str], params: ChaidParams) -> SplitCandidate | None:
    """Winning split for the rows ``(X, y)`` of one node, or None for a leaf.

    Ties on adjusted p go to the earlier predictor in ``predictors``.
    """
    X = np.asarray(X)
    y = np.asarray(y, dtype=float)
    if len(y) < params.min_parent:
        return None
    log_alpha = math.log(params.alpha_split)
    best = None
    best_key = None
    for j, name in enumerate(predictors):
        codes = X[:, j]
        if np.all(codes == codes[0]):
            continue
        cand = merge_categories(_code_summaries(codes, y), params.kind(name), params, name)
        if not cand.log_adjusted_p < log_alpha:
            continue
        if min(cand.sizes) < params.min_child:
            continue
        key = (cand.log_adjusted_p, j, cand.n_groups)
        if best_key is None or key < best_key:
            best, best_key = cand, key
    return best


# ---------------------------------------------------------------------------
# trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChaidNode:
    id: int
    depth: int
    parent: int | None
    split: SplitCandidate | None
    child_ids: tuple[int, ...]
    n: int
    mean: float
    sd: float
    branch: tuple[int, ...] | None = None  # parent's category codes leading here

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "depth": self.depth,
            "parent": self.parent,
            "branch": None if self.branch is None else list(self.branch),
            "n": self.n,
            "mean": self.mean,
            "sd": self.sd,
            "split": None if self.split is None else self.split.to_dict(),
            "children": list(self.child_ids),
        }


@dataclass(frozen=True)
class ChaidTree:
    target: str
    params: ChaidParams
    predictors: tuple[str, ...]
    nodes: tuple[ChaidNode, ...]
    metadata: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def root(self) -> ChaidNode:
        return self.nodes[0]

    def node(self, node_id: int) -> ChaidNode:
        return self.nodes[node_id]

    def leaves(self) -> list[ChaidNode]:
        return [nd for nd in self.nodes if nd.is_leaf]

    def split_predictors(self) -> set[str]:
        return {nd.split.predictor for nd in self.nodes if nd.split is not None}

    def path(self, node_id: int) -> list[tuple[str, tuple[int, ...]]]:
        """Conditions from the root to ``node_id`` as ``(predictor, codes)`` pairs."""
        out = []
        nd = self.nodes[node_id]
        while nd.parent is not None:
            parent = self.nodes[nd.parent]
            out.append((parent.split.predictor, nd.branch))
            nd = parent
        return out[::-1]

    @property
    def depth(self) -> int:
        return max(nd.depth for nd in self.nodes)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "predictors": list(self.predictors),
            "test": TEST_STATISTIC,
            "params": self.params.to_dict(),
            "metadata": dict(self.metadata),
            "nodes": [nd.to_dict() for nd in self.nodes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ChaidTree":
        nodes = tuple(
            ChaidNode(
                id=d["id"],
                depth=d["depth"],
                parent=d["parent"],
                split=None if d["split"] is None else SplitCandidate.from_dict(d["split"]),
                child_ids=tuple(d["children"]),
                n=d["n"],
                mean=d["mean"],
                sd=d["sd"],
                branch=None if d["branch"] is None else tuple(d["branch"]),
            )
            for d in data["nodes"]
        )
        return cls(
            target=data["target"],
            params=ChaidParams.from_dict(data["params"]),
            predictors=tuple(data["predictors"]),
            nodes=nodes,
            metadata=dict(data.get("metadata", {})),
        )

    def to_dot(self) -> str:
        lines = [
            "digraph chaid {",
            f'  label="Exhaustive CHAID: {self.target}";',
            "  node [shape=box, fontname=\"Helvetica\"];",
        ]
        for nd in self.nodes:
            label = f"Node {nd.id}\\nn = {nd.n}\\nmean = {nd.mean:.3f}\\nsd = {nd.sd:.3f}"
            if nd.split is not None:
                label += f"\\nsplit: {nd.split.predictor} (adj. p = {nd.split.adjusted_p:.3g})"
            lines.append(f'  n{nd.id} [label="{label}"];')
        for nd in self.nodes:
            if nd.parent is None:
                continue
            predictor = self.nodes[nd.parent].split.predictor
            lines.append(f'  n{nd.parent} -> n{nd.id} [label="{_branch_label(predictor, nd.branch)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def audit(self) -> list[str]:
        """Violations of the structural invariants (empty when the tree is sound)."""
        problems = []
        p = self.params
        for nd in self.nodes:
            if nd.depth > p.max_depth:
                problems.append(f"node {nd.id}: depth {nd.depth} > max_depth {p.max_depth}")
            if nd.is_leaf != (not nd.child_ids):
                problems.append(f"node {nd.id}: leaf flag disagrees with children")
            if nd.parent is not None and nd.n < p.min_child:
                problems.append(f"node {nd.id}: n = {nd.n} < min_child {p.min_child}")
            if nd.child_ids:
                kids = [self.nodes[c] for c in nd.child_ids]
                if sum(k.n for k in kids) != nd.n:
                    problems.append(f"node {nd.id}: children n do not sum to parent n")
                mean = sum(k.n * k.mean for k in kids) / nd.n
                if abs(mean - nd.mean) > 1e-9 * max(1.0, abs(nd.mean)):
                    problems.append(f"node {nd.id}: children means do not average to parent mean")
                if any(k.parent != nd.id or k.depth != nd.depth + 1 for k in kids):
                    problems.append(f"node {nd.id}: child links inconsistent")
        ids = [nd.id for nd in self.nodes]
        if ids != list(range(len(ids))):
            problems.append("node ids are not dense 0..N-1")
        return problems


def _branch_label(predictor: str, codes: Sequence[int]) -> str:
    labels = CATEGORY_LABELS.get(predictor, {})
    parts = []
    for c in codes:
        if c == 0:
            parts.append("missing")
        elif c in labels:
            parts.append(f"{c} {labels[c]}")
        else:
            parts.append(str(c))
    return f"{predictor}: " + "; ".join(parts)


def _node_stats(values: np.ndarray) -> tuple[int, float, float]:
    s = welford_summary(values.tolist())
    sd = s.sd if s.n >= 2 else 0.0
    return s.n, s.mean, sd


def grow(
    X: np.ndarray,
    y: np.ndarray,
    predictors: Sequence[str],
    params: ChaidParams | None = None,
    target: str = "y",
    metadata: Mapping[str, object] | None = None,
) -> ChaidTree:
    """Grow a tree breadth-first on code matrix ``X`` (one column per predictor) and target ``y``."""
    params = params or ChaidParams()
    X = np.asarray(X)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(predictors):
        raise ValueError("X must have one column per predictor")
    if len(y) == 0:
        raise ValueError("cannot grow a tree on an empty table")
    if np.isnan(y).any():
        raise ValueError("target contains missing values")
    X = X.astype(np.int64)

    built: list[dict] = []

    def new_node(idx, depth, parent, branch):
        n, mean, sd = _node_stats(y[idx])
        built.append(dict(id=len(built), depth=depth, parent=parent, branch=branch, idx=idx,
                          n=n, mean=mean, sd=sd, split=None, child_ids=[]))
        return built[-1]["id"]

    new_node(np.arange(len(y)), 0, None, None)
    queue = deque([0])
    while queue:
        node = built[queue.popleft()]
        idx = node["idx"]
        if node["depth"] >= params.max_depth or node["n"] < params.min_parent:
            continue
        split = best_split(X[idx], y[idx], predictors, params)
        if split is None:
            continue
        node["split"] = split
        column = X[idx, predictors.index(split.predictor)]
        for group in split.groups:
            child = new_node(idx[np.isin(column, group)], node["depth"] + 1, node["id"], group)
            node["child_ids"].append(child)
            queue.append(child)

    nodes = tuple(
        ChaidNode(
            id=b["id"],
            depth=b["depth"],
            parent=b["parent"],
            split=b["split"],
            child_ids=tuple(b["child_ids"]),
            n=b["n"],
            mean=b["mean"],
            sd=b["sd"],
            branch=b["branch"],
        )
        for b in built
    )
    meta = {"test": TEST_STATISTIC}
    meta.update(metadata or {})
    return ChaidTree(target, params, tuple(predictors), nodes, meta)


def grow_tree(
    frame: AnalysisFrame,
    trait: str,
    predictors: Sequence[str],
    params: ChaidParams | None = None,
) -> ChaidTree:
    """Tree for one trait of a scored frame; rows with a missing trait are dropped first."""
    if trait not in TRAITS:
        raise ValueError(f"unknown trait {trait!r}")
    y = frame.trait(trait)
    keep = ~np.isnan(y)
    if not keep.any():
        raise ValueError(f"no rows with a {trait} score")
    X = np.column_stack([frame.predictor(p) for p in predictors])[keep]
    meta = {"datasets": list(frame.dataset_ids), "keying": frame.keying_id}
    return grow(X, y[keep], tuple(predictors), params, target=trait, metadata=meta)


def assign_node(tree: ChaidTree, record) -> int:
    """Leaf id for a record (mapping or EncodedPredictors of predictor codes).

    A code not seen at a split follows the branch holding the missing code,
    else the child with the most rows (lowest id on ties).
    """
    node = tree.root
    while node.split is not None:
        try:
            code = int(record[node.split.predictor])
        except (KeyError, AttributeError):
            code = 0
        kids = [tree.nodes[c] for c in node.child_ids]
        target = next((k for k in kids if code in k.branch), None)
        if target is None:
            target = next((k for k in kids if 0 in k.branch), None)
        if target is None:
            target = max(kids, key=lambda k: (k.n, -k.id))
        node = target
    return node.id


def assign_rows(tree: ChaidTree, X: np.ndarray) -> np.ndarray:
    """Leaf id per row of a code matrix whose columns follow ``tree.predictors``."""
    X = np.asarray(X)
    if len(X) == 0:
        return np.zeros(0, dtype=np.int64)
    uniq, inv = np.unique(X, axis=0, return_inverse=True)
    ids = np.array([assign_node(tree, dict(zip(tree.predictors, map(int, row)))) for row in uniq])
    return ids[np.asarray(inv).ravel()]
