"""Ordinary least squares on integer-coded predictors, with t and F inference.

Predictor codes enter the design as plain numbers (no dummy expansion), so
a coefficient is the change in the trait per one-step increase of the code.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import qr, solve_triangular

from .frame import AnalysisFrame
from .statcore import f_sf, two_sided_p
from .variables import FACTOR_SETS, PREDICTORS, TRAITS

__all__ = [
    "MISSING_POLICIES",
    "DesignError",
    "RankDeficientError",
    "DesignSpec",
    "RegressionFit",
    "build_design",
    "ols_fit",
    "predict",
    "fit_factor_model",
]

MISSING_POLICIES = ("zero-include", "drop-row")

# relative to the largest column norm of the augmented design
RANK_TOL = 1e-10


class DesignError(ValueError):
    """The design cannot be fitted (empty, too few rows, unknown predictors)."""


class RankDeficientError(DesignError):
    def __init__(self, column: str, message: str | None = None):
        self.column = column
        super().__init__(message or f"rank-deficient design: column {column!r} is a linear combination of the others")


@dataclass(frozen=True)
class DesignSpec:
    trait: str
    predictors: tuple[str, ...]
    missing_policy: str = "zero-include"

    def __post_init__(self) -> None:
        if self.trait not in TRAITS:
            raise DesignError(f"unknown trait {self.trait!r}")
        if not self.predictors:
            raise DesignError("a design needs at least one predictor")
        if len(set(self.predictors)) != len(self.predictors):
            raise DesignError("duplicate predictor in design")
        unknown = [p for p in self.predictors if p not in PREDICTORS]
        if unknown:
            raise DesignError(f"unknown predictor(s): {unknown}")
        if self.missing_policy not in MISSING_POLICIES:
            raise DesignError(f"missing_policy must be one of {MISSING_POLICIES}")


@dataclass(frozen=True)
class RegressionFit:
    """Intercept first: ``terms[0] == "const"``, then one entry per predictor."""

    terms: tuple[str, ...]
    coef: tuple[float, ...]
    se: tuple[float, ...]
    t: tuple[float, ...]
    p: tuple[float, ...]
    f: float
    p_model: float
    n: int
    df_resid: int
    r2: float
    rss: float
    metadata: Mapping[str, object] = field(default_factory=dict, compare=False)

    @property
    def intercept(self) -> float:
        return self.coef[0]

    @property
    def predictors(self) -> tuple[str, ...]:
        return self.terms[1:]

    def coefficient(self, term: str) -> float:
        return self.coef[self.terms.index(term)]

    def to_dict(self) -> dict:
        return {
            "terms": [
                {"name": name, "b": _json_float(b), "se": _json_float(se), "t": _json_float(t), "p": _json_float(p)}
                for name, b, se, t, p in zip(self.terms, self.coef, self.se, self.t, self.p)
            ],
            "f": _json_float(self.f),
            "p_model": _json_float(self.p_model),
            "n": self.n,
            "df_model": len(self.terms) - 1,
            "df_resid": self.df_resid,
            "r2": _json_float(self.r2),
            "rss": _json_float(self.rss),
            "metadata": dict(self.metadata),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)

    @classmethod
    def from_dict(cls, data: Mapping) -> "RegressionFit":
        terms = data["terms"]
        return cls(
            terms=tuple(t["name"] for t in terms),
            coef=tuple(_from_json_float(t["b"]) for t in terms),
            se=tuple(_from_json_float(t["se"]) for t in terms),
            t=tuple(_from_json_float(t["t"]) for t in terms),
            p=tuple(_from_json_float(t["p"]) for t in terms),
            f=_from_json_float(data["f"]),
            p_model=_from_json_float(data["p_model"]),
            n=int(data["n"]),
            df_resid=int(data["df_resid"]),
            r2=_from_json_float(data["r2"]),
            rss=_from_json_float(data["rss"]),
            metadata=dict(data.get("metadata", {})),
        )


def _json_float(x):
    if isinstance(x, (np.floating, np.integer)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _from_json_float(x) -> float:
    return math.nan if x is None else float(x)


def build_design(frame: AnalysisFrame, spec: DesignSpec) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix of predictor codes and target vector for ``spec``.

    Rows with a missing target are dropped; under ``drop-row`` so is any row
    with a 0-coded predictor.  Row order follows the frame.
    """
    y = frame.trait(spec.trait)
    X = np.column_stack([frame.predictor(p) for p in spec.predictors]).astype(float)
    keep = ~np.isnan(y)
    if spec.missing_policy == "drop-row":
        keep &= (X != 0).all(axis=1)
    if not keep.any():
        raise DesignError(f"no rows left for trait {spec.trait} after filtering")
    return X[keep], y[keep]


def ols_fit(X, y, names: Sequence[str] | None = None) -> RegressionFit:
    """Least squares with an intercept via pivoted QR.

    Standard errors use the unbiased residual variance RSS / (n - p - 1).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if y.shape != (n,):
        raise DesignError(f"y has shape {y.shape}, expected ({n},)")
    names = tuple(names) if names is not None else tuple(f"x{i + 1}" for i in range(k))
    if len(names) != k:
        raise DesignError("names length does not match the number of columns")
    if n <= k + 1:
        raise DesignError(f"need more than {k + 1} rows for {k} predictor(s), got {n}")
    terms = ("const",) + names
    A = np.column_stack([np.ones(n), X])
    Q, R, piv = qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = RANK_TOL * diag[0] if diag.size else 0.0
    if diag.size and diag[-1] <= tol:
        rank = int((diag > tol).sum())
        raise RankDeficientError(terms[piv[rank]])
    beta_p = solve_triangular(R, Q.T @ y)
    beta = np.empty(k + 1)
    beta[piv] = beta_p
    resid = y - A @ beta
    rss = float(resid @ resid)
    df = n - k - 1
    sigma2 = rss / df
    Rinv = solve_triangular(R, np.eye(k + 1))
    var_p = (Rinv * Rinv).sum(axis=1) * sigma2
    var = np.empty(k + 1)
    var[piv] = var_p
    se = np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.copysign(np.inf, beta)))
    p = tuple(two_sided_p(float(ti), df) for ti in t)

    tss = float(((y - y.mean()) ** 2).sum())
    if tss > 0:
        r2 = min(1.0, max(0.0, 1.0 - rss / tss))
        # exact fits leave float noise in rss
        if rss <= 1e-24 * tss:
            r2 = 1.0
    else:
        r2 = 0.0
    if k == 0:
        f = math.nan
        p_model = math.nan
    elif r2 >= 1.0:
        f = math.inf
        p_model = 0.0
    else:
        f = (r2 / k) / ((1.0 - r2) / df)
        p_model = f_sf(f, k, df)
    return RegressionFit(
        terms=terms,
        coef=tuple(float(b) for b in beta),
        se=tuple(float(s) for s in se),
        t=tuple(float(v) for v in t),
        p=p,
        f=float(f),
        p_model=float(p_model),
        n=n,
        df_resid=df,
        r2=float(r2),
        rss=rss,
    )


def predict(fit: RegressionFit, x) -> float:
    """``intercept + sum(b_i * x_i)``; ``x`` is a sequence in term order or a name -> code mapping."""
    if isinstance(x, (list, tuple, np.ndarray)):
        values = list(x)
    else:
        values = [x[name] for name in fit.predictors]
    if len(values) != len(fit.predictors):
        raise ValueError(f"expected {len(fit.predictors)} predictor values, got {len(values)}")
    total = fit.coef[0]
    for b, v in zip(fit.coef[1:], values):
        total += b * v
    return total


def fit_factor_model(
    frame: AnalysisFrame,
    factor_set: str,
    trait: str,
    missing_policy: str = "zero-include",
) -> RegressionFit:
    """OLS of one trait on the predictors of a factor set."""
    if factor_set not in FACTOR_SETS:
        raise DesignError(f"unknown factor set {factor_set!r} (have {', '.join(FACTOR_SETS)})")
    predictors = FACTOR_SETS[factor_set]
    if not frame.available.intersection(predictors):
        raise DesignError(
            f"dataset {frame.dataset_label} carries none of the {factor_set} predictors {predictors}"
        )
    spec = DesignSpec(trait, predictors, missing_policy)
    X, y = build_design(frame, spec)
    fit = ols_fit(X, y, predictors)
    meta = {
        "factor_set": factor_set,
        "trait": trait,
        "datasets": list(frame.dataset_ids),
        "missing_policy": missing_policy,
        "keying": frame.keying_id,
    }
    return RegressionFit(**{**fit.__dict__, "metadata": meta})
