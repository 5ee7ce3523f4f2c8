"""Quantile binning of continuous scores into ordinal levels."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import InsufficientData


@dataclass(frozen=True)
class DiscretizationSpec:
    """Fitted cut points per variable.

    For k bins each variable has k-1 thresholds at the j/k empirical
    quantiles (linear interpolation, h = (n-1)p + 1).  Duplicate
    thresholds are collapsed, which reduces that variable's level count;
    collapsed variables are listed in `collapsed`.
    """

    k: int
    thresholds: dict[str, tuple[float, ...]]
    fitted_on: str = "full-sample"  # or "train-only"
    collapsed: tuple[str, ...] = ()

    def level_count(self, var: str) -> int:
        return len(self.thresholds[var]) + 1

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "fitted_on": self.fitted_on,
            "collapsed": list(self.collapsed),
            "thresholds": {v: list(t) for v, t in self.thresholds.items()},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DiscretizationSpec":
        return cls(
            k=doc["k"],
            thresholds={v: tuple(t) for v, t in doc["thresholds"].items()},
            fitted_on=doc.get("fitted_on", "full-sample"),
            collapsed=tuple(doc.get("collapsed", ())),
        )


@dataclass(frozen=True)
class DiscreteDataset:
    """Ordinal levels in 1..k (NaN = missing) plus per-variable level counts."""

    frame: pd.DataFrame = field(repr=False)
    level_counts: dict[str, int] = field(default_factory=dict)

    @property
    def n_cases(self) -> int:
        return len(self.frame)


def quantile_thresholds(scores, k: int):
    """Empirical quantiles at j/k, j = 1..k-1, by linear interpolation.

    Returns the strictly increasing threshold list after collapsing
    duplicates, plus a flag telling whether any collapsed.
    """
    values = np.asarray(scores, dtype=float)
    values = values[~np.isnan(values)]
    if len(values) < k:
        raise InsufficientData(f"need at least {k} values, got {len(values)}")
    probs = np.arange(1, k) / k
    raw = np.quantile(values, probs, method="linear")
    thresholds = []
    for t in raw:
        if not thresholds or t > thresholds[-1]:
            thresholds.append(float(t))
    return thresholds, len(thresholds) < k - 1


def assign_levels(values, thresholds):
    """Map values to 1-based levels; a value equal to a threshold falls in
    the lower bin (closed-left rule).  NaN propagates."""
    values = np.asarray(values, dtype=float)
    thr = np.asarray(thresholds, dtype=float)
    levels = np.searchsorted(thr, values, side="left") + 1.0
    levels[np.isnan(values)] = np.nan
    return levels


class QuantileDiscretizer:
    """Transformer with the usual fit/transform surface.

    fit() learns per-column thresholds from a DataFrame of scores;
    transform() maps scores to ordinal levels under the fitted spec.
    """

    def __init__(self, k: int = 5, fitted_on: str = "full-sample"):
        if k < 2:
            raise ValueError("k must be >= 2")
        self.k = k
        self.fitted_on = fitted_on
        self.spec_: DiscretizationSpec | None = None

    def get_params(self, deep: bool = True) -> dict:
        return {"k": self.k, "fitted_on": self.fitted_on}

    def set_params(self, **params) -> "QuantileDiscretizer":
        for key, value in params.items():
            if key not in ("k", "fitted_on"):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, scores: pd.DataFrame, y=None) -> "QuantileDiscretizer":
        thresholds = {}
        collapsed = []
        for col in scores.columns:
            thr, clp = quantile_thresholds(scores[col].to_numpy(), self.k)
            thresholds[col] = tuple(thr)
            if clp:
                collapsed.append(col)
        self.spec_ = DiscretizationSpec(
            k=self.k, thresholds=thresholds,
            fitted_on=self.fitted_on, collapsed=tuple(collapsed))
        return self

    def transform(self, scores: pd.DataFrame) -> DiscreteDataset:
        return discretize_scores(scores, self.spec_)

    def fit_transform(self, scores: pd.DataFrame, y=None) -> DiscreteDataset:
        return self.fit(scores).transform(scores)


def discretize_scores(scores: pd.DataFrame, spec: DiscretizationSpec) -> DiscreteDataset:
    """Apply a fitted DiscretizationSpec column by column."""
    if spec is None:
        raise ValueError("discretizer is not fitted")
    missing = [c for c in scores.columns if c not in spec.thresholds]
    if missing:
        raise KeyError(f"no thresholds fitted for columns {missing}")
    out = {}
    for col in scores.columns:
        out[col] = assign_levels(scores[col].to_numpy(), spec.thresholds[col])
    frame = pd.DataFrame(out, index=scores.index)
    counts = {c: spec.level_count(c) for c in scores.columns}
    return DiscreteDataset(frame=frame, level_counts=counts)
