"""Analytics over a fitted network: information gain, predictions, metrics,
contour grids and conditional profiles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discretize import DiscreteDataset
from .errors import InvalidDistribution, LengthMismatch, ZeroProbabilityEvidence
from .bn.net import BayesNet, posterior

DIST_TOL = 1e-8


def _log(x: float, base) -> float:
    if base == "e":
        return math.log(x)
    return math.log(x) / math.log(float(base))


def entropy(dist, base=2) -> float:
    """Shannon entropy -sum p log p, with 0 log 0 taken as 0."""
    p = np.asarray(dist, dtype=float)
    if (p < -DIST_TOL).any() or abs(p.sum() - 1.0) > 1e-6:
        raise InvalidDistribution("entropy input is not a probability vector")
    p = p[p > 0]
    return float(-sum(pi * _log(pi, base) for pi in p))


def conditional_entropy(net: BayesNet, x: str, y: str, base=2) -> float:
    """H(X | Y) = sum_y P(y) H(X | Y=y), by exact inference."""
    if x == y:
        raise ValueError("x and y must differ")
    p_y = posterior(net, y, {}).probs
    h = 0.0
    for level, py in enumerate(p_y, start=1):
        if py <= 0:
            continue
        p_x_given = posterior(net, x, {y: level}).probs
        h += py * entropy(p_x_given, base)
    return h


def information_gain(net: BayesNet, x: str, y: str, base=2) -> float:
    """IG(X;Y) = H(X) - H(X|Y); equals the mutual information."""
    h_x = entropy(posterior(net, x, {}).probs, base)
    return h_x - conditional_entropy(net, x, y, base)


@dataclass(frozen=True)
class InfoGainReport:
    target: str
    entries: tuple[dict, ...]  # source, entropy, conditional_entropy, info_gain
    log_base: object = 2

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "log_base": str(self.log_base),
            "edges": [
                {"source": e["source"], "target": self.target,
                 "weight": e["info_gain"],
                 "entropy": e["entropy"],
                 "conditional_entropy": e["conditional_entropy"]}
                for e in self.entries
            ],
        }


def info_gain_report(net: BayesNet, target: str, base=2) -> InfoGainReport:
    """IG of the target with respect to every other node, sorted descending."""
    h_t = entropy(posterior(net, target, {}).probs, base)
    entries = []
    for node in net.dag.nodes:
        if node == target:
            continue
        h_cond = conditional_entropy(net, target, node, base)
        entries.append({
            "source": node,
            "entropy": h_t,
            "conditional_entropy": h_cond,
            "info_gain": h_t - h_cond,
        })
    entries.sort(key=lambda e: (-e["info_gain"], e["source"]))
    return InfoGainReport(target=target, entries=tuple(entries), log_base=base)


def predict(net: BayesNet, target: str, cases: DiscreteDataset, evidence_nodes):
    """Posterior-argmax prediction of the target per case.

    Evidence is the case's observed levels on evidence_nodes (missing
    cells are left out).  Cases whose evidence has probability zero are
    skipped (None in the output).  Returns (predictions, n_skipped).
    """
    evidence_nodes = list(evidence_nodes)
    if target in evidence_nodes:
        raise ValueError("target may not be an evidence node")
    predictions: list[int | None] = []
    n_skipped = 0
    cache: dict[tuple, int] = {}
    frame = cases.frame
    for _, row in frame.iterrows():
        evidence = {n: int(row[n]) for n in evidence_nodes
                    if not math.isnan(row[n])}
        key = tuple(sorted(evidence.items()))
        if key in cache:
            predictions.append(cache[key])
            continue
        try:
            level = posterior(net, target, evidence).argmax_level()
        except ZeroProbabilityEvidence:
            n_skipped += 1
            predictions.append(None)
            continue
        cache[key] = level
        predictions.append(level)
    return predictions, n_skipped


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    recall_macro: float
    f1_macro: float
    recall_micro: float
    f1_micro: float
    confusion: np.ndarray = field(repr=False)  # truth x predicted counts
    n_evaluated: int = 0
    n_skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "recall_macro": self.recall_macro,
            "f1_macro": self.f1_macro,
            "recall_micro": self.recall_micro,
            "f1_micro": self.f1_micro,
            "confusion": [[int(c) for c in row] for row in self.confusion],
            "n_evaluated": self.n_evaluated,
            "n_skipped": self.n_skipped,
        }


def classification_metrics(predicted, truth, n_levels=None) -> MetricsReport:
    """Accuracy plus macro- and micro-averaged recall and F1.

    Macro averages run over the classes present in the truth; a class
    with a zero F1 denominator contributes 0.  Pairs where the prediction
    is None (skipped case) or the truth is missing are excluded.
    """
    if len(predicted) != len(truth):
        raise LengthMismatch(
            f"{len(predicted)} predictions vs {len(truth)} truth values")
    pairs = [(int(p), int(t)) for p, t in zip(predicted, truth)
             if p is not None and not (isinstance(t, float) and math.isnan(t))]
    n_skipped = len(predicted) - len(pairs)
    if n_levels is None:
        n_levels = max((max(p, t) for p, t in pairs), default=1)
    confusion = np.zeros((n_levels, n_levels), dtype=int)
    for p, t in pairs:
        confusion[t - 1, p - 1] += 1
    n = len(pairs)
    accuracy = float(np.trace(confusion)) / n if n else 0.0

    recalls, f1s = [], []
    for c in range(n_levels):
        support = confusion[c, :].sum()
        if support == 0:
            continue  # class absent from the truth
        tp = confusion[c, c]
        recall = tp / support
        predicted_c = confusion[:, c].sum()
        precision = tp / predicted_c if predicted_c else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall > 0 else 0.0)
        recalls.append(recall)
        f1s.append(f1)
    recall_macro = float(np.mean(recalls)) if recalls else 0.0
    f1_macro = float(np.mean(f1s)) if f1s else 0.0
    # micro-averaged recall and F1 over single-label classes both reduce
    # to accuracy
    return MetricsReport(
        accuracy=accuracy, recall_macro=recall_macro, f1_macro=f1_macro,
        recall_micro=accuracy, f1_micro=accuracy,
        confusion=confusion, n_evaluated=n, n_skipped=n_skipped)


@dataclass(frozen=True)
class ContourGrid:
    target: str
    axes: tuple[str, str]
    values: np.ndarray = field(repr=False)  # (k_target, k_a, k_b), NaN = flagged
    flagged: tuple[tuple[int, int], ...] = ()

    def to_dict(self) -> dict:
        def cell(v):
            return None if math.isnan(v) else float(v)
        return {
            "target": self.target,
            "axes": list(self.axes),
            "levels": {
                "target": self.values.shape[0],
                self.axes[0]: self.values.shape[1],
                self.axes[1]: self.values.shape[2],
            },
            "values": [[[cell(v) for v in row] for row in plane]
                       for plane in self.values],
            "flagged": [list(f) for f in self.flagged],
        }


def contour_grid(net: BayesNet, target: str, a: str, b: str) -> ContourGrid:
    """values[k][i][j] = P(target = k+1 | a = i+1, b = j+1).

    Impossible (a, b) evidence pairs are flagged and left as NaN rather
    than fabricated.
    """
    if len({target, a, b}) != 3:
        raise ValueError("target and axes must be three distinct nodes")
    kt = net.dag.nodes[target]
    ka, kb = net.dag.nodes[a], net.dag.nodes[b]
    values = np.full((kt, ka, kb), np.nan)
    flagged = []
    for i in range(ka):
        for j in range(kb):
            try:
                p = posterior(net, target, {a: i + 1, b: j + 1}).probs
            except ZeroProbabilityEvidence:
                flagged.append((i + 1, j + 1))
                continue
            values[:, i, j] = p
    return ContourGrid(target=target, axes=(a, b), values=values,
                       flagged=tuple(flagged))


@dataclass(frozen=True)
class ConditionalProfile:
    given: tuple[str, int]
    children: dict[str, np.ndarray] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "given": {"node": self.given[0], "level": self.given[1]},
            "children": {c: [float(v) for v in p]
                         for c, p in self.children.items()},
        }


def conditional_profile(net: BayesNet, given: str, level: int) -> ConditionalProfile:
    """Posterior of every child of `given` under the single evidence
    given=level."""
    children = {}
    for child in net.dag.children(given):
        children[child] = posterior(net, child, {given: level}).probs
    return ConditionalProfile(given=(given, level), children=children)
