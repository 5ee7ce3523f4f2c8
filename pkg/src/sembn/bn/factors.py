"""Discrete factors and exact inference by variable elimination."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Factor:
    """Non-negative table over a tuple of named discrete variables."""

    vars: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != len(self.vars):
            raise ValueError("factor rank does not match variable list")

    def product(self, other: "Factor") -> "Factor":
        res_vars = self.vars + tuple(v for v in other.vars if v not in self.vars)
        a = _align(self, res_vars)
        b = _align(other, res_vars)
        return Factor(res_vars, a * b)

    def marginalize(self, var: str) -> "Factor":
        axis = self.vars.index(var)
        return Factor(self.vars[:axis] + self.vars[axis + 1:],
                      self.values.sum(axis=axis))

    def reduce(self, var: str, index: int) -> "Factor":
        axis = self.vars.index(var)
        return Factor(self.vars[:axis] + self.vars[axis + 1:],
                      np.take(self.values, index, axis=axis))

    def total(self) -> float:
        return float(self.values.sum())


def _align(factor: Factor, res_vars) -> np.ndarray:
    """View a factor's table broadcast over the result variable order."""
    present = [v for v in res_vars if v in factor.vars]
    values = np.transpose(factor.values, [factor.vars.index(v) for v in present])
    dims = dict(zip(present, values.shape))
    return values.reshape([dims.get(v, 1) for v in res_vars])


def product_all(factors) -> Factor:
    factors = list(factors)
    if not factors:
        return Factor((), np.array(1.0))
    out = factors[0]
    for f in factors[1:]:
        out = out.product(f)
    return out


def min_fill_order(scopes, keep=()) -> list[str]:
    """Elimination order by the min-fill heuristic, ties broken by name.

    scopes: iterable of variable tuples (current factor scopes).
    keep: variables that must not be eliminated.
    """
    neighbors: dict[str, set[str]] = {}
    for scope in scopes:
        for v in scope:
            neighbors.setdefault(v, set())
            for w in scope:
                if w != v:
                    neighbors[v].add(w)
    keep = set(keep)
    remaining = sorted(v for v in neighbors if v not in keep)
    order = []
    while remaining:
        best = None
        best_fill = None
        for v in remaining:
            nbrs = [w for w in neighbors[v] if w in remaining or w in keep]
            fill = 0
            for i in range(len(nbrs)):
                for j in range(i + 1, len(nbrs)):
                    if nbrs[j] not in neighbors[nbrs[i]]:
                        fill += 1
            if best_fill is None or fill < best_fill:
                best, best_fill = v, fill
        order.append(best)
        nbrs = [w for w in neighbors[best] if w != best]
        for i in range(len(nbrs)):
            for j in range(i + 1, len(nbrs)):
                neighbors[nbrs[i]].add(nbrs[j])
                neighbors[nbrs[j]].add(nbrs[i])
        for w in nbrs:
            neighbors[w].discard(best)
        remaining.remove(best)
    return order


def eliminate(factors, order) -> list[Factor]:
    """Sum out the given variables one by one, combining touched factors."""
    factors = list(factors)
    for var in order:
        touched = [f for f in factors if var in f.vars]
        if not touched:
            continue
        untouched = [f for f in factors if var not in f.vars]
        combined = product_all(touched).marginalize(var)
        factors = untouched + [combined]
    return factors
