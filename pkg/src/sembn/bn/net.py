"""Bayesian network container, CPTs, and exact query operations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    IncompleteAssignment,
    InvalidDistribution,
    UnknownNode,
    ZeroProbabilityEvidence,
)
from .factors import Factor, eliminate, min_fill_order, product_all
from .graph import Dag

ROW_SUM_TOL = 1e-8


@dataclass(frozen=True)
class Cpt:
    """P(node | parents), table shape (*parent_levels, node_levels).

    Serialized row order is lexicographic over parent configurations with
    the first parent slowest-varying, which is exactly numpy C-order.
    """

    node: str
    parents: tuple[str, ...]
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = self.table
        if t.ndim != len(self.parents) + 1:
            raise InvalidDistribution(
                f"CPT for {self.node!r} has rank {t.ndim}, "
                f"expected {len(self.parents) + 1}")
        if (t < 0).any():
            raise InvalidDistribution(f"negative probability in CPT {self.node!r}")
        sums = t.sum(axis=-1)
        if np.abs(sums - 1.0).max() > ROW_SUM_TOL:
            raise InvalidDistribution(
                f"CPT rows for {self.node!r} do not sum to 1")

    def as_factor(self) -> Factor:
        return Factor(self.parents + (self.node,), self.table)

    def rows(self) -> np.ndarray:
        """Rows in serialization order: (n_parent_configs, n_levels)."""
        r = self.table.shape[-1]
        return self.table.reshape(-1, r)


@dataclass(frozen=True)
class PosteriorDistribution:
    node: str
    probs: np.ndarray

    def argmax_level(self) -> int:
        """1-based most probable level; ties go to the lowest level."""
        return int(np.argmax(self.probs)) + 1


@dataclass(frozen=True)
class BayesNet:
    dag: Dag
    cpts: dict[str, Cpt]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name, levels in self.dag.nodes.items():
            if name not in self.cpts:
                raise InvalidDistribution(f"no CPT for node {name!r}")
            cpt = self.cpts[name]
            expect = tuple(self.dag.nodes[p] for p in self.dag.parents[name])
            if cpt.parents != self.dag.parents[name]:
                raise InvalidDistribution(f"CPT parents mismatch for {name!r}")
            if cpt.table.shape != expect + (levels,):
                raise InvalidDistribution(f"CPT shape mismatch for {name!r}")

    # --- serialization (bit-stable ordering) ---

    def to_dict(self) -> dict:
        order = self.dag.topological_order()
        return {
            "nodes": [
                {"name": n, "levels": self.dag.nodes[n],
                 "parents": list(self.dag.parents[n])}
                for n in order
            ],
            "cpts": {n: [list(map(float, row)) for row in self.cpts[n].rows()]
                     for n in order},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BayesNet":
        nodes = {d["name"]: d["levels"] for d in doc["nodes"]}
        parents = {d["name"]: tuple(d["parents"]) for d in doc["nodes"]}
        dag = Dag(nodes=nodes, parents=parents)
        cpts = {}
        for name in nodes:
            shape = tuple(nodes[p] for p in parents[name]) + (nodes[name],)
            table = np.asarray(doc["cpts"][name], dtype=float).reshape(shape)
            cpts[name] = Cpt(node=name, parents=parents[name], table=table)
        return cls(dag=dag, cpts=cpts)


def _check_evidence(net: BayesNet, evidence: dict) -> None:
    for node, level in evidence.items():
        if node not in net.dag.nodes:
            raise UnknownNode(f"evidence node {node!r} is not in the network")
        if not 1 <= level <= net.dag.nodes[node]:
            raise ValueError(
                f"evidence level {level} outside 1..{net.dag.nodes[node]} "
                f"for node {node!r}")


def _reduced_factors(net: BayesNet, evidence: dict) -> list[Factor]:
    factors = []
    for name in net.dag.topological_order():
        f = net.cpts[name].as_factor()
        for node, level in evidence.items():
            if node in f.vars:
                f = f.reduce(node, level - 1)
        factors.append(f)
    return factors


def marginal_factor(net: BayesNet, keep, evidence=None) -> Factor:
    """Unnormalized joint over `keep` given evidence, by variable elimination.

    The sum of the returned factor is P(evidence); callers normalize.
    """
    evidence = dict(evidence or {})
    _check_evidence(net, evidence)
    keep = [k for k in keep if k not in evidence]
    for k in keep:
        net.dag._check(k)
    factors = _reduced_factors(net, evidence)
    scopes = [f.vars for f in factors]
    order = min_fill_order(scopes, keep=keep)
    remaining = eliminate(factors, order)
    out = product_all(remaining)
    # fix axis order to the requested one
    extra = [v for v in out.vars if v not in keep]
    for v in extra:
        out = out.marginalize(v)
    aligned_vars = tuple(keep)
    perm = [out.vars.index(v) for v in aligned_vars]
    return Factor(aligned_vars, np.transpose(out.values, perm))


def posterior(net: BayesNet, query: str, evidence=None) -> PosteriorDistribution:
    """Exact posterior of a single node given evidence."""
    evidence = dict(evidence or {})
    if query in evidence:
        raise ValueError(f"query node {query!r} appears in the evidence")
    f = marginal_factor(net, [query], evidence)
    z = f.total()
    if z <= 0.0:
        raise ZeroProbabilityEvidence(f"evidence {evidence} has probability 0")
    return PosteriorDistribution(node=query, probs=f.values / z)


def evidence_probability(net: BayesNet, evidence) -> float:
    evidence = dict(evidence)
    _check_evidence(net, evidence)
    factors = _reduced_factors(net, evidence)
    order = min_fill_order([f.vars for f in factors])
    remaining = eliminate(factors, order)
    return float(np.prod([f.total() for f in remaining]))


def joint_probability(net: BayesNet, assignment: dict) -> float:
    """Probability of one full assignment: product of CPT lookups."""
    missing = sorted(set(net.dag.nodes) - set(assignment))
    if missing:
        raise IncompleteAssignment(f"assignment lacks nodes {missing}")
    _check_evidence(net, assignment)
    p = 1.0
    for name in net.dag.topological_order():
        cpt = net.cpts[name]
        idx = tuple(assignment[pa] - 1 for pa in cpt.parents)
        p *= float(cpt.table[idx + (assignment[name] - 1,)])
    return p
