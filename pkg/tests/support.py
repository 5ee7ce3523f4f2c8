"""Shared helpers for the test suite: random networks, brute-force
inference oracles, and ancestral sampling.

The oracles here deliberately avoid the package's variable-elimination
code path so they can serve as independent references.
"""
from __future__ import annotations

import itertools

import numpy as np
import pandas as pd

from sembn.bn.graph import Dag
from sembn.bn.net import BayesNet, Cpt
from sembn.discretize import DiscreteDataset


def random_dag(rng, max_nodes=6, max_levels=4, max_parents=3) -> Dag:
    n = int(rng.integers(2, max_nodes + 1))
    names = [f"n{i}" for i in range(n)]
    nodes = {nm: int(rng.integers(2, max_levels + 1)) for nm in names}
    parents = {}
    for i, nm in enumerate(names):
        pool = names[:i]
        k = int(rng.integers(0, min(len(pool), max_parents) + 1))
        chosen = rng.choice(pool, size=k, replace=False) if k else []
        parents[nm] = tuple(sorted(chosen))
    return Dag(nodes=nodes, parents=parents)


def random_net(rng, dag=None, concentration=1.0, **dag_kwargs) -> BayesNet:
    """A net with Dirichlet-sampled (strictly positive) CPT rows."""
    if dag is None:
        dag = random_dag(rng, **dag_kwargs)
    cpts = {}
    for node, levels in dag.nodes.items():
        shape = tuple(dag.nodes[p] for p in dag.parents[node]) + (levels,)
        rows = rng.dirichlet([concentration] * levels,
                             size=int(np.prod(shape[:-1], dtype=int)))
        cpts[node] = Cpt(node=node, parents=dag.parents[node],
                         table=rows.reshape(shape))
    return BayesNet(dag=dag, cpts=cpts)


def all_assignments(dag: Dag):
    names = list(dag.nodes)
    ranges = [range(1, dag.nodes[n] + 1) for n in names]
    for combo in itertools.product(*ranges):
        yield dict(zip(names, combo))


def brute_joint(net: BayesNet, assignment: dict) -> float:
    """Joint probability by direct CPT lookups, no elimination machinery."""
    p = 1.0
    for node, cpt in net.cpts.items():
        idx = tuple(assignment[pa] - 1 for pa in cpt.parents)
        p *= float(cpt.table[idx + (assignment[node] - 1,)])
    return p


def brute_posterior(net: BayesNet, query: str, evidence: dict) -> np.ndarray:
    """Posterior by summing the fully enumerated joint."""
    levels = net.dag.nodes[query]
    mass = np.zeros(levels)
    for assignment in all_assignments(net.dag):
        if any(assignment[k] != v for k, v in evidence.items()):
            continue
        mass[assignment[query] - 1] += brute_joint(net, assignment)
    total = mass.sum()
    if total <= 0:
        raise ZeroDivisionError("evidence has probability zero")
    return mass / total


def sample_cases(net: BayesNet, n: int, rng, missing=0.0) -> DiscreteDataset:
    """Ancestral sampling into a DiscreteDataset (levels 1..k, NaN missing)."""
    order = net.dag.topological_order()
    data = np.zeros((n, len(order)), dtype=float)
    col = {nm: i for i, nm in enumerate(order)}
    for i in range(n):
        values = {}
        for node in order:
            cpt = net.cpts[node]
            idx = tuple(values[pa] - 1 for pa in cpt.parents)
            probs = cpt.table[idx]
            values[node] = int(rng.choice(len(probs), p=probs)) + 1
            data[i, col[node]] = values[node]
    if missing > 0:
        mask = rng.random(data.shape) < missing
        data[mask] = np.nan
    frame = pd.DataFrame(data, columns=order)
    return DiscreteDataset(frame=frame, level_counts=dict(net.dag.nodes))
