"""CPT estimation: maximum likelihood, EM over missing cells, and BDeu."""
from __future__ import annotations

import math

import numpy as np

from ..discretize import DiscreteDataset
from ..errors import EmptyData
from .factors import Factor
from .graph import Dag
from .net import BayesNet, Cpt, evidence_probability, marginal_factor

EM_NOISE = 0.01


def _level_matrix(dag: Dag, data: DiscreteDataset):
    """Data as an int matrix in node order, -1 marking missing cells."""
    missing_cols = sorted(set(dag.nodes) - set(data.frame.columns))
    if missing_cols:
        raise EmptyData(f"data lacks columns for nodes {missing_cols}")
    nodes = list(dag.nodes)
    raw = data.frame[nodes].to_numpy()
    levels = np.where(np.isnan(raw), 0, raw).astype(int) - 1
    return nodes, levels


def _normalize(dag: Dag, counts: dict[str, np.ndarray], flag_uniform: bool):
    """Turn count tables into CPTs; zero-count configs become uniform rows."""
    cpts = {}
    uniform_rows: dict[str, list[int]] = {}
    for node, table in counts.items():
        sums = table.sum(axis=-1, keepdims=True)
        zero = sums[..., 0] == 0
        r = table.shape[-1]
        probs = np.where(sums > 0, table / np.where(sums > 0, sums, 1.0), 1.0 / r)
        cpts[node] = Cpt(node=node, parents=dag.parents[node], table=probs)
        if flag_uniform and zero.any():
            uniform_rows[node] = sorted(np.flatnonzero(zero.reshape(-1)).tolist())
    return cpts, uniform_rows


def _count_complete(dag: Dag, nodes, levels):
    complete = (levels >= 0).all(axis=1)
    counts = {
        n: np.zeros(tuple(dag.nodes[p] for p in dag.parents[n]) + (dag.nodes[n],))
        for n in nodes
    }
    col = {n: i for i, n in enumerate(nodes)}
    for row in levels[complete]:
        for n in nodes:
            idx = tuple(row[col[p]] for p in dag.parents[n]) + (row[col[n]],)
            counts[n][idx] += 1.0
    return counts, int(complete.sum()), int(len(levels) - complete.sum())


def fit_mle(dag: Dag, data: DiscreteDataset) -> BayesNet:
    """Frequency-count CPTs from complete cases.

    Parent configurations never seen in the data get a uniform row; those
    are listed in meta["uniform_rows"] per node (flattened config index).
    """
    nodes, levels = _level_matrix(dag, data)
    counts, n_used, n_dropped = _count_complete(dag, nodes, levels)
    if n_used == 0:
        raise EmptyData("no complete cases to count")
    cpts, uniform_rows = _normalize(dag, counts, flag_uniform=True)
    meta = {"estimator": "mle", "n_used": n_used, "n_dropped": n_dropped,
            "uniform_rows": uniform_rows}
    return BayesNet(dag=dag, cpts=cpts, meta=meta)


def fit_bdeu(dag: Dag, data: DiscreteDataset, ess: float = 1.0) -> BayesNet:
    """Posterior-mean CPTs under a BDeu prior with equivalent sample size ess.

    theta_ijk = (N_ijk + ess/(r_i q_i)) / (N_ij + ess/q_i) where r_i is
    the node's level count and q_i its number of parent configurations.
    """
    if ess <= 0:
        raise ValueError("ess must be positive")
    nodes, levels = _level_matrix(dag, data)
    counts, n_used, n_dropped = _count_complete(dag, nodes, levels)
    cpts = {}
    for node in nodes:
        table = counts[node]
        r = table.shape[-1]
        q = int(np.prod(table.shape[:-1], dtype=int)) if table.ndim > 1 else 1
        alpha = ess / (r * q)
        probs = (table + alpha) / (table.sum(axis=-1, keepdims=True) + alpha * r)
        cpts[node] = Cpt(node=node, parents=dag.parents[node], table=probs)
    meta = {"estimator": "bdeu", "ess": ess, "n_used": n_used,
            "n_dropped": n_dropped}
    return BayesNet(dag=dag, cpts=cpts, meta=meta)


def _em_init(dag: Dag, seed: int) -> BayesNet:
    """Uniform CPTs with small seeded perturbations (breaks symmetric saddles)."""
    rng = np.random.default_rng(seed)
    cpts = {}
    for node in dag.nodes:
        shape = tuple(dag.nodes[p] for p in dag.parents[node]) + (dag.nodes[node],)
        table = np.ones(shape) + EM_NOISE * rng.random(shape)
        table /= table.sum(axis=-1, keepdims=True)
        cpts[node] = Cpt(node=node, parents=dag.parents[node], table=table)
    return BayesNet(dag=dag, cpts=cpts)


def _expected_counts(net: BayesNet, nodes, levels):
    """E-step: expected family counts plus the observed-data log-likelihood."""
    dag = net.dag
    col = {n: i for i, n in enumerate(nodes)}
    counts = {
        n: np.zeros(tuple(dag.nodes[p] for p in dag.parents[n]) + (dag.nodes[n],))
        for n in nodes
    }
    loglik = 0.0
    for row in levels:
        observed = {n: int(row[col[n]]) + 1 for n in nodes if row[col[n]] >= 0}
        hidden = [n for n in nodes if row[col[n]] < 0]
        if not hidden:
            for n in nodes:
                idx = tuple(row[col[p]] for p in dag.parents[n]) + (row[col[n]],)
                counts[n][idx] += 1.0
            loglik += math.log(max(_assignment_prob(net, observed), 1e-300))
            continue
        p_e = evidence_probability(net, observed)
        loglik += math.log(max(p_e, 1e-300))
        for n in nodes:
            family = (n,) + dag.parents[n]
            fam_hidden = [v for v in family if v in hidden]
            if not fam_hidden:
                idx = tuple(observed[p] - 1 for p in dag.parents[n]) \
                    + (observed[n] - 1,)
                counts[n][idx] += 1.0
                continue
            post = marginal_factor(net, fam_hidden, observed)
            weights = post.values / max(post.total(), 1e-300)
            w_factor = Factor(post.vars, weights)
            # scatter the posterior weights into the family count table
            idx = []
            for v in dag.parents[n] + (n,):
                if v in observed:
                    idx.append(observed[v] - 1)
                else:
                    idx.append(slice(None))
            target_vars = [v for v in dag.parents[n] + (n,) if v not in observed]
            perm = [w_factor.vars.index(v) for v in target_vars]
            counts[n][tuple(idx)] += np.transpose(weights, perm)
    return counts, loglik


def _assignment_prob(net: BayesNet, assignment: dict) -> float:
    p = 1.0
    for node, cpt in net.cpts.items():
        idx = tuple(assignment[pa] - 1 for pa in cpt.parents)
        p *= float(cpt.table[idx + (assignment[node] - 1,)])
    return p


def fit_em(dag: Dag, data: DiscreteDataset, ess_init: float = 0.0,
           tol: float = 1e-6, max_iter: int = 100, seed: int = 0) -> BayesNet:
    """EM parameter estimation tolerating missing cells.

    The E-step computes expected family counts per case by exact
    inference over that case's missing nodes; the M-step re-normalizes
    (optionally with a uniform Dirichlet prior of total weight ess_init).
    Iterates until the observed log-likelihood improves by less than tol
    or max_iter is hit; a capped run returns the best iterate with
    meta["converged"] = False instead of raising.
    """
    nodes, levels = _level_matrix(dag, data)
    if len(levels) == 0:
        raise EmptyData("no cases")
    net = _em_init(dag, seed)
    trace = []
    converged = False
    for _ in range(max_iter):
        counts, loglik = _expected_counts(net, nodes, levels)
        if ess_init > 0:
            for node in nodes:
                table = counts[node]
                r = table.shape[-1]
                q = int(np.prod(table.shape[:-1], dtype=int))
                counts[node] = table + ess_init / (r * q)
        cpts, _ = _normalize(dag, counts, flag_uniform=False)
        net = BayesNet(dag=dag, cpts=cpts)
        if trace and loglik - trace[-1] < tol:
            trace.append(loglik)
            converged = True
            break
        trace.append(loglik)
    meta = {"estimator": "em", "ess_init": ess_init, "tol": tol,
            "max_iter": max_iter, "seed": seed, "converged": converged,
            "n_iter": len(trace), "loglik_trace": trace}
    return BayesNet(dag=dag, cpts=net.cpts, meta=meta)
