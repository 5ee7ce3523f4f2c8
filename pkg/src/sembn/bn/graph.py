"""Directed acyclic graph over discrete nodes, with d-separation."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import CycleError, UnknownNode
from ..modelspec import SemModel


@dataclass(frozen=True)
class Dag:
    """Node cardinalities plus ordered parent lists."""

    nodes: dict[str, int]                   # name -> level count
    parents: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        parents = {n: tuple(self.parents.get(n, ())) for n in self.nodes}
        object.__setattr__(self, "parents", parents)
        for node, pa in parents.items():
            for p in pa:
                if p not in self.nodes:
                    raise UnknownNode(f"parent {p!r} of {node!r} is not a node")
        self.topological_order()  # raises CycleError on a cycle

    def topological_order(self) -> list[str]:
        indeg = {n: len(self.parents[n]) for n in self.nodes}
        queue = sorted(n for n in self.nodes if indeg[n] == 0)
        order = []
        children = self.children_map()
        while queue:
            n = queue.pop(0)
            order.append(n)
            for c in children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
            queue.sort()
        if len(order) != len(self.nodes):
            raise CycleError("graph contains a directed cycle")
        return order

    def children_map(self) -> dict[str, list[str]]:
        children = {n: [] for n in self.nodes}
        for node, pa in self.parents.items():
            for p in pa:
                children[p].append(node)
        return children

    def children(self, node: str) -> list[str]:
        self._check(node)
        return self.children_map()[node]

    def _check(self, node: str):
        if node not in self.nodes:
            raise UnknownNode(f"unknown node {node!r}")


def _ancestors(dag: Dag, seeds) -> set[str]:
    seen = set()
    stack = list(seeds)
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        stack.extend(dag.parents[n])
    return seen


def d_separated(dag: Dag, x: str, y: str, z=()) -> bool:
    """True iff every path between x and y is blocked by conditioning set z.

    Chains and forks are blocked by a conditioned middle node; a collider
    blocks unless it or one of its descendants is conditioned on.
    Implemented as reachability over (node, incoming-direction) states.
    """
    z = set(z)
    for node in (x, y, *z):
        dag._check(node)
    if x == y:
        raise ValueError("x and y must differ")
    if x in z or y in z:
        raise ValueError("query nodes may not appear in the conditioning set")

    ancestors_z = _ancestors(dag, z)
    children = dag.children_map()

    # states: (node, "up") entered from a child, (node, "down") from a parent
    visited = set()
    stack = [(x, "up")]
    while stack:
        node, direction = stack.pop()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node == y:
            return False
        if direction == "up":
            if node not in z:
                for p in dag.parents[node]:
                    stack.append((p, "up"))
                for c in children[node]:
                    stack.append((c, "down"))
        else:  # entered from a parent
            if node not in z:
                for c in children[node]:
                    stack.append((c, "down"))
            if node in ancestors_z:  # collider open via conditioned descendant
                for p in dag.parents[node]:
                    stack.append((p, "up"))
    return True


def dag_from_sem(model: SemModel, level_counts=5,
                 include_indicators: bool = False) -> Dag:
    """Project the path model's directed structure onto a discrete DAG.

    Nodes are the latent variables; every directed edge among latents is
    kept with its orientation (structural regressions run source ->
    target, a higher-order factor points at the factors it measures).
    With include_indicators=True, observed indicator nodes are added as
    children of their latents.
    """
    latents = set(model.latents)
    keep = list(model.latents)
    if include_indicators:
        keep += list(model.observed)

    def levels(name):
        if isinstance(level_counts, int):
            return level_counts
        return level_counts[name]

    parents: dict[str, list[str]] = {n: [] for n in keep}
    for e in model.directed_edges:
        if e.dst in parents and e.src in latents:
            parents[e.dst].append(e.src)
        elif include_indicators and e.dst in parents and e.src in parents:
            parents[e.dst].append(e.src)
    return Dag(nodes={n: levels(n) for n in keep},
               parents={n: tuple(p) for n, p in parents.items()})
