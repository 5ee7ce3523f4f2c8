"""Declarative model specification for latent-variable path models.

Grammar (one statement per line, '#' starts a comment):

    F =~ a + b + c          measurement: F loads on indicators a, b, c
    y ~ x1 + x2             regression: x1 and x2 predict y
    a ~~ b                  free (co)variance between a and b
    a ~~ 0.5*b              fixed (co)variance
    F =~ a + 0.7*c          fixed loading

The first loading of every `=~` statement is fixed to 1 unless it carries
an explicit coefficient, which ties each latent's scale to its anchor
indicator.  Residual variances for endogenous variables and variances for
exogenous ones are added automatically when not declared.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import CycleError, ModelSyntaxError, UnderidentifiedLatent

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*$")


@dataclass(frozen=True)
class Param:
    """A model parameter: either free (with a unique label) or fixed."""

    label: str
    free: bool
    value: float | None = None  # fixed value, or starting hint for free


@dataclass(frozen=True)
class Edge:
    """Directed path src -> dst (loading or regression coefficient)."""

    src: str
    dst: str
    param: Param


@dataclass(frozen=True)
class CovTerm:
    """Symmetric (co)variance term between a and b (a == b for variances)."""

    a: str
    b: str
    param: Param


@dataclass(frozen=True)
class SemModel:
    """Validated path model over observed and latent variables."""

    observed: tuple[str, ...]
    latents: tuple[str, ...]
    measurement_edges: tuple[Edge, ...]   # latent -> indicator
    regression_edges: tuple[Edge, ...]    # predictor -> target
    covariance_terms: tuple[CovTerm, ...]

    @property
    def variables(self) -> tuple[str, ...]:
        return self.observed + self.latents

    @property
    def directed_edges(self) -> tuple[Edge, ...]:
        return self.measurement_edges + self.regression_edges

    @property
    def free_parameters(self) -> tuple[str, ...]:
        seen = []
        for item in self.directed_edges + self.covariance_terms:
            if item.param.free:
                seen.append(item.param.label)
        return tuple(seen)

    def indicators_of(self, latent: str) -> tuple[str, ...]:
        return tuple(e.dst for e in self.measurement_edges if e.src == latent)


def _parse_term(term: str, line_no: int) -> tuple[float | None, str]:
    term = term.strip()
    if "*" in term:
        coef_text, _, name = term.partition("*")
        try:
            coef = float(coef_text)
        except ValueError:
            raise ModelSyntaxError(
                f"line {line_no}: bad coefficient {coef_text!r}", line=line_no
            ) from None
    else:
        coef, name = None, term
    name = name.strip()
    if not _IDENT.match(name):
        raise ModelSyntaxError(f"line {line_no}: bad identifier {name!r}",
                               line=line_no)
    return coef, name


def _toposort(nodes, edges):
    """Kahn topological sort; raises CycleError listing a cyclic subset."""
    out = {n: [] for n in nodes}
    indeg = {n: 0 for n in nodes}
    for src, dst in edges:
        out[src].append(dst)
        indeg[dst] += 1
    queue = sorted(n for n in nodes if indeg[n] == 0)
    order = []
    while queue:
        n = queue.pop(0)
        order.append(n)
        for m in out[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                queue.append(m)
        queue.sort()
    if len(order) != len(nodes):
        cyclic = sorted(n for n in nodes if indeg[n] > 0)
        raise CycleError(f"directed cycle among {cyclic}")
    return order


def parse_model_spec(text: str) -> SemModel:
    """Parse the model DSL into a validated SemModel."""
    statements = []  # (op, lhs, [(coef, name)], line_no)
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for op in ("=~", "~~", "~"):
            if op in line:
                lhs, _, rhs = line.partition(op)
                break
        else:
            raise ModelSyntaxError(
                f"line {line_no}: expected one of '=~', '~', '~~'", line=line_no)
        lhs = lhs.strip()
        if not _IDENT.match(lhs):
            raise ModelSyntaxError(f"line {line_no}: bad identifier {lhs!r}",
                                   line=line_no)
        terms = [t for t in rhs.split("+")]
        if not rhs.strip():
            raise ModelSyntaxError(f"line {line_no}: empty right-hand side",
                                   line=line_no)
        parsed = [_parse_term(t, line_no) for t in terms]
        statements.append((op, lhs, parsed, line_no))

    measurement: list[Edge] = []
    regression: list[Edge] = []
    explicit_cov: list[CovTerm] = []
    latents: list[str] = []
    names: list[str] = []

    def note(name):
        if name not in names:
            names.append(name)

    for op, lhs, terms, line_no in statements:
        note(lhs)
        for _, name in terms:
            note(name)
        if op == "=~":
            if lhs not in latents:
                latents.append(lhs)
            for pos, (coef, name) in enumerate(terms):
                if coef is None and pos == 0:
                    coef = 1.0  # anchor loading
                if coef is None:
                    param = Param(f"{lhs}=~{name}", free=True)
                else:
                    param = Param(f"{lhs}=~{name}", free=False, value=coef)
                measurement.append(Edge(lhs, name, param))
        elif op == "~":
            for coef, name in terms:
                if coef is None:
                    param = Param(f"{lhs}~{name}", free=True)
                else:
                    param = Param(f"{lhs}~{name}", free=False, value=coef)
                regression.append(Edge(name, lhs, param))
        else:  # ~~
            for coef, name in terms:
                a, b = sorted((lhs, name))
                if coef is None:
                    param = Param(f"{a}~~{b}", free=True)
                else:
                    param = Param(f"{a}~~{b}", free=False, value=coef)
                explicit_cov.append(CovTerm(a, b, param))

    # duplicate parameter labels are a spec violation
    labels = [e.param.label for e in measurement + regression + explicit_cov]
    dupes = sorted({l for l in labels if labels.count(l) > 1})
    if dupes:
        raise ModelSyntaxError(f"duplicate parameter(s) {dupes}")

    observed = tuple(n for n in names if n not in latents)
    directed = [(e.src, e.dst) for e in measurement + regression]
    _toposort(names, directed)

    # every latent must reach an observed indicator through measurement edges
    meas_children = {l: [] for l in latents}
    for e in measurement:
        meas_children[e.src].append(e.dst)
    for latent in latents:
        frontier = [latent]
        seen = set()
        grounded = False
        while frontier and not grounded:
            cur = frontier.pop()
            for child in meas_children.get(cur, []):
                if child in seen:
                    continue
                seen.add(child)
                if child not in latents:
                    grounded = True
                    break
                frontier.append(child)
        if not grounded:
            raise UnderidentifiedLatent(f"latent {latent!r} has no observed indicator")

    # auto variance terms: endogenous -> residual, exogenous -> variance
    declared = {(c.a, c.b) for c in explicit_cov}
    auto: list[CovTerm] = []
    for name in names:
        if (name, name) not in declared:
            auto.append(CovTerm(name, name, Param(f"{name}~~{name}", free=True)))

    return SemModel(
        observed=observed,
        latents=tuple(latents),
        measurement_edges=tuple(measurement),
        regression_edges=tuple(regression),
        covariance_terms=tuple(explicit_cov + auto),
    )
