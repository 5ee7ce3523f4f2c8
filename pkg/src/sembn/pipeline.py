"""End-to-end orchestration: config, stages, artifacts, manifest."""
from __future__ import annotations

import datetime
import hashlib
import os
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .analysis import (
    classification_metrics,
    conditional_profile,
    contour_grid,
    info_gain_report,
    predict,
)
from .bn.estimators import fit_bdeu, fit_em, fit_mle
from .bn.graph import dag_from_sem
from .dataset import ObservedDataset, VariableSchema, complete_cases, load_csv, split
from .discretize import DiscreteDataset, QuantileDiscretizer, discretize_scores
from .errors import ConfigError, SembnError
from .jsonio import dumps
from .modelspec import parse_model_spec
from .sem import factor_scores, fit_indices, fit_ml, standardized_loadings

ARTIFACTS = (
    "fit_indices.json", "loadings.csv", "scores.csv", "discretization.json",
    "net.json", "metrics_train.json", "metrics_validation.json",
    "info_gain.json", "contour_grid.json", "profiles.json", "manifest.json",
)


@dataclass(frozen=True)
class PipelineConfig:
    data_path: str
    model_text: str
    out_dir: str
    missing_codes: tuple[str, ...] = ("", "NA")
    ordinal: dict[str, int] = field(default_factory=dict)
    k_bins: int = 5
    threshold_scope: str = "full"        # or "train"
    estimator: str = "bdeu"              # mle | em | bdeu
    ess: float = 1.0
    em_tol: float = 1e-6
    em_max_iter: int = 100
    em_seed: int = 0
    split_fraction: float = 0.7
    split_seed: int = 11
    target: str = "PYD"
    evidence: tuple[str, ...] | None = None
    contour_axes: tuple[str, str] = ("PP", "CFS")
    profile_nodes: tuple[str, ...] = ()
    log_base: object = 2
    metrics_average: str = "macro"

    def canonical(self) -> dict:
        doc = {
            "data_path": self.data_path,
            "model_text": self.model_text,
            "missing_codes": list(self.missing_codes),
            "ordinal": dict(self.ordinal),
            "k_bins": self.k_bins,
            "threshold_scope": self.threshold_scope,
            "estimator": self.estimator,
            "ess": self.ess,
            "em_tol": self.em_tol,
            "em_max_iter": self.em_max_iter,
            "em_seed": self.em_seed,
            "split_fraction": self.split_fraction,
            "split_seed": self.split_seed,
            "target": self.target,
            "evidence": list(self.evidence) if self.evidence else None,
            "contour_axes": list(self.contour_axes),
            "profile_nodes": list(self.profile_nodes),
            "log_base": str(self.log_base),
            "metrics_average": self.metrics_average,
        }
        return doc

    def config_hash(self) -> str:
        return hashlib.sha256(dumps(self.canonical()).encode()).hexdigest()


def load_config(path, out_dir=None, seed=None) -> PipelineConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc

    try:
        data = doc["data"]
        model = doc["model"]
        output = doc.get("output", {})
        disc = doc.get("discretize", {})
        est = doc.get("estimator", {})
        spl = doc.get("split", {})
        ana = doc.get("analysis", {})
        cfg = PipelineConfig(
            data_path=data["path"],
            model_text=model["text"],
            out_dir=output.get("dir", "out"),
            missing_codes=tuple(data.get("missing_codes", ["", "NA"])),
            ordinal={k: int(v) for k, v in data.get("ordinal", {}).items()},
            k_bins=int(disc.get("k", 5)),
            threshold_scope=disc.get("scope", "full"),
            estimator=est.get("method", "bdeu"),
            ess=float(est.get("ess", 1.0)),
            em_tol=float(est.get("em_tol", 1e-6)),
            em_max_iter=int(est.get("em_max_iter", 100)),
            em_seed=int(est.get("em_seed", 0)),
            split_fraction=float(spl.get("fraction", 0.7)),
            split_seed=int(spl.get("seed", 11)),
            target=ana.get("target", "PYD"),
            evidence=tuple(ana["evidence"]) if "evidence" in ana else None,
            contour_axes=tuple(ana.get("contour_axes", ["PP", "CFS"])),
            profile_nodes=tuple(ana.get("profile_nodes", [])),
            log_base=ana.get("log_base", 2),
            metrics_average=ana.get("metrics_average", "macro"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config {path}: {exc}") from exc
    if cfg.estimator not in ("mle", "em", "bdeu"):
        raise ConfigError(f"unknown estimator {cfg.estimator!r}")
    if cfg.threshold_scope not in ("full", "train"):
        raise ConfigError(f"unknown threshold scope {cfg.threshold_scope!r}")
    if cfg.k_bins < 2:
        raise ConfigError("discretize.k must be >= 2")
    if out_dir is not None:
        cfg = replace(cfg, out_dir=str(out_dir))
    if seed is not None:
        cfg = replace(cfg, split_seed=int(seed))
    return cfg


def _schema_for(config: PipelineConfig, path) -> list[VariableSchema]:
    """Schema from the config: declared ordinals, everything else continuous.

    Variable names come from the CSV header so the config stays short.
    """
    import csv

    from .errors import UnreadableData
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh))
    except OSError as exc:
        raise UnreadableData(f"cannot read data file {path}: {exc}") from exc
    names = [h.strip() for h in header if h.strip() != "case_id"]
    schema = []
    for name in names:
        if name in config.ordinal:
            schema.append(VariableSchema(name, "ordinal",
                                         levels=config.ordinal[name],
                                         missing_codes=config.missing_codes))
        else:
            schema.append(VariableSchema(name, "continuous",
                                         missing_codes=config.missing_codes))
    return schema


def default_evidence(dag, target: str) -> list[str]:
    """Children of the target's parents, minus the target and its descendants."""
    children = dag.children_map()
    descendants = set()
    stack = [target]
    while stack:
        n = stack.pop()
        for c in children[n]:
            if c not in descendants:
                descendants.add(c)
                stack.append(c)
    out = []
    for parent in dag.parents[target]:
        for c in children[parent]:
            if c != target and c not in descendants and c not in out:
                out.append(c)
    return out


def _fit_net(config: PipelineConfig, dag, data: DiscreteDataset):
    if config.estimator == "mle":
        return fit_mle(dag, data)
    if config.estimator == "em":
        return fit_em(dag, data, tol=config.em_tol,
                      max_iter=config.em_max_iter, seed=config.em_seed)
    return fit_bdeu(dag, data, ess=config.ess)


def _float_csv(frame) -> str:
    lines = [",".join(["case_id"] + list(frame.columns))]
    for case_id, row in frame.iterrows():
        cells = [str(case_id)]
        for v in row:
            cells.append("" if v != v else format(float(v), ".17g"))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _metrics_json(report, average: str) -> dict:
    doc = report.to_dict()
    doc["average"] = average
    return doc


@dataclass
class PipelineResult:
    """In-memory artifacts of one pipeline run (pre-serialization)."""

    config: PipelineConfig
    manifest: dict
    artifacts: dict[str, str]  # filename -> file contents


def run_stages(config: PipelineConfig) -> PipelineResult:
    """Execute the full pipeline and return all artifacts as text.

    Raises SembnError subclasses with the failing stage in the message;
    nothing is written to disk here.
    """
    stage = "config"
    try:
        stage = "ingest"
        model = parse_model_spec(config.model_text)
        schema = _schema_for(config, config.data_path)
        data = load_csv(config.data_path, schema)
        complete = complete_cases(data, model.observed)

        stage = "sem-fit"
        fit = fit_ml(model, complete)
        indices = fit_indices(fit)
        loadings = standardized_loadings(fit)

        stage = "scores"
        scores = factor_scores(fit, complete)

        stage = "split"
        assignment = split(complete, config.split_fraction, config.split_seed)

        stage = "discretize"
        disc = QuantileDiscretizer(k=config.k_bins,
                                   fitted_on=("train-only"
                                              if config.threshold_scope == "train"
                                              else "full-sample"))
        fit_scores = (scores.loc[list(assignment.train_ids)]
                      if config.threshold_scope == "train" else scores)
        disc.fit(fit_scores)
        discrete = disc.transform(scores)

        stage = "network"
        dag = dag_from_sem(model, level_counts={
            c: disc.spec_.level_count(c) for c in scores.columns})
        train = DiscreteDataset(discrete.frame.loc[list(assignment.train_ids)],
                                discrete.level_counts)
        validation = DiscreteDataset(
            discrete.frame.loc[list(assignment.validation_ids)],
            discrete.level_counts)
        net_train = _fit_net(config, dag, train)

        stage = "metrics"
        evidence = (list(config.evidence) if config.evidence is not None
                    else default_evidence(dag, config.target))
        reports = {}
        for name, part in (("train", train), ("validation", validation)):
            preds, skipped = predict(net_train, config.target, part, evidence)
            truth = part.frame[config.target].tolist()
            reports[name] = classification_metrics(
                preds, truth, n_levels=dag.nodes[config.target])

        stage = "refit"
        net_full = _fit_net(config, dag, discrete)

        stage = "analytics"
        ig = info_gain_report(net_full, config.target, base=config.log_base)
        a, b = config.contour_axes
        grid = contour_grid(net_full, config.target, a, b)
        profiles = []
        for node in config.profile_nodes:
            for level in range(1, dag.nodes[node] + 1):
                profiles.append(conditional_profile(net_full, node, level))
    except SembnError as exc:
        raise type(exc)(f"[stage {stage}] {exc}") from exc

    artifacts = {
        "fit_indices.json": dumps({
            "rmsea": indices.rmsea, "cfi": indices.cfi, "srmr": indices.srmr,
            "chi_square": fit.chi_square, "df": fit.df,
            "baseline_chi_square": fit.baseline_chi_square,
            "baseline_df": fit.baseline_df, "n": fit.n,
        }),
        "loadings.csv": _loadings_csv(fit, loadings),
        "scores.csv": _float_csv(scores),
        "discretization.json": dumps(disc.spec_.to_dict()),
        "net.json": dumps(net_full.to_dict()),
        "metrics_train.json": dumps(_metrics_json(reports["train"],
                                                  config.metrics_average)),
        "metrics_validation.json": dumps(_metrics_json(reports["validation"],
                                                       config.metrics_average)),
        "info_gain.json": dumps(ig.to_dict()),
        "contour_grid.json": dumps(grid.to_dict()),
        "profiles.json": dumps({"profiles": [p.to_dict() for p in profiles]}),
    }
    manifest = {
        "config_hash": config.config_hash(),
        "software_version": __version__,
        "config": config.canonical(),
        "defaults": {
            "quantile_convention": "linear interpolation, h = (n-1)p + 1",
            "boundary_rule": "value equal to a threshold falls in the lower bin",
            "prediction_tie_rule": "argmax ties go to the lowest level",
            "elimination_heuristic": "min-fill, ties by node name",
            "split_rng": "numpy PCG64 permutation",
            "rounding": "train size = round-half-to-even(fraction * n)",
        },
        "counts": {
            "n_ingested": data.n_cases,
            "n_complete": complete.n_cases,
            "n_train": len(assignment.train_ids),
            "n_validation": len(assignment.validation_ids),
        },
        "estimator_meta": {k: v for k, v in net_full.meta.items()
                           if k != "loglik_trace"},
        "artifacts": sorted(artifacts) + ["manifest.json"],
    }
    return PipelineResult(config=config, manifest=manifest, artifacts=artifacts)


def _loadings_csv(fit, loadings) -> str:
    lines = ["label,value,standardized"]
    table = {(r.latent, r.indicator): r.standardized
             for r in loadings.itertuples()}
    for e in fit.model.measurement_edges:
        raw = (e.param.value if not e.param.free
               else fit.estimates[e.param.label])
        std = table[(e.src, e.dst)]
        lines.append(f"{e.param.label},{format(float(raw), '.17g')},"
                     f"{format(float(std), '.17g')}")
    for label in fit.model.free_parameters:
        if "=~" not in label:
            lines.append(f"{label},{format(fit.estimates[label], '.17g')},")
    return "\n".join(lines) + "\n"


def write_result(result: PipelineResult, timestamps=True) -> dict:
    """Write artifacts + manifest to the configured output directory.

    Files land only after every stage succeeded, so a failed run leaves
    no partial outputs.
    """
    out_dir = result.config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    manifest = dict(result.manifest)
    if timestamps:
        now = datetime.datetime.now(datetime.timezone.utc).isoformat()
        manifest["timestamps"] = {"written_at": now}
    for name, content in result.artifacts.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write(content)
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(dumps(manifest))
    return manifest


def run_pipeline(config: PipelineConfig, timestamps=True) -> dict:
    """Run everything and write artifacts; returns the manifest."""
    result = run_stages(config)
    return write_result(result, timestamps=timestamps)


def compare_estimators(config: PipelineConfig, timestamps=True) -> dict:
    """Side-by-side EM vs BDeu train/validation metrics (comparison.json)."""
    rows = {}
    results = {}
    for method in ("em", "bdeu"):
        cfg = replace(config, estimator=method)
        result = run_stages(cfg)
        results[method] = result
        rows[method] = {
            "train": _pick_metrics(result, "metrics_train.json"),
            "validation": _pick_metrics(result, "metrics_validation.json"),
        }
    comparison = {
        "target": config.target,
        "k_bins": config.k_bins,
        "metrics": rows,
    }
    out_dir = config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "comparison.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(dumps(comparison))
    # also materialize the configured estimator's full artifact set
    write_result(results[config.estimator] if config.estimator in results
                 else results["bdeu"], timestamps=timestamps)
    return comparison


def _pick_metrics(result: PipelineResult, name: str) -> dict:
    import json
    doc = json.loads(result.artifacts[name])
    return {k: doc[k] for k in ("accuracy", "recall_macro", "f1_macro")}


def validate_config(config: PipelineConfig) -> list[str]:
    """Dry-run checks; returns a list of problems (empty = ok)."""
    problems = []
    try:
        model = parse_model_spec(config.model_text)
    except SembnError as exc:
        return [f"model: {exc}"]
    if not os.path.exists(config.data_path):
        problems.append(f"data: file not found: {config.data_path}")
    else:
        try:
            schema = _schema_for(config, config.data_path)
            names = {v.name for v in schema}
            missing = sorted(set(model.observed) - names)
            if missing:
                problems.append(f"data: columns missing for indicators {missing}")
        except Exception as exc:  # header unreadable
            problems.append(f"data: {exc}")
    if not 0 < config.split_fraction < 1:
        problems.append("split: fraction must be in (0, 1)")
    dag_nodes = set(model.latents)
    for node in (config.target, *config.contour_axes, *config.profile_nodes,
                 *(config.evidence or ())):
        if node not in dag_nodes:
            problems.append(f"analysis: {node!r} is not a latent in the model")
    if config.ess <= 0:
        problems.append("estimator: ess must be positive")
    return problems
