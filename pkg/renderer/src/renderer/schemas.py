"""Artifact loading and shape validation.

Each figure kind maps to one artifact schema published by the pipeline
CLI; everything here is structural checking, no numerics.
"""
from __future__ import annotations

import json


class SchemaMismatch(Exception):
    """The artifact does not match the requested figure kind."""


KINDS = ("contour", "flow", "profile-bars", "metric-bars")


def load_artifact(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SchemaMismatch(f"cannot read artifact {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"artifact {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaMismatch(f"artifact {path} must be a JSON object")
    return doc


def detect_kind(doc: dict) -> str:
    """Infer the figure kind from the artifact's top-level keys."""
    if {"axes", "values", "target"} <= set(doc):
        return "contour"
    if {"edges", "target"} <= set(doc):
        return "flow"
    if "profiles" in doc:
        return "profile-bars"
    if "metrics" in doc:
        return "metric-bars"
    raise SchemaMismatch(
        f"unrecognized artifact with keys {sorted(doc)}")


def check_contour(doc: dict) -> dict:
    _require(doc, ("target", "axes", "values"), "contour")
    values = doc["values"]
    if not values or len(doc["axes"]) != 2:
        raise SchemaMismatch("contour artifact needs two axes and values")
    n_rows = len(values[0])
    n_cols = len(values[0][0])
    for plane in values:
        if len(plane) != n_rows or any(len(row) != n_cols for row in plane):
            raise SchemaMismatch("contour planes must share one shape")
    return doc


def check_flow(doc: dict) -> dict:
    _require(doc, ("target", "edges"), "flow")
    if not doc["edges"]:
        raise SchemaMismatch("flow artifact has no edges")
    for edge in doc["edges"]:
        _require(edge, ("source", "target", "weight"), "flow edge")
        if edge["weight"] < 0:
            raise SchemaMismatch(
                f"negative flow weight on edge from {edge['source']}")
    return doc


def check_profiles(doc: dict) -> dict:
    _require(doc, ("profiles",), "profile-bars")
    for profile in doc["profiles"]:
        _require(profile, ("given", "children"), "profile")
        _require(profile["given"], ("node", "level"), "profile given")
    return doc


def check_metrics(doc: dict) -> dict:
    _require(doc, ("metrics",), "metric-bars")
    for method, parts in doc["metrics"].items():
        if not isinstance(parts, dict) or not parts:
            raise SchemaMismatch(f"metrics for {method!r} must map splits")
    return doc


CHECKERS = {
    "contour": check_contour,
    "flow": check_flow,
    "profile-bars": check_profiles,
    "metric-bars": check_metrics,
}


def validate(doc: dict, kind: str) -> dict:
    if kind not in CHECKERS:
        raise SchemaMismatch(f"unknown figure kind {kind!r}")
    detected = detect_kind(doc)
    if detected != kind:
        raise SchemaMismatch(
            f"artifact looks like {detected!r}, not {kind!r}")
    return CHECKERS[kind](doc)


def _require(doc, keys, what: str) -> None:
    missing = [k for k in keys if k not in doc]
    if missing:
        raise SchemaMismatch(f"{what} artifact is missing {missing}")
