"""Figure builders for the four artifact kinds.

Every function returns a RenderResult carrying the written paths and the
exact numbers that were plotted, so fidelity against the source artifact
can be checked without reading pixels back.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schemas import validate

DEFAULT_STYLE = {"colormap": "viridis", "dpi": 150, "format": "png"}


@dataclass
class RenderResult:
    paths: list[str]
    plotted: dict = field(default_factory=dict)


def _style(overrides) -> dict:
    style = dict(DEFAULT_STYLE)
    style.update(overrides or {})
    return style


def _derive(out_path: str, suffix: str, fmt: str) -> str:
    base, ext = os.path.splitext(out_path)
    if not ext:
        ext = f".{fmt}"
    return f"{base}{suffix}{ext}"


def _save(fig, path: str, style: dict) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    # strip per-run metadata so identical inputs give identical bytes
    fmt = os.path.splitext(path)[1].lstrip(".") or style["format"]
    metadata = {"Date": None} if fmt == "svg" else None
    with matplotlib.rc_context({"svg.hashsalt": "renderer"}):
        fig.savefig(path, dpi=style["dpi"], metadata=metadata)
    plt.close(fig)


def render_contours(doc: dict, out_path: str, style=None) -> RenderResult:
    """One filled-contour panel per target level of the grid artifact."""
    doc = validate(doc, "contour")
    style = _style(style)
    a_name, b_name = doc["axes"]
    planes = [np.array([[math.nan if v is None else float(v) for v in row]
                        for row in plane])
              for plane in doc["values"]]
    paths, plotted = [], {}
    for level, plane in enumerate(planes, start=1):
        n_a, n_b = plane.shape
        fig, ax = plt.subplots(figsize=(5, 4))
        a_ticks = np.arange(1, n_a + 1)
        b_ticks = np.arange(1, n_b + 1)
        filled = ax.contourf(a_ticks, b_ticks, plane.T,
                             levels=12, cmap=style["colormap"])
        fig.colorbar(filled, ax=ax,
                     label=f"P({doc['target']} = {level})")
        ax.set_xlabel(a_name)
        ax.set_ylabel(b_name)
        ax.set_xticks(a_ticks)
        ax.set_yticks(b_ticks)
        ax.set_title(f"{doc['target']} level {level}")
        path = _derive(out_path, f"_level{level}", style["format"])
        _save(fig, path, style)
        paths.append(path)
        plotted[level] = plane
    return RenderResult(paths=paths, plotted={"planes": plotted})


def render_flow(doc: dict, out_path: str, style=None) -> RenderResult:
    """Flow diagram with link widths proportional to information gain.

    Zero-gain edges are left out of the drawing and listed in a note so
    the omission is visible.
    """
    doc = validate(doc, "flow")
    style = _style(style)
    drawn = [e for e in doc["edges"] if e["weight"] > 0]
    omitted = [e["source"] for e in doc["edges"] if e["weight"] == 0]
    if not drawn:
        raise ValueError("all edges have zero weight; nothing to draw")

    total = sum(e["weight"] for e in drawn)
    cmap = plt.get_cmap(style["colormap"])
    fig, ax = plt.subplots(figsize=(7, 5))
    gap = 0.04
    span = 0.9 - gap * (len(drawn) - 1)
    y_left = 0.95
    y_right = 0.95
    widths = {}
    x = np.linspace(0.15, 0.85, 64)
    blend = (1 - np.cos(np.pi * (x - 0.15) / 0.7)) / 2
    for idx, edge in enumerate(drawn):
        width = span * edge["weight"] / total
        top = y_left * (1 - blend) + y_right * blend
        ax.fill_between(x, top - width, top,
                        color=cmap(idx / max(len(drawn) - 1, 1)), alpha=0.75)
        ax.text(0.13, y_left - width / 2, edge["source"],
                ha="right", va="center")
        y_left -= width + gap
        y_right -= width
        widths[edge["source"]] = width
    ax.text(0.87, (0.95 + y_right) / 2, doc["target"],
            ha="left", va="center", fontweight="bold")
    if omitted:
        ax.text(0.02, 0.02,
                "omitted (zero gain): " + ", ".join(omitted),
                fontsize=8, transform=ax.transAxes)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.axis("off")
    ax.set_title(f"Information gain into {doc['target']}")
    path = _derive(out_path, "", style["format"])
    _save(fig, path, style)
    return RenderResult(paths=[path],
                        plotted={"widths": widths, "omitted": omitted})


def render_profiles(doc: dict, out_path: str, style=None) -> RenderResult:
    """Grouped bar panels, one file per (node, level) profile."""
    doc = validate(doc, "profile-bars")
    style = _style(style)
    cmap = plt.get_cmap(style["colormap"])
    paths, plotted = [], {}
    for profile in doc["profiles"]:
        node = profile["given"]["node"]
        level = profile["given"]["level"]
        children = profile["children"]
        fig, ax = plt.subplots(figsize=(1.8 * max(len(children), 2) + 1, 4))
        for g_idx, (child, probs) in enumerate(children.items()):
            probs = [float(p) for p in probs]
            n = len(probs)
            positions = g_idx + np.linspace(-0.35, 0.35, n)
            colors = [cmap(i / max(n - 1, 1)) for i in range(n)]
            ax.bar(positions, probs, width=0.7 / n, color=colors)
            plotted.setdefault((node, level), {})[child] = probs
        ax.set_xticks(range(len(children)))
        ax.set_xticklabels(list(children))
        ax.set_ylabel("probability")
        ax.set_ylim(0, 1)
        ax.set_title(f"children of {node} given {node} = {level}")
        path = _derive(out_path, f"_{node}_level{level}", style["format"])
        _save(fig, path, style)
        paths.append(path)
    return RenderResult(paths=paths, plotted={"profiles": plotted})


def render_metric_bars(doc: dict, out_path: str, style=None) -> RenderResult:
    """Grouped metric bars, one file per data split (train/validation)."""
    doc = validate(doc, "metric-bars")
    style = _style(style)
    methods = list(doc["metrics"])
    splits = list(next(iter(doc["metrics"].values())))
    cmap = plt.get_cmap(style["colormap"])
    paths, plotted = [], {}
    for split in splits:
        metric_names = list(doc["metrics"][methods[0]][split])
        fig, ax = plt.subplots(figsize=(6, 4))
        for m_idx, method in enumerate(methods):
            values = [float(doc["metrics"][method][split][name])
                      for name in metric_names]
            offset = (m_idx - (len(methods) - 1) / 2) * 0.8 / len(methods)
            ax.bar(np.arange(len(values)) + offset, values,
                   width=0.8 / len(methods),
                   color=cmap(m_idx / max(len(methods) - 1, 1)),
                   label=method)
            plotted.setdefault(split, {})[method] = dict(
                zip(metric_names, values))
        ax.set_xticks(range(len(metric_names)))
        ax.set_xticklabels(metric_names)
        ax.set_ylim(0, 1)
        ax.set_ylabel("score")
        ax.legend()
        ax.set_title(f"{split} metrics")
        path = _derive(out_path, f"_{split}", style["format"])
        _save(fig, path, style)
        paths.append(path)
    return RenderResult(paths=paths, plotted={"splits": plotted})
