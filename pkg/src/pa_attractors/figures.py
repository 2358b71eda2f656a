"""SVG figures for reports.  Output is byte-stable: fixed hash salt, no date."""
from __future__ import annotations

import io
import os
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .circle import LiftedCircleMap, iterate_lift, lift_eval, make_correct_triple, periodic_points  # noqa: E402
from .cover import cover_from_dict  # noqa: E402
from .flat import DirectionalFoliation, render_foliation, surface_from_dict  # noqa: E402
from .pseudo_anosov import LinearTorusMap, invariant_foliations  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "pa-attractors"


def _svg(fig) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def cobweb_svg(triple, start: float = 0.37, steps: int = 40) -> str:
    t = make_correct_triple(*triple)
    xs = np.linspace(0.0, 1.0, 801)
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(xs, [lift_eval(t, x) % 1.0 for x in xs], ",", color="#3060a0")
    ax.plot([0, 1], [0, 1], color="gray", linewidth=0.6)
    x = start
    for _ in range(steps):
        y = lift_eval(t, x) % 1.0
        ax.plot([x, x, y], [x, y, y], color="#d08020", linewidth=0.5)
        x = y
    for rec in periodic_points(t):
        th = rec.point.theta
        (mark,) = ax.plot([th], [th], "o", color="crimson" if rec.kind == "sink" else "black", markersize=4)
        mark.set_gid(f"periodic-{rec.index}")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("theta")
    ax.set_ylabel("phi(theta)")
    ax.set_title(f"circle map (n,k,l)=({t.n},{t.k},{t.l})")
    return _svg(fig)


def rotation_svg(triple, seed: int = 0, max_power: int = 6) -> str:
    t = make_correct_triple(*triple)
    lift = LiftedCircleMap.from_triple(t)
    r0 = float(np.random.default_rng(seed).uniform())
    ns = np.unique(np.logspace(0, max_power, 25).astype(int))
    errs = [max(abs((iterate_lift(lift, r0, int(n)) - r0) / n - t.l / t.k), 1e-17) for n in ns]
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.loglog(ns, errs, "o-", markersize=3)
    ax.set_xlabel("iterations N")
    ax.set_ylabel("|estimate - l/k|")
    ax.set_title("rotation number convergence")
    return _svg(fig)


def partition_svg(cover_doc, matrix, perturb=None) -> str:
    from .markov import lift_partition, markov_adler_weiss, perturb_rectangle
    cover = cover_from_dict(cover_doc)
    part = markov_adler_weiss(LinearTorusMap(matrix))
    lifted = lift_partition(part, cover, refine=True)
    if perturb is not None:
        lifted = perturb_rectangle(lifted, 0, perturb)
    fig, axes = plt.subplots(1, 2, figsize=(8, 4))
    colors = plt.cm.tab10.colors
    for sheet, ax in enumerate(axes):
        for i, r in enumerate(lifted.rectangles):
            if r.sheet != sheet:
                continue
            p = r.array
            for n in ((0, 0), (-1, 0), (0, -1), (-1, -1), (1, 0), (0, 1)):
                q = p + np.array(n)
                ax.fill(q[:, 0], q[:, 1], color=colors[(i // 2) % 10], alpha=0.35, linewidth=0.4,
                        edgecolor="black")
        for b in cover.branch_points:
            ax.plot([float(b[0])], [float(b[1])], "*", color="crimson", markersize=8)
        ax.plot([0, 1, 1, 0, 0], [0, 0, 1, 1, 0], color="black", linewidth=1.0)
        ax.set_xlim(-0.05, 1.05)
        ax.set_ylim(-0.05, 1.05)
        ax.set_aspect("equal")
        ax.set_title(f"sheet {sheet}")
    return _svg(fig)


def components_svg(triple, J="deck") -> str:
    t = make_correct_triple(*triple)
    size = 2 * t.nk
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.add_patch(plt.Rectangle((0, 0), 1, 1, fill=False, linewidth=1.0))
    for i in range(size):
        lvl = i / size
        color = "crimson" if i % 2 else "#3060a0"
        ax.plot([0.05, 0.95], [lvl, lvl], color=color, linewidth=2.0)
        ax.text(0.97, lvl, f"B{i}", fontsize=7, va="center")
        j = (i + 2 * t.n * t.l) % size
        ax.annotate("", xy=(0.5 + 0.3 * (j - i) / size, j / size), xytext=(0.5, lvl),
                    arrowprops={"arrowstyle": "->", "color": "gray", "linewidth": 0.6})
    ax.text(0.02, 1.02, f"top glued to bottom by {J}", fontsize=8)
    ax.set_xlim(0, 1.1)
    ax.set_ylim(-0.05, 1.08)
    ax.set_xlabel("fibre (schematic)")
    ax.set_ylabel("r")
    ax.set_title("non-wandering components (red: attractors)")
    return _svg(fig)


def foliation_svg(spec) -> str:
    if spec.get("source") == "cover":
        cover = cover_from_dict(spec["cover"])
        fols = invariant_foliations(LinearTorusMap(spec["matrix"]))
        return render_foliation(cover.surface, fols.stable, density=1.0)
    payload = spec["scene"]
    if payload.get("cover") is not None:
        s = cover_from_dict(payload["cover"]).surface
    else:
        s = surface_from_dict(payload)
    from .flat import parse_number
    f = DirectionalFoliation(tuple(float(parse_number(x)) for x in payload["foliation"]))
    return render_foliation(s, f, density=1.0)


def emit_figures(report, out_dir: str) -> List[str]:
    """Write every figure the report asks for; returns the file paths."""
    doc = report if isinstance(report, dict) else report.to_dict()
    render = doc.get("render") or {}
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    makers = {
        "cobweb": lambda s: cobweb_svg(s["triple"]),
        "rotation": lambda s: rotation_svg(s["triple"], s.get("seed", 0)),
        "foliation": foliation_svg,
        "partition": lambda s: partition_svg(s["cover"], s["matrix"], s.get("perturb")),
        "components": lambda s: components_svg(s["triple"], s.get("J", "deck")),
    }
    for name in sorted(render):
        if name not in makers:
            continue
        path = os.path.join(out_dir, f"{name}.svg")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(makers[name](render[name]))
        paths.append(path)
    return paths
