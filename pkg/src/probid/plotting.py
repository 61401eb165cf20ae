"""Figures for reports; written to files with the Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .rational import parse_rat  # noqa: E402


def _stage_list(report: dict) -> list[dict]:
    kind = report["kind"]
    if kind == "stage":
        return [report]
    if kind == "amplify":
        return report["amplify"]["stages"]
    if kind == "diagonalize":
        return [st for rd in report["diagonal"]["rounds"] for st in rd["stages"]]
    return []


def plot_stage(st: dict, path: Path) -> Path:
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.5))
    names = ["prec", "null", "inconsistent", "separator"]
    masses = st["masses"]
    vals = [float(parse_rat(masses[k])) if k in masses else 0.0 for k in names]
    ax0.bar(names, vals, color=["#4c72b0", "#999999", "#c44e52", "#55a868"])
    ax0.set_ylim(0, 1.05)
    ax0.set_title(f"stage {st['stage']}: masses ({st['verdict']})")
    if "pigeonhole" in st:
        betas = [float(parse_rat(b)) for b in st["pigeonhole"]["betas"]]
        ax1.bar(range(len(betas)), betas, width=1.0, color="#8172b2")
        ax1.axhline(float(parse_rat(st["pigeonhole"]["bound"])), color="k", ls="--", lw=1, label="2^-s")
        ax1.axvline(st["pigeonhole"]["j"], color="#c44e52", lw=1, label="j")
        ax1.set_xlabel("separator index")
        ax1.set_title("separator averages")
        ax1.legend(fontsize=8)
    else:
        ax1.text(0.5, 0.5, "precision-sparse stage", ha="center", va="center")
        ax1.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_diagonal(report: dict, path: Path) -> Path:
    dg = report["diagonal"]
    etas = [float(parse_rat(r["eta"])) for r in dg["rounds"]]
    etas.append(float(parse_rat(dg["eta"])))
    delta = float(parse_rat(dg["delta"]))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.step(range(len(etas)), etas, where="post", marker="o")
    ax.axhline(1 - delta, color="#c44e52", ls="--", lw=1, label="1 - delta")
    ax.set_xlabel("round")
    ax.set_ylabel("eta")
    ax.set_title(f"diagonalization: {dg['verdict']}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_empirical(report: dict, path: Path) -> Path:
    rows = report["results"]
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(rows)), 3.5))
    ax.bar([r["measure"] for r in rows], [r["success_decimal"] for r in rows], color="#4c72b0")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("success fraction")
    ax.set_title(f"{report['scenario']} ({report['criterion']})")
    ax.tick_params(axis="x", labelrotation=30, labelsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def render_figures(report: dict, outdir) -> list[Path]:
    """One PNG per stage plus a summary figure; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = report["scenario"]
    out = []
    for i, st in enumerate(_stage_list(report)):
        out.append(plot_stage(st, outdir / f"{stem}_stage{i:02d}_n{st['stage']}.png"))
    if report["kind"] == "diagonalize":
        out.append(plot_diagonal(report, outdir / f"{stem}_eta.png"))
    if report["kind"] == "empirical":
        out.append(plot_empirical(report, outdir / f"{stem}_success.png"))
    return out
