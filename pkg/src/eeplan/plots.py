"""Static figure rendering for experiment outputs (PNG and SVG)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "eeplan"  # stable element ids
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FORMATS = ("png", "svg")
_META = {"png": {"Software": None}, "svg": {"Date": None}}


def _save(fig, out: Path, stem: str) -> list[str]:
    paths = []
    for ext in FORMATS:
        path = out / f"{stem}.{ext}"
        fig.savefig(path, dpi=120, bbox_inches="tight", metadata=_META[ext])
        paths.append(str(path))
    plt.close(fig)
    return paths


def _moments(rows, summary, out):
    fig, ax = plt.subplots(figsize=(6, 4))
    for model in sorted({r["model"] for r in rows}):
        sel = [r for r in rows if r["model"] == model]
        lam = [r["lambda"] for r in sel]
        ax.plot(lam, [r["mu1"] for r in sel], marker="o", label=f"{model} mu1")
        ax.plot(lam, [r["mu2"] for r in sel], marker="s", ls="--", label=f"{model} mu2")
    ax.set_xlabel("BS density [BS/km$^2$]")
    ax.set_ylabel("interference moment")
    ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, out, "moments")


def _mc_surface(rows, summary, out):
    schemes = sorted({r["scheme"] for r in rows})
    fig, axes = plt.subplots(1, len(schemes), figsize=(4.5 * len(schemes), 4), squeeze=False)
    for ax, s in zip(axes[0], schemes):
        sel = [r for r in rows if r["scheme"] == s]
        lams = sorted({r["lambda"] for r in sel})
        zetas = sorted({r["zeta"] for r in sel})
        grid = np.full((len(zetas), len(lams)), np.nan)
        for r in sel:
            grid[zetas.index(r["zeta"]), lams.index(r["lambda"])] = r.get("ee_mbit_per_j", np.nan)
        im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
        ax.set_xticks(range(len(lams)), [f"{v:g}" for v in lams], fontsize=7)
        ax.set_yticks(range(len(zetas)), [f"{v:g}" for v in zetas], fontsize=7)
        best = summary.get("optima", {}).get(s)
        if best:
            ax.plot(lams.index(best["lambda"]), zetas.index(best["zeta"]), "r*", ms=12)
        ax.set_title(f"{s.upper()} EE [Mbit/J]")
        ax.set_xlabel("lambda")
        ax.set_ylabel("zeta")
        fig.colorbar(im, ax=ax)
    return _save(fig, out, "mc_surface")


def _ee_vs_lambda(rows, summary, out):
    fig, ax = plt.subplots(figsize=(6, 4))
    keys = sorted({(r["model"], r["scheme"]) for r in rows if r.get("reason") == "ok"})
    for model, s in keys:
        sel = [r for r in rows if r["model"] == model and r["scheme"] == s and r.get("reason") == "ok"]
        ax.plot([r["lambda"] for r in sel], [r["ee_mbit_per_j"] for r in sel], marker="o",
                ls="-" if model == "multislope" else "--", label=f"{s.upper()} {model}")
    ax.set_xlabel("BS density [BS/km$^2$]")
    ax.set_ylabel("EE [Mbit/J]")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, out, "ee_vs_lambda")


def _mk_surface(rows, summary, out):
    grid = summary.get("_grid")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if grid is not None:
        data = np.where(np.isnan(grid.ee), np.nan, grid.ee / 1e6)
        extent = (grid.K_values[0] - 0.5, grid.K_values[-1] + 0.5, grid.M_values[0] - 0.5, grid.M_values[-1] + 0.5)
        im = ax.imshow(data, origin="lower", aspect="auto", extent=extent, cmap="viridis")
        fig.colorbar(im, ax=ax, label="EE [Mbit/J]")
        ax.plot(grid.best.K, grid.best.M, "k^", ms=10, label="grid optimum")
        alt = summary.get("_alt")
        if alt is not None:
            ax.plot(alt.point.K, alt.point.M, "ro", mfc="none", ms=10, label="alternating")
        ax.legend(fontsize=8)
    ax.set_xlabel("K")
    ax.set_ylabel("M")
    return _save(fig, out, "mk_surface")


def _optimize(rows, summary, out):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ok = [r for r in rows if r.get("converged")]
    ax.plot([r["gamma"] for r in ok], [r["EE_star_bit_per_J"] / 1e6 for r in ok], marker="o")
    ax.set_xlabel("target SINR")
    ax.set_ylabel("optimal EE [Mbit/J]")
    ax.grid(alpha=0.3)
    return _save(fig, out, "optimize")


def _table4(rows, summary, out):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    gammas = sorted({r["gamma"] for r in rows})
    width = 0.38
    for offset, s in ((-width / 2, "zf"), (width / 2, "mr")):
        vals = [next((r["ee_mbit_per_j"] for r in rows if r["scheme"] == s and r["gamma"] == g), np.nan) for g in gammas]
        ax.bar(np.arange(len(gammas)) + offset, vals, width, label=s.upper())
    ax.set_xticks(range(len(gammas)), [f"{g:g}" for g in gammas])
    ax.set_xlabel("target SINR")
    ax.set_ylabel("EE [Mbit/J]")
    ax.legend()
    return _save(fig, out, "table4")


_RENDERERS = {
    "moments": _moments,
    "mc-surface": _mc_surface,
    "ee-vs-lambda": _ee_vs_lambda,
    "mk-surface": _mk_surface,
    "optimize": _optimize,
    "table4": _table4,
}


def render(spec, rows, summary, out) -> list[str]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return _RENDERERS[spec.kind](rows, summary, out)
