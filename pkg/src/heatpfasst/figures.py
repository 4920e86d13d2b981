"""Matplotlib renderings written next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .perfmodel import ReferenceRun  # noqa: E402

__all__ = ["save_speedup_figure", "save_steps_figure", "save_table_figure"]


def save_speedup_figure(path: Path, curve: list[tuple[int, float]], run_ranks: int, mode: str) -> Path:
    ranks = [p for p, _ in curve]
    speedups = [s for _, s in curve]
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.plot(ranks, ranks, "--", color="0.6", label="ideal")
    ax.plot(ranks, speedups, "o-", color="tab:green", label="model")
    if run_ranks in ranks:
        ax.plot([run_ranks], [speedups[ranks.index(run_ranks)]], "D", color="tab:red",
                label=f"this run ({run_ranks} ranks)")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.set_xticks(ranks, [str(p) for p in ranks])
    ax.set_xlabel("time ranks")
    ax.set_ylabel("speedup over serial SDC")
    ax.set_title(f"modeled time-parallel speedup ({mode} run)")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def save_steps_figure(path: Path, steps) -> Path:
    idx = [r.step for r in steps]
    fig, (ax_err, ax_it) = plt.subplots(1, 2, figsize=(9.0, 3.6))

    ax_err.semilogy(idx, [r.rel_max_error for r in steps], "o-", color="tab:blue",
                    label="rel. max error")
    ax_err.semilogy(idx, [max(r.residual, 1e-300) for r in steps], "s--", color="tab:orange",
                    label="final residual")
    ax_err.set_xlabel("time step")
    ax_err.legend(frameon=False)
    ax_err.grid(alpha=0.3)

    ax_it.plot(idx, [r.iterations for r in steps], "o-", color="tab:green")
    ax_it.set_xlabel("time step")
    ax_it.set_ylabel("iterations to tolerance")
    ax_it.set_ylim(bottom=0)
    ax_it.grid(alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def save_table_figure(path: Path, runs: dict[str, ReferenceRun]) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    all_ranks = sorted({p for run in runs.values() for p in run.ranks})
    ax.plot(all_ranks, all_ranks, "--", color="0.6", label="ideal")
    for name, run in runs.items():
        ax.plot(run.ranks, run.speedups, "o-", label=name)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.set_xticks(all_ranks, [str(p) for p in all_ranks])
    ax.set_xlabel("time ranks")
    ax.set_ylabel("published speedup")
    ax.legend(frameon=False, fontsize=8)
    ax.grid(alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
