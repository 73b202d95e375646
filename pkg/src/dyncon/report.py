"""Fuzz-campaign reporting: delimited summary plus rendered figures."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def write_fuzz_report(results, outdir) -> list[str]:
    """Write summary.csv and PNG figures for a fuzz campaign.

    Returns the list of file paths written.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    summary = outdir / "summary.csv"
    with open(summary, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["seed", "passed", "consensus_uses", "max_cr_iterations", "crashed", "failures"]
        )
        for r in results:
            writer.writerow(
                [
                    r.seed,
                    int(r.passed),
                    r.consensus_uses,
                    r.max_cr_iterations,
                    int(r.crashed),
                    "; ".join(r.failures),
                ]
            )
    written.append(str(summary))

    uses = [r.consensus_uses for r in results]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(uses, bins=range(max(uses, default=0) + 2), align="left", rwidth=0.8)
    ax.set_xlabel("consensus uses per seed")
    ax.set_ylabel("seeds")
    ax.set_title("Strong synchronization across the fuzz corpus")
    fig.tight_layout()
    uses_png = outdir / "consensus_uses.png"
    fig.savefig(uses_png)
    plt.close(fig)
    written.append(str(uses_png))

    iters = [r.max_cr_iterations for r in results]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(iters, bins=range(max(iters, default=0) + 2), align="left", rwidth=0.8)
    ax.set_xlabel("max conflict-resolution iterations per seed")
    ax.set_ylabel("seeds")
    ax.set_title("Conflict-resolution effort")
    fig.tight_layout()
    iters_png = outdir / "cr_iterations.png"
    fig.savefig(iters_png)
    plt.close(fig)
    written.append(str(iters_png))
    return written
