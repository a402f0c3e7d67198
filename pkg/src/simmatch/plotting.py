"""
Contains the svg figures: plot_experiment(), plot_phase().

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

"""

import math
from pathlib import Path
from typing import TYPE_CHECKING

import matplotlib

matplotlib.use("Agg")

# pylint: disable=wrong-import-position
from matplotlib import pyplot as plt

if TYPE_CHECKING:
    from .core import ExperimentResult, PhaseResult

__all__ = ["plot_experiment", "plot_phase"]

# Fixed ids and no date stamp: identical data gives identical bytes.
plt.rcParams["svg.hashsalt"] = "simmatch"
_SVG_METADATA = {"Date": None}


def plot_experiment(result: "ExperimentResult", out_dir: str | Path, /) -> list[Path]:
    """
    Draw the output spectra (one panel per network, input spectrum dashed)
    and the error curves of an experiment.

    Returns
    -------
    list[Path]
        The svg files written.

    """
    out_dir = Path(out_dir)
    scenario = result.config.scenario
    runs = list(result.runs.values())

    fig, axes = plt.subplots(1, len(runs), figsize=(4 * len(runs), 3.5), squeeze=False)
    for ax, run in zip(axes[0], runs):
        log = run.log
        if len(log):
            ax.plot(log.t, log.input_spectra(), "k--", linewidth=0.8)
            ax.plot(log.t, log.output_spectra(), linewidth=1.2)
        ax.set_title(f"{run.kind} (alpha={run.config.alpha:.3g})")
        ax.set_xlabel("iteration")
    axes[0][0].set_ylabel("eigenvalue")
    fig.tight_layout()
    spectra = out_dir / f"{scenario}_spectra.svg"
    fig.savefig(spectra, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)

    fig, axes = plt.subplots(1, 2, figsize=(8, 3.5))
    for name, ax in zip(("eigenvalue_error", "subspace_error"), axes):
        for run in runs:
            if len(run.log):
                ax.semilogy(run.log.t, run.log.errors(name), label=str(run.kind))
        ax.set_title(name.replace("_", " "))
        ax.set_xlabel("iteration")
        ax.legend()
    fig.tight_layout()
    errors = out_dir / f"{scenario}_errors.svg"
    fig.savefig(errors, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    return [spectra, errors]


def plot_phase(result: "PhaseResult", out_dir: str | Path, /) -> list[Path]:
    """
    Draw the fraction curves (signal transmitted against noise
    transmitted) and the phase diagram of successful α ranges.

    """
    out_dir = Path(out_dir)

    fig, ax = plt.subplots(figsize=(4.5, 4))
    for kind, points in result.curves.items():
        ax.plot(
            [p.noise_transmitted for p in points],
            [p.signal for p in points],
            marker=".",
            markersize=2,
            label=str(kind),
        )
    ax.set_xlabel("fraction with all noise transmitted")
    ax.set_ylabel("fraction with all signal transmitted")
    ax.legend()
    fig.tight_layout()
    fractions = out_dir / "fractions.svg"
    fig.savefig(fractions, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)

    edges = [
        v
        for rows in result.diagrams.values()
        for _, rng in rows
        for v in (rng.low, rng.high)
        if math.isfinite(v)
    ]
    top = 10 * max(edges, default=1.0)
    fig, ax = plt.subplots(figsize=(5, 4))
    for kind, rows in result.diagrams.items():
        ratios = [r for r, _ in rows]
        lows = [rng.low for _, rng in rows]
        highs = [rng.high if rng.bounded else top for _, rng in rows]
        ax.fill_between(ratios, lows, highs, alpha=0.4, label=str(kind))
    ax.set_yscale("log")
    ax.set_xlabel("noise ratio b/a")
    ax.set_ylabel("alpha")
    ax.legend()
    fig.tight_layout()
    phase = out_dir / "phase.svg"
    fig.savefig(phase, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    return [fractions, phase]
