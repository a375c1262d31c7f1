"""
Desk-scale performance run.

Runs the full pipeline on the bundled desk configuration, reports the time of every step and checks
that the trained denoiser and the network-constrained reconstruction do what they are for. The
pytest entry points are marked ``performance`` and deselected by default; the typer app runs the
same steps from the command line and prints a summary table.
"""

import tempfile
from pathlib import Path
from typing import List, Tuple

import numpy as np
import pandas as pd
import pytest
import typer
from loguru import logger
from rich.console import Console
from rich.table import Table

from petrecon.config import load_config
from petrecon.io import read_volume
from petrecon.network import denoise_volume
from petrecon.pipeline import Pipeline
from petrecon.pipeline.commands import EvaluationSummary

app = typer.Typer()

console = Console()

DESK_CONFIG = Path(__file__).resolve().parents[4] / "configs" / "desk.toml"

# Minimum gap of cnn-admm over gauss at matched STD
ADMM_GAUSS_MARGIN = 0.02
MIN_MSE_REDUCTION = 0.2


def run_pipeline(output_dir: Path, threads: int = None) -> Tuple[Pipeline, EvaluationSummary, pd.DataFrame]:
    """
    Run every step of the desk configuration into ``output_dir``.

    Returns:
        tuple: The pipeline, its evaluation summary and a ``step,seconds`` table
    """
    cfg, _ = load_config(DESK_CONFIG)
    pipeline = Pipeline(cfg.model_copy(update={"output_dir": str(output_dir)}), workers=threads)
    timings = []
    summary = None
    steps = [
        ("phantom", pipeline.phantom),
        ("simulate", pipeline.simulate),
        ("build-train-set", pipeline.build_train_set),
        ("train", pipeline.train),
        ("evaluate", pipeline.evaluate),
        ("plot", pipeline.plot),
    ]
    for name, step in steps:
        logger.info(f"Running {name}")
        result = step()
        if name == "evaluate":
            summary = result
        timings.append({"step": name, "seconds": step.last_elapsed})
        pipeline.save_manifest()
    return pipeline, summary, pd.DataFrame(timings)


def mse_reduction(pipeline: Pipeline) -> float:
    """Relative MSE reduction of the denoiser on the held-out test phantom."""
    truth, _ = read_volume(pipeline.path("data", "test_truth.piv"))
    noisy = pipeline.reconstructor("mlem").reconstruct(
        pipeline._read_sinogram(pipeline.path("data", "test_low_r00.psg"), "simulate")
    )
    denoised = denoise_volume(pipeline._network(), noisy)
    before = float(np.mean((noisy - truth) ** 2))
    after = float(np.mean((denoised - truth) ** 2))
    return 1.0 - after / before


def margins(summary: EvaluationSummary) -> dict:
    return {(c.method_a, c.method_b): c.mean_margin for c in summary.comparisons}


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory):
    return run_pipeline(tmp_path_factory.mktemp("desk"))


@pytest.mark.performance
def test_denoiser_reduces_error(desk_run):
    pipeline, _, _ = desk_run
    assert mse_reduction(pipeline) >= MIN_MSE_REDUCTION


@pytest.mark.performance
def test_method_ordering(desk_run):
    _, summary, _ = desk_run
    found = margins(summary)
    assert found[("cnn-admm", "cnn-denoise")] >= 0
    assert found[("cnn-denoise", "gauss")] >= 0
    assert found[("cnn-admm", "gauss")] > ADMM_GAUSS_MARGIN


@pytest.mark.performance
def test_manifest_complete(desk_run):
    pipeline, _, timings = desk_run
    entries = pipeline.manifest.entries()
    assert all((pipeline.output_dir / e.path).is_file() for e in entries)
    assert {"network/weights.pnw", "eval/curves.csv", "eval/matched_std.csv", "plots/cr_std.svg"} <= {
        e.path for e in entries
    }
    assert timings["seconds"].sum() < 30 * 60


def timing_table(timings: pd.DataFrame) -> Table:
    table = Table(show_header=True, header_style="bold")
    table.add_column("Step")
    table.add_column("Seconds", justify="right")
    for _, row in timings.iterrows():
        table.add_row(row["step"], f"{row['seconds']:.1f}")
    table.add_row("[bold]total[/]", f"[bold]{timings['seconds'].sum():.1f}[/]")
    return table


def margin_table(summary: EvaluationSummary) -> Table:
    table = Table(show_header=True, header_style="bold")
    for column in ("Methods", "STD", "Mean margin", "Min margin"):
        table.add_column(column, justify="left" if column == "Methods" else "right")
    for c in summary.comparisons:
        style = "green" if c.mean_margin >= 0 else "red"
        table.add_row(
            f"{c.method_a} vs {c.method_b}", f"{c.std:.4f}", f"[{style}]{c.mean_margin:+.4f}[/]", f"{c.min_margin:+.4f}"
        )
    return table


@app.command()
def main(
    threads: int = typer.Option(None, "--threads", "-t", min=1, help="Worker thread cap"),
    output_dir: Path = typer.Option(None, "--output-dir", "-o", help="Keep the artifacts in this directory"),
    save_csv: bool = typer.Option(False, "--save-csv", help="Save the step timings next to the artifacts"),
):
    """Run the desk configuration and report timings, denoiser error and matched-STD margins."""
    console.print("[bold magenta]Starting desk-scale run[/bold magenta]")
    with tempfile.TemporaryDirectory() as tmp:
        root = output_dir or Path(tmp)
        pipeline, summary, timings = run_pipeline(root, threads)
        console.print(timing_table(timings))
        console.print(margin_table(summary))
        console.print(f"Denoiser MSE reduction: {mse_reduction(pipeline):.1%}")
        failures: List[str] = []
        if summary.comparisons and margins(summary).get(("cnn-admm", "gauss"), 0.0) <= ADMM_GAUSS_MARGIN:
            failures.append("cnn-admm does not beat gauss by the required margin")
        if save_csv:
            path = root / "timings.csv"
            timings.to_csv(path, index=False)
            console.print(f"[blue]Timings saved to {path}[/blue]")
    for failure in failures:
        console.print(f"[red]{failure}[/red]")
    raise typer.Exit(1 if failures else 0)


if __name__ == "__main__":
    app()
