"""
Command-line interface of petrecon.

Every subcommand loads the run configuration, executes one pipeline step and updates the artifact
manifest. Exit codes: 0 success, 2 configuration error, 3 missing or unreadable artifact, 4 numerical
failure.
"""

import sys
from pathlib import Path
from typing import Annotated, Any, Callable, List, Optional

import typer
from loguru import logger
from pydantic import ValidationError
from rich.console import Console
from rich.progress import BarColumn, Progress, TaskProgressColumn, TextColumn, TimeRemainingColumn
from rich.table import Table

from petrecon.config import RunConfig, load_config, serialize_config
from petrecon.errors import (
    ConfigurationError,
    DimensionError,
    DomainError,
    FormatError,
    MissingArtifactError,
    NumericalError,
)
from petrecon.pipeline import EvaluationSummary, Pipeline, ReconOverrides
from petrecon.recon import METHODS

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} - petrecon - {level} - {message}"

EXIT_CONFIG = 2
EXIT_ARTIFACT = 3
EXIT_NUMERICAL = 4

app = typer.Typer(add_completion=False, help="Desk-scale PET simulation and reconstruction.")

console = Console(stderr=True)

ConfigOption = Annotated[Optional[Path], typer.Option("--config", "-c", help="Run configuration (TOML)")]
SeedOption = Annotated[Optional[int], typer.Option("--seed", help="Override the global seed")]
ThreadsOption = Annotated[Optional[int], typer.Option("--threads", min=1, help="Worker thread cap")]
DefaultsOption = Annotated[bool, typer.Option("--print-defaults", help="Print the default configuration and exit")]
VerboseOption = Annotated[bool, typer.Option("--verbose", "-v", help="Log debug messages")]


def setup_logging(verbose: bool = False) -> None:
    logger.remove()
    logger.add(sys.stderr, format=LOG_FORMAT, level="DEBUG" if verbose else "INFO")


def print_defaults() -> None:
    typer.echo(serialize_config(RunConfig()), nl=False)


def artifact_table(paths: List[Path], pipeline: Pipeline) -> Table:
    table = Table(show_header=True, header_style="bold")
    table.add_column("Artifact")
    table.add_column("Kind")
    for path in paths:
        relative = path.resolve().relative_to(pipeline.output_dir.resolve()).as_posix()
        entry = next((e for e in pipeline.manifest.entries() if e.path == relative), None)
        table.add_row(relative, entry.kind if entry else "")
    return table


def evaluation_tables(summary: EvaluationSummary) -> List[Table]:
    curves = Table(title="CR vs. background STD", show_header=True, header_style="bold")
    for column in ("Method", "Sweep value", "STD", "CR"):
        curves.add_column(column, justify="left" if column == "Method" else "right")
    for curve in summary.curves:
        for value, std, cr in zip(curve.values, curve.std, curve.cr):
            curves.add_row(curve.method, f"{value:g}", f"{std:.4f}", f"{cr:.4f}")

    matched = Table(title="Matched-STD comparison", show_header=True, header_style="bold")
    for column in ("Methods", "STD", "CR a", "CR b", "Mean margin", "Min margin"):
        matched.add_column(column, justify="left" if column == "Methods" else "right")
    for c in summary.comparisons:
        style = "green" if c.mean_margin >= 0 else "red"
        matched.add_row(
            f"{c.method_a} vs {c.method_b}",
            f"{c.std:.4f}",
            f"{c.cr_a:.4f}",
            f"{c.cr_b:.4f}",
            f"[{style}]{c.mean_margin:+.4f}[/]",
            f"{c.min_margin:+.4f}",
        )

    tables = [curves, matched]
    if summary.lesion_cr:
        lesion = Table(title="Lesion-difference CR", show_header=True, header_style="bold")
        lesion.add_column("Method")
        lesion.add_column("CR", justify="right")
        for method, cr in summary.lesion_cr.items():
            lesion.add_row(method, f"{cr:.4f}")
        tables.append(lesion)
    return tables


def run(
    config: Optional[Path],
    seed: Optional[int],
    threads: Optional[int],
    defaults: bool,
    verbose: bool,
    action: Callable[[Pipeline], Any],
) -> Any:
    """Load the configuration, run one action on a pipeline and map failures to exit codes."""
    setup_logging(verbose)
    if defaults:
        print_defaults()
        raise typer.Exit(0)
    try:
        cfg, base_dir = load_config(config)
        if seed is not None:
            cfg = cfg.model_copy(update={"seed": seed})
        pipeline = Pipeline(cfg, base_dir, threads)
        result = action(pipeline)
        pipeline.save_manifest()
        return result
    except (ConfigurationError, DimensionError, DomainError, ValidationError) as err:
        logger.error(str(err))
        raise typer.Exit(EXIT_CONFIG) from err
    except (MissingArtifactError, FormatError) as err:
        logger.error(str(err))
        raise typer.Exit(EXIT_ARTIFACT) from err
    except NumericalError as err:
        logger.error(str(err))
        raise typer.Exit(EXIT_NUMERICAL) from err


def train_with_progress(pipeline: Pipeline) -> List[Path]:
    epochs = pipeline.config.training.epochs
    with Progress(
        TextColumn("[bold blue]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        TimeRemainingColumn(),
        console=console,
        transient=True,
    ) as progress:
        task = progress.add_task("[cyan]Training", total=epochs)

        def update(epoch: int, loss: float) -> None:
            description = f"[cyan]Training - epoch {epoch + 1}/{epochs}, loss {loss:.4g}"
            progress.update(task, advance=1, description=description)

        return pipeline.train(update)


@app.callback(invoke_without_command=True)
def main(ctx: typer.Context, defaults: DefaultsOption = False) -> None:
    """Desk-scale PET simulation and reconstruction."""
    if defaults:
        print_defaults()
        raise typer.Exit(0)
    if ctx.invoked_subcommand is None:
        typer.echo(ctx.get_help())


@app.command()
def phantom(
    config: ConfigOption = None,
    seed: SeedOption = None,
    threads: ThreadsOption = None,
    defaults: DefaultsOption = False,
    verbose: VerboseOption = False,
) -> None:
    """Rasterize the training phantoms and the test phantom."""
    run(config, seed, threads, defaults, verbose, lambda p: console.print(artifact_table(p.phantom(), p)))


@app.command()
def simulate(
    config: ConfigOption = None,
    seed: SeedOption = None,
    threads: ThreadsOption = None,
    defaults: DefaultsOption = False,
    verbose: VerboseOption = False,
) -> None:
    """Simulate the low-count test realizations."""
    run(config, seed, threads, defaults, verbose, lambda p: console.print(artifact_table(p.simulate(), p)))


@app.command("build-train-set")
def build_train_set(
    config: ConfigOption = None,
    seed: SeedOption = None,
    threads: ThreadsOption = None,
    defaults: DefaultsOption = False,
    verbose: VerboseOption = False,
) -> None:
    """Reconstruct the training input/label pairs."""
    run(config, seed, threads, defaults, verbose, lambda p: logger.info(f"Wrote {len(p.build_train_set())} files"))


@app.command()
def train(
    config: ConfigOption = None,
    seed: SeedOption = None,
    threads: ThreadsOption = None,
    defaults: DefaultsOption = False,
    verbose: VerboseOption = False,
) -> None:
    """Train the network on the training set."""
    run(config, seed, threads, defaults, verbose, lambda p: console.print(artifact_table(train_with_progress(p), p)))


@app.command()
def reconstruct(
    method: Annotated[str, typer.Option("--method", "-m", help=f"One of {', '.join(METHODS)}")] = "mlem",
    realization: Annotated[int, typer.Option("--realization", "-r", min=0, help="Test realization")] = 0,
    iterations: Annotated[Optional[int], typer.Option("--iterations", min=1, help="Iteration count")] = None,
    fwhm: Annotated[Optional[float], typer.Option("--fwhm", min=0.0, help="Post-filter FWHM in mm")] = None,
    beta: Annotated[Optional[float], typer.Option("--beta", min=0.0, help="Penalty weight")] = None,
    config: ConfigOption = None,
    seed: SeedOption = None,
    threads: ThreadsOption = None,
    defaults: DefaultsOption = False,
    verbose: VerboseOption = False,
) -> None:
    """Reconstruct one low-count test realization."""
    overrides = ReconOverrides(iterations=iterations, fwhm=fwhm, beta=beta)
    run(
        config,
        seed,
        threads,
        defaults,
        verbose,
        lambda p: console.print(artifact_table(p.reconstruct(method, realization, overrides), p)),
    )


def _evaluate(pipeline: Pipeline) -> None:
    for table in evaluation_tables(pipeline.evaluate()):
        console.print(table)


@app.command()
def evaluate(
    config: ConfigOption = None,
    seed: SeedOption = None,
    threads: ThreadsOption = None,
    defaults: DefaultsOption = False,
    verbose: VerboseOption = False,
) -> None:
    """Compute the CR-vs-STD curves and the matched-STD comparison."""
    run(config, seed, threads, defaults, verbose, _evaluate)


@app.command()
def plot(
    config: ConfigOption = None,
    seed: SeedOption = None,
    threads: ThreadsOption = None,
    defaults: DefaultsOption = False,
    verbose: VerboseOption = False,
) -> None:
    """Render the CR-vs-STD curves as SVG."""
    run(config, seed, threads, defaults, verbose, lambda p: console.print(artifact_table(p.plot(), p)))


def _all(pipeline: Pipeline) -> None:
    steps: List[Callable[[], Any]] = [pipeline.phantom, pipeline.simulate, pipeline.build_train_set]
    steps.append(lambda: train_with_progress(pipeline))
    steps += [lambda m=method: pipeline.reconstruct(m) for method in pipeline.config.eval.methods]
    steps += [lambda: _evaluate(pipeline), pipeline.plot]
    for step in steps:
        step()
        pipeline.save_manifest()
    logger.info(f"Manifest lists {len(pipeline.manifest)} artifacts")


@app.command("all")
def run_all(
    config: ConfigOption = None,
    seed: SeedOption = None,
    threads: ThreadsOption = None,
    defaults: DefaultsOption = False,
    verbose: VerboseOption = False,
) -> None:
    """Run every step with one seed."""
    run(config, seed, threads, defaults, verbose, _all)


if __name__ == "__main__":
    app()
