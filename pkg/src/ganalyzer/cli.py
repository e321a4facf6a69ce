# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The cli module provides the `ganalyzer` command line, chaining ingest, label, stats, transform, report and plan.

Every subcommand is deterministic given its flags and input files; all randomness flows through `--seed`.

Exit codes:
    0: success
    1: usage error (unknown flags, missing arguments)
    2: I/O error or malformed input file
    3: invalid parameters or insufficient data
    4: numerical failure
    5: remote service failure
"""

from __future__ import annotations

import json
import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

import click
import numpy as np

from ganalyzer.__about__ import __version__
from ganalyzer.client import InferenceClient, RemoteScorer
from ganalyzer.evaluation import sweep_alpha, sweep_beta
from ganalyzer.exceptions import (
    CSVFormatError,
    DimensionMismatch,
    GanalyzerException,
    InsufficientSamples,
    NumericalError,
    RemoteError,
    StoreFormatError,
    ValidationError,
)
from ganalyzer.mock import MockInferenceService, serve
from ganalyzer.models import LatentStore, ServiceEndpoint
from ganalyzer.planner import execute_plan, load_plan, write_manifest
from ganalyzer.report import write_report
from ganalyzer.scoring import label_store, make_synthetic_world, read_labels, select_class, write_labels
from ganalyzer.stats import compute_class_stats, read_stats, write_stats
from ganalyzer.store import export_csv, import_csv, is_binary_store, read_store, sample_store, write_store
from ganalyzer.transform import apply_spec, load_spec, transform_store
from ganalyzer.utils import atomic_write_text, canonical_json

if TYPE_CHECKING:
    from collections.abc import Iterator, Sequence

    from ganalyzer.models import ClassStats
    from ganalyzer.scoring import Scorer, SyntheticWorld

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4
EXIT_REMOTE = 5

ENDPOINT_ENVVAR = "GANALYZER_ENDPOINT"

EXIT_CODES: tuple[tuple[type[BaseException], int], ...] = (
    (OSError, EXIT_IO),
    (StoreFormatError, EXIT_IO),
    (CSVFormatError, EXIT_IO),
    (ValidationError, EXIT_VALIDATION),
    (DimensionMismatch, EXIT_VALIDATION),
    (InsufficientSamples, EXIT_VALIDATION),
    (NumericalError, EXIT_NUMERIC),
    (RemoteError, EXIT_REMOTE),
)


def exit_code_for(exc: BaseException) -> int:
    """Return the exit code of an exception raised by a subcommand."""
    for exc_type, code in EXIT_CODES:
        if isinstance(exc, exc_type):
            return code
    return EXIT_VALIDATION


class ClickEchoHandler(logging.Handler):
    """A logging handler writing through click.echo to the current stderr."""

    def emit(self, record: logging.LogRecord) -> None:
        try:
            click.echo(self.format(record), err=True)
        except Exception:  # noqa: BLE001
            self.handleError(record)


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by every subcommand.

    Attributes:
        verbosity: The number of -v flags minus the number of -q flags.
        threads: The number of worker threads; None uses the available cores.
    """

    verbosity: int = 0
    threads: int | None = None

    @property
    def log_level(self) -> int:
        """Return WARNING for verbosity 0, INFO for 1, DEBUG for 2 or more, ERROR below 0."""
        return min(max(logging.WARNING - 10 * self.verbosity, logging.DEBUG), logging.CRITICAL)

    def configure_logging(self) -> None:
        """Route the package's log records to stderr at the configured level."""
        package_logger = logging.getLogger("ganalyzer")
        package_logger.setLevel(self.log_level)
        if not any(isinstance(handler, ClickEchoHandler) for handler in package_logger.handlers):
            handler = ClickEchoHandler()
            handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
            package_logger.addHandler(handler)


class GanalyzerGroup(click.Group):
    """A command group mapping exceptions to the documented exit codes."""

    def main(self, *args: Any, standalone_mode: bool = True, **kwargs: Any) -> Any:  # type: ignore[override]
        try:
            result = super().main(*args, standalone_mode=False, **kwargs)
            code = 0
        except click.ClickException as exc:
            exc.show()
            result, code = None, EXIT_USAGE if isinstance(exc, click.UsageError) else exc.exit_code
        except click.Abort:
            click.echo("Aborted!", err=True)
            result, code = None, EXIT_USAGE
        except (GanalyzerException, OSError) as exc:
            click.echo("Error: %s" % exc, err=True)
            result, code = None, exit_code_for(exc)
        if standalone_mode:
            sys.exit(code)
        if code:
            return code
        return result


def _parse_bias(ctx: click.Context, param: click.Parameter, values: Sequence[str]) -> dict[str, float]:
    biases = {}
    for value in values:
        name, sep, number = value.partition("=")
        try:
            biases[name] = float(number)
        except ValueError:
            sep = ""
        if not sep or not name:
            raise click.BadParameter("expected CLASS=NUMBER, got %r" % value, ctx=ctx, param=param)
    return biases


def _endpoint_from_env(ctx: click.Context, param: click.Parameter, value: str | None) -> str | None:
    return os.environ.get(ENDPOINT_ENVVAR) or value


def _parse_floats(ctx: click.Context, param: click.Parameter, value: str | None) -> tuple[float, ...] | None:
    if value is None:
        return None
    try:
        return tuple(float(item) for item in value.split(","))
    except ValueError:
        raise click.BadParameter("expected comma-separated numbers, got %r" % value, ctx=ctx, param=param) from None


def world_options(func: Any) -> Any:
    """Attach the synthetic-world scorer options to a command."""
    options = (
        click.option("--seed", type=int, default=0, show_default=True, help="Seed of the synthetic world."),
        click.option("--temperature", type=float, default=1.0, show_default=True, help="Softmax temperature."),
        click.option(
            "--bias", "biases", multiple=True, callback=_parse_bias, metavar="CLASS=NUMBER", help="Class logit offset."
        ),
        click.option("--orthogonal", is_flag=True, help="Use orthonormal class directions."),
    )
    for option in reversed(options):
        func = option(func)
    return func


def _world(seed: int, dimension: int, temperature: float, biases: dict[str, float], orthogonal: bool) -> SyntheticWorld:
    return make_synthetic_world(seed, dimension, temperature=temperature, biases=biases, orthogonal=orthogonal)


def _load_registry(paths: Sequence[Path]) -> dict[str, ClassStats]:
    registry: dict[str, ClassStats] = {}
    for path in paths:
        stats = read_stats(path)
        if stats.class_id in registry:
            raise ValidationError("Statistics for class %r given twice" % stats.class_id)
        registry[stats.class_id] = stats
    return registry


def _write_json(path: Path, data: Any) -> None:
    atomic_write_text(path, canonical_json(data) + "\n")


@click.group(cls=GanalyzerGroup, context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="ganalyzer")
@click.option("-v", "--verbose", count=True, help="Log more; repeat for debug output.")
@click.option("-q", "--quiet", count=True, help="Log less.")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads [default: all cores].")
@click.pass_context
def main(ctx: click.Context, verbose: int, quiet: int, threads: int | None) -> None:
    """Analyze and manipulate the latent space of a generative model."""
    config = RunConfig(verbosity=verbose - quiet, threads=threads)
    config.configure_logging()
    ctx.obj = config


@main.command()
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of the Gaussian stream.")
@click.option("--dimension", type=click.IntRange(min=1), required=True, help="Latent dimension d.")
@click.option("--count", type=click.IntRange(min=0), required=True, help="Number of vectors.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Store to write.")
def sample(seed: int, dimension: int, count: int, out: Path) -> None:
    """Write COUNT vectors drawn from N(0, I_d)."""
    write_store(out, sample_store(seed, dimension, count))


@main.command()
@click.argument("source", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--dimension", type=click.IntRange(min=1), default=None, help="Latent dimension d of a CSV input.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Store to write.")
def ingest(source: Path, dimension: int | None, out: Path) -> None:
    """Import a CSV file or a binary store into a store."""
    if is_binary_store(source):
        store = read_store(source)
        if dimension is not None and dimension != store.dimension:
            raise DimensionMismatch("Store %s has d=%d, expected %d" % (source, store.dimension, dimension))
    else:
        if dimension is None:
            raise click.UsageError("--dimension is required for CSV input")
        store = import_csv(source, dimension)
    write_store(out, store)


@main.command()
@click.argument("store_path", metavar="STORE", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="CSV file to write.")
def export(store_path: Path, out: Path) -> None:
    """Export a store as CSV."""
    export_csv(read_store(store_path), out)


@contextmanager
def _scorer(
    ctx: click.Context,
    dimension: int,
    endpoint: str | None,
    seed: int,
    temperature: float,
    biases: dict[str, float],
    orthogonal: bool,
    batch_size: int,
    retries: int,
) -> Iterator[Scorer]:
    if endpoint:
        synthetic = [
            name
            for name in ("seed", "temperature", "biases", "orthogonal")
            if ctx.get_parameter_source(name) == click.core.ParameterSource.COMMANDLINE
        ]
        if synthetic:
            raise click.UsageError("--endpoint cannot be combined with synthetic world options: %s" % synthetic)
        with InferenceClient(ServiceEndpoint(endpoint, max_batch_size=batch_size, retries=retries)) as client:
            yield RemoteScorer(client, dimension)
    else:
        yield _world(seed, dimension, temperature, biases, orthogonal)


@main.command()
@click.argument("store_path", metavar="STORE", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Label file to write.")
@world_options
@click.option(
    "--endpoint",
    callback=_endpoint_from_env,
    default=None,
    help="Base URL of a remote scoring service; $GANALYZER_ENDPOINT takes precedence.",
)
@click.option("--batch-size", type=click.IntRange(min=1), default=64, show_default=True, help="Remote batch size.")
@click.option("--retries", type=click.IntRange(min=0), default=0, show_default=True, help="Remote retries per chunk.")
@click.pass_context
def label(
    ctx: click.Context,
    store_path: Path,
    out: Path,
    seed: int,
    temperature: float,
    biases: dict[str, float],
    orthogonal: bool,
    endpoint: str | None,
    batch_size: int,
    retries: int,
) -> None:
    """Score every vector of a store and write its labels."""
    store = read_store(store_path)
    with _scorer(ctx, store.dimension, endpoint, seed, temperature, biases, orthogonal, batch_size, retries) as scorer:
        table = label_store(store, scorer)
    if table.failures:
        logger.warning("%d records could not be labeled", len(table.failures))
    write_labels(table, out)


@main.command()
@click.argument("store_path", metavar="STORE", type=click.Path(dir_okay=False, path_type=Path))
@click.argument("labels_path", metavar="LABELS", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--class", "class_id", required=True, help="The class to fit.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Stats bundle to write.")
def stats(store_path: Path, labels_path: Path, class_id: str, out: Path) -> None:
    """Fit the eigen-statistics of one class."""
    store = read_store(store_path)
    table = read_labels(labels_path)
    write_stats(out, compute_class_stats(store, select_class(table, class_id), class_id))


@main.command()
@click.option("--spec", "spec_path", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Edit spec.")
@click.option(
    "--stats", "stats_paths", type=click.Path(dir_okay=False, path_type=Path), multiple=True, help="Stats bundle."
)
@click.option("--store", "store_path", type=click.Path(dir_okay=False, path_type=Path), help="Store to transform.")
@click.option("--vector", callback=_parse_floats, metavar="X1,X2,...", help="A single vector to transform.")
@click.option("--alpha", type=float, default=None, help="Override the spec's alpha.")
@click.option("--beta", type=float, default=None, help="Override the spec's beta.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Store to write.")
@click.pass_obj
def transform(
    config: RunConfig,
    spec_path: Path,
    stats_paths: tuple[Path, ...],
    store_path: Path | None,
    vector: tuple[float, ...] | None,
    alpha: float | None,
    beta: float | None,
    out: Path | None,
) -> None:
    """Apply an edit spec to a store or to a single vector.

    A store result is written to --out; for mode psi the identity-preserving outputs go to a sibling file with
    suffix ".id". A single vector result is printed as JSON.
    """
    if (store_path is None) == (vector is None):
        raise click.UsageError("Give exactly one of --store and --vector")
    if store_path is not None and out is None:
        raise click.UsageError("--out is required with --store")
    try:
        data = json.loads(spec_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError("Edit spec %s is not valid JSON: %s" % (spec_path, exc)) from exc
    if not isinstance(data, dict):
        raise ValidationError("Edit spec %s must be a JSON object" % spec_path)
    data.update({key: value for key, value in (("alpha", alpha), ("beta", beta)) if value is not None})
    spec = load_spec(data)
    registry = _load_registry(stats_paths)
    if vector is not None:
        result = apply_spec(spec, np.array(vector), registry)
        if isinstance(result, tuple):
            click.echo(canonical_json({"feature": result[0].tolist(), "edit": result[1].tolist()}))
        else:
            click.echo(canonical_json(result.tolist()))
        return
    output = transform_store(spec, read_store(store_path), registry, threads=config.threads)
    if isinstance(output, tuple):
        write_store(out, output[0])
        write_store(Path(f"{out}.id"), output[1])
    else:
        write_store(out, output)


@main.command()
@click.argument("labels_path", metavar="LABELS", type=click.Path(dir_okay=False, path_type=Path))
@click.argument("after_path", metavar="[LABELS_AFTER]", type=click.Path(dir_okay=False, path_type=Path), required=False)
@click.option("--out", type=click.Path(path_type=Path), required=True, help="Prefix of the report files.")
def report(labels_path: Path, after_path: Path | None, out: Path) -> None:
    """Write balance reports and SVG figures of one or two label tables."""
    after = read_labels(after_path) if after_path is not None else None
    for path in write_report(out, read_labels(labels_path), after):
        logger.info("Wrote %s", path)


@main.command()
@click.argument("plan_path", metavar="PLAN", type=click.Path(dir_okay=False, path_type=Path))
@click.option(
    "--stats", "stats_paths", type=click.Path(dir_okay=False, path_type=Path), multiple=True, help="Stats bundle."
)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Store to write.")
@click.option(
    "--manifest", type=click.Path(dir_okay=False, path_type=Path), help="Manifest [default: OUT.manifest.jsonl]."
)
@click.pass_obj
def plan(config: RunConfig, plan_path: Path, stats_paths: tuple[Path, ...], out: Path, manifest: Path | None) -> None:
    """Generate the vectors of a dataset plan."""
    store, records = execute_plan(load_plan(plan_path), _load_registry(stats_paths), threads=config.threads)
    write_store(out, store)
    write_manifest(records, manifest or Path(f"{out}.manifest.jsonl"))


@main.command()
@click.argument("store_path", metavar="STORE", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--stats", "stats_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--sweep", type=click.Choice(["alpha", "beta"]), required=True, help="The swept parameter.")
@click.option("--values", callback=_parse_floats, required=True, metavar="V1,V2,...", help="The parameter grid.")
@click.option("--target", default=None, help="Class whose flip rate is measured [default: the stats' class].")
@world_options
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="JSON file to write.")
def evaluate(
    store_path: Path,
    stats_path: Path,
    sweep: str,
    values: tuple[float, ...],
    target: str | None,
    seed: int,
    temperature: float,
    biases: dict[str, float],
    orthogonal: bool,
    out: Path,
) -> None:
    """Measure flip rate, identity and target probability over an alpha or beta grid."""
    store: LatentStore = read_store(store_path)
    class_stats = read_stats(stats_path)
    world = _world(seed, store.dimension, temperature, biases, orthogonal)
    run = sweep_alpha if sweep == "alpha" else sweep_beta
    points = run(world, store.vectors, class_stats, values, target=target)
    _write_json(
        out,
        {
            "sweep": sweep,
            "class": class_stats.class_id,
            "target": target or class_stats.class_id,
            "points": [point.to_dict() for point in points],
        },
    )


@main.command("serve-mock")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=click.IntRange(min=0, max=65535), default=8765, show_default=True)
@click.option("--dimension", type=click.IntRange(min=2), required=True, help="Latent dimension d.")
@world_options
def serve_mock(
    host: str, port: int, dimension: int, seed: int, temperature: float, biases: dict[str, float], orthogonal: bool
) -> None:
    """Serve the mock generator and classifier until interrupted."""
    serve(MockInferenceService(_world(seed, dimension, temperature, biases, orthogonal)), host, port)
