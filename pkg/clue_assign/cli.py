"""The ``clue-assign`` command line.

Every subcommand writes data files only. Failures print one line,
``error=<code> status=<category> message=<text>``, to stderr and exit with 2 for
caller errors or 1 for internal ones.

Example:
    .. code-block:: console

        $ clue-assign assign --assigner mcss --synth default --scenes 10 --out assign.json
        $ clue-assign stats --assigner mcss --assigner iou_max --scenes 1000 --out stats.csv --format csv
        $ clue-assign init-memory --out memory.npz
        $ clue-assign init-params --out params.npz
        $ clue-assign enhance --params params.npz --features rois.npz --memory memory.npz --out out.npz
"""

import functools
import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any, TypeVar

import click
from flask.cli import FlaskGroup

from .app import create_app
from .config import HarnessConfig, load_config
from .error import handle_cli_exception
from .harness import (
    SceneSource,
    cmd_assign,
    cmd_enhance,
    cmd_init_memory,
    cmd_init_params,
    cmd_memory_sim,
    cmd_stats,
    load_scenes,
)
from .ingest.loaders import DatasetFiles, write_ground_truth, write_predictions
from .ingest.reports import ReportFormat, sibling_path
from .synth import PRESETS, get_preset

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

PATH = click.Path(dir_okay=False, path_type=Path)
EXISTING = click.Path(exists=True, dir_okay=False, path_type=Path)


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
    # failures are reported on one line by handle_cli_exception
    logging.getLogger("clue_assign.error").setLevel(logging.INFO if verbose else logging.ERROR)


def reports_errors(fn: F) -> F:
    """Route every exception raised by a command through :func:`handle_cli_exception`."""

    @functools.wraps(fn)
    def wrapper(*args: Any, verbose: bool = False, **kwargs: Any) -> Any:
        _configure_logging(verbose)
        try:
            return fn(*args, **kwargs)
        except (click.exceptions.Exit, click.ClickException):
            raise
        except Exception as e:
            handle_cli_exception(e)

    wrapper = click.option("-v", "--verbose", is_flag=True, help="Log progress at INFO level.")(wrapper)
    return wrapper  # type: ignore[return-value]


def config_options(fn: F) -> F:
    fn = click.option("--seed", type=int, default=None, help="Seed applied to every seeded component.")(fn)
    fn = click.option("--config", "config_path", type=EXISTING, default=None, help="TOML configuration file.")(fn)
    return fn


def scene_options(fn: F) -> F:
    fn = click.option("--threads", type=click.IntRange(min=0), default=None, help="Worker pool width, 0 = all cores.")(
        fn
    )
    fn = click.option("--scenes", type=click.IntRange(min=1), default=None, help="Synthetic scenes to generate.")(fn)
    fn = click.option(
        "--synth",
        "preset",
        type=click.Choice(sorted(PRESETS)),
        default=None,
        help="Synthetic preset; overrides the [synth] section.",
    )(fn)
    fn = click.option("--probabilities", is_flag=True, help="Prediction scores are probabilities, not logits.")(fn)
    fn = click.option("--pred", "pred_path", type=EXISTING, default=None, help="Prediction results document.")(fn)
    fn = click.option("--gt", "gt_path", type=EXISTING, default=None, help="COCO-style ground truth document.")(fn)
    return fn


def report_options(fn: F) -> F:
    fn = click.option(
        "--format", "fmt", type=click.Choice([f.value for f in ReportFormat]), default=None, help="Report format."
    )(fn)
    fn = click.option("--out", type=PATH, required=True, help="Output file.")(fn)
    return fn


def resolve_config(config_path: Path | None, seed: int | None, **overrides: Any) -> HarnessConfig:
    """File values, then flag overrides; flags win."""
    cfg = load_config(config_path)
    if seed is not None:
        cfg = cfg.with_seed(seed)
    return cfg.with_overrides(**overrides)


def resolve_source(
    cfg: HarnessConfig,
    preset: str | None,
    gt_path: Path | None,
    pred_path: Path | None,
    probabilities: bool,
    seed: int | None,
) -> SceneSource:
    if (gt_path is None) != (pred_path is None):
        raise click.UsageError("--gt and --pred must be given together")
    if gt_path is not None and pred_path is not None:
        if preset is not None:
            raise click.UsageError("--synth cannot be combined with --gt/--pred")
        probabilities = probabilities or cfg.assign.scores_are_probabilities
        return SceneSource(files=DatasetFiles(gt_path, pred_path, probabilities))
    synth = cfg.synth if preset is None else get_preset(preset)
    if seed is not None:
        synth = synth.replace(seed=seed)
    return SceneSource(synth=synth, count=cfg.harness.scenes)


def _fmt(cfg: HarnessConfig, fmt: str | None) -> ReportFormat:
    return ReportFormat(fmt) if fmt is not None else cfg.harness.format


def _echo_written(paths: list[Path]) -> None:
    for path in paths:
        click.echo(str(path))


@click.group(cls=FlaskGroup, create_app=create_app)
def main() -> None:
    """Label assignment, feature memory and sample-balance statistics for small object detection."""


@main.command("assign", with_appcontext=False)
@config_options
@scene_options
@click.option("--assigner", default="mcss", show_default=True, help="mcss, iou_max, center or atss.")
@report_options
@reports_errors
def assign_command(
    config_path: Path | None,
    seed: int | None,
    gt_path: Path | None,
    pred_path: Path | None,
    probabilities: bool,
    preset: str | None,
    scenes: int | None,
    threads: int | None,
    assigner: str,
    out: Path,
    fmt: str | None,
) -> None:
    """Assign every scene; write per-prediction verdicts to OUT and per-GT positives to OUT_gt."""
    cfg = resolve_config(config_path, seed, scenes=scenes, threads=threads)
    source = resolve_source(cfg, preset, gt_path, pred_path, probabilities, seed)
    _echo_written(cmd_assign(cfg, source, assigner, out, _fmt(cfg, fmt)))


@main.command("stats", with_appcontext=False)
@config_options
@scene_options
@click.option(
    "--assigner", "assigners", multiple=True, help="Assigner to compare; repeatable. Defaults to [harness] assigners."
)
@report_options
@reports_errors
def stats_command(
    config_path: Path | None,
    seed: int | None,
    gt_path: Path | None,
    pred_path: Path | None,
    probabilities: bool,
    preset: str | None,
    scenes: int | None,
    threads: int | None,
    assigners: tuple[str, ...],
    out: Path,
    fmt: str | None,
) -> None:
    """Per size bucket positive statistics; writes OUT, OUT_cov and OUT_long."""
    cfg = resolve_config(config_path, seed, scenes=scenes, threads=threads)
    source = resolve_source(cfg, preset, gt_path, pred_path, probabilities, seed)
    names = list(assigners) if assigners else list(cfg.harness.assigners)
    _echo_written(cmd_stats(cfg, source, names, out, _fmt(cfg, fmt)))


@main.command("memory-sim", with_appcontext=False)
@config_options
@click.option("--iterations", type=click.IntRange(min=1), default=None, help="Update steps; overrides [memory].")
@report_options
@reports_errors
def memory_sim_command(
    config_path: Path | None,
    seed: int | None,
    iterations: int | None,
    out: Path,
    fmt: str | None,
) -> None:
    """Drive the memory with synthetic clusters; write each row's distance to its cluster mean."""
    cfg = resolve_config(config_path, seed)
    _echo_written(cmd_memory_sim(cfg, iterations, out, _fmt(cfg, fmt)))


@main.command("enhance", with_appcontext=False)
@click.option("--params", "params_path", type=EXISTING, required=True, help="Parameter file from init-params.")
@click.option("--features", "features_path", type=EXISTING, required=True, help="Matrix file with a features member.")
@click.option("--memory", "memory_path", type=EXISTING, required=True, help="Memory file from init-memory.")
@click.option("--out", type=PATH, required=True, help="Output matrix file.")
@reports_errors
def enhance_command(params_path: Path, features_path: Path, memory_path: Path, out: Path) -> None:
    """Run the enhancement pass; write R, P, F_c and R_enh."""
    _echo_written(cmd_enhance(params_path, features_path, memory_path, out))


@main.command("init-memory", with_appcontext=False)
@config_options
@click.option("--out", type=PATH, required=True, help="Output matrix file.")
@reports_errors
def init_memory_command(config_path: Path | None, seed: int | None, out: Path) -> None:
    """Write a seeded memory snapshot sized by the [memory] section."""
    _echo_written(cmd_init_memory(resolve_config(config_path, seed), out))


@main.command("init-params", with_appcontext=False)
@config_options
@click.option("--out", type=PATH, required=True, help="Output matrix file.")
@reports_errors
def init_params_command(config_path: Path | None, seed: int | None, out: Path) -> None:
    """Write seeded enhancement parameters sized by the [enhance] and [memory] sections."""
    _echo_written(cmd_init_params(resolve_config(config_path, seed), out))


@main.command("export-synth", with_appcontext=False)
@config_options
@click.option("--synth", "preset", type=click.Choice(sorted(PRESETS)), default=None, help="Synthetic preset.")
@click.option("--scenes", type=click.IntRange(min=1), default=None, help="Scenes to generate.")
@click.option("--out", type=PATH, required=True, help="Ground truth document; predictions go to OUT_pred.")
@reports_errors
def export_synth_command(
    config_path: Path | None, seed: int | None, preset: str | None, scenes: int | None, out: Path
) -> None:
    """Write synthetic scenes as a ground truth document and a prediction document."""
    cfg = resolve_config(config_path, seed, scenes=scenes)
    source = resolve_source(cfg, preset, None, None, False, seed)
    loaded = load_scenes(source, cfg.harness.threads)
    synth = source.synth or cfg.synth
    pred_path = sibling_path(out, "pred")
    write_ground_truth(loaded.scenes, out, image_size=synth.image_size)
    write_predictions(loaded.scenes, pred_path)
    _echo_written([out, pred_path])
