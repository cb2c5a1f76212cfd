"""Run assigners over scene sets, aggregate size-bucket statistics, drive the memory.

The functions here sit between the CLI and the library: they pick a scene
source, fan scenes out over a worker pool, reduce the results in an
order-independent way and hand tables or matrices to the writers.
"""

import functools
import logging
import math
import os
import time
from collections import Counter
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TypeVar

import numpy as np

from .assign.mcss import population_mean_std
from .assign.registry import get_assigner
from .assign.scene import AssignConfig, Assignment, Scene
from .cfem.enhance import EnhanceResult, enhance_pipeline, init_params, load_params, save_params
from .cfem.linalg import flatten_rois
from .cfem.memory import CategoryMemory, FeatureBatch, init_memory, load_memory, save_memory, update_memory
from .config import HarnessConfig, MemoryConfig
from .error.exceptions import EmptyInputError
from .geometry import areas_array
from .ingest.loaders import DatasetFiles, LoadReport, load_dataset
from .ingest.matrices import load_matrices, save_matrices
from .ingest.reports import (
    REJECTION_COLUMNS,
    ReportFormat,
    Table,
    assignment_tables,
    sibling_path,
    write_report,
)
from .synth import SizeBucket, SynthConfig, generate_scene, size_bucket

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# single-threaded budget for 100,000 predictions against 1,000 ground truths
THROUGHPUT_PAIRS = 100_000 * 1_000
THROUGHPUT_SECONDS = 5.0

BUCKET_COLUMNS = ("assigner", "bucket", "gt_count", "mean_positives", "std_positives")
COV_COLUMNS = ("assigner", "buckets_populated", "cov")
LONG_COLUMNS = ("assigner", "bucket", "positives", "gt_count")
TRAJECTORY_COLUMNS = ("iteration", "category", "distance")


def resolve_threads(threads: int) -> int:
    """Worker count: ``threads`` itself, or the available parallelism when 0."""
    if threads > 0:
        return threads
    if hasattr(os, "sched_getaffinity"):
        return max(1, len(os.sched_getaffinity(0)))
    return max(1, os.cpu_count() or 1)


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: int) -> list[R]:
    """``[fn(x) for x in items]`` over a thread pool; results keep input order."""
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SceneSource:
    """Where scenes come from: a synth configuration or a pair of documents."""

    synth: SynthConfig | None = None
    count: int = 0
    files: DatasetFiles | None = None

    @property
    def description(self) -> str:
        if self.files is not None:
            return f"{self.files.gt_path} + {self.files.pred_path}"
        return f"synth(seed={self.synth.seed if self.synth else None}, scenes={self.count})"


@dataclass(frozen=True, eq=False)
class LoadedScenes:
    scenes: list[Scene]
    reports: tuple[LoadReport, ...] = ()


def load_scenes(source: SceneSource, threads: int = 0) -> LoadedScenes:
    """Materialise the scenes of ``source``.

    Raises:
        EmptyInputError: If a synth source asks for no scenes
    """
    if source.files is not None:
        dataset = load_dataset(source.files)
        return LoadedScenes(dataset.scenes, dataset.reports)
    if source.synth is None or source.count < 1:
        raise EmptyInputError("at least one scene is required")
    synth = source.synth
    scenes = parallel_map(lambda i: generate_scene(synth, i), list(range(source.count)), threads)
    logger.info("Generated %d synthetic scenes (seed=%d)", len(scenes), synth.seed)
    return LoadedScenes(scenes)


def run_assigner(name: str, scenes: Sequence[Scene], cfg: AssignConfig, threads: int = 0) -> list[Assignment]:
    """Apply one assigner to every scene.

    Scenes slower than the throughput budget are logged as warnings.

    Raises:
        UnknownAssignerError: If ``name`` is not registered
    """
    assigner = get_assigner(name)

    def timed(scene: Scene) -> Assignment:
        start = time.perf_counter()
        result = assigner(scene, cfg)
        elapsed = time.perf_counter() - start
        budget = THROUGHPUT_SECONDS * max(1, scene.num_preds * scene.num_gts) / THROUGHPUT_PAIRS
        if elapsed > max(budget, 1.0):
            logger.warning(
                "%s took %.2fs on scene %s (%d predictions, %d ground truths)",
                name,
                elapsed,
                scene.image_id,
                scene.num_preds,
                scene.num_gts,
            )
        return result

    start = time.perf_counter()
    results = parallel_map(timed, scenes, threads)
    logger.info(
        "%s: %d scenes, %d ground truths, %d positives in %.2fs (%d workers)",
        name,
        len(scenes),
        sum(s.num_gts for s in scenes),
        sum(int(r.positive_indices().size) for r in results),
        time.perf_counter() - start,
        min(resolve_threads(threads), max(1, len(scenes))),
    )
    return results


@dataclass
class PositiveHistogram:
    """Per bucket, how many ground truths received each number of positives."""

    counts: dict[SizeBucket, Counter[int]] = field(default_factory=lambda: {b: Counter() for b in SizeBucket})

    @classmethod
    def of(cls, scene: Scene, result: Assignment) -> "PositiveHistogram":
        hist = cls()
        hist.add(scene, result)
        return hist

    def add(self, scene: Scene, result: Assignment) -> None:
        areas = areas_array(scene.gt_array)
        for g, positives in enumerate(result.positive_counts()):
            self.counts[size_bucket(float(areas[g]))][positives] += 1

    def merge(self, other: "PositiveHistogram") -> "PositiveHistogram":
        merged = PositiveHistogram()
        for bucket in SizeBucket:
            merged.counts[bucket] = self.counts[bucket] + other.counts[bucket]
        return merged


@dataclass(frozen=True)
class BucketStat:
    gt_count: int
    mean_positives: float | None
    std_positives: float | None


def bucket_stat(hist: Counter[int]) -> BucketStat:
    """Mean and population deviation of positives from a count histogram.

    The result depends only on the histogram, never on the order scenes were seen.
    """
    n = sum(hist.values())
    if n == 0:
        return BucketStat(0, None, None)
    total = sum(c * k for c, k in hist.items())
    mean = total / n
    variance = math.fsum(k * (c - mean) ** 2 for c, k in sorted(hist.items())) / n
    return BucketStat(n, mean, math.sqrt(variance))


def coefficient_of_variation(means: Sequence[float]) -> float:
    """Population std over mean of the bucket means; 0 for a single bucket or a zero mean.

    Raises:
        EmptyInputError: If ``means`` is empty
    """
    mean, std = population_mean_std(means)
    if mean == 0.0:
        return 0.0
    return std / mean


@dataclass(frozen=True, eq=False)
class BucketReport:
    """Per assigner and bucket: ground truth count, mean and std of positives, plus CoV."""

    stats: dict[str, dict[SizeBucket, BucketStat]]
    histograms: dict[str, PositiveHistogram]

    @property
    def assigners(self) -> list[str]:
        return list(self.stats)

    def cov(self, assigner: str) -> float:
        means = [s.mean_positives for s in self.stats[assigner].values() if s.mean_positives is not None]
        return coefficient_of_variation(means) if means else 0.0

    def mean(self, assigner: str, bucket: SizeBucket) -> float | None:
        return self.stats[assigner][bucket].mean_positives

    def total_gts(self, assigner: str) -> int:
        return sum(s.gt_count for s in self.stats[assigner].values())

    def bucket_table(self) -> Table:
        rows = [
            {
                "assigner": name,
                "bucket": bucket.value,
                "gt_count": stat.gt_count,
                "mean_positives": stat.mean_positives,
                "std_positives": stat.std_positives,
            }
            for name, per_bucket in self.stats.items()
            for bucket, stat in per_bucket.items()
        ]
        return Table.from_rows(BUCKET_COLUMNS, rows)

    def cov_table(self) -> Table:
        rows = [
            {
                "assigner": name,
                "buckets_populated": sum(1 for s in self.stats[name].values() if s.gt_count),
                "cov": self.cov(name),
            }
            for name in self.stats
        ]
        return Table.from_rows(COV_COLUMNS, rows)

    def long_table(self) -> Table:
        """One row per (assigner, bucket, positive count); ready for a grouped bar plot."""
        rows = [
            {"assigner": name, "bucket": bucket.value, "positives": positives, "gt_count": count}
            for name, hist in self.histograms.items()
            for bucket in SizeBucket
            for positives, count in sorted(hist.counts[bucket].items())
        ]
        return Table.from_rows(LONG_COLUMNS, rows)


def bucket_report(
    scenes: Sequence[Scene], results: dict[str, Sequence[Assignment]], threads: int = 1
) -> BucketReport:
    """Aggregate per-bucket positive statistics for each assigner.

    Per-scene histograms are built on the worker pool and merged; the merge is
    order-independent.
    """
    stats: dict[str, dict[SizeBucket, BucketStat]] = {}
    histograms: dict[str, PositiveHistogram] = {}
    for name, assignments in results.items():
        pairs = list(zip(scenes, assignments, strict=True))
        per_scene = parallel_map(lambda pair: PositiveHistogram.of(*pair), pairs, threads)
        hist = functools.reduce(PositiveHistogram.merge, per_scene, PositiveHistogram())
        histograms[name] = hist
        stats[name] = {bucket: bucket_stat(hist.counts[bucket]) for bucket in SizeBucket}
    return BucketReport(stats, histograms)


# commands


def write_rejections(reports: Iterable[LoadReport], out: Path, fmt: ReportFormat) -> None:
    rows = [row for report in reports for row in report.as_rows()]
    if rows:
        write_report(Table.from_rows(REJECTION_COLUMNS, rows), sibling_path(out, "rejected"), fmt)


def cmd_assign(cfg: HarnessConfig, source: SceneSource, assigner: str, out: Path, fmt: ReportFormat) -> list[Path]:
    """Assign every scene and write per-prediction verdicts plus per-GT positive lists.

    Returns:
        Paths written: ``out`` (predictions) and ``<out>_gt`` (ground truths)
    """
    get_assigner(assigner)
    loaded = load_scenes(source, cfg.harness.threads)
    results = run_assigner(assigner, loaded.scenes, cfg.assign, cfg.harness.threads)
    pred_table, gt_table = assignment_tables(assigner, loaded.scenes, results)
    gt_path = sibling_path(out, "gt")
    write_report(pred_table, out, fmt)
    write_report(gt_table, gt_path, fmt)
    write_rejections(loaded.reports, out, fmt)
    return [out, gt_path]


def compute_stats(
    cfg: HarnessConfig, source: SceneSource, assigners: Sequence[str]
) -> tuple[list[Scene], BucketReport]:
    """Run each assigner on the same scenes and aggregate bucket statistics.

    Raises:
        EmptyInputError: If ``assigners`` is empty
        UnknownAssignerError: If a name is not registered
    """
    if not assigners:
        raise EmptyInputError("at least one assigner is required")
    for name in assigners:
        get_assigner(name)
    scenes = load_scenes(source, cfg.harness.threads).scenes
    results = {name: run_assigner(name, scenes, cfg.assign, cfg.harness.threads) for name in assigners}
    return scenes, bucket_report(scenes, results, cfg.harness.threads)


def cmd_stats(
    cfg: HarnessConfig, source: SceneSource, assigners: Sequence[str], out: Path, fmt: ReportFormat
) -> list[Path]:
    """Write the bucket table to ``out`` plus ``<out>_cov`` and ``<out>_long``."""
    _, report = compute_stats(cfg, source, assigners)
    paths = [out, sibling_path(out, "cov"), sibling_path(out, "long")]
    for table, path in zip((report.bucket_table(), report.cov_table(), report.long_table()), paths, strict=True):
        write_report(table, path, fmt)
    for name in report.assigners:
        logger.info("%s: CoV across buckets %.4f", name, report.cov(name))
    return paths


@dataclass(frozen=True, eq=False)
class MemorySimResult:
    """Distances of each memory row to its cluster mean, before and after every step."""

    distances: np.ndarray
    memory: CategoryMemory
    cluster_means: np.ndarray

    def table(self) -> Table:
        rows = [
            {"iteration": t, "category": c, "distance": float(self.distances[t, c])}
            for t in range(self.distances.shape[0])
            for c in range(self.distances.shape[1])
        ]
        return Table.from_rows(TRAJECTORY_COLUMNS, rows)


def simulate_memory(
    cfg: MemoryConfig,
    iterations: int | None = None,
    cluster_means: np.ndarray | None = None,
) -> MemorySimResult:
    """Feed per-category Gaussian feature clusters through repeated memory updates.

    Cluster means default to a seeded draw with the memory's initialisation scale;
    features scatter around them with ``cfg.cluster_spread``. The background row
    has a cluster like every category.

    Raises:
        EmptyInputError: If ``iterations`` is below 1
    """
    iterations = cfg.iterations if iterations is None else iterations
    if iterations < 1:
        raise EmptyInputError("memory simulation needs at least one iteration")
    mem = init_memory(cfg.num_classes, cfg.dim, cfg.seed, cfg.scale, cfg.momentum)
    rows = mem.matrix.shape[0]
    scale = cfg.scale if cfg.scale is not None else 1.0 / math.sqrt(cfg.dim)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 1])))
    if cluster_means is None:
        cluster_means = rng.standard_normal((rows, cfg.dim)) * scale
    labels = np.repeat(np.arange(rows), cfg.samples_per_class)

    distances = np.empty((iterations + 1, rows))
    distances[0] = np.linalg.norm(mem.matrix - cluster_means, axis=1)
    for t in range(1, iterations + 1):
        noise = rng.standard_normal((labels.shape[0], cfg.dim)) * (cfg.cluster_spread * scale)
        mem = update_memory(mem, FeatureBatch(cluster_means[labels] + noise, labels.tolist()), cfg.eps)
        distances[t] = np.linalg.norm(mem.matrix - cluster_means, axis=1)
    logger.info("memory-sim: %d iterations, final mean distance %.6g", iterations, float(distances[-1].mean()))
    return MemorySimResult(distances, mem, cluster_means)


def cmd_memory_sim(cfg: HarnessConfig, iterations: int | None, out: Path, fmt: ReportFormat) -> list[Path]:
    """Write the distance trajectory to ``out`` and the final memory to ``<out>_memory.npz``."""
    result = simulate_memory(cfg.memory, iterations)
    write_report(result.table(), out, fmt)
    memory_path = sibling_path(out, "memory").with_suffix(".npz")
    save_memory(result.memory, memory_path)
    return [out, memory_path]


def cmd_init_memory(cfg: HarnessConfig, out: Path) -> list[Path]:
    m = cfg.memory
    save_memory(init_memory(m.num_classes, m.dim, m.seed, m.scale, m.momentum), out)
    return [out]


def cmd_init_params(cfg: HarnessConfig, out: Path) -> list[Path]:
    e = cfg.enhance
    params = init_params(e.in_features, cfg.memory.dim, cfg.memory.num_classes, e.seed, e.num_heads, e.bias_scale)
    save_params(params, out)
    return [out]


def run_enhance(params_path: Path, features_path: Path, memory_path: Path) -> EnhanceResult:
    """Load the three inputs and run the enhancement pass.

    The features file holds one member, ``features``, shaped ``(N, c, h, w)`` or
    ``(N, c*h*w)``.

    Raises:
        MalformedDocumentError: If a file is unreadable or lacks a member
        ShapeMismatchError: If the shapes disagree; the message names the pair
    """
    params = load_params(params_path)
    memory = load_memory(memory_path)
    features = flatten_rois(load_matrices(features_path, required=("features",))["features"])
    return enhance_pipeline(features, memory, params)


def cmd_enhance(params_path: Path, features_path: Path, memory_path: Path, out: Path) -> list[Path]:
    """Write ``R``, ``P``, ``F_c`` and ``R_enh`` to one matrix container."""
    result = run_enhance(params_path, features_path, memory_path)
    save_matrices(out, result.as_dict())
    return [out]
