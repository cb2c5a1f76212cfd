"""Unit tests for the harness: worker pool, bucket statistics and memory simulation."""

from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from clue_assign.assign import AssignConfig, Scene
from clue_assign.cfem import init_memory, load_memory, load_params, save_memory
from clue_assign.config import EnhanceConfig, HarnessConfig, MemoryConfig, RunConfig
from clue_assign.error.exceptions import EmptyInputError, ShapeMismatchError, UnknownAssignerError
from clue_assign.harness import (
    PositiveHistogram,
    SceneSource,
    bucket_report,
    bucket_stat,
    cmd_assign,
    cmd_init_params,
    cmd_memory_sim,
    coefficient_of_variation,
    compute_stats,
    load_scenes,
    parallel_map,
    resolve_threads,
    run_assigner,
    run_enhance,
    simulate_memory,
)
from clue_assign.ingest import ReportFormat, save_matrices
from clue_assign.synth import SizeBucket, get_preset

TINY = SceneSource(synth=get_preset("tiny"), count=6)


class TestWorkerPool:
    """Tests for resolve_threads and parallel_map."""

    def test_resolve_threads(self) -> None:
        assert resolve_threads(3) == 3
        assert resolve_threads(0) >= 1

    def test_results_keep_input_order(self) -> None:
        assert parallel_map(lambda x: x * x, list(range(50)), threads=4) == [x * x for x in range(50)]
        assert parallel_map(lambda x: x, [], threads=4) == []

    def test_thread_count_does_not_change_results(self) -> None:
        scenes = load_scenes(TINY).scenes
        one = run_assigner("mcss", scenes, AssignConfig(), threads=1)
        many = run_assigner("mcss", scenes, AssignConfig(), threads=4)
        assert [r.assigned_gt.tolist() for r in one] == [r.assigned_gt.tolist() for r in many]


class TestSceneSource:
    """Tests for load_scenes."""

    def test_synth_source(self) -> None:
        loaded = load_scenes(TINY, threads=2)
        assert [s.image_id for s in loaded.scenes] == list(range(6))
        assert loaded.reports == ()
        assert "scenes=6" in TINY.description

    def test_no_scenes(self) -> None:
        with pytest.raises(EmptyInputError):
            load_scenes(SceneSource(synth=get_preset("tiny"), count=0))


class TestBucketStatistics:
    """Tests for bucket_stat, coefficient_of_variation and bucket_report."""

    def test_bucket_stat(self) -> None:
        stat = bucket_stat(Counter({2: 3, 4: 1}))
        assert stat.gt_count == 4
        assert stat.mean_positives == 2.5
        assert stat.std_positives == pytest.approx(np.sqrt(0.75))
        assert bucket_stat(Counter()).mean_positives is None

    def test_coefficient_of_variation(self) -> None:
        assert coefficient_of_variation([2.0, 2.0, 2.0]) == 0.0
        assert coefficient_of_variation([1.0, 3.0]) == pytest.approx(0.5)
        assert coefficient_of_variation([0.0, 0.0]) == 0.0
        with pytest.raises(EmptyInputError):
            coefficient_of_variation([])

    def test_histograms_merge(self) -> None:
        a, b = PositiveHistogram(), PositiveHistogram()
        a.counts[SizeBucket.NORMAL][3] += 2
        b.counts[SizeBucket.NORMAL][3] += 1
        b.counts[SizeBucket.EXTREMELY_SMALL][0] += 1
        merged = a.merge(b)
        assert merged.counts[SizeBucket.NORMAL] == Counter({3: 3})
        assert merged.counts[SizeBucket.EXTREMELY_SMALL] == Counter({0: 1})

    def test_report_does_not_depend_on_scene_order(self) -> None:
        scenes = load_scenes(SceneSource(synth=get_preset("default"), count=8)).scenes
        results = {name: run_assigner(name, scenes, AssignConfig(), threads=1) for name in ("mcss", "atss")}
        forward = bucket_report(scenes, results)
        backward = bucket_report(scenes[::-1], {name: r[::-1] for name, r in results.items()})
        assert forward.stats == backward.stats
        assert forward.total_gts("mcss") == 80
        assert forward.cov("mcss") == backward.cov("mcss")

    def test_report_does_not_depend_on_thread_count(self) -> None:
        scenes = load_scenes(TINY).scenes
        results = {"center": run_assigner("center", scenes, AssignConfig(), threads=1)}
        serial = bucket_report(scenes, results)
        pooled = bucket_report(scenes, results, threads=4)
        assert serial.stats == pooled.stats
        assert serial.histograms["center"].counts == pooled.histograms["center"].counts
        assert pooled.total_gts("center") == 6 * 3

    def test_mcss_has_the_flattest_bucket_profile(self) -> None:
        # smaller run of the default synthetic setup; only the CoV ordering is stable at this size
        source = SceneSource(synth=get_preset("default"), count=200)
        _, report = compute_stats(HarnessConfig(), source, ["mcss", "iou_max", "center"])
        means = {
            name: ([report.mean(name, bucket) for bucket in SizeBucket], round(report.cov(name), 4))
            for name in ("mcss", "iou_max", "center")
        }
        assert report.total_gts("mcss") == 2000
        assert report.cov("mcss") < report.cov("iou_max"), means
        assert report.cov("mcss") < report.cov("center"), means

    def test_tables(self) -> None:
        scene = Scene.from_arrays([[0, 0, 10, 10], [0, 0, 40, 40]], [0, 0], [[0, 0, 10, 10]], [[1.0]])
        report = bucket_report([scene], {"iou_max": run_assigner("iou_max", [scene], AssignConfig(), threads=1)})
        assert report.mean("iou_max", SizeBucket.EXTREMELY_SMALL) == 1.0
        assert report.mean("iou_max", SizeBucket.RELATIVELY_SMALL) is None
        assert report.mean("iou_max", SizeBucket.NORMAL) == 0.0
        assert len(report.bucket_table()) == 4
        assert report.cov_table().rows[0]["buckets_populated"] == 2
        assert report.cov("iou_max") == pytest.approx(1.0)
        assert [(r["bucket"], r["positives"]) for r in report.long_table().rows] == [("eS", 1), ("Normal", 0)]


class TestCommands:
    """Tests for the command functions the CLI delegates to."""

    def test_compute_stats_validates_assigners(self) -> None:
        with pytest.raises(EmptyInputError):
            compute_stats(HarnessConfig(), TINY, [])
        with pytest.raises(UnknownAssignerError):
            compute_stats(HarnessConfig(), TINY, ["mcss", "foo"])

    def test_cmd_assign_writes_both_tables(self, tmp_path: Path) -> None:
        cfg = HarnessConfig(harness=RunConfig(threads=1))
        paths = cmd_assign(cfg, TINY, "atss", tmp_path / "out.csv", ReportFormat.CSV)
        assert paths == [tmp_path / "out.csv", tmp_path / "out_gt.csv"]
        header = (tmp_path / "out.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "assigner,image_id,pred_index,verdict,gt_index,confidence"
        assert not (tmp_path / "out_rejected.csv").exists()

    def test_cmd_memory_sim(self, tmp_path: Path) -> None:
        cfg = HarnessConfig(memory=MemoryConfig(num_classes=2, dim=8, iterations=3))
        paths = cmd_memory_sim(cfg, None, tmp_path / "traj.json", ReportFormat.JSON)
        assert paths[1] == tmp_path / "traj_memory.npz"
        assert load_memory(paths[1]).matrix.shape == (3, 8)

    def test_init_params_follow_the_memory(self, tmp_path: Path) -> None:
        cfg = HarnessConfig(
            memory=MemoryConfig(num_classes=2, dim=4), enhance=EnhanceConfig(in_channels=2, roi_size=2)
        )
        cmd_init_params(cfg, tmp_path / "params.npz")
        params = load_params(tmp_path / "params.npz")
        assert (params.in_features, params.dim, params.num_outputs) == (8, 4, 3)

    def test_run_enhance_reads_region_maps(self, tmp_path: Path, rng: np.random.Generator) -> None:
        cfg = HarnessConfig(
            memory=MemoryConfig(num_classes=2, dim=4), enhance=EnhanceConfig(in_channels=2, roi_size=2)
        )
        cmd_init_params(cfg, tmp_path / "params.npz")
        save_memory(init_memory(2, 4, seed=1), tmp_path / "memory.npz")
        save_matrices(tmp_path / "features.npz", {"features": rng.standard_normal((5, 2, 2, 2))})
        result = run_enhance(tmp_path / "params.npz", tmp_path / "features.npz", tmp_path / "memory.npz")
        assert result.r_enh.shape == (5, 4)

        save_memory(init_memory(3, 4, seed=1), tmp_path / "memory.npz")
        with pytest.raises(ShapeMismatchError):
            run_enhance(tmp_path / "params.npz", tmp_path / "features.npz", tmp_path / "memory.npz")


class TestSimulateMemory:
    """Tests for simulate_memory."""

    def test_zero_momentum_keeps_distances(self) -> None:
        result = simulate_memory(MemoryConfig(num_classes=2, dim=8, momentum=0.0), iterations=5)
        assert result.distances.shape == (6, 3)
        assert (result.distances == result.distances[0]).all()

    def test_noise_free_clusters_decay_geometrically(self) -> None:
        cfg = MemoryConfig(num_classes=2, dim=8, momentum=0.2, cluster_spread=0.0)
        result = simulate_memory(cfg, iterations=10)
        expected = result.distances[0] * 0.8 ** np.arange(11)[:, None]
        assert np.allclose(result.distances, expected, rtol=1e-9, atol=1e-12)

    def test_rows_move_to_their_own_cluster(self) -> None:
        means = np.array([[5.0, 0.0, 0.0, 0.0], [0.0, 5.0, 0.0, 0.0], [0.0, 0.0, 0.0, 5.0]])
        cfg = MemoryConfig(num_classes=2, dim=4, momentum=0.1, cluster_spread=0.5)
        result = simulate_memory(cfg, iterations=300, cluster_means=means)
        final = result.memory.matrix
        for c in range(3):
            own = np.linalg.norm(final[c] - means[c])
            assert own < 0.1 * result.distances[0, c]
            assert all(own < np.linalg.norm(final[c] - means[o]) for o in range(3) if o != c)

    def test_table_rows(self) -> None:
        result = simulate_memory(MemoryConfig(num_classes=1, dim=4), iterations=2)
        table = result.table()
        assert table.columns == ("iteration", "category", "distance")
        assert len(table) == 3 * 2

    def test_needs_an_iteration(self) -> None:
        with pytest.raises(EmptyInputError):
            simulate_memory(MemoryConfig(num_classes=1, dim=4), iterations=0)
