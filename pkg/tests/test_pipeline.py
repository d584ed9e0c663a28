import dataclasses
import json

import numpy as np
import pytest

from avhl import store
from avhl.pipeline import (RunConfig, StageError, ablate, run_pipeline,
                           synth_and_run)
from avhl.synth import SynthConfig


QUICK_RUN = RunConfig(k_range=(3, 3), d_model=16, epochs=3)


@pytest.fixture(scope="module")
def synth_root(tmp_path_factory, ):
    root = tmp_path_factory.mktemp("data")
    cfg = SynthConfig(n_categories=3, videos_per_category=10,
                      clips_per_video=(8, 12), d_v=16, d_a=16,
                      recurrence_strength=0.9, seed=0)
    from avhl.synth import generate
    store.write_dataset(generate(cfg), root)
    return root


class TestRunConfig:
    def test_from_flat_dict(self):
        cfg = RunConfig.from_dict({"seed": 3, "metric": "pcc"})
        assert cfg.seed == 3 and cfg.metric == "pcc"

    def test_from_nested_dict(self):
        cfg = RunConfig.from_dict({
            "cluster": {"k_range": [2, 5], "reducer": "identity"},
            "train": {"epochs": 7},
            "eval": {"gt_policy": "fraction:0.5"},
        })
        assert cfg.k_range == (2, 5)
        assert cfg.reducer == "identity"
        assert cfg.epochs == 7
        assert cfg.gt_policy == "fraction:0.5"

    def test_round_trip(self):
        cfg = RunConfig(seed=9, k_range=(2, 3))
        assert RunConfig.from_dict(cfg.to_dict()) == cfg


class TestRunPipeline:
    def test_artifacts_written(self, synth_root, tmp_path):
        report = run_pipeline(synth_root, tmp_path / "run", QUICK_RUN)
        out = tmp_path / "run"
        for name in ("pseudo_categories.json", "pseudo_highlights.json",
                     "model.ckpt", "train_log.json", "report.json",
                     "run_config.json", "artifacts.json"):
            assert (out / name).exists(), name
        assert report.n_videos_evaluated > 0
        hashes = json.loads((out / "artifacts.json").read_text())
        assert "report.json" in hashes
        scores = sorted((out / "scores").glob("*.avhf"))
        assert len(scores) == report.n_videos_evaluated + report.n_videos_skipped

    def test_report_matches_scores_on_disk(self, synth_root, tmp_path):
        from avhl.metrics import evaluate
        run_pipeline(synth_root, tmp_path / "run", QUICK_RUN)
        dataset = store.read_dataset(synth_root)
        preds = {p.name[:-5]: store.read_avhf(p).reshape(-1)
                 for p in (tmp_path / "run" / "scores").glob("*.avhf")}
        report = json.loads((tmp_path / "run" / "report.json").read_text())
        recomputed = evaluate(preds, dataset, split="test")
        assert report["mAP"] == pytest.approx(recomputed.map, abs=1e-7)

    def test_missing_dataset_is_validate_error(self, tmp_path):
        with pytest.raises(StageError) as exc:
            run_pipeline(tmp_path / "nowhere", tmp_path / "run", QUICK_RUN)
        assert exc.value.stage == "validate" and exc.value.exit_code == 10

    def test_impossible_k_is_cluster_error(self, synth_root, tmp_path):
        cfg = dataclasses.replace(QUICK_RUN, k_range=(100, 100))
        with pytest.raises(StageError) as exc:
            run_pipeline(synth_root, tmp_path / "run", cfg)
        assert exc.value.exit_code == 20

    def test_pseudo_predictor_skips_training(self, synth_root, tmp_path):
        cfg = dataclasses.replace(QUICK_RUN, predictor="pseudo")
        report = run_pipeline(synth_root, tmp_path / "run", cfg)
        assert not (tmp_path / "run" / "model.ckpt").exists()
        assert report.map > 0.5

    def test_data_fraction_restricts_train(self, synth_root, tmp_path):
        cfg = dataclasses.replace(QUICK_RUN, data_fraction=0.5, k_range=(2, 3),
                                  reducer="identity")
        run_pipeline(synth_root, tmp_path / "run", cfg)
        cats = json.loads(
            (tmp_path / "run" / "pseudo_categories.json").read_text())
        full_train = sum(1 for r in store.read_dataset(synth_root).records
                         if r.split == "train")
        assert len(cats["assignments"]) == round(0.5 * full_train)

    def test_supervised_targets(self, synth_root, tmp_path):
        cfg = dataclasses.replace(QUICK_RUN, targets="gt")
        report = run_pipeline(synth_root, tmp_path / "run", cfg)
        assert report.n_videos_evaluated > 0

    def test_synth_and_run(self, tmp_path):
        scfg = SynthConfig(n_categories=2, videos_per_category=10,
                           clips_per_video=(6, 8), d_v=8, d_a=8,
                           recurrence_strength=0.9, seed=0)
        report = synth_and_run(scfg, tmp_path,
                               dataclasses.replace(QUICK_RUN, k_range=(2, 2)))
        assert (tmp_path / "dataset" / "manifest.json").exists()
        assert (tmp_path / "run" / "report.json").exists()
        assert 0.0 <= report.map <= 1.0


class TestDeterminism:
    def test_rerun_byte_identical(self, synth_root, tmp_path):
        hashes = []
        for name in ("a", "b"):
            run_pipeline(synth_root, tmp_path / name, QUICK_RUN)
            hashes.append(json.loads((tmp_path / name / "artifacts.json").read_text()))
        assert hashes[0] == hashes[1]

    def test_seed_changes_model(self, synth_root, tmp_path):
        h = []
        for seed in (0, 1):
            cfg = dataclasses.replace(QUICK_RUN, seed=seed)
            run_pipeline(synth_root, tmp_path / f"s{seed}", cfg)
            h.append(json.loads(
                (tmp_path / f"s{seed}" / "artifacts.json").read_text())["model.ckpt"])
        assert h[0] != h[1]


class TestAblate:
    def test_empty_axes_matches_pipeline(self, synth_root, tmp_path):
        rows = ablate(synth_root, {}, [0], QUICK_RUN, tmp_path / "abl")
        assert len(rows) == 1 and rows[0]["cell"] == "baseline"
        run_pipeline(synth_root, tmp_path / "run", QUICK_RUN)
        report = json.loads((tmp_path / "run" / "report.json").read_text())
        assert rows[0]["metrics"]["mAP"]["mean"] == pytest.approx(
            report["mAP"], abs=1e-12)
        assert (tmp_path / "abl" / "ablation.txt").exists()

    def test_cross_product_cells(self, synth_root, tmp_path):
        axes = {"metric": ["cosine", "pcc"], "predictor": ["pseudo"]}
        rows = ablate(synth_root, axes, [0], QUICK_RUN, tmp_path / "abl")
        assert {r["cell"] for r in rows} == {
            "metric=cosine,predictor=pseudo", "metric=pcc,predictor=pseudo"}

    def test_unknown_axis(self, synth_root, tmp_path):
        with pytest.raises(ValueError, match="axis"):
            ablate(synth_root, {"nope": [1]}, [0], QUICK_RUN, tmp_path / "abl")

    def test_multi_seed_statistics(self, synth_root, tmp_path):
        cfg = dataclasses.replace(QUICK_RUN, predictor="pseudo")
        rows = ablate(synth_root, {}, [0, 1], cfg, tmp_path / "abl")
        assert rows[0]["seeds"] == [0, 1]
        # pseudo predictor ignores the training seed entirely
        assert rows[0]["metrics"]["mAP"]["sd"] == pytest.approx(0.0, abs=1e-12)
