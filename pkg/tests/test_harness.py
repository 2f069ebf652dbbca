import json

import pytest

from airmia import classify, harness
from airmia.errors import ArtifactError, InvalidConfigError, PipelineStageError
from airmia.scenarios import Scenario
from conftest import small_config, small_hyper


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("small_run")
    config = small_config(seed=17)
    report = harness.run_scenario(config, out_dir=out, hyper=small_hyper(config))
    return {"out": out, "config": config, "report": report,
            "cell": harness.cell_dir(out, config)}


class TestDerivedSeeds:
    def test_stable_and_distinct(self):
        seeds = {label: harness.derive_seed(7, label)
                 for label in ("target", "surrogate", "mia", "split")}
        again = {label: harness.derive_seed(7, label) for label in seeds}
        assert seeds == again
        assert len(set(seeds.values())) == 4

    def test_seed_record_lists_every_stage(self):
        config = small_config(seed=9)
        hyper = harness.PipelineHyper.for_config(config)
        record = hyper.seed_record(config)
        assert set(record) == {"scenario", "target", "surrogate", "mia", "split"}
        assert record["scenario"] == 9


class TestRunScenario:
    def test_artifact_layout(self, small_run):
        cell = small_run["cell"]
        assert cell == small_run["out"] / "full-strong" / "17"
        for rel in ("config.json", "report.json", "confusion.csv", "confusion.json",
                    "timings.json",
                    "datasets/provider_train.csv", "datasets/member_eval.csv",
                    "datasets/nonmember_eval.csv", "datasets/test_pairs.csv",
                    "datasets/surrogate_pairs.csv", "datasets/train_pairs_class1.csv",
                    "models/target.json", "models/surrogate.json", "models/mia.json",
                    "models/target_report.json", "models/surrogate_report.json"):
            assert (cell / rel).is_file(), rel
        assert not list(cell.rglob("*.tmp"))  # write-then-rename left no temp files

    def test_confusion_json_carries_scenario_and_seed(self, small_run):
        doc = json.loads((small_run["cell"] / "confusion.json").read_text())
        assert doc["scenario"] == "full-strong" and doc["seed"] == 17
        assert doc["accuracy"] == small_run["report"].confusion.accuracy
        assert doc["counts"] == small_run["report"].confusion.counts.tolist()

    def test_report_document_loads_back(self, small_run):
        loaded = harness.load_report_file(small_run["cell"] / "report.json")
        assert loaded.to_document() == small_run["report"].to_document()

    def test_report_records_all_seeds(self, small_run):
        assert set(small_run["report"].seeds) == \
            {"scenario", "target", "surrogate", "mia", "split"}

    def test_gain_history_in_report(self, small_run):
        hist = small_run["report"].gain_history
        assert set(hist) == {"train", "test"}
        assert all(v <= 0 for v in hist["train"])

    def test_byte_identical_reruns(self, small_run, tmp_path):
        config = small_run["config"]
        harness.run_scenario(config, out_dir=tmp_path, hyper=small_hyper(config))
        first = (small_run["cell"] / "report.json").read_bytes()
        second = (harness.cell_dir(tmp_path, config) / "report.json").read_bytes()
        assert first == second

    def test_stage_errors_carry_stage_name(self, monkeypatch):
        def boom(*args, **kwargs):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(classify, "train_target", boom)
        with pytest.raises(PipelineStageError, match="train-target"):
            harness.run_scenario(small_config(seed=23))


class TestPersistenceFidelity:
    def test_reload_reproduces_evaluation_numbers_exactly(self, small_run):
        expected = harness.evaluation_numbers(small_run["report"])
        recomputed = harness.reevaluate_artifacts(small_run["cell"])
        assert recomputed == expected

    def test_loaded_target_reproduces_test_accuracy(self, small_run):
        art = harness.load_artifacts(small_run["cell"])
        provider_test = [p.provider_view for p in art["datasets"]["test_pairs"]]
        acc = classify.classification_accuracy(art["target"], provider_test)
        assert acc == small_run["report"].target_report.test_accuracy

    def test_corrupted_report_names_file(self, small_run, tmp_path):
        bad = tmp_path / "report.json"
        bad.write_text("{broken")
        with pytest.raises(ArtifactError, match="report.json"):
            harness.load_report_file(bad)

    def test_corrupted_model_fails_load(self, small_run, tmp_path):
        import shutil

        cell_copy = tmp_path / "cell"
        shutil.copytree(small_run["cell"], cell_copy)
        (cell_copy / "models" / "target.json").write_text("42")
        with pytest.raises(ArtifactError):
            harness.load_artifacts(cell_copy)

    def test_missing_dataset_fails_load(self, small_run, tmp_path):
        import shutil

        cell_copy = tmp_path / "cell"
        shutil.copytree(small_run["cell"], cell_copy)
        (cell_copy / "datasets" / "member_eval.csv").unlink()
        with pytest.raises(ArtifactError, match="member_eval.csv"):
            harness.load_artifacts(cell_copy)


class TestRunAll:
    def test_needs_three_seeds(self):
        with pytest.raises(InvalidConfigError):
            harness.run_all(seeds=[1, 2])

    def test_matrix_and_summary(self, tmp_path):
        reports, summary = harness.run_all(
            seeds=[31, 32, 33], base_config=small_config(),
            out_dir=tmp_path, hyper_for=lambda c: small_hyper(c))
        assert len(reports) == 4 * 3
        scenarios_run = {r.config.scenario for r in reports}
        assert scenarios_run == set(harness.ALL_SCENARIOS)
        assert set(summary["median_accuracy"]) == {s.value for s in harness.ALL_SCENARIOS}
        assert summary["seeds"] == [31, 32, 33]
        assert set(summary["orderings"]) == {
            "full_strong_gt_same_phase", "same_phase_gt_same_power",
            "same_power_gt_0.55", "weak_lt_full_strong"}
        assert (tmp_path / "ordering_summary.json").is_file()
        doc = json.loads((tmp_path / "ordering_summary.json").read_text())
        assert doc["median_accuracy"] == summary["median_accuracy"]

    def test_median_is_scenario_wise(self):
        class Box:
            def __init__(self, scenario, seed, acc):
                self.config = small_config(scenario=scenario, seed=seed)
                self.mia_accuracy = acc

        reports = [Box(Scenario.FULL_STRONG, s, a)
                   for s, a in zip((1, 2, 3), (0.8, 0.9, 0.7))]
        summary = harness.ordering_summary(reports)
        assert summary["median_accuracy"] == {"full-strong": 0.8}
        assert "orderings" not in summary


class TestAtomicWrites:
    def test_write_json_deterministic_bytes(self, tmp_path):
        doc = {"b": 1.5, "a": [1, 2]}
        harness.write_json(tmp_path / "x.json", doc)
        harness.write_json(tmp_path / "y.json", doc)
        assert (tmp_path / "x.json").read_bytes() == (tmp_path / "y.json").read_bytes()
        assert not (tmp_path / "x.json.tmp").exists()
