"""End-to-end runs on the session-wide synthetic set."""

from pathlib import Path

import numpy as np
import pytest

from config import load_run_config
from handlers.experiment import check_cross_protocol, run_experiment
from mad.models import label_to_int
from mad.svm import mad_scores
from storage.files import (
    ArtifactStore,
    read_calibration,
    read_features,
    read_json,
    read_model,
    read_score_table,
)
from utils.errors import ProtocolError
from vulnerability.metrics import compute_fmmpmr, compute_mmpmr

EXTRACTORS = ("lbp", "bsif", "hog")


def _config(ini: Path, out: Path, **overrides):
    values = {"mode": "intra", "output_root": out, "extractors": ("lbp",), "workers": 2}
    values.update(overrides)
    return load_run_config(ini, **values)


def _tree(root: Path) -> dict[str, bytes]:
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.suffix != ".xlsx"
    }


@pytest.fixture(scope="module")
def intra_run(synthetic_set, tmp_path_factory):
    out = tmp_path_factory.mktemp("intra") / "run"
    cfg = _config(synthetic_set, out, extractors=EXTRACTORS, export_workbook=True)
    return cfg, run_experiment(cfg)


class TestIntraRun:
    def test_artifacts(self, intra_run):
        cfg, _ = intra_run
        store = ArtifactStore(cfg.output_root)
        for path in (
            store.split_file,
            store.pairs_file,
            store.pairing_calibration_file,
            store.statistics_file,
            store.jobs_file,
            store.vulnerability("calibration.txt"),
            store.vulnerability("scores.txt"),
            store.vulnerability("report.json"),
            store.model_file("lbp"),
            store.scores_file("lbp", "dev"),
            store.scores_file("lbp", "test"),
            store.mad("lbp", "det.json"),
            store.mad("lbp", "det.svg"),
            store.results_file,
            store.workbook_file,
        ):
            assert path.is_file(), path
        assert any(store.morph_dir.glob("*.png"))
        assert any(store.vulnerability("").glob("scatter_*.svg"))

    def test_vulnerability_report_matches_scores(self, intra_run):
        cfg, results = intra_run
        store = ArtifactStore(cfg.output_root)
        table = read_score_table(store.vulnerability("scores.txt"))
        tau = read_calibration(store.vulnerability("calibration.txt")).tau
        report = read_json(store.vulnerability("report.json"))
        assert report["fmmpmr_percent"] == pytest.approx(compute_fmmpmr(table, tau))
        assert report["mmpmr_percent"] == pytest.approx(compute_mmpmr(table, tau))
        assert results["vulnerability"]["MorphAge-I"]["fmmpmr_percent"] == report["fmmpmr_percent"]

    def test_results_payload(self, intra_run):
        _, results = intra_run
        assert results["mode"] == "intra"
        assert results["train_bin"] == results["test_bin"] == "MorphAge-I"
        assert results["apcer_targets"] == ["1", "5", "10"]
        pooled = [row for row in results["mad"] if row["alpha"] == "all"]
        assert [row["algorithm"] for row in pooled] == ["LBP-SVM", "BSIF-SVM", "HOG-SVM"]
        assert all(set(row["bpcer_at_apcer"]) == {"1", "5", "10"} for row in pooled)

    def test_rerun_is_byte_identical(self, intra_run, synthetic_set, tmp_path):
        cfg, _ = intra_run
        again = _config(synthetic_set, tmp_path / "again", extractors=cfg.extractors, export_workbook=True)
        run_experiment(again)
        first, second = _tree(cfg.output_root), _tree(again.output_root)
        assert first.keys() == second.keys()
        assert [name for name in first if first[name] != second[name]] == []


@pytest.mark.parametrize("extractor", EXTRACTORS)
class TestDetectors:
    def test_fits_the_training_set(self, intra_run, extractor):
        cfg, _ = intra_run
        store = ArtifactStore(cfg.output_root)
        train = read_features(store.features_file(extractor, "train"))
        model = read_model(store.model_file(extractor))
        scores = np.array(mad_scores(model, [s.vector for s in train]))
        labels = np.array([label_to_int(s.label) for s in train])
        assert np.mean((scores >= 0.0) == (labels == 1)) >= 0.95

    def test_beats_chance_on_test(self, intra_run, extractor):
        _, results = intra_run
        pooled = [row for row in results["mad"] if row["algorithm"] == f"{extractor.upper()}-SVM" and row["alpha"] == "all"]
        assert len(pooled) == 1
        assert pooled[0]["test_eer"] < 50.0


class TestCrossRun:
    def test_shared_subjects_are_refused(self, synthetic_set, tmp_path):
        manifest = load_run_config(synthetic_set).manifest
        cfg = _config(synthetic_set, tmp_path / "run", mode="cross", cross_manifest=manifest)
        with pytest.raises(ProtocolError):
            run_experiment(cfg)
        assert not (tmp_path / "run" / "results.json").exists()

    def test_overlap_check(self):
        check_cross_protocol(frozenset({"A001"}), frozenset({"B001"}))
        with pytest.raises(ProtocolError, match="A001"):
            check_cross_protocol(frozenset({"A001", "A002"}), frozenset({"A001"}))

    def test_cross_bin_run(self, synthetic_set, tmp_path):
        cfg = _config(synthetic_set, tmp_path / "run", mode="cross", extractors=("hog",))
        results = run_experiment(cfg)
        assert (results["train_bin"], results["test_bin"]) == ("MorphAge-I", "MorphAge-II")
        assert set(results["vulnerability"]) == {"MorphAge-I", "MorphAge-II"}
        assert (tmp_path / "run" / "cross" / "split.txt").is_file()
        test_ids = {row.split(";")[0] for row in (tmp_path / "run" / "mad" / "hog" / "test_scores.txt").read_text().splitlines()
                    if not row.startswith("#")}
        assert all(sample.startswith("B") for sample in test_ids)
