import math

import numpy as np
import pytest

from conftest import gradient_image, random_landmarks
from mad.bsif import generate_default_filterbank
from mad.models import LABEL_ATTACK, LABEL_BONA_FIDE, FeatureVector, LabeledFeature, MadModel
from storage.files import (
    ArtifactStore,
    atomic_write_text,
    read_calibration,
    read_features,
    read_filterbank,
    read_model,
    read_score_set,
    read_score_table,
    write_calibration,
    write_features,
    write_filterbank,
    write_model,
    write_score_set,
    write_score_table,
)
from storage.images import landmarks_text, load_image, load_landmarks, save_image
from utils.errors import ContractError, IntegrityError, ManifestParseError
from vulnerability.models import CalibrationResult, ScoreEntry, VulnerabilityScoreTable


class TestTextArtifacts:
    def test_sentinel_calibration(self, tmp_path):
        result = CalibrationResult(tau=0.500001, far_target=0.001, impostor_count=20, sentinel=True)
        assert read_calibration(write_calibration(tmp_path / "calibration.txt", result)) == result

    def test_score_table_keeps_exact_floats(self, tmp_path):
        table = VulnerabilityScoreTable((
            ScoreEntry("A+B@0.3", 1, 1, 0.1 + 0.2),
            ScoreEntry("A+B@0.3", 1, 2, 1 / 3),
        ))
        again = read_score_table(write_score_table(tmp_path / "scores.txt", table))
        assert again == table

    def test_model_with_infinite_threshold(self, tmp_path):
        model = MadModel(
            "hog", {"cell": 8}, "d" * 16, np.array([0.5, 1.5]), np.array([1.0, 2.0]), np.array([-0.25, 3.0]), 0.125,
            operating_thresholds={1.0: math.inf, 5.0: 0.75}, dev_bpcer={1.0: 0.0, 5.0: 12.5},
        )
        again = read_model(write_model(tmp_path / "model.txt", model))
        assert again.operating_thresholds == {1.0: math.inf, 5.0: 0.75}
        assert again.dev_bpcer == model.dev_bpcer
        assert again.config == {"cell": 8}
        assert np.array_equal(again.weights, model.weights)
        assert again.bias == 0.125

    def test_model_version_is_checked(self, tmp_path):
        path = tmp_path / "model.txt"
        atomic_write_text(path, "version=99\n")
        with pytest.raises(ContractError):
            read_model(path)

    def test_features_and_dimension_check(self, tmp_path):
        rows = [
            LabeledFeature("A@s2", LABEL_BONA_FIDE, FeatureVector([0.25, 0.75], "lbp", "x")),
            LabeledFeature("A+B@0.5", LABEL_ATTACK, FeatureVector([1.0, 0.0], "lbp", "x")),
        ]
        path = write_features(tmp_path / "train.features", rows)
        again = read_features(path)
        assert [(f.sample_id, f.label, f.vector.values.tolist()) for f in again] == [
            ("A@s2", LABEL_BONA_FIDE, [0.25, 0.75]), ("A+B@0.5", LABEL_ATTACK, [1.0, 0.0]),
        ]
        atomic_write_text(path, path.read_text() + "B@s2;bonafide;0.5\n")
        with pytest.raises(IntegrityError):
            read_features(path)

    def test_mixed_feature_configs_are_refused(self, tmp_path):
        rows = [
            LabeledFeature("a", LABEL_BONA_FIDE, FeatureVector([0.0], "lbp", "x")),
            LabeledFeature("b", LABEL_ATTACK, FeatureVector([0.0], "lbp", "y")),
        ]
        with pytest.raises(ContractError):
            write_features(tmp_path / "f.features", rows)

    def test_score_set_rejects_unknown_label(self, tmp_path):
        path = write_score_set(tmp_path / "dev_scores.txt", [("A@s2", LABEL_BONA_FIDE, -0.5)])
        assert read_score_set(path) == [("A@s2", LABEL_BONA_FIDE, -0.5)]
        atomic_write_text(path, "A@s2;morph;0.1\n")
        with pytest.raises(ManifestParseError):
            read_score_set(path)

    def test_filterbank_survives_reload(self, tmp_path):
        bank = generate_default_filterbank(n=4, size=5, seed=3)
        again = read_filterbank(write_filterbank(tmp_path / "filterbank.txt", bank))
        assert np.array_equal(again.coefficients, bank.coefficients)

    def test_filterbank_row_count(self, tmp_path):
        path = tmp_path / "filterbank.txt"
        atomic_write_text(path, "2 3\n1 0 -1\n")
        with pytest.raises(ManifestParseError):
            read_filterbank(path)


class TestImages:
    @pytest.mark.parametrize("name, channels", [("a.png", 3), ("a.png", 1), ("a.ppm", 3), ("a.pgm", 1)])
    def test_lossless_formats(self, tmp_path, name, channels):
        image = gradient_image(12, 9, channels=channels)
        assert load_image(save_image(image, tmp_path / name)) == image

    def test_unsupported_suffix(self, tmp_path):
        with pytest.raises(ContractError):
            save_image(gradient_image(), tmp_path / "a.jpg")

    def test_landmarks(self, tmp_path):
        landmarks = random_landmarks(np.random.default_rng(0), 5, 32, 32)
        path = atomic_write_text(tmp_path / "a.txt", "# points\n" + landmarks_text(landmarks))
        assert load_landmarks(path, expected=5) == landmarks
        with pytest.raises(IntegrityError):
            load_landmarks(path, expected=68)


def test_store_layout(tmp_path):
    store = ArtifactStore(tmp_path / "run")
    assert store.jobs_file == tmp_path / "run" / "morphs" / "jobs.txt"
    assert store.features_file("lbp", "dev") == tmp_path / "run" / "mad" / "lbp" / "dev.features"
    assert store.scores_file("hog", "test").name == "test_scores.txt"
    assert store.ensure("mad", "bsif").is_dir()
