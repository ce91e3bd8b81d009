import numpy as np
import pytest

from evaluation.iso import DetectionScoreSet
from mad.models import LABEL_ATTACK, LABEL_BONA_FIDE, FeatureVector, LabeledFeature, MadModel
from mad.svm import LinearSVM, mad_score, mad_scores, score_samples, stack_features, train_svm
from mad.thresholds import score_set, select_operating_thresholds
from utils.errors import ContractError, TrainingError

DIGEST = "cafe0000cafe0000"


def _samples(X, y, digest: str = DIGEST) -> list[LabeledFeature]:
    return [
        LabeledFeature(f"s{i}", LABEL_ATTACK if label else LABEL_BONA_FIDE, FeatureVector(row, "lbp", digest))
        for i, (row, label) in enumerate(zip(X, y))
    ]


def _blobs(seed: int = 0, n: int = 40, dim: int = 5):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-3.0, 0.5, size=(n, dim)), rng.normal(3.0, 0.5, size=(n, dim))])
    y = np.array([0] * n + [1] * n)
    return X, y


class TestLinearSVM:
    def test_separable_blobs(self):
        X, y = _blobs()
        svm = LinearSVM(C=1.0, max_epochs=100).fit(X, y)
        assert (svm.predict(X) == y).all()

    def test_dual_objective_never_increases(self):
        X, y = _blobs(seed=3)
        history = LinearSVM(C=0.5, max_epochs=30).fit(X, y).objective_history_
        assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))

    def test_conflicting_duplicates_still_train(self):
        X, y = _blobs(n=10)
        X = np.vstack([X, [[0.0] * 5, [0.0] * 5]])
        y = np.concatenate([y, [0, 1]])
        svm = LinearSVM(C=1.0, max_epochs=50).fit(X, y)
        assert np.isfinite(svm.coef_).all()
        assert (svm.dual_coef_ != 0).any()

    def test_seeded(self):
        X, y = _blobs(seed=5)
        a = LinearSVM(random_state=1).fit(X, y)
        b = LinearSVM(random_state=1).fit(X, y)
        assert np.array_equal(a.coef_, b.coef_)
        assert a.intercept_ == b.intercept_

    def test_single_class(self):
        with pytest.raises(TrainingError):
            LinearSVM().fit(np.ones((4, 2)), np.ones(4, dtype=int))


class TestTrainSvm:
    def test_attacks_score_higher(self):
        X, y = _blobs(seed=1)
        samples = _samples(X, y)
        model, _ = train_svm(samples, C=1.0, seed=0, epochs=100, config={"extractor": "lbp"})
        scores = np.array([s for _, _, s in score_samples(model, samples)])
        assert (scores[y == 1] > 0).all()
        assert (scores[y == 0] < 0).all()
        assert model.config == {"extractor": "lbp"}

    def test_zero_variance_dimension(self):
        X, y = _blobs(seed=2)
        X[:, 2] = 7.0
        model, _ = train_svm(_samples(X, y))
        assert model.std[2] == 1.0
        assert np.isfinite(model.weights).all()

    def test_batch_matches_single_scores(self):
        X, y = _blobs(seed=4)
        samples = _samples(X, y)
        model, svm = train_svm(samples)
        vectors = [s.vector for s in samples]
        assert mad_scores(model, vectors) == [mad_score(model, v) for v in vectors]
        np.testing.assert_allclose(mad_scores(model, vectors), svm.decision_function((X - model.mean) / model.std))

    def test_one_class_is_refused(self):
        X, _ = _blobs()
        with pytest.raises(TrainingError):
            train_svm(_samples(X, np.zeros(len(X), dtype=int)))

    def test_digest_mismatch(self):
        X, y = _blobs()
        model, _ = train_svm(_samples(X, y))
        with pytest.raises(ContractError):
            mad_score(model, FeatureVector(X[0], "lbp", "another00digest0"))

    def test_mixed_configs_cannot_stack(self):
        with pytest.raises(ContractError):
            stack_features([FeatureVector([1.0], "lbp", "a"), FeatureVector([1.0], "lbp", "b")])
        with pytest.raises(ContractError):
            stack_features([FeatureVector([1.0], "lbp", "a"), FeatureVector([1.0, 2.0], "lbp", "a")])


class TestThresholds:
    def test_score_set_by_alpha(self):
        rows = [
            ("A@s2", LABEL_BONA_FIDE, 0.1),
            ("A+B@0.3", LABEL_ATTACK, 0.7),
            ("A+B@0.5", LABEL_ATTACK, 0.9),
        ]
        assert score_set(rows).attack_scores.tolist() == [0.7, 0.9]
        subset = score_set(rows, alpha=0.3)
        assert subset.attack_scores.tolist() == [0.7]
        assert subset.bona_fide_scores.tolist() == [0.1]

    def test_missing_alpha_is_an_error(self):
        with pytest.raises(ContractError):
            score_set([("A@s2", LABEL_BONA_FIDE, 0.1), ("A+B@0.3", LABEL_ATTACK, 0.7)], alpha=0.7)

    def test_operating_thresholds_from_dev(self):
        model = MadModel("lbp", {}, DIGEST, np.zeros(1), np.ones(1), np.ones(1), 0.0)
        dev = DetectionScoreSet.from_lists([0.2, 0.3, 0.4, 0.85], [0.9, 0.8, 0.7, 0.1])
        tuned = select_operating_thresholds(model, dev, (100.0, 25.0))
        assert tuned.operating_thresholds == {25.0: 0.7, 100.0: 0.9}
        assert tuned.dev_bpcer == {25.0: 25.0, 100.0: 0.0}
        assert model.operating_thresholds == {}
