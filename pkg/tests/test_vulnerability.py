import numpy as np
import pytest

from config import load_run_config
from conftest import TableComparator, gradient_image, in_memory_manifest
from morphing.jobs import build_morph_jobs, generate_morphs
from protocol.manifest import parse_manifest
from protocol.models import MorphPair
from storage.images import save_image
from utils.errors import ContractError, ItemFailure
from vulnerability.calibration import calibrate_threshold, calibrate_vulnerability_threshold, collect_impostor_scores
from vulnerability.comparator import HogComparator
from vulnerability.metrics import compute_fmmpmr, compute_mmpmr
from vulnerability.models import ScoreEntry, VulnerabilityScoreTable
from vulnerability.report import build_vulnerability_report, split_by_alpha
from vulnerability.scoring import score_morphs


def _table(rows: dict[str, list[tuple[float, float]]]) -> VulnerabilityScoreTable:
    """morph id -> per-attempt (subject 1, subject 2) scores."""
    entries = []
    for morph_id, attempts in rows.items():
        for p, (s1, s2) in enumerate(attempts, start=1):
            entries.append(ScoreEntry(morph_id, p, 1, s1))
            entries.append(ScoreEntry(morph_id, p, 2, s2))
    return VulnerabilityScoreTable(tuple(entries))


def _random_table(rng: np.random.Generator) -> tuple[VulnerabilityScoreTable, np.ndarray]:
    morphs, attempts = int(rng.integers(1, 6)), int(rng.integers(1, 4))
    scores = np.round(rng.random((morphs, attempts, 2)), 2)
    rows = {f"M{m}@0.5": [tuple(scores[m, p]) for p in range(attempts)] for m in range(morphs)}
    return _table(rows), scores


class TestTable:
    def test_incomplete_attempt(self):
        with pytest.raises(ContractError):
            VulnerabilityScoreTable((ScoreEntry("M@0.3", 1, 1, 0.5),))

    def test_duplicate_entry(self):
        entry = ScoreEntry("M@0.3", 1, 1, 0.5)
        with pytest.raises(ContractError):
            VulnerabilityScoreTable((entry, entry, ScoreEntry("M@0.3", 1, 2, 0.5)))

    def test_non_finite(self):
        with pytest.raises(ContractError):
            _table({"M@0.3": [(float("nan"), 0.5)]})


class TestMetrics:
    def test_divergence_from_mmpmr(self):
        table = _table({"M@0.5": [(0.9, 0.9), (0.9, 0.1)]})
        assert compute_fmmpmr(table, 0.5) == 50.0
        assert compute_mmpmr(table, 0.5) == 100.0

    def test_split_success_counts_for_mmpmr_only(self):
        table = _table({"M@0.5": [(0.9, 0.1), (0.1, 0.9)]})
        assert compute_fmmpmr(table, 0.5) == 0.0
        assert compute_mmpmr(table, 0.5) == 100.0

    def test_pass_is_strictly_above_tau(self):
        table = _table({"M@0.5": [(0.5, 0.9)]})
        assert compute_fmmpmr(table, 0.5) == 0.0
        assert compute_fmmpmr(table, 0.49) == 100.0

    def test_against_brute_force(self):
        rng = np.random.default_rng(1234)
        for _ in range(1000):
            table, scores = _random_table(rng)
            tau = float(np.round(rng.random(), 2))
            passing = (scores > tau).all(axis=2)
            assert compute_fmmpmr(table, tau) == pytest.approx(100.0 * passing.mean())
            mm = (scores.max(axis=1) > tau).all(axis=1)
            assert compute_mmpmr(table, tau) == pytest.approx(100.0 * mm.mean())
            assert compute_fmmpmr(table, tau) <= compute_mmpmr(table, tau) + 1e-12

    def test_non_increasing_in_tau(self):
        table, _ = _random_table(np.random.default_rng(8))
        rates = [compute_fmmpmr(table, tau) for tau in np.linspace(0.0, 1.0, 21)]
        assert all(b <= a for a, b in zip(rates, rates[1:]))

    def test_empty_table(self):
        with pytest.raises(ContractError):
            compute_fmmpmr(VulnerabilityScoreTable(()), 0.5)


class TestCalibration:
    SCORES = [0.1 * i for i in range(1, 11)]

    def test_strict_target(self):
        result = calibrate_threshold(self.SCORES, 0.1)
        assert result.tau == pytest.approx(1.0)
        assert result.impostor_count == 10
        assert not result.sentinel

    def test_permissive_target_takes_minimum(self):
        assert calibrate_threshold(self.SCORES, 1.0).tau == pytest.approx(0.1)

    def test_sentinel_above_maximum(self):
        result = calibrate_threshold([0.5] * 20, 0.001)
        assert result.sentinel
        assert result.tau == pytest.approx(0.500001)
        assert result.tau > 0.5

    @pytest.mark.parametrize("scores, far", [([], 0.1), ([0.5], 0.0), ([0.5], 1.5)])
    def test_bad_input(self, scores, far):
        with pytest.raises(ContractError):
            calibrate_threshold(scores, far)

    def test_impostors_cross_sessions(self):
        manifest = in_memory_manifest({"A": "F", "B": "M", "C": "F"})
        comparator = TableComparator({("A", "B"): 0.2, ("A", "C"): 0.4, ("B", "C"): 0.6})
        result = calibrate_vulnerability_threshold(manifest, comparator, far_target=0.5)
        # every ordered pair of distinct subjects, each score twice
        assert result.impostor_count == 6
        assert comparator.calls == 6
        assert result.tau == 0.6

    def test_impostor_scores(self):
        manifest = in_memory_manifest({"A": "F", "B": "M", "C": "F"})
        comparator = TableComparator({("A", "B"): 0.2, ("A", "C"): 0.4, ("B", "C"): 0.6})
        assert sorted(collect_impostor_scores(manifest, comparator)) == [0.2, 0.2, 0.4, 0.4, 0.6, 0.6]
        assert collect_impostor_scores(manifest, comparator, reference_session=9) == []


class TestScoreMorphs:
    def _morphs(self):
        pairs = [MorphPair("A", "B", 0.9, "train"), MorphPair("C", "D", 0.8, "train")]
        return build_morph_jobs(pairs, (0.3, 0.5))

    def test_one_attempt_per_probe_session(self):
        manifest = in_memory_manifest({s: "F" for s in "ABCD"})
        table = score_morphs(self._morphs(), manifest, TableComparator({}, default=0.7), probe_session=3)
        assert len(table) == 4 * 1 * 2
        table = score_morphs(self._morphs(), manifest, TableComparator({}, default=0.7), probe_session=(2, 3))
        assert len(table) == 4 * 2 * 2
        assert set(table.attempts()) == {(m.morph_id, p) for m in self._morphs() for p in (1, 2)}

    def test_missing_probe_excludes_morph(self):
        manifest = in_memory_manifest({"A": "F", "B": "F"})
        short = in_memory_manifest({"C": "F", "D": "F"}, sessions=(1, 2))
        manifest = type(manifest)(manifest.subjects + short.subjects)
        failures: list[ItemFailure] = []
        table = score_morphs(self._morphs(), manifest, TableComparator({}, default=0.7), errors=failures)
        assert {m for m, _ in table.attempts()} == {"A+B@0.3", "A+B@0.5"}
        assert sorted(f.item_id for f in failures) == ["C+D@0.3", "C+D@0.5"]

    def test_comparator_failure_excludes_morph(self):
        class Flaky(TableComparator):
            def compare(self, path_a, path_b):
                if "C+D" in str(path_a):
                    raise OSError("unreadable morph")
                return super().compare(path_a, path_b)

        manifest = in_memory_manifest({s: "F" for s in "ABCD"})
        failures: list[ItemFailure] = []
        table = score_morphs(self._morphs(), manifest, Flaky({}, default=0.7), workers=2, errors=failures)
        assert len(table) == 4
        assert {f.item_id for f in failures} == {"C+D@0.3", "C+D@0.5"}

    def test_contributors_outscore_strangers(self, synthetic_set, tmp_path):
        manifest = parse_manifest(load_run_config(synthetic_set).manifest)
        by_gender: dict[str, list[str]] = {}
        for subject in manifest.subjects:
            by_gender.setdefault(subject.gender, []).append(subject.subject_id)
        pairs = [MorphPair(ids[0], ids[1], 0.9, "train") for ids in by_gender.values() if len(ids) >= 2]
        assert pairs
        morphs = generate_morphs(build_morph_jobs(pairs, (0.5,), tmp_path), manifest)
        assert len(morphs) == len(pairs)

        comparator = HogComparator()
        table = score_morphs(morphs, manifest, comparator)
        for morph in morphs:
            own = np.mean([e.score for e in table.entries if e.morph_id == morph.morph_id])
            strangers = [s for s in manifest.subject_ids if s not in (morph.pair.subject_a, morph.pair.subject_b)][:5]
            others = np.mean([comparator.compare(morph.output_path, manifest.image_file(s, 3)) for s in strangers])
            assert own > others, morph.morph_id


class TestReport:
    def test_split_and_pool(self):
        table = _table({
            "A+B@0.3": [(0.9, 0.9)],
            "C+D@0.3": [(0.1, 0.9)],
            "A+B@0.5": [(0.9, 0.9)],
        })
        by_alpha = split_by_alpha(table)
        assert sorted(by_alpha) == [0.3, 0.5]
        report = build_vulnerability_report(by_alpha, tau=0.5, expected_alphas=(0.3, 0.5, 0.7))
        assert report.per_alpha[0.3].fmmpmr_percent == 50.0
        assert report.per_alpha[0.5].fmmpmr_percent == 100.0
        assert report.fmmpmr_percent == pytest.approx(200.0 / 3.0)
        assert report.missing_alphas == (0.7,)
        assert report.metadata["has_missing_alphas"]
        assert report.scatter[0.3] == [(0.9, 0.9), (0.1, 0.9)]
        assert set(report.box[0.3]) == {"S1", "S2"}
        assert report.to_dict()["missing_alphas"] == ["0.7"]

    def test_nothing_to_report(self):
        with pytest.raises(ContractError):
            build_vulnerability_report({}, tau=0.5, expected_alphas=(0.3,))

    def test_alpha_with_many_digits(self):
        alpha = 0.123456789
        (job,) = build_morph_jobs([MorphPair("A", "B", 0.9, "train")], (alpha,))
        by_alpha = split_by_alpha(_table({job.morph_id: [(0.9, 0.9)]}))
        assert list(by_alpha) == [alpha]
        report = build_vulnerability_report(by_alpha, tau=0.5, expected_alphas=(alpha,))
        assert report.missing_alphas == ()
        assert list(report.to_dict()["per_alpha"]) == ["0.123456789"]

    def test_morph_id_without_alpha(self):
        with pytest.raises(ContractError):
            split_by_alpha(_table({"A+B": [(0.1, 0.2)]}))


class TestHogComparator:
    def test_identical_images_score_one(self, tmp_path):
        path = save_image(gradient_image(64, 64), tmp_path / "face.png")
        comparator = HogComparator(size=64)
        assert comparator.compare(path, path) == pytest.approx(1.0)

    def test_scores_stay_in_unit_interval(self, tmp_path):
        a = save_image(gradient_image(64, 64), tmp_path / "a.png")
        b = save_image(gradient_image(64, 64, channels=3), tmp_path / "b.png")
        score = HogComparator(size=64).compare(a, b)
        assert 0.0 <= score <= 1.0
