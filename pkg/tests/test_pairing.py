import itertools

import numpy as np
import pytest

from conftest import TableComparator, in_memory_manifest, one_partition_split
from protocol.models import ProtocolSplit
from protocol.pairing import calibrate_pairing_threshold, candidate_pairs, select_pairs
from protocol.splits import split_dataset
from storage.files import read_pairs, write_pairs
from utils.errors import ContractError


class TestSelectPairs:
    def test_same_gender_above_threshold(self):
        manifest = in_memory_manifest({"A": "F", "B": "F"})
        pairs = select_pairs(manifest, one_partition_split("AB"), TableComparator({("A", "B"): 0.9}), 0.5)
        assert len(pairs) == 1
        assert (pairs[0].subject_a, pairs[0].subject_b, pairs[0].split) == ("A", "B", "train")
        assert pairs[0].pair_score == 0.9

    def test_different_genders_never_pair(self):
        manifest = in_memory_manifest({"A": "F", "B": "M"})
        comparator = TableComparator({("A", "B"): 1.0})
        assert select_pairs(manifest, one_partition_split("AB"), comparator, 0.0) == []
        assert comparator.calls == 0

    def test_threshold_is_inclusive(self):
        manifest = in_memory_manifest({"A": "F", "B": "F"})
        assert len(select_pairs(manifest, one_partition_split("AB"), TableComparator({("A", "B"): 0.5}), 0.5)) == 1

    def test_pairs_stay_inside_partitions(self):
        manifest = in_memory_manifest({"A": "F", "B": "F", "C": "F", "D": "F"})
        split = ProtocolSplit(frozenset("AB"), frozenset("C"), frozenset("D"), seed=0, ratios=(0.5, 0.25, 0.25))
        comparator = TableComparator({}, default=0.9)
        pairs = select_pairs(manifest, split, comparator, 0.1)
        assert [(p.subject_a, p.subject_b) for p in pairs] == [("A", "B")]

    def test_greedy_with_cap_one_on_four_subjects(self):
        scores = {("A", "B"): 0.9, ("C", "D"): 0.8, ("A", "C"): 0.95, ("B", "D"): 0.7, ("A", "D"): 0.6, ("B", "C"): 0.5}
        manifest = in_memory_manifest({s: "M" for s in "ABCD"})
        pairs = select_pairs(manifest, one_partition_split("ABCD"), TableComparator(scores), 0.0, max_pairs_per_subject=1)

        # brute force: walk pairs by descending score, keep those with both subjects free
        used: set[str] = set()
        expected = []
        for (a, b), _ in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])):
            if a not in used and b not in used:
                expected.append((a, b))
                used |= {a, b}
        assert [(p.subject_a, p.subject_b) for p in pairs] == expected == [("A", "C"), ("B", "D")]

    def test_cap_respected_on_random_matrices(self):
        rng = np.random.default_rng(3)
        ids = [f"S{i}" for i in range(8)]
        manifest = in_memory_manifest({s: "F" for s in ids})
        for cap in (1, 2, 3):
            scores = {pair: float(rng.random()) for pair in itertools.combinations(ids, 2)}
            pairs = select_pairs(manifest, one_partition_split(ids), TableComparator(scores), 0.2, cap)
            usage = {s: 0 for s in ids}
            for p in pairs:
                usage[p.subject_a] += 1
                usage[p.subject_b] += 1
                assert p.pair_score >= 0.2
            assert max(usage.values()) <= cap

    def test_random_mixed_manifests(self):
        rng = np.random.default_rng(41)
        for trial in range(30):
            n = int(rng.integers(4, 16))
            genders = {f"S{i:02d}": str(rng.choice(["F", "M"])) for i in range(n)}
            manifest = in_memory_manifest(genders)
            split = split_dataset(manifest, seed=trial)
            scores = {pair: float(rng.random()) for pair in itertools.combinations(sorted(genders), 2)}
            tau = float(rng.uniform(0.0, 0.6))
            cap = int(rng.integers(1, 4))
            pairs = select_pairs(manifest, split, TableComparator(scores), tau, cap)

            for p in pairs:
                assert genders[p.subject_a] == genders[p.subject_b]
                assert {p.subject_a, p.subject_b} <= split.partition(p.split)

            # brute force over every pair of subjects
            usage = {s: 0 for s in genders}
            expected = []
            for (a, b), score in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])):
                if genders[a] != genders[b] or split.partition_of(a) != split.partition_of(b) or score < tau:
                    continue
                if usage[a] < cap and usage[b] < cap:
                    expected.append((a, b, split.partition_of(a), score))
                    usage[a] += 1
                    usage[b] += 1
            assert [(p.subject_a, p.subject_b, p.split, p.pair_score) for p in pairs] == expected

    def test_worker_count_does_not_change_result(self):
        rng = np.random.default_rng(9)
        ids = [f"S{i}" for i in range(10)]
        manifest = in_memory_manifest({s: "M" for s in ids})
        scores = {pair: float(rng.random()) for pair in itertools.combinations(ids, 2)}
        one = select_pairs(manifest, one_partition_split(ids), TableComparator(scores), 0.3, 2, workers=1)
        many = select_pairs(manifest, one_partition_split(ids), TableComparator(scores), 0.3, 2, workers=4)
        assert one == many

    def test_cap_must_be_positive(self):
        manifest = in_memory_manifest({"A": "F", "B": "F"})
        with pytest.raises(ContractError):
            select_pairs(manifest, one_partition_split("AB"), TableComparator({}), 0.5, max_pairs_per_subject=0)

    def test_candidates_skip_subjects_without_session(self):
        manifest = in_memory_manifest({"A": "F", "B": "F"}, sessions=(2, 3))
        assert candidate_pairs(manifest, one_partition_split("AB")) == []


class TestPairingCalibration:
    def test_threshold_from_all_subject_pairs(self):
        manifest = in_memory_manifest({"A": "F", "B": "M", "C": "F"})
        comparator = TableComparator({("A", "B"): 0.2, ("A", "C"): 0.4, ("B", "C"): 0.6})
        result = calibrate_pairing_threshold(manifest, comparator, far_target=1.0)
        assert result.impostor_count == 3
        assert result.tau == 0.2

    def test_needs_two_subjects(self):
        with pytest.raises(ContractError):
            calibrate_pairing_threshold(in_memory_manifest({"A": "F"}), TableComparator({}), far_target=0.5)


def test_pair_file_round_trip(tmp_path):
    manifest = in_memory_manifest({"A": "F", "B": "F", "C": "F"})
    pairs = select_pairs(manifest, one_partition_split("ABC"), TableComparator({}, default=0.7), 0.5)
    assert read_pairs(write_pairs(tmp_path / "pairs.txt", pairs)) == pairs
