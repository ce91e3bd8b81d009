# storage/files.py
"""
Text artifact formats and the on-disk layout of a run.

Every writer goes through `atomic_write_text` (temp file + rename) and
formats floats with `format_float`, so rerunning a step with the same inputs
produces byte-identical files.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from mad.bsif import bank_from_coefficients
from mad.models import LABEL_ATTACK, LABEL_BONA_FIDE, MODEL_FORMAT_VERSION, FeatureVector, FilterBank, LabeledFeature, MadModel
from morphing.jobs import MorphRecord
from protocol.models import PARTITIONS, MorphPair, ProtocolSplit
from utils.errors import ContractError, IntegrityError, ManifestParseError
from utils.helpers import (
    alpha_tag,
    dumps_json,
    format_float,
    format_vector,
    parse_float,
    parse_number_list,
    parse_vector,
)
from vulnerability.models import CalibrationResult, ScoreEntry, VulnerabilityScoreTable

log = logging.getLogger(__name__)


# --- atomic writes ---

def atomic_write_bytes(path: str | Path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: str | Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def _data_lines(path: Path) -> Iterable[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for line_number, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line and not line.startswith("#"):
                yield line_number, line


def _fields(line: str, count: int, path: Path, line_number: int) -> list[str]:
    fields = [f.strip() for f in line.split(";")]
    if len(fields) != count:
        raise ManifestParseError(f"expected {count} ';'-separated fields, got {len(fields)}", line_number, str(path))
    return fields


def _number(text: str, path: Path, line_number: int) -> float:
    try:
        return parse_float(text)
    except ValueError:
        raise ManifestParseError(f"not a number: '{text}'", line_number, str(path)) from None


def write_json(path: str | Path, payload: Any) -> Path:
    return atomic_write_text(path, dumps_json(payload))


def read_json(path: str | Path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# --- split file ---

def split_text(split: ProtocolSplit) -> str:
    lines = [f"seed={split.seed}", f"ratios={format_vector(split.ratios)}"]
    for name in PARTITIONS:
        lines.append(f"[{name}]")
        lines.extend(sorted(split.partition(name)))
    return "\n".join(lines) + "\n"


def write_split(path: str | Path, split: ProtocolSplit) -> Path:
    return atomic_write_text(path, split_text(split))


def read_split(path: str | Path) -> ProtocolSplit:
    path = Path(path)
    meta: dict[str, str] = {}
    sections: dict[str, list[str]] = {}
    current: Optional[str] = None
    for line_number, line in _data_lines(path):
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in PARTITIONS:
                raise ManifestParseError(f"unknown section [{current}]", line_number, str(path))
            if current in sections:
                raise ManifestParseError(f"section [{current}] repeated", line_number, str(path))
            sections[current] = []
        elif current is None:
            key, sep, value = line.partition("=")
            if not sep:
                raise ManifestParseError(f"expected key=value, got '{line}'", line_number, str(path))
            meta[key.strip()] = value.strip()
        else:
            sections[current].append(line)
    for key in ("seed", "ratios"):
        if key not in meta:
            raise ManifestParseError(f"split file lacks '{key}='", None, str(path))
    ids = [i for name in PARTITIONS for i in sections.get(name, [])]
    if len(ids) != len(set(ids)):
        raise IntegrityError(f"{path}: a subject id appears in more than one partition")
    ratios = parse_number_list(meta["ratios"])
    if len(ratios) != 3:
        raise ManifestParseError("ratios= needs three values", None, str(path))
    return ProtocolSplit(
        train_ids=frozenset(sections.get("train", [])),
        dev_ids=frozenset(sections.get("dev", [])),
        test_ids=frozenset(sections.get("test", [])),
        seed=int(meta["seed"]),
        ratios=(ratios[0], ratios[1], ratios[2]),
    )


# --- pair file ---

def pairs_text(pairs: Sequence[MorphPair]) -> str:
    lines = ["# subject_a;subject_b;pair_score;split"]
    lines += [f"{p.subject_a};{p.subject_b};{format_float(p.pair_score)};{p.split}" for p in pairs]
    return "\n".join(lines) + "\n"


def write_pairs(path: str | Path, pairs: Sequence[MorphPair]) -> Path:
    return atomic_write_text(path, pairs_text(pairs))


def read_pairs(path: str | Path) -> list[MorphPair]:
    path = Path(path)
    pairs = []
    for line_number, line in _data_lines(path):
        a, b, score, split = _fields(line, 4, path, line_number)
        try:
            pairs.append(MorphPair(a, b, _number(score, path, line_number), split))
        except ContractError as e:
            raise ManifestParseError(str(e), line_number, str(path)) from None
    return pairs


# --- morph job file ---

def write_morph_jobs(path: str | Path, jobs: Sequence[MorphRecord]) -> Path:
    """Output paths are stored relative to the job file's directory."""
    path = Path(path)
    base = path.parent.resolve()
    lines = ["# subject_a;subject_b;pair_score;split;alpha;output"]
    for job in jobs:
        out = Path(job.output_path).resolve()
        try:
            rel = out.relative_to(base).as_posix()
        except ValueError:
            rel = out.as_posix()
        p = job.pair
        lines.append(f"{p.subject_a};{p.subject_b};{format_float(p.pair_score)};{p.split};{alpha_tag(job.alpha)};{rel}")
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_morph_jobs(path: str | Path) -> list[MorphRecord]:
    path = Path(path)
    jobs = []
    for line_number, line in _data_lines(path):
        a, b, score, split, alpha, rel = _fields(line, 6, path, line_number)
        out = Path(rel)
        try:
            pair = MorphPair(a, b, _number(score, path, line_number), split)
            jobs.append(MorphRecord(pair, _number(alpha, path, line_number), out if out.is_absolute() else path.parent / out))
        except ContractError as e:
            raise ManifestParseError(str(e), line_number, str(path)) from None
    return jobs


# --- vulnerability score table ---

def write_score_table(path: str | Path, table: VulnerabilityScoreTable) -> Path:
    lines = [f"# k={table.k}", "# morph_id;attempt;subject_index;score"]
    lines += [f"{e.morph_id};{e.attempt};{e.subject_index};{format_float(e.score)}" for e in table.entries]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_score_table(path: str | Path) -> VulnerabilityScoreTable:
    path = Path(path)
    k = 2
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line.startswith("#") and line.lstrip("# ").startswith("k="):
                k = int(line.lstrip("# ")[2:])
                break
    entries = []
    for line_number, line in _data_lines(path):
        morph_id, attempt, subject, score = _fields(line, 4, path, line_number)
        try:
            entries.append(ScoreEntry(morph_id, int(attempt), int(subject), _number(score, path, line_number)))
        except ValueError:
            raise ManifestParseError("attempt and subject_index must be integers", line_number, str(path)) from None
    return VulnerabilityScoreTable(tuple(entries), k=k)


# --- calibration ---

def write_calibration(path: str | Path, result: CalibrationResult) -> Path:
    lines = [
        f"tau={format_float(result.tau)}",
        f"far_target={format_float(result.far_target)}",
        f"n={result.impostor_count}",
        f"sentinel={str(result.sentinel).lower()}",
    ]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_calibration(path: str | Path) -> CalibrationResult:
    path = Path(path)
    values = _key_values(path)
    try:
        return CalibrationResult(
            tau=parse_float(values["tau"]),
            far_target=parse_float(values["far_target"]),
            impostor_count=int(values["n"]),
            sentinel=values.get("sentinel", "false") == "true",
        )
    except (KeyError, ValueError) as e:
        raise ManifestParseError(f"bad calibration file: {e}", None, str(path)) from None


def _key_values(path: Path) -> dict[str, str]:
    values = {}
    for line_number, line in _data_lines(path):
        key, sep, value = line.partition("=")
        if not sep:
            raise ManifestParseError(f"expected key=value, got '{line}'", line_number, str(path))
        values[key.strip()] = value.strip()
    return values


# --- BSIF filter bank ---

def write_filterbank(path: str | Path, bank: FilterBank) -> Path:
    lines = [f"{bank.n_filters} {bank.size}"]
    for f in bank.coefficients:
        lines.extend(" ".join(format_float(v) for v in row) for row in f.tolist())
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_filterbank(path: str | Path) -> FilterBank:
    """
    `n size` header, then n blocks of `size` rows. The coefficients go
    through the same validation and quantisation as a generated bank.
    """
    path = Path(path)
    rows = list(_data_lines(path))
    if not rows:
        raise ManifestParseError("empty filter bank file", None, str(path))
    header = rows[0][1].split()
    if len(header) != 2 or not all(h.isdigit() for h in header):
        raise ManifestParseError("first line must be 'n size'", rows[0][0], str(path))
    n, size = int(header[0]), int(header[1])
    body = rows[1:]
    if len(body) != n * size:
        raise ManifestParseError(f"expected {n * size} coefficient rows, found {len(body)}", None, str(path))
    values = []
    for line_number, line in body:
        row = [_number(v, path, line_number) for v in line.split()]
        if len(row) != size:
            raise ManifestParseError(f"expected {size} coefficients, got {len(row)}", line_number, str(path))
        values.append(row)
    return bank_from_coefficients(np.array(values, dtype=np.float64).reshape(n, size, size))


# --- features ---

def write_features(path: str | Path, features: Sequence[LabeledFeature]) -> Path:
    if not features:
        raise ContractError("no features to write")
    first = features[0].vector
    lines = [f"# extractor={first.extractor_id} dim={first.dimension} digest={first.config_digest}"]
    for f in features:
        if f.vector.config_digest != first.config_digest or f.vector.dimension != first.dimension:
            raise ContractError(f"feature {f.sample_id} differs in configuration from {features[0].sample_id}")
        lines.append(f"{f.sample_id};{f.label};{format_vector(f.vector.values)}")
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_features(path: str | Path) -> list[LabeledFeature]:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
    meta = dict(part.split("=", 1) for part in header.lstrip("# ").split() if "=" in part)
    if not {"extractor", "dim", "digest"} <= meta.keys():
        raise ManifestParseError("feature file header must carry extractor=, dim= and digest=", 1, str(path))
    dim = int(meta["dim"])
    out = []
    for line_number, line in _data_lines(path):
        sample_id, label, values = _fields(line, 3, path, line_number)
        vector = parse_vector(values)
        if vector.size != dim:
            raise IntegrityError(f"{path}:{line_number}: dimension {vector.size} != {dim}")
        try:
            out.append(LabeledFeature(sample_id, label, FeatureVector(vector, meta["extractor"], meta["digest"])))
        except ContractError as e:
            raise ManifestParseError(str(e), line_number, str(path)) from None
    return out


# --- MAD model ---

def model_text(model: MadModel) -> str:
    lines = [
        f"version={MODEL_FORMAT_VERSION}",
        f"extractor={model.extractor_id}",
        f"digest={model.config_digest}",
        f"config={json.dumps(model.config, sort_keys=True, separators=(',', ':'))}",
        f"bias={format_float(model.bias)}",
        f"mean={format_vector(model.mean)}",
        f"std={format_vector(model.std)}",
        f"weights={format_vector(model.weights)}",
    ]
    for target, thr in sorted(model.operating_thresholds.items()):
        lines.append(f"threshold.{target:g}={format_float(thr)}")
    for target, bpcer in sorted(model.dev_bpcer.items()):
        lines.append(f"dev_bpcer.{target:g}={format_float(bpcer)}")
    return "\n".join(lines) + "\n"


def write_model(path: str | Path, model: MadModel) -> Path:
    return atomic_write_text(path, model_text(model))


def read_model(path: str | Path) -> MadModel:
    path = Path(path)
    values = _key_values(path)
    version = int(values.get("version", "0"))
    if version != MODEL_FORMAT_VERSION:
        raise ContractError(f"{path}: unsupported model format version {version}")
    thresholds = {float(k.split(".", 1)[1]): parse_float(v) for k, v in values.items() if k.startswith("threshold.")}
    dev_bpcer = {float(k.split(".", 1)[1]): parse_float(v) for k, v in values.items() if k.startswith("dev_bpcer.")}
    try:
        return MadModel(
            extractor_id=values["extractor"],
            config=json.loads(values["config"]),
            config_digest=values["digest"],
            mean=parse_vector(values["mean"]),
            std=parse_vector(values["std"]),
            weights=parse_vector(values["weights"]),
            bias=parse_float(values["bias"]),
            operating_thresholds=thresholds,
            dev_bpcer=dev_bpcer,
        )
    except KeyError as e:
        raise ManifestParseError(f"model file lacks {e}", None, str(path)) from None


# --- MAD score sets ---

def write_score_set(path: str | Path, rows: Sequence[tuple[str, str, float]]) -> Path:
    lines = ["# sample_id;label;score"]
    lines += [f"{sample_id};{label};{format_float(score)}" for sample_id, label, score in rows]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_score_set(path: str | Path) -> list[tuple[str, str, float]]:
    path = Path(path)
    rows = []
    for line_number, line in _data_lines(path):
        sample_id, label, score = _fields(line, 3, path, line_number)
        if label not in (LABEL_BONA_FIDE, LABEL_ATTACK):
            raise ManifestParseError(f"unknown label '{label}'", line_number, str(path))
        rows.append((sample_id, label, _number(score, path, line_number)))
    return rows


# --- run layout ---

class ArtifactStore:
    """
    Fixed file layout under one output root:

        split.txt, pairs.txt, pairing_calibration.txt, statistics.json
        morphs/<a>+<b>@<alpha>.png, morphs/jobs.txt
        vulnerability/calibration.txt, vulnerability/scores.txt, vulnerability/report.json, *.svg
        mad/filterbank.txt, mad/<extractor>/{train,dev,test}.features, model.txt,
        mad/<extractor>/{dev,test}_scores.txt, det.json, det.svg
        results.json, results.xlsx
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, *parts: str) -> Path:
        return self.root.joinpath(*parts)

    def ensure(self, *parts: str) -> Path:
        directory = self.path(*parts)
        directory.mkdir(parents=True, exist_ok=True)
        return directory

    @property
    def split_file(self) -> Path:
        return self.path("split.txt")

    @property
    def pairs_file(self) -> Path:
        return self.path("pairs.txt")

    @property
    def pairing_calibration_file(self) -> Path:
        return self.path("pairing_calibration.txt")

    @property
    def statistics_file(self) -> Path:
        return self.path("statistics.json")

    @property
    def morph_dir(self) -> Path:
        return self.path("morphs")

    @property
    def jobs_file(self) -> Path:
        return self.path("morphs", "jobs.txt")

    def vulnerability(self, name: str) -> Path:
        return self.path("vulnerability", name)

    @property
    def filterbank_file(self) -> Path:
        return self.path("mad", "filterbank.txt")

    def mad(self, extractor: str, name: str) -> Path:
        return self.path("mad", extractor, name)

    def features_file(self, extractor: str, partition: str) -> Path:
        return self.mad(extractor, f"{partition}.features")

    def model_file(self, extractor: str) -> Path:
        return self.mad(extractor, "model.txt")

    def scores_file(self, extractor: str, partition: str) -> Path:
        return self.mad(extractor, f"{partition}_scores.txt")

    @property
    def results_file(self) -> Path:
        return self.path("results.json")

    @property
    def workbook_file(self) -> Path:
        return self.path("results.xlsx")
