# handlers/mad.py
from pathlib import Path
from typing import Annotated, Optional

import numpy as np
import typer

from app_context import console, runtime
from config import RunConfig
from evaluation.iso import build_det_report
from handlers.common import (
    ApcerOpt,
    ConfigOpt,
    Extractor,
    ManifestOpt,
    OutOpt,
    SeedOpt,
    ThresholdMode,
    print_table,
    report_failures,
    require_manifest,
    run_config,
)
from mad.bsif import generate_default_filterbank
from mad.features import FeatureExtractor, build_feature_set
from mad.models import FilterBank, label_to_int
from mad.svm import score_samples, train_svm
from mad.thresholds import score_set, select_operating_thresholds
from protocol.manifest import parse_manifest
from protocol.models import PARTITIONS
from storage.files import (
    read_features,
    read_filterbank,
    read_model,
    read_morph_jobs,
    read_split,
    write_features,
    write_json,
    write_model,
    write_score_set,
)
from utils.errors import ConfigError, ItemFailure
from utils.messages import get_text

router = typer.Typer(help="Morphing attack detection: features, SVM training, evaluation.", no_args_is_help=True)


def load_bank(cfg: RunConfig) -> FilterBank:
    if cfg.filterbank is not None:
        return read_filterbank(cfg.filterbank)
    return generate_default_filterbank(cfg.bsif_filters, cfg.bsif_size, cfg.bsif_seed)


def det_summary(extractor: str, report_dict: dict) -> None:
    rows = [[f"APCER <= {t}%", report_dict["thresholds"][t], report_dict["bpcer_at_apcer"][t]]
            for t in report_dict["bpcer_at_apcer"]]
    print_table(
        get_text("eval_title", extractor=extractor, eer=report_dict["eer_percent"], mode=report_dict["mode"]),
        ["operating point", "threshold", "BPCER %"],
        rows,
    )


@router.command("extract")
def extract(
    out: OutOpt,
    split_file: Annotated[Path, typer.Option("--split", help="Split file.")],
    jobs: Annotated[Path, typer.Option(help="Morph job file.")],
    partition: Annotated[str, typer.Option(help="train, dev or test.")],
    extractor: Annotated[Extractor, typer.Option(help="Feature extractor.")] = Extractor.lbp,
    manifest: ManifestOpt = None,
    config: ConfigOpt = None,
    alpha: Annotated[Optional[float], typer.Option("--alpha", help="Only attacks with this morphing factor.")] = None,
    filterbank: Annotated[Optional[Path], typer.Option(help="BSIF filter bank file.")] = None,
) -> None:
    """Features of one partition: session-2 bona fide images and its morphs."""
    if partition not in PARTITIONS:
        raise ConfigError(f"unknown partition '{partition}' (expected one of {PARTITIONS})")
    cfg = run_config(config, filterbank=filterbank)
    data = parse_manifest(require_manifest(cfg, manifest), check_files=True)
    bank = load_bank(cfg) if extractor is Extractor.bsif else None
    feature_extractor = FeatureExtractor.from_run_config(extractor.value, cfg, bank)
    failures: list[ItemFailure] = []
    features = build_feature_set(
        data, read_split(split_file), read_morph_jobs(jobs), partition, feature_extractor,
        alpha=alpha, workers=cfg.workers, errors=failures, progress=runtime.progress,
    )
    write_features(out, features)
    console.print(get_text("features_done", count=len(features), extractor=extractor.value, path=out))
    report_failures(failures)


@router.command("train")
def train(
    out: OutOpt,
    train_features: Annotated[Path, typer.Option("--train", help="Training features.")],
    dev_features: Annotated[Path, typer.Option("--dev", help="Development features for the operating thresholds.")],
    config: ConfigOpt = None,
    seed: SeedOpt = None,
    apcer_targets: ApcerOpt = None,
) -> None:
    """Linear SVM on the training features; thresholds chosen on the dev features."""
    cfg = run_config(config, seed=seed, apcer_targets=apcer_targets)
    samples = read_features(train_features)
    model, svm = train_svm(samples, C=cfg.svm_c, seed=cfg.seed, epochs=cfg.svm_epochs,
                           config={"extractor": samples[0].vector.extractor_id if samples else ""})
    dev_rows = score_samples(model, read_features(dev_features))
    model = select_operating_thresholds(model, score_set(dev_rows), cfg.apcer_targets)
    write_model(out, model)

    X = np.vstack([s.vector.values for s in samples])
    y = np.array([label_to_int(s.label) for s in samples])
    accuracy = 100.0 * float(np.mean(svm.predict((X - model.mean) / model.std) == y))
    console.print(get_text("model_done", extractor=model.extractor_id, path=out, accuracy=accuracy))


@router.command("eval")
def evaluate(
    out: OutOpt,
    model_file: Annotated[Path, typer.Option("--model", help="Model file.")],
    features: Annotated[Path, typer.Option(help="Features to score, usually the test partition.")],
    threshold_mode: Annotated[ThresholdMode, typer.Option(help="Dev thresholds or the best threshold on these scores.")] = ThresholdMode.dev_calibrated,
    apcer_targets: ApcerOpt = None,
    config: ConfigOpt = None,
    scores_out: Annotated[Optional[Path], typer.Option(help="Also write the per-sample scores.")] = None,
) -> None:
    """D-EER, BPCER at the APCER targets and the DET points, as JSON."""
    model = read_model(model_file)
    rows = score_samples(model, read_features(features))
    if scores_out:
        write_score_set(scores_out, rows)
    if threshold_mode is ThresholdMode.dev_calibrated and apcer_targets is None:
        targets = tuple(sorted(model.operating_thresholds))
    else:
        targets = run_config(config, apcer_targets=apcer_targets).apcer_targets
    report = build_det_report(score_set(rows), targets, threshold_mode.value, model.operating_thresholds)
    payload = {"extractor": model.extractor_id, **report.to_dict()}
    write_json(out, payload)
    det_summary(model.extractor_id, payload)
