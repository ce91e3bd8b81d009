# handlers/experiment.py
"""
`experiment run`: the whole protocol from one RunConfig.

intra: split, pair, morph, vulnerability and MAD all on one bin.
cross: train and dev on the main bin, test on the test partition of
cross_manifest, whose subjects must not appear in training.
"""

import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, Any, Optional

import typer

from app_context import comparator, console, runtime
from config import RunConfig
from evaluation.iso import build_det_report, equal_error_rate
from handlers.common import (
    AlphaOpt,
    ApcerOpt,
    ConfigOpt,
    ExperimentMode,
    Extractor,
    FarOpt,
    SeedOpt,
    print_table,
    report_failures,
    run_config,
)
from handlers.mad import load_bank
from handlers.vuln import print_vulnerability
from mad.features import FeatureExtractor, build_feature_set
from mad.svm import score_samples, train_svm
from mad.thresholds import score_set, select_operating_thresholds
from morphing.jobs import MorphRecord, build_morph_jobs, generate_morphs
from protocol.manifest import parse_manifest
from protocol.models import PARTITIONS, DatasetManifest, MorphPair, ProtocolSplit
from protocol.pairing import calibrate_pairing_threshold, select_pairs
from protocol.splits import split_dataset
from protocol.stats import dataset_statistics
from reports.svg import build_scatter_report, emit_box_svg, emit_det_svg, emit_scatter_svg
from reports.workbook import export_results_workbook
from storage.files import (
    ArtifactStore,
    write_calibration,
    write_features,
    write_filterbank,
    write_json,
    write_model,
    write_morph_jobs,
    write_pairs,
    write_score_set,
    write_score_table,
    write_split,
)
from utils.errors import ContractError, ItemFailure, ProtocolError
from utils.helpers import alpha_tag
from utils.messages import get_text
from vulnerability.calibration import calibrate_vulnerability_threshold
from vulnerability.models import VulnerabilityReport
from vulnerability.report import build_vulnerability_report, split_by_alpha
from vulnerability.scoring import score_morphs

logger = logging.getLogger(__name__)

router = typer.Typer(help="End-to-end experiments.", no_args_is_help=True)


@dataclass
class BinRun:
    """One dataset bin as it moves through the protocol."""

    name: str
    manifest: DatasetManifest
    split: ProtocolSplit
    store: ArtifactStore
    pairs: list[MorphPair] = field(default_factory=list)
    jobs: list[MorphRecord] = field(default_factory=list)


def check_cross_protocol(train_ids: frozenset[str], test_ids: frozenset[str]) -> None:
    """
    Raises:
        ProtocolError: a training/dev subject also belongs to the test bin.
    """
    overlap = sorted(train_ids & test_ids)
    if overlap:
        shown = ", ".join(overlap[:5]) + (" ..." if len(overlap) > 5 else "")
        raise ProtocolError(f"cross-bin run: {len(overlap)} subject(s) used for training also appear in the test bin: {shown}")


def open_bin(name: str, manifest_path: Path, cfg: RunConfig, store: ArtifactStore) -> BinRun:
    manifest = parse_manifest(manifest_path, check_files=True)
    split = split_dataset(manifest, cfg.ratios, cfg.seed, cfg.split_sizes)
    write_split(store.split_file, split)
    return BinRun(name, manifest, split, store)


def prepare_morphs(run: BinRun, cfg: RunConfig, failures: list[ItemFailure]) -> None:
    """Pairing calibration, pair selection, morph rendering and the bin statistics."""
    calibration = calibrate_pairing_threshold(
        run.manifest, comparator, cfg.pair_far_target, workers=cfg.workers, errors=failures
    )
    write_calibration(run.store.pairing_calibration_file, calibration)
    run.pairs = select_pairs(
        run.manifest, run.split, comparator, calibration.tau, cfg.max_pairs_per_subject,
        workers=cfg.workers, errors=failures,
    )
    write_pairs(run.store.pairs_file, run.pairs)
    if not run.pairs:
        raise ContractError(f"{run.name}: no pair reached the pairing threshold {calibration.tau!r}; nothing to morph")

    jobs = build_morph_jobs(run.pairs, cfg.alphas, run.store.morph_dir)
    run.jobs = generate_morphs(jobs, run.manifest, workers=cfg.workers, errors=failures, progress=runtime.progress)
    write_morph_jobs(run.store.jobs_file, run.jobs)

    morph_counts = Counter(job.pair.split for job in run.jobs)
    stats = dataset_statistics(run.manifest, run.split, run.pairs, {p: morph_counts.get(p, 0) for p in PARTITIONS})
    write_json(run.store.statistics_file, stats.to_dict())


def run_vulnerability(run: BinRun, cfg: RunConfig, failures: list[ItemFailure]) -> VulnerabilityReport:
    store = run.store
    calibration = calibrate_vulnerability_threshold(
        run.manifest, comparator, cfg.vuln_far_target, probe_session=cfg.probe_sessions[0],
        workers=cfg.workers, errors=failures,
    )
    write_calibration(store.vulnerability("calibration.txt"), calibration)
    table = score_morphs(run.jobs, run.manifest, comparator, cfg.probe_sessions, workers=cfg.workers, errors=failures)
    write_score_table(store.vulnerability("scores.txt"), table)

    tables = split_by_alpha(table)
    report = build_vulnerability_report(tables, calibration.tau, calibration, expected_alphas=cfg.alphas)
    write_json(store.vulnerability("report.json"), report.to_dict())

    for alpha, points in report.scatter.items():
        tag = alpha_tag(alpha)
        title = f"{run.manifest.bin_label}, alpha = {tag}"
        emit_scatter_svg(build_scatter_report(points, report.tau, title), store.vulnerability(f"scatter_{tag}.svg"))
        sub = tables[alpha]
        emit_box_svg(
            {f"S{k}": sub.subject_scores(k) for k in range(1, sub.k + 1)},
            store.vulnerability(f"box_{tag}.svg"),
            title,
        )
    return report


def run_mad(
    extractor_name: str,
    train_bin: BinRun,
    test_bin: BinRun,
    cfg: RunConfig,
    failures: list[ItemFailure],
) -> list[dict[str, Any]]:
    """Train on train, pick thresholds on dev, evaluate on the test bin; one result row per alpha plus pooled."""
    store = train_bin.store
    bank = None
    if extractor_name == "bsif":
        bank = load_bank(cfg)
        write_filterbank(store.filterbank_file, bank)
    extractor = FeatureExtractor.from_run_config(extractor_name, cfg, bank)

    def features(run: BinRun, partition: str):
        samples = build_feature_set(
            run.manifest, run.split, run.jobs, partition, extractor,
            workers=cfg.workers, errors=failures, progress=runtime.progress,
        )
        write_features(store.features_file(extractor_name, partition), samples)
        return samples

    train = features(train_bin, "train")
    dev = features(train_bin, "dev")
    test = features(test_bin, "test")

    model, _ = train_svm(train, C=cfg.svm_c, seed=cfg.seed, epochs=cfg.svm_epochs, config=extractor.config)
    dev_rows = score_samples(model, dev)
    test_rows = score_samples(model, test)
    model = select_operating_thresholds(model, score_set(dev_rows), cfg.apcer_targets)
    write_model(store.model_file(extractor_name), model)
    write_score_set(store.scores_file(extractor_name, "dev"), dev_rows)
    write_score_set(store.scores_file(extractor_name, "test"), test_rows)

    rows: list[dict[str, Any]] = []
    curves = {}
    det: dict[str, Any] = {"extractor": extractor_name, "per_alpha": {}}
    for alpha in [*sorted(cfg.alphas), None]:
        tag = "all" if alpha is None else alpha_tag(alpha)
        try:
            dev_set = score_set(dev_rows, alpha)
            test_set = score_set(test_rows, alpha)
        except ContractError:
            logger.warning("⚠️ %s: no dev or test attacks for alpha=%s; row skipped", extractor_name, tag)
            continue
        report = build_det_report(test_set, cfg.apcer_targets, "dev_calibrated", model.operating_thresholds)
        curves[f"{extractor_name.upper()} alpha={tag}"] = report
        if alpha is None:
            det.update(report.to_dict())
        else:
            det["per_alpha"][tag] = report.to_dict()
        rows.append({
            "algorithm": f"{extractor_name.upper()}-SVM",
            "alpha": tag,
            "dev_eer": equal_error_rate(dev_set),
            "test_eer": report.eer_percent,
            "bpcer_at_apcer": report.to_dict()["bpcer_at_apcer"],
        })

    write_json(store.mad(extractor_name, "det.json"), det)
    emit_det_svg(curves, store.mad(extractor_name, "det.svg"), title=f"{extractor_name.upper()}-SVM")
    return rows


def run_experiment(cfg: RunConfig, failures: Optional[list[ItemFailure]] = None) -> dict[str, Any]:
    """
    Full pipeline under cfg.output_root. Returns the results payload, also
    written to results.json.

    Raises:
        ProtocolError: cross mode with shared subjects.
        ContractError: a bin yields no morph pairs.
    """
    failures = [] if failures is None else failures
    cfg.check_paths()
    if cfg.manifest is None:
        raise ContractError("experiment run needs [paths] manifest")
    store = ArtifactStore(cfg.output_root)

    main = open_bin("main", cfg.manifest, cfg, store)
    bins = [main]
    test_bin = main
    if cfg.mode == "cross":
        test_bin = open_bin("cross", cfg.cross_manifest, cfg, ArtifactStore(store.path("cross")))
        check_cross_protocol(main.split.train_ids | main.split.dev_ids, frozenset(test_bin.manifest.subject_ids))
        bins.append(test_bin)

    vulnerability: dict[str, Any] = {}
    for run in bins:
        prepare_morphs(run, cfg, failures)
        report = run_vulnerability(run, cfg, failures)
        key = run.manifest.bin_label if run.manifest.bin_label not in vulnerability else f"{run.manifest.bin_label} ({run.name})"
        vulnerability[key] = report.to_dict()
        print_vulnerability(report)

    mad_rows: list[dict[str, Any]] = []
    for name in cfg.extractors:
        mad_rows.extend(run_mad(name, main, test_bin, cfg, failures))

    results = {
        "mode": cfg.mode,
        "seed": cfg.seed,
        "train_bin": main.manifest.bin_label,
        "test_bin": test_bin.manifest.bin_label,
        "comparator": comparator.label,
        "apcer_targets": [f"{t:g}" for t in cfg.apcer_targets],
        "mad": mad_rows,
        "vulnerability": vulnerability,
        "item_failures": len(failures),
    }
    write_json(store.results_file, results)
    if cfg.export_workbook:
        export_results_workbook(results, store.workbook_file)
    return results


@router.command("run")
def run(
    config: ConfigOpt = None,
    mode: Annotated[Optional[ExperimentMode], typer.Option(help="intra: one bin; cross: train on manifest, test on cross_manifest.")] = None,
    out: Annotated[Optional[Path], typer.Option("--out", "-o", help="Output root (overrides [paths] output_root).")] = None,
    seed: SeedOpt = None,
    alpha: AlphaOpt = None,
    extractor: Annotated[Optional[list[Extractor]], typer.Option("--extractor", help="MAD extractor; repeat for several.")] = None,
    apcer_targets: ApcerOpt = None,
    far_target: FarOpt = None,
    pair_far_target: Annotated[Optional[float], typer.Option(help="FAR target of the pairing threshold.")] = None,
    workbook: Annotated[Optional[bool], typer.Option("--workbook/--no-workbook", help="Also write results.xlsx.")] = None,
) -> None:
    """Split, pair, morph, score vulnerability and train/evaluate MAD in one go."""
    cfg = run_config(
        config,
        mode=mode.value if mode else None,
        output_root=out,
        seed=seed,
        alphas=alpha,
        extractors=tuple(e.value for e in extractor) if extractor else None,
        apcer_targets=apcer_targets,
        vuln_far_target=far_target,
        pair_far_target=pair_far_target,
        export_workbook=workbook,
    )
    console.print(get_text("experiment_start", mode=cfg.mode, manifest=cfg.manifest, out=cfg.output_root))
    started = time.perf_counter()
    failures: list[ItemFailure] = []
    results = run_experiment(cfg, failures)

    targets = results["apcer_targets"]
    print_table(
        f"MAD ({results['train_bin']} -> {results['test_bin']})",
        ["algorithm", "alpha", "dev D-EER %", "test D-EER %", *[f"BPCER@{t}%" for t in targets]],
        [[r["algorithm"], r["alpha"], r["dev_eer"], r["test_eer"], *[r["bpcer_at_apcer"][t] for t in targets]]
         for r in results["mad"]],
    )
    report_failures(failures)
    console.print(get_text(
        "experiment_done", seconds=time.perf_counter() - started, path=ArtifactStore(cfg.output_root).results_file
    ))
