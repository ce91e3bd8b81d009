# mad/features.py
import logging
from pathlib import Path
from typing import Any, Optional, Sequence

from config import settings
from mad.bsif import bsif_config, extract_bsif, generate_default_filterbank
from mad.hog import extract_hog, hog_config
from mad.lbp import extract_lbp, lbp_config
from mad.models import EXTRACTORS, LABEL_ATTACK, LABEL_BONA_FIDE, FeatureVector, FilterBank, LabeledFeature
from mad.preprocess import preprocess
from morphing.jobs import MorphRecord
from morphing.raster import RasterImage
from protocol.models import DatasetManifest, ProtocolSplit
from storage.images import load_image
from utils.errors import ConfigError, ContractError, ItemFailure
from utils.helpers import alpha_tag, stable_digest
from utils.task_pool import map_ordered

log = logging.getLogger(__name__)


class FeatureExtractor:
    """
    One configured descriptor: preprocessing plus LBP, BSIF or HOG.
    The config digest ties feature files and models to these exact settings.
    """

    def __init__(
        self,
        name: str,
        size: int = settings.MAD_SIZE,
        lbp_grid: int = settings.LBP_GRID,
        lbp_mode: str = settings.LBP_MODE,
        bank: Optional[FilterBank] = None,
        bsif_grid: int = settings.BSIF_GRID,
        hog_cell: int = settings.HOG_CELL,
        hog_block: int = settings.HOG_BLOCK,
        hog_bins: int = settings.HOG_BINS,
    ):
        if name not in EXTRACTORS:
            raise ConfigError(f"unknown extractor '{name}' (expected one of {EXTRACTORS})")
        self.name = name
        self.size = size
        if name == "lbp":
            self._params = {"grid": lbp_grid, "mode": lbp_mode}
            descriptor = lbp_config(lbp_grid, lbp_mode)
        elif name == "bsif":
            self.bank = bank if bank is not None else generate_default_filterbank(
                settings.BSIF_FILTERS, settings.BSIF_SIZE, settings.BSIF_SEED
            )
            self._params = {"grid": bsif_grid}
            descriptor = bsif_config(self.bank, bsif_grid)
        else:
            self._params = {"cell": hog_cell, "block": hog_block, "bins": hog_bins}
            descriptor = hog_config(hog_cell, hog_block, hog_bins)
        self.config: dict[str, Any] = {"size": size, **descriptor}
        self.digest = stable_digest(self.config)

    @classmethod
    def from_run_config(cls, name: str, run: Any, bank: Optional[FilterBank] = None) -> "FeatureExtractor":
        if name == "bsif" and bank is None:
            bank = generate_default_filterbank(run.bsif_filters, run.bsif_size, run.bsif_seed)
        return cls(
            name,
            lbp_grid=run.lbp_grid,
            lbp_mode=run.lbp_mode,
            bank=bank,
            bsif_grid=run.bsif_grid,
            hog_cell=run.hog_cell,
        )

    def extract(self, image: RasterImage) -> FeatureVector:
        gray = preprocess(image, size=self.size)
        if self.name == "lbp":
            vec = extract_lbp(gray, **self._params)
        elif self.name == "bsif":
            vec = extract_bsif(gray, self.bank, **self._params)
        else:
            vec = extract_hog(gray, **self._params)
        return FeatureVector(vec.values, self.name, self.digest)

    def extract_file(self, path: str | Path) -> FeatureVector:
        return self.extract(load_image(path))


def feature_items(
    manifest: DatasetManifest,
    split: ProtocolSplit,
    jobs: Sequence[MorphRecord],
    partition: str,
    alpha: Optional[float] = None,
    bona_fide_session: int = settings.BONA_FIDE_SESSION,
) -> list[tuple[str, str, Path]]:
    """
    (sample_id, label, image path) for one partition: session-2 images of its
    subjects as bona fide, morphs whose pair lies in it as attacks.
    """
    members = split.partition(partition)
    items: list[tuple[str, str, Path]] = []
    for subject in manifest.subjects:
        if subject.subject_id not in members:
            continue
        if subject.session(bona_fide_session) is None:
            log.warning("⚠️ %s has no session %d; no bona fide sample", subject.subject_id, bona_fide_session)
            continue
        items.append((
            f"{subject.subject_id}@s{bona_fide_session}",
            LABEL_BONA_FIDE,
            manifest.image_file(subject.subject_id, bona_fide_session),
        ))
    for job in jobs:
        a, b = job.pair.subject_a, job.pair.subject_b
        if a not in members or b not in members:
            continue
        if alpha is not None and alpha_tag(job.alpha) != alpha_tag(alpha):
            continue
        items.append((job.morph_id, LABEL_ATTACK, job.output_path))
    return items


def build_feature_set(
    manifest: DatasetManifest,
    split: ProtocolSplit,
    jobs: Sequence[MorphRecord],
    partition: str,
    extractor: FeatureExtractor,
    alpha: Optional[float] = None,
    workers: int = 1,
    errors: Optional[list[ItemFailure]] = None,
    progress: bool = False,
) -> list[LabeledFeature]:
    """Extract features for a partition; unreadable images are reported and skipped."""
    items = feature_items(manifest, split, jobs, partition, alpha)

    def _run(item: tuple[str, str, Path]) -> LabeledFeature | ItemFailure:
        sample_id, label, path = item
        try:
            return LabeledFeature(sample_id, label, extractor.extract_file(path))
        except (OSError, ContractError) as e:
            return ItemFailure(sample_id, str(e))

    out: list[LabeledFeature] = []
    for result in map_ordered(_run, items, workers=workers, desc=f"{extractor.name} {partition}", progress=progress):
        if isinstance(result, ItemFailure):
            log.warning("⚠️ Feature extraction failed for %s: %s", result.item_id, result.reason)
            if errors is not None:
                errors.append(result)
            continue
        out.append(result)
    n_attack = sum(1 for f in out if f.label == LABEL_ATTACK)
    log.info("🧩 %s/%s: %d bona fide + %d attack features", extractor.name, partition, len(out) - n_attack, n_attack)
    return out
