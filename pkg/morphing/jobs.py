# morphing/jobs.py
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from config import settings
from morphing.blend import morph_pair
from morphing.raster import LandmarkSet, RasterImage
from protocol.models import DatasetManifest, MorphPair
from storage.images import load_image, load_landmarks, save_image
from utils.errors import ContractError, ItemFailure
from utils.helpers import alpha_tag
from utils.task_pool import map_ordered

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MorphRecord:
    pair: MorphPair
    alpha: float
    output_path: Path

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ContractError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def morph_id(self) -> str:
        return f"{self.pair.subject_a}+{self.pair.subject_b}@{alpha_tag(self.alpha)}"


def morph_file_name(pair: MorphPair, alpha: float) -> str:
    return f"{pair.subject_a}+{pair.subject_b}@{alpha_tag(alpha)}.png"


def build_morph_jobs(
    pairs: Sequence[MorphPair],
    alphas: Sequence[float] = settings.ALPHAS,
    out_dir: Path = Path("morphs"),
) -> list[MorphRecord]:
    """One job per (pair, alpha), pairs outer, alphas in the given order."""
    if not alphas:
        raise ContractError("at least one alpha is required")
    jobs = []
    for pair in pairs:
        for alpha in alphas:
            jobs.append(MorphRecord(pair=pair, alpha=float(alpha), output_path=Path(out_dir) / morph_file_name(pair, alpha)))
    return jobs


def load_face(manifest: DatasetManifest, subject_id: str, session: int) -> tuple[RasterImage, LandmarkSet]:
    """Image and landmarks of one session; landmarks must fall inside the frame."""
    image = load_image(manifest.image_file(subject_id, session))
    landmarks = load_landmarks(manifest.landmark_file(subject_id, session), expected=manifest.landmark_count)
    landmarks.check_within(image.width, image.height)
    return image, landmarks


def render_morph(job: MorphRecord, manifest: DatasetManifest, session: int = settings.MORPH_SESSION) -> RasterImage:
    image_a, lm_a = load_face(manifest, job.pair.subject_a, session)
    image_b, lm_b = load_face(manifest, job.pair.subject_b, session)
    return morph_pair(image_a, lm_a, image_b, lm_b, job.alpha)


def generate_morphs(
    jobs: Sequence[MorphRecord],
    manifest: DatasetManifest,
    workers: int = 1,
    errors: Optional[list[ItemFailure]] = None,
    progress: bool = False,
) -> list[MorphRecord]:
    """
    Render every job to its PNG. Jobs whose inputs cannot be read are
    reported in `errors` and left out of the returned list.
    """

    def _run(job: MorphRecord) -> Optional[ItemFailure]:
        try:
            morph = render_morph(job, manifest)
        except (OSError, ContractError) as e:
            return ItemFailure(job.morph_id, str(e))
        save_image(morph, job.output_path)
        return None

    outcomes = map_ordered(_run, jobs, workers=workers, desc="morphs", progress=progress)

    done = []
    for job, failure in zip(jobs, outcomes):
        if failure is None:
            done.append(job)
            continue
        log.warning("⚠️ Skipping morph %s: %s", failure.item_id, failure.reason)
        if errors is not None:
            errors.append(failure)
    log.info("🧬 Generated %d/%d morphs", len(done), len(jobs))
    return done
