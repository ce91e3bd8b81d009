# vulnerability/comparator.py
"""
Toy face comparator standing in for a commercial face recognition system.

similarity = 0.5 * (1 + cos(HOG(a), HOG(b))) on 128x128 grayscale images.
It exists so that pairing, calibration and vulnerability scoring can run
end to end; its scores say nothing about real FRS behaviour.
"""

import logging
import threading
from pathlib import Path

import numpy as np

from config import settings
from mad.hog import hog_descriptor
from mad.preprocess import preprocess
from morphing.raster import RasterImage
from storage.images import load_image

log = logging.getLogger(__name__)


class HogComparator:
    label = settings.COMPARATOR_LABEL

    def __init__(self, size: int = settings.COMPARATOR_SIZE, cell: int = 8, block: int = 2, bins: int = 9):
        self.size = size
        self.cell = cell
        self.block = block
        self.bins = bins
        self._templates: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def template_from_image(self, image: RasterImage) -> np.ndarray:
        gray = preprocess(image, size=self.size)
        return hog_descriptor(gray.samples, self.cell, self.block, self.bins)

    def template(self, path: str | Path) -> np.ndarray:
        key = str(Path(path).resolve())
        with self._lock:
            cached = self._templates.get(key)
        if cached is not None:
            return cached
        template = self.template_from_image(load_image(path))
        with self._lock:
            self._templates.setdefault(key, template)
            return self._templates[key]

    @staticmethod
    def similarity(t1: np.ndarray, t2: np.ndarray) -> float:
        n1 = float(np.linalg.norm(t1))
        n2 = float(np.linalg.norm(t2))
        if n1 == 0.0 or n2 == 0.0:
            return 0.5
        cosine = float(np.dot(t1, t2)) / (n1 * n2)
        return 0.5 * (1.0 + min(1.0, max(-1.0, cosine)))

    def compare(self, path_a: str | Path, path_b: str | Path) -> float:
        return self.similarity(self.template(path_a), self.template(path_b))

