"""The seven feature pipelines and a scikit-learn transformer over them."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin

from . import firstorder, graylevel
from .featurevector import FeatureVector
from .ingest import GrayImage, fit_geometry, load_image, quantize

DEFAULT_LEVELS = 32
DEFAULT_CROP = 128

# pipeline id -> (report label, extractor(img, levels), needs quantization)
_REGISTRY = {
    "fos": ("FOS+SVM", firstorder.fos_vector_image, False),
    "fft-fos": ("FFT+FOS+SVM", firstorder.fos_vector_fft, False),
    "dct-fos": ("DCT+FOS+SVM", firstorder.fos_vector_dct, False),
    "dwt-fos": ("DWT+FOS+SVM", firstorder.fos_vector_dwt, False),
    "glcm": ("GLCM+SVM", graylevel.glcm_feature_vector, True),
    "glrlm": ("GLRLM+SVM", graylevel.glrlm_feature_vector, True),
    "glszm": ("GLSZM+SVM", graylevel.glszm_feature_vector, True),
}
PIPELINES = tuple(_REGISTRY)

_NAMES = {
    "fos": tuple(firstorder.fos_names("fos")),
    "fft-fos": tuple(firstorder.fos_names("fft")),
    "dct-fos": tuple(firstorder.fos_names("dct")),
    "dwt-fos": tuple(n for b in ("ll", "lh", "hl", "hh") for n in firstorder.fos_names(f"dwt_{b}")),
    "glcm": graylevel.GLCM_NAMES,
    "glrlm": graylevel.GLRLM_NAMES,
    "glszm": graylevel.GLSZM_NAMES,
}


def _check(pipeline):
    if pipeline not in _REGISTRY:
        raise ValueError(f"unknown pipeline {pipeline!r}; choose from {', '.join(PIPELINES)}")


def pipeline_label(pipeline):
    _check(pipeline)
    return _REGISTRY[pipeline][0]


def feature_names(pipeline):
    _check(pipeline)
    return _NAMES[pipeline]


def pipeline_for_names(names):
    """Pipeline whose feature header equals ``names``, or None."""
    names = tuple(names)
    for pid, ref in _NAMES.items():
        if ref == names:
            return pid
    return None


def extract_image(img: GrayImage, pipeline="glcm", levels=DEFAULT_LEVELS,
                  crop=DEFAULT_CROP) -> FeatureVector:
    _check(pipeline)
    _, fn, quantized = _REGISTRY[pipeline]
    img = fit_geometry(img, crop)
    if quantized:
        return fn(quantize(img, levels))
    return fn(img)


def _extract_one(item, pipeline, levels, crop):
    img = item if isinstance(item, GrayImage) else load_image(item)
    return extract_image(img, pipeline, levels, crop).values


class FeatureExtractor(TransformerMixin, BaseEstimator):
    """Map images (``GrayImage`` objects or file paths) to feature rows.

    Parameters
    ----------
    pipeline : str, default="glcm"
        One of ``fos``, ``fft-fos``, ``dct-fos``, ``dwt-fos``, ``glcm``,
        ``glrlm``, ``glszm``.
    levels : int, default=32
        Gray levels for the texture-matrix pipelines.
    crop : int or None, default=128
        Center crop chips larger than ``crop`` x ``crop``.
    n_jobs : int, default=None
        joblib parallelism across images; row order is always input order.
    """

    def __init__(self, pipeline="glcm", levels=DEFAULT_LEVELS, crop=DEFAULT_CROP, n_jobs=None):
        self.pipeline = pipeline
        self.levels = levels
        self.crop = crop
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        _check(self.pipeline)
        if not 2 <= self.levels <= 256:
            raise ValueError("levels must be in [2, 256]")
        self.n_features_out_ = len(_NAMES[self.pipeline])
        return self

    def transform(self, X):
        _check(self.pipeline)
        items = [x if isinstance(x, GrayImage) else Path(x) for x in X]
        rows = Parallel(n_jobs=self.n_jobs)(
            delayed(_extract_one)(it, self.pipeline, self.levels, self.crop) for it in items)
        if not rows:
            return np.empty((0, len(_NAMES[self.pipeline])))
        return np.vstack(rows)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(feature_names(self.pipeline), dtype=object)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.two_d_array = False
        tags.requires_fit = False
        return tags
