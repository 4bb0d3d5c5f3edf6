"""Texture and transform-domain feature pipelines with a Gaussian SVM for
automatic target recognition on grayscale radar chips."""

from .evaluation import (CvSummary, MetricSet, StratifiedRoundRobinKFold, cross_validate,
                         multiclass_metrics, stratified_kfold, summarize)
from .features import PIPELINES, FeatureExtractor, extract_image, feature_names
from .featurevector import FeatureVector
from .ingest import GrayImage, QuantizedImage, load_image, quantize, scan_manifest
from .svm import GaussianSVC, Standardizer, TrainConfig, load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "CvSummary", "FeatureExtractor", "FeatureVector", "GaussianSVC", "GrayImage",
    "MetricSet", "PIPELINES", "QuantizedImage", "Standardizer", "StratifiedRoundRobinKFold",
    "TrainConfig", "cross_validate", "extract_image", "feature_names", "load_image",
    "load_model", "multiclass_metrics", "quantize", "save_model", "scan_manifest",
    "stratified_kfold", "summarize",
]
