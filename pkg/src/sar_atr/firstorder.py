"""First-order statistics of a value collection and the four transform-domain
feature vectors built from them."""

from dataclasses import astuple, dataclass

import numpy as np

from .featurevector import FeatureVector
from .transforms import dct2, dwt_haar, fft2, fft_magnitude

HIST_BINS = 256
FOS_SUFFIXES = ("mean", "var", "kurt", "skew", "ent", "energy")


@dataclass(frozen=True)
class FosFeatures:
    mean: float
    variance: float
    kurtosis: float
    skewness: float
    entropy: float
    energy: float

    def as_list(self):
        return list(astuple(self))


def histogram_probabilities(values, bins=HIST_BINS):
    """Equal-width histogram over ``[min, max]`` normalized to unit mass.

    A constant input occupies a single bin.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    lo, hi = v.min(), v.max()
    if lo == hi:
        return np.array([1.0])
    counts, _ = np.histogram(v, bins=bins, range=(lo, hi))
    return counts / v.size


def fos(values) -> FosFeatures:
    """Mean, population variance, non-excess kurtosis, skewness, histogram
    entropy (bits) and histogram energy.

    Skewness and kurtosis are 0 when the variance is 0.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("fos needs at least one value")
    if not np.all(np.isfinite(v)):
        raise ValueError("fos input contains non-finite values")
    mean = v.mean()
    dev = v - mean
    m2 = np.mean(dev ** 2)
    if m2 > 0:
        # standardize first so tiny spreads cannot underflow m2 ** 2
        z = dev / np.sqrt(m2)
        skew = np.mean(z ** 3)
        kurt = np.mean(z ** 4)
    else:
        skew = kurt = 0.0
    p = histogram_probabilities(v)
    nz = p[p > 0]
    entropy = float(-np.sum(nz * np.log2(nz))) + 0.0
    energy = float(np.sum(p ** 2))
    return FosFeatures(float(mean), float(m2), float(kurt), float(skew), entropy, energy)


def fos_names(prefix):
    return [f"{prefix}_{s}" for s in FOS_SUFFIXES]


def fos_vector_image(img) -> FeatureVector:
    return FeatureVector(fos_names("fos"), fos(img.pixels).as_list())


def fos_vector_fft(img) -> FeatureVector:
    # no fftshift: the statistics are permutation invariant
    return FeatureVector(fos_names("fft"), fos(fft_magnitude(fft2(img))).as_list())


def fos_vector_dct(img) -> FeatureVector:
    return FeatureVector(fos_names("dct"), fos(dct2(img)).as_list())


def fos_vector_dwt(img) -> FeatureVector:
    dec = dwt_haar(img)
    names, values = [], []
    for band, coeffs in zip(("ll", "lh", "hl", "hh"), dec):
        names += fos_names(f"dwt_{band}")
        values += fos(coeffs).as_list()
    return FeatureVector(names, values)
