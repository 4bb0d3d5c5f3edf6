"""2-D FFT, orthonormal DCT-II and one-level Haar decomposition of a chip.

Coefficient matrices are plain ``(height, width)`` numpy arrays; entry
``[v, u]`` holds frequency ``u`` along x and ``v`` along y.
"""

from typing import NamedTuple

import numpy as np
import scipy.fft

from .ingest import GrayImage


class WaveletDecomposition(NamedTuple):
    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray


def _as_array(img):
    if isinstance(img, GrayImage):
        return img.pixels.astype(np.float64)
    return np.asarray(img, dtype=np.float64)


def fft2(img) -> np.ndarray:
    """Unnormalized forward DFT; any size (numpy's pocketfft is mixed-radix)."""
    return np.fft.fft2(_as_array(img))


def fft_magnitude(spec: np.ndarray) -> np.ndarray:
    return np.abs(spec)


def dct2(img) -> np.ndarray:
    """Separable orthonormal DCT-II."""
    return scipy.fft.dctn(_as_array(img), type=2, norm="ortho")


def idct2(coeffs: np.ndarray) -> np.ndarray:
    return scipy.fft.idctn(np.asarray(coeffs, dtype=np.float64), type=2, norm="ortho")


def _pad_even(x):
    h, w = x.shape
    return np.pad(x, ((0, h % 2), (0, w % 2)), mode="edge")


def dwt_haar(img) -> WaveletDecomposition:
    """One-level orthonormal 2-D Haar transform.

    For each 2x2 block ``[[a, b], [c, d]]``::

        LL = (a + b + c + d) / 2     LH = (a + b - c - d) / 2
        HL = (a - b + c - d) / 2     HH = (a - b - c + d) / 2

    Odd dimensions are first padded by replicating the last column/row.
    """
    x = _pad_even(_as_array(img))
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    return WaveletDecomposition(
        ll=(a + b + c + d) / 2,
        lh=(a + b - c - d) / 2,
        hl=(a - b + c - d) / 2,
        hh=(a - b - c + d) / 2,
    )


def idwt_haar(dec: WaveletDecomposition) -> np.ndarray:
    """Inverse of :func:`dwt_haar` (returns the padded, even-sized image)."""
    ll, lh, hl, hh = dec
    h, w = ll.shape
    out = np.empty((2 * h, 2 * w))
    out[0::2, 0::2] = (ll + lh + hl + hh) / 2
    out[0::2, 1::2] = (ll + lh - hl - hh) / 2
    out[1::2, 0::2] = (ll - lh + hl - hh) / 2
    out[1::2, 1::2] = (ll - lh - hl + hh) / 2
    return out


def dump_matrix_csv(matrix: np.ndarray, path) -> None:
    """Debug dump: one matrix row per line, 17 significant digits."""
    m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in m:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
