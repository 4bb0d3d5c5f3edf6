"""Gray-level co-occurrence, run-length and size-zone matrices and their
texture descriptors.

All matrices are built from a :class:`~sar_atr.ingest.QuantizedImage` whose
pixels are 0-based gray-level indices. Directional matrices use unit
displacements at 0, 45, 90 and 135 degrees (x to the right, y up)::

    135  90  45
       \\ | /
        -*- 0
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .featurevector import FeatureVector

ANGLES = (0, 45, 90, 135)

# (dy, dx) in array coordinates; row index grows downward
_OFFSETS = {0: (0, 1), 45: (-1, 1), 90: (-1, 0), 135: (-1, -1)}

GLCM_NAMES = tuple("glcm_" + s for s in (
    "asm", "contrast", "corr", "sosvar", "idm", "sumavg", "sumvar", "sument",
    "entropy", "diffvar", "diffent", "imc1", "imc2", "autocorr", "dissim",
    "shade", "prominence", "maxprob", "invdiff"))
GLRLM_NAMES = tuple("glrlm_" + s for s in ("sre", "lre", "gln", "rln", "rp", "lgre", "hgre"))
GLSZM_NAMES = tuple("glszm_" + s for s in ("sze", "lze", "gln", "zsn", "zp", "lgze", "hgze"))


@dataclass(frozen=True)
class Glcm:
    p: np.ndarray
    distance: int
    angle: int

    @property
    def levels(self):
        return self.p.shape[0]


@dataclass(frozen=True)
class Glrlm:
    counts: np.ndarray  # (levels, max_run); column j holds runs of length j + 1
    angle: int

    @property
    def levels(self):
        return self.counts.shape[0]

    @property
    def max_run(self):
        return self.counts.shape[1]


@dataclass(frozen=True)
class Glszm:
    counts: np.ndarray  # (levels, max_zone); column s holds zones of size s + 1

    @property
    def levels(self):
        return self.counts.shape[0]

    @property
    def max_zone(self):
        return self.counts.shape[1]


def _check_angle(angle):
    if angle not in _OFFSETS:
        raise ValueError(f"angle must be one of {ANGLES}, got {angle}")


def _xlog2x(p):
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log2(p[nz])
    return out


def _entropy(p):
    return float(-_xlog2x(p).sum()) + 0.0


def combine_angles(vectors):
    """Reduce per-angle feature vectors to one (element-wise mean)."""
    names = vectors[0].names
    return FeatureVector(names, np.mean([v.values for v in vectors], axis=0))


# --------------------------------------------------------------------------
# co-occurrence
# --------------------------------------------------------------------------

def glcm_matrix(q, distance=1, angle=0) -> Glcm:
    """Symmetric, unit-mass co-occurrence matrix at ``(distance, angle)``."""
    _check_angle(angle)
    if distance < 1:
        raise ValueError("distance must be >= 1")
    dy, dx = (distance * s for s in _OFFSETS[angle])
    px = q.pixels
    h, w = px.shape
    if abs(dy) >= h or abs(dx) >= w:
        raise ValueError(
            f"no pixel pair at distance {distance}, angle {angle} in a {w}x{h} image")
    ref = px[max(0, -dy):h - max(0, dy), max(0, -dx):w - max(0, dx)]
    nbr = px[max(0, dy):h - max(0, -dy), max(0, dx):w - max(0, -dx)]
    ng = q.levels
    counts = np.bincount((ref * ng + nbr).ravel(), minlength=ng * ng).reshape(ng, ng)
    counts = counts + counts.T
    return Glcm(counts / counts.sum(), distance, angle)


def glcm_features(m: Glcm) -> FeatureVector:
    p = m.p
    ng = p.shape[0]
    lv = np.arange(ng, dtype=np.float64)
    i, j = np.meshgrid(lv, lv, indexing="ij")

    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mux, muy = lv @ px, lv @ py
    sdx = np.sqrt(((lv - mux) ** 2) @ px)
    sdy = np.sqrt(((lv - muy) ** 2) @ py)

    k_sum = (i + j).astype(np.int64)
    k_diff = np.abs(i - j).astype(np.int64)
    p_sum = np.bincount(k_sum.ravel(), weights=p.ravel(), minlength=2 * ng - 1)
    p_diff = np.bincount(k_diff.ravel(), weights=p.ravel(), minlength=ng)
    ks = np.arange(2 * ng - 1, dtype=np.float64)
    kd = np.arange(ng, dtype=np.float64)

    asm = np.sum(p ** 2)
    contrast = np.sum((i - j) ** 2 * p)
    autocorr = np.sum(i * j * p)
    corr = (autocorr - mux * muy) / (sdx * sdy) if sdx * sdy > 0 else 0.0
    sosvar = np.sum((i - mux) ** 2 * p)
    idm = np.sum(p / (1.0 + (i - j) ** 2))
    sumavg = ks @ p_sum
    sumvar = ((ks - sumavg) ** 2) @ p_sum
    sument = _entropy(p_sum)
    hxy = _entropy(p)
    diffavg = kd @ p_diff
    diffvar = ((kd - diffavg) ** 2) @ p_diff
    diffent = _entropy(p_diff)

    hx, hy = _entropy(px), _entropy(py)
    pxpy = np.outer(px, py)
    with np.errstate(divide="ignore"):
        log_pxpy = np.where(pxpy > 0, np.log2(np.where(pxpy > 0, pxpy, 1.0)), 0.0)
    hxy1 = -np.sum(p * log_pxpy)
    hxy2 = -np.sum(pxpy * log_pxpy)
    hmax = max(hx, hy)
    imc1 = (hxy - hxy1) / hmax if hmax > 0 else 0.0
    imc2 = np.sqrt(1.0 - np.exp(-2.0 * max(hxy2 - hxy, 0.0)))

    centred = i + j - mux - muy
    shade = np.sum(centred ** 3 * p)
    prominence = np.sum(centred ** 4 * p)
    dissim = np.sum(np.abs(i - j) * p)
    invdiff = np.sum(p / (1.0 + np.abs(i - j)))

    values = [asm, contrast, corr, sosvar, idm, sumavg, sumvar, sument, hxy,
              diffvar, diffent, imc1, imc2, autocorr, dissim, shade, prominence,
              p.max(), invdiff]
    return FeatureVector(GLCM_NAMES, values)


def glcm_feature_vector(q, distance=1) -> FeatureVector:
    return combine_angles([glcm_features(glcm_matrix(q, distance, a)) for a in ANGLES])


# --------------------------------------------------------------------------
# run length
# --------------------------------------------------------------------------

def _line_order(h, w, angle):
    """Flat pixel indices ordered line by line along ``angle``, plus line ids."""
    y, x = np.mgrid[0:h, 0:w]
    y, x = y.ravel(), x.ravel()
    if angle == 0:
        line, pos = y, x
    elif angle == 90:
        line, pos = x, y
    elif angle == 45:
        line, pos = x + y, x
    else:
        line, pos = x - y, x
    order = np.lexsort((pos, line))
    return order, line[order]


def glrlm_matrix(q, angle=0) -> Glrlm:
    """Counts of maximal equal-level runs along every lattice line at ``angle``."""
    _check_angle(angle)
    px = q.pixels
    h, w = px.shape
    order, line = _line_order(h, w, angle)
    vals = px.ravel()[order]
    brk = np.flatnonzero((np.diff(vals) != 0) | (np.diff(line) != 0)) + 1
    starts = np.concatenate(([0], brk))
    lengths = np.diff(np.concatenate((starts, [vals.size])))
    counts = np.zeros((q.levels, max(h, w)), dtype=np.int64)
    np.add.at(counts, (vals[starts], lengths - 1), 1)
    return Glrlm(counts, angle)


def _zone_like_features(counts, n_pixels, names):
    """Shared emphasis/non-uniformity formulas for run and zone matrices.

    Gray-level weights use ``level + 1`` and sizes are 1-based.
    """
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("matrix holds no runs/zones")
    g = np.arange(1, counts.shape[0] + 1, dtype=np.float64)[:, None]
    s = np.arange(1, counts.shape[1] + 1, dtype=np.float64)[None, :]
    values = [
        np.sum(counts / s ** 2) / total,
        np.sum(counts * s ** 2) / total,
        np.sum(counts.sum(axis=1) ** 2) / total,
        np.sum(counts.sum(axis=0) ** 2) / total,
        total / n_pixels,
        np.sum(counts / g ** 2) / total,
        np.sum(counts * g ** 2) / total,
    ]
    return FeatureVector(names, values)


def glrlm_features(m: Glrlm, n_pixels) -> FeatureVector:
    """Short/long run emphasis, gray-level and run-length non-uniformity, run
    percentage, low/high gray-level run emphasis."""
    return _zone_like_features(m.counts, n_pixels, GLRLM_NAMES)


def glrlm_feature_vector(q) -> FeatureVector:
    n = q.pixels.size
    return combine_angles([glrlm_features(glrlm_matrix(q, a), n) for a in ANGLES])


# --------------------------------------------------------------------------
# size zone
# --------------------------------------------------------------------------

_EIGHT = np.ones((3, 3), dtype=bool)


def glszm_matrix(q) -> Glszm:
    """Counts of 8-connected equal-level zones by level and size."""
    px = q.pixels
    levels, sizes = [], []
    for g in np.unique(px):
        lab, nz = ndimage.label(px == g, structure=_EIGHT)
        zs = np.bincount(lab.ravel())[1:]
        levels.append(np.full(nz, g))
        sizes.append(zs)
    levels = np.concatenate(levels)
    sizes = np.concatenate(sizes)
    counts = np.zeros((q.levels, int(sizes.max())), dtype=np.int64)
    np.add.at(counts, (levels, sizes - 1), 1)
    return Glszm(counts)


def glszm_features(m: Glszm, n_pixels) -> FeatureVector:
    return _zone_like_features(m.counts, n_pixels, GLSZM_NAMES)


def glszm_feature_vector(q) -> FeatureVector:
    return glszm_features(glszm_matrix(q), q.pixels.size)


def dump_matrix_csv(matrix, path):
    """Write an integer or real matrix as CSV for inspection."""
    m = np.asarray(matrix)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in m:
            fh.write(",".join(f"{v:.17g}" if m.dtype.kind == "f" else str(v) for v in row) + "\n")
