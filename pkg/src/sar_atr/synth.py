"""Procedural 8-class texture corpus shaped like the MSTAR 15-degree set.

Class names and relative sizes follow the MSTAR target list; the images
themselves are synthetic textures so the pipelines can run end to end
without the (non-redistributable) radar data.
"""

from pathlib import Path

import numpy as np

from .ingest import GrayImage, dump_pgm

MSTAR_CLASSES = (
    ("2S1", 274),
    ("BRDM-2", 274),
    ("BTR-60", 195),
    ("D7", 274),
    ("SLICY", 274),
    ("T62", 273),
    ("ZIL131", 274),
    ("ZSU-23-4", 274),
)

SIZE = 64


def class_counts(scale=0.25):
    """Per-class image counts, ``round(count * scale)`` with ties to even."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    return [max(1, round(n * scale)) for _, n in MSTAR_CLASSES]


def _two_level(rng, mask):
    lo = rng.uniform(30, 90)
    hi = rng.uniform(160, 225)
    return np.where(mask, hi, lo)


def _stripes(rng, period, diagonal):
    y, x = np.mgrid[0:SIZE, 0:SIZE]
    coord = (x + y) if diagonal else y
    phase = rng.integers(period)
    return _two_level(rng, ((coord + phase) // (period // 2)) % 2 == 1)


def _checker(rng, cell):
    y, x = np.mgrid[0:SIZE, 0:SIZE]
    dy, dx = rng.integers(cell, size=2)
    return _two_level(rng, (((y + dy) // cell) + ((x + dx) // cell)) % 2 == 1)


def _texture(class_index, rng):
    if class_index == 0:
        base = _stripes(rng, 4, diagonal=False)
    elif class_index == 1:
        base = _stripes(rng, 8, diagonal=False)
    elif class_index == 2:
        base = _stripes(rng, 4, diagonal=True)
    elif class_index == 3:
        base = _stripes(rng, 8, diagonal=True)
    elif class_index == 4:
        base = _checker(rng, 2)
    elif class_index == 5:
        base = _checker(rng, 4)
    elif class_index == 6:
        lo = rng.uniform(0, 40)
        base = rng.uniform(lo, lo + rng.uniform(180, 215), size=(SIZE, SIZE))
    else:
        base = np.full((SIZE, SIZE), rng.uniform(90, 160))
    noise = rng.normal(0.0, rng.uniform(10, 24), size=(SIZE, SIZE))
    return GrayImage(np.clip(np.rint(base + noise), 0, 255).astype(np.uint8))


def synth_image(class_index, index, seed=0) -> GrayImage:
    """Image ``index`` of class ``class_index``; independent of generation order."""
    return _texture(class_index, np.random.default_rng([seed, class_index, index]))


def synth_corpus(out_dir, seed=0, scale=0.25):
    """Write ``<out_dir>/<class>/<class>_<nnnn>.pgm``; returns the file count."""
    out = Path(out_dir)
    total = 0
    for c, ((name, _), count) in enumerate(zip(MSTAR_CLASSES, class_counts(scale))):
        d = out / name
        d.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            (d / f"{name}_{i:04d}.pgm").write_bytes(dump_pgm(synth_image(c, i, seed)))
            total += 1
    return total
