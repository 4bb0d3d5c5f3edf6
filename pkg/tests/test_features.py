import numpy as np
import pytest
from sklearn.pipeline import make_pipeline

from sar_atr.features import (
    PIPELINES, FeatureExtractor, extract_image, feature_names, pipeline_for_names,
    pipeline_label,
)
from sar_atr.ingest import GrayImage, dump_pgm, scan_manifest
from sar_atr.svm import GaussianSVC
from sar_atr.synth import class_counts, synth_corpus, synth_image

WIDTHS = {"fos": 6, "fft-fos": 6, "dct-fos": 6, "dwt-fos": 24, "glcm": 19, "glrlm": 7,
          "glszm": 7}


@pytest.mark.parametrize("pipeline", PIPELINES)
def test_widths_and_names(pipeline):
    names = feature_names(pipeline)
    assert len(names) == WIDTHS[pipeline]
    assert pipeline_for_names(names) == pipeline
    img = synth_image(PIPELINES.index(pipeline), 0)
    v = extract_image(img, pipeline)
    assert v.names == names and np.all(np.isfinite(v.values))


def test_dwt_header():
    names = feature_names("dwt-fos")
    assert names[0] == "dwt_ll_mean" and names[-1] == "dwt_hh_energy"


def test_headers_disjoint():
    seen = set()
    for p in PIPELINES:
        assert not seen & set(feature_names(p))
        seen |= set(feature_names(p))


def test_labels():
    assert pipeline_label("glcm") == "GLCM+SVM" and pipeline_label("fft-fos") == "FFT+FOS+SVM"
    with pytest.raises(ValueError, match="unknown pipeline"):
        feature_names("hog")


def test_crop_applies_before_extraction():
    rng = np.random.default_rng(0)
    px = rng.integers(0, 256, (20, 20))
    big = extract_image(GrayImage(px), "fos", crop=10)
    inner = extract_image(GrayImage(px[5:15, 5:15]), "fos", crop=None)
    np.testing.assert_array_equal(big.values, inner.values)


def test_extractor_accepts_paths_and_images(tmp_path):
    imgs = [synth_image(c, 0) for c in range(3)]
    paths = []
    for i, img in enumerate(imgs):
        paths.append(tmp_path / f"{i}.pgm")
        paths[-1].write_bytes(dump_pgm(img))
    ext = FeatureExtractor("glrlm")
    np.testing.assert_array_equal(ext.fit_transform(imgs), ext.fit_transform(paths))
    assert list(ext.get_feature_names_out()) == list(feature_names("glrlm"))


def test_parallel_rows_in_input_order():
    imgs = [synth_image(c % 8, c) for c in range(16)]
    a = FeatureExtractor("glcm").fit_transform(imgs)
    b = FeatureExtractor("glcm", n_jobs=4).fit_transform(imgs)
    np.testing.assert_array_equal(a, b)


def test_sklearn_pipeline():
    imgs = [synth_image(c, i) for c in (0, 7) for i in range(6)]
    y = np.repeat(["stripes", "flat"], 6)
    model = make_pipeline(FeatureExtractor("glcm"), GaussianSVC()).fit(imgs, y)
    assert (model.predict(imgs) == y).all()


def test_bad_levels():
    with pytest.raises(ValueError):
        FeatureExtractor(levels=1).fit()


class TestSynth:
    def test_counts(self):
        assert class_counts() == [68, 68, 49, 68, 68, 68, 68, 68]
        assert sum(class_counts()) == 525
        assert sum(class_counts(1)) == 2112

    def test_image_determinism(self):
        a, b = synth_image(3, 5, seed=1), synth_image(3, 5, seed=1)
        assert np.array_equal(a.pixels, b.pixels)
        assert not np.array_equal(a.pixels, synth_image(3, 5, seed=2).pixels)
        assert a.pixels.shape == (64, 64)

    def test_tree_layout(self, small_tree):
        m = scan_manifest(small_tree)
        assert len(m.class_names) == 8
        assert m.counts().tolist() == class_counts(0.03)
        assert all(p.suffix == ".pgm" for p in m.paths)

    def test_same_seed_identical_tree(self, tmp_path):
        def snapshot(root):
            return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*.pgm"))}
        synth_corpus(tmp_path / "a", seed=9, scale=0.02)
        synth_corpus(tmp_path / "b", seed=9, scale=0.02)
        assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")
