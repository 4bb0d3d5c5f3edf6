"""Command-line entry point: ``sar-atr {synth,extract,cv,train,predict}``.

Exit codes: 0 ok, 1 usage error, 2 data error, 3 convergence warning under
``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import logging
import sys
import warnings
from pathlib import Path

import numpy as np
from sklearn.exceptions import ConvergenceWarning

from . import features as feat
from .evaluation import confusion, cross_validate, multiclass_metrics
from .ingest import ImageFormatError, load_image, scan_manifest
from .report import csv_report, text_report
from .svm import ModelFormatError, TrainConfig, load_model, save_model, train_multiclass
from .synth import synth_corpus

log = logging.getLogger("sar_atr")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# feature tables
# --------------------------------------------------------------------------

def _fmt(v):
    return f"{v:.17g}"


def extract_table(root, pipeline, levels, crop, n_jobs=None):
    """Features for every readable image under ``root``.

    Returns ``(rel_paths, class_names, X, skipped)``; unreadable files are
    skipped with a warning.
    """
    manifest = scan_manifest(root)
    root = Path(root)
    extractor = feat.FeatureExtractor(pipeline, levels, crop, n_jobs=n_jobs).fit()
    images, paths, classes, skipped = [], [], [], []
    for path, label in manifest.entries:
        try:
            images.append(load_image(path))
        except (ImageFormatError, OSError) as exc:
            log.warning("skipping %s: %s", path, exc)
            skipped.append(path)
            continue
        paths.append(path.relative_to(root).as_posix())
        classes.append(label.name)
    X = extractor.transform(images)
    return paths, classes, X, skipped


def write_table(path, pipeline, rel_paths, classes, X):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("path", "class") + feat.feature_names(pipeline))
        for p, c, row in zip(rel_paths, classes, X):
            w.writerow([p, c] + [_fmt(v) for v in row])


def read_table(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["path", "class"]:
        raise DataError(f"{path}: not a feature table (expected 'path,class,...' header)")
    names = rows[0][2:]
    pipeline = feat.pipeline_for_names(names)
    if pipeline is None:
        raise DataError(f"{path}: feature header matches no pipeline")
    try:
        X = np.array([[float(v) for v in r[2:]] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return [r[0] for r in rows[1:]], [r[1] for r in rows[1:]], X.reshape(-1, len(names)), pipeline


def _load_features(args):
    """Feature table from ``--in``: a CSV written by ``extract`` or an image tree."""
    src = Path(args.inp)
    if src.is_file():
        paths, classes, X, pipeline = read_table(src)
        if args.pipeline and args.pipeline != pipeline:
            raise DataError(
                f"--pipeline {args.pipeline} does not match {src} (holds {pipeline} features)")
        return paths, classes, X, pipeline, []
    pipeline = args.pipeline or "glcm"
    paths, classes, X, skipped = extract_table(src, pipeline, args.levels, args.crop, args.jobs)
    return paths, classes, X, pipeline, skipped


def _csv_list(kind):
    def parse(text):
        out = []
        for tok in text.split(","):
            tok = tok.strip()
            if kind == "gamma" and tok == "scale":
                out.append("scale")
                continue
            try:
                v = float(tok)
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad {kind} value {tok!r}") from None
            if not v > 0:
                raise argparse.ArgumentTypeError(f"{kind} must be positive")
            out.append(v)
        return out
    return parse


def _folds(text):
    k = int(text)
    if k < 2:
        raise argparse.ArgumentTypeError("folds must be >= 2")
    return k


def _levels(text):
    n = int(text)
    if not 2 <= n <= 256:
        raise argparse.ArgumentTypeError("levels must be in [2, 256]")
    return n


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_synth(args):
    n = synth_corpus(args.out, seed=args.seed, scale=args.scale)
    print(f"wrote {n} images to {args.out}")
    return EXIT_OK


def cmd_extract(args):
    pipeline = args.pipeline or "glcm"
    paths, classes, X, skipped = extract_table(args.inp, pipeline, args.levels, args.crop,
                                               args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dest = out / f"features-{pipeline}.csv"
    write_table(dest, pipeline, paths, classes, X)
    print(f"wrote {len(paths)} rows to {dest}")
    if skipped:
        print(f"skipped {len(skipped)} unreadable file(s)", file=sys.stderr)
    return EXIT_OK if paths else EXIT_DATA


def _label_indices(classes):
    names = sorted(set(classes))
    index = {n: i for i, n in enumerate(names)}
    return names, np.array([index[c] for c in classes], dtype=np.int64)


def cmd_cv(args):
    _, classes, X, pipeline, skipped = _load_features(args)
    _, y = _label_indices(classes)
    grid = list(itertools.product(args.c, args.gamma))
    runs = []
    converged = True
    for C, gamma in grid:
        cfg = TrainConfig(C=C, gamma=gamma, kkt_tol=args.tol)
        summary = cross_validate(X, y, args.folds, args.seed, cfg, n_jobs=args.jobs)
        label = pipeline if len(grid) == 1 else f"{pipeline} C={C:g} gamma={gamma}"
        runs.append((label, summary))
        converged &= summary.converged
    config = {
        "pipeline": pipeline, "levels": args.levels, "crop": args.crop,
        "folds": args.folds, "seed": args.seed,
        "C": ",".join(f"{c:g}" for c in args.c),
        "gamma": ",".join(str(g) for g in args.gamma), "tol": f"{args.tol:g}",
        "stratified": "yes",
    }
    text = text_report([(feat.pipeline_label(pipeline) if len(grid) == 1 else lbl, s)
                        for lbl, s in runs], config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"cv-{pipeline}.csv").write_text(csv_report(runs, config), encoding="utf-8")
    (out / f"cv-{pipeline}.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    if skipped:
        print(f"skipped {len(skipped)} unreadable file(s)", file=sys.stderr)
    if not converged:
        print("warning: SMO did not converge within max_passes", file=sys.stderr)
        if args.strict:
            return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_train(args):
    if len(args.c) != 1 or len(args.gamma) != 1:
        raise UsageError("train takes a single --c and --gamma value")
    _, classes, X, pipeline, skipped = _load_features(args)
    cfg = TrainConfig(C=args.c[0], gamma=args.gamma[0], kkt_tol=args.tol)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        model = train_multiclass(X, np.array(classes), cfg,
                                 feature_names=feat.feature_names(pipeline), n_jobs=args.jobs)
    meta = {"pipeline": pipeline, "levels": args.levels, "crop": args.crop}
    Path(args.model).parent.mkdir(parents=True, exist_ok=True)
    Path(args.model).write_bytes(save_model(model, meta))
    print(f"trained {len(model.pairs_)} pair model(s) on {len(classes)} samples -> {args.model}")
    if skipped:
        print(f"skipped {len(skipped)} unreadable file(s)", file=sys.stderr)
    if any(issubclass(w.category, ConvergenceWarning) for w in caught):
        print("warning: SMO did not converge within max_passes", file=sys.stderr)
        if args.strict:
            return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_predict(args):
    model, meta = load_model(Path(args.model).read_bytes())
    model_pipeline = meta.get("pipeline") or feat.pipeline_for_names(model.feature_names_)
    if args.pipeline and args.pipeline != model_pipeline:
        raise DataError(
            f"model was trained on {model_pipeline} features, not {args.pipeline} features")
    levels = int(meta.get("levels", feat.DEFAULT_LEVELS))
    crop = meta.get("crop", str(feat.DEFAULT_CROP))
    crop = None if crop == "None" else int(crop)
    src = Path(args.inp)

    actual = None
    if src.is_dir():
        paths, actual, X, _ = extract_table(src, model_pipeline, levels, crop, args.jobs)
    elif src.suffix.lower() == ".csv":
        paths, actual, X, table_pipeline = read_table(src)
        if table_pipeline != model_pipeline:
            raise DataError(
                f"model was trained on {model_pipeline} features, "
                f"but {src} holds {table_pipeline} features")
    else:
        paths = [str(src)]
        X = feat.FeatureExtractor(model_pipeline, levels, crop).fit().transform([src])
    if list(model.feature_names_) != list(feat.feature_names(model_pipeline)):
        raise DataError(f"model feature names do not match the {model_pipeline} pipeline")

    pred = model.predict(X)
    for p, label in zip(paths, pred):
        print(f"{p},{label}")
    if actual is not None:
        known = {str(c): i for i, c in enumerate(model.classes_)}
        unknown = sorted(set(actual) - set(known))
        if unknown:
            print(f"note: classes absent from the model: {', '.join(unknown)}", file=sys.stderr)
        else:
            k = len(model.classes_)
            cm = confusion([known[a] for a in actual], [known[str(p)] for p in pred], k)
            print("\nconfusion (rows actual, columns predicted): " + " ".join(map(str, model.classes_)))
            for name, row in zip(model.classes_, cm):
                print(f"{name:>12} " + " ".join(f"{v:5d}" for v in row))
            m = multiclass_metrics(cm)
            print(" ".join(f"{n}={100 * v:.2f}" for n, v in
                           zip(("SEN", "SPE", "ACC", "PRE", "F1", "MCC"), m.as_array())))
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="sar-atr", description="Texture-feature SVM pipelines for SAR chips.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, *, out=True):
        sp.add_argument("--in", dest="inp", required=True,
                        help="class-per-directory image tree or feature CSV")
        if out:
            sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--pipeline", choices=feat.PIPELINES)
        sp.add_argument("--levels", type=_levels, default=feat.DEFAULT_LEVELS)
        sp.add_argument("--crop", type=int, default=feat.DEFAULT_CROP)
        sp.add_argument("--jobs", type=int, default=None, help="joblib worker count")

    def svm_opts(sp):
        sp.add_argument("--c", type=_csv_list("C"), default=[1.0],
                        help="box constraint; comma list sweeps")
        sp.add_argument("--gamma", type=_csv_list("gamma"), default=["scale"],
                        help="RBF width or 'scale'; comma list sweeps")
        sp.add_argument("--tol", type=float, default=1e-3, help="KKT tolerance")
        sp.add_argument("--strict", action="store_true",
                        help="exit 3 when SMO hits its iteration budget")

    sp = sub.add_parser("synth", help="write the synthetic 8-class corpus")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scale", type=float, default=0.25)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("extract", help="write a feature CSV")
    common(sp)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("cv", help="stratified k-fold cross-validation report")
    common(sp)
    svm_opts(sp)
    sp.add_argument("--folds", type=_folds, default=4)
    sp.add_argument("--seed", type=int, default=42)
    sp.set_defaults(func=cmd_cv)

    sp = sub.add_parser("train", help="train on every sample and save the model")
    common(sp, out=False)
    svm_opts(sp)
    sp.add_argument("--model", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="label an image, a tree, or a feature CSV")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--pipeline", choices=feat.PIPELINES)
    sp.add_argument("--jobs", type=int, default=None)
    sp.set_defaults(func=cmd_predict)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sar-atr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ImageFormatError, ModelFormatError, ValueError, OSError) as exc:
        print(f"sar-atr: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
