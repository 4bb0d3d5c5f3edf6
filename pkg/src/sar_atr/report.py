"""Cross-validation reports: a fixed-width text table and a full-precision CSV."""

import csv
import io

import numpy as np

from .evaluation import METRIC_NAMES

_TEXT_HEADS = ("SEN", "SPE", "ACC", "PRE", "F1-Score", "MCC")


def config_comment(config):
    return "# " + " ".join(f"{k}={v}" for k, v in config.items())


def summary_row(label, summary):
    cells = [f"{100 * m:.2f}±{100 * s:.2f}"
             for m, s in zip(summary.mean.as_array(), summary.std.as_array())]
    return f"{label:<14}" + "".join(f"{c:>15}" for c in cells)


def fold_table(summary):
    k = len(summary.per_fold)
    lines = [f"{'Metric (%)':<14}" + "".join(f"{'Fold ' + str(f + 1):>10}" for f in range(k))]
    arr = np.array([m.as_array() for m in summary.per_fold])
    for col, name in enumerate(_TEXT_HEADS):
        lines.append(f"{name:<14}" + "".join(f"{100 * v:>10.2f}" for v in arr[:, col]))
    return lines


def text_report(runs, config):
    """``runs`` is a list of ``(label, CvSummary)``."""
    out = [config_comment(config), ""]
    out.append(f"{'Methods':<14}" + "".join(f"{h:>15}" for h in _TEXT_HEADS))
    out += [summary_row(label, s) for label, s in runs]
    for label, s in runs:
        out += ["", f"{label} per fold"]
        out += fold_table(s)
        if not s.converged:
            out.append("warning: SMO hit max_passes in at least one fold")
    return "\n".join(out) + "\n"


def csv_report(runs, config):
    buf = io.StringIO()
    buf.write(config_comment(config) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("framework", "fold") + METRIC_NAMES)
    for label, s in runs:
        rows = [(str(f + 1), m) for f, m in enumerate(s.per_fold)]
        rows += [("mean", s.mean), ("std", s.std)]
        for fold, m in rows:
            w.writerow([label, fold] + [f"{v:.17g}" for v in m.as_array()])
    return buf.getvalue()
