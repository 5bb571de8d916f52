"""Evaluation report rendering: key=value text plus a confusion-matrix figure.

The text format is one key=value per line followed by a confusion-matrix
block (class list, then one comma-separated row per true class). The
figure is a count-annotated heatmap written next to the text file.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import EvalReport  # noqa: E402

REPORT_FILE = "eval_report.txt"
FIGURE_FILE = "confusion_matrix.png"


def format_eval_report(report: EvalReport, cm: np.ndarray, class_names: list) -> str:
    lines = [
        f"examples={report.total}",
        f"accuracy={report.accuracy:.6f}",
        f"weighted_precision={report.weighted_precision:.6f}",
        f"weighted_recall={report.weighted_recall:.6f}",
        f"weighted_f1={report.weighted_f1:.6f}",
    ]
    for name, pc in zip(class_names, report.per_class):
        lines.append(f"class.{name}.precision={pc.precision:.6f}")
        lines.append(f"class.{name}.recall={pc.recall:.6f}")
        lines.append(f"class.{name}.f1={pc.f1:.6f}")
        lines.append(f"class.{name}.support={pc.support}")
    lines.append("confusion_matrix:")
    lines.append(f"classes={','.join(class_names)}")
    for name, row in zip(class_names, np.asarray(cm)):
        lines.append(f"row.{name}={','.join(str(int(v)) for v in row)}")
    return "\n".join(lines) + "\n"


def render_confusion_matrix(cm: np.ndarray, class_names: list, path: str):
    """Count-annotated heatmap saved as a PNG."""
    cm = np.asarray(cm)
    n = cm.shape[0]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * n + 2.0),) * 2)
    im = ax.imshow(cm, cmap="Blues")
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    ax.set_xticks(range(n), labels=class_names, rotation=45, ha="right")
    ax.set_yticks(range(n), labels=class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    thresh = cm.max() / 2.0 if cm.max() > 0 else 0.5
    for i in range(n):
        for j in range(n):
            ax.text(j, i, str(int(cm[i, j])), ha="center", va="center",
                    color="white" if cm[i, j] > thresh else "black", fontsize=8)
    ax.set_title("Confusion matrix")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_eval_outputs(report: EvalReport, cm: np.ndarray, class_names: list,
                       out_dir: str):
    """Write the text report and the figure; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    text_path = os.path.join(out_dir, REPORT_FILE)
    fig_path = os.path.join(out_dir, FIGURE_FILE)
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(format_eval_report(report, cm, class_names))
    render_confusion_matrix(cm, class_names, fig_path)
    return text_path, fig_path
