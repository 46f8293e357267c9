"""Figures for the report commands; written straight to files, no GUI backend."""

from __future__ import annotations

from typing import Optional, Sequence

from matplotlib.figure import Figure

from .cbr import LearningCurve

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
}


def _figure(width: float = 5.0, ratio: float = 0.62) -> Figure:
    import matplotlib

    matplotlib.rcParams.update(STYLE)
    return Figure(figsize=(width, width * ratio))


def _pct(series: Sequence[Optional[float]]) -> list[float]:
    return [float("nan") if v is None else 100.0 * v for v in series]


def plot_learning_curve(curve: LearningCurve, path, median: Optional[Sequence[float]] = None, title: str = ""):
    """Accuracy in percent against case-base size; one line per series."""
    fig = _figure()
    ax = fig.add_subplot(1, 1, 1)
    x = curve.checkpoints
    ax.plot(x, _pct(curve.overall), "o-", color="k", label="overall")
    ax.plot(x, _pct(curve.correct), "s--", color="tab:green", label="correct candidates")
    ax.plot(x, _pct(curve.incorrect), "^--", color="tab:red", label="incorrect candidates")
    if median is not None:
        ax.plot(x, _pct(median), ":", color="tab:gray", label="overall, median over seeds")
    ax.set_xlabel("cases in case base")
    ax.set_ylabel("classification accuracy [%]")
    ax.set_ylim(0, 105)
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return path


def plot_rank_histogram(report_data: dict, path):
    """Distribution of first-correct ranks from an evaluation report."""
    ranks = [r["first_correct_rank"] for r in report_data["per_query"]]
    top = report_data["config"]["top_k"]
    labels = [str(i) for i in range(1, top + 1)] + [f">{top}", "none"]
    counts = [0] * len(labels)
    for r in ranks:
        if r is None:
            counts[-1] += 1
        elif r > top:
            counts[-2] += 1
        else:
            counts[r - 1] += 1
    fig = _figure()
    ax = fig.add_subplot(1, 1, 1)
    ax.bar(labels, counts, color="tab:blue")
    ax.set_xlabel("rank of first correct answer")
    ax.set_ylabel("questions")
    ax.set_title(f"MRR {report_data['mrr']:.3f}, top-1 {100 * report_data['top1_accuracy']:.1f}%")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return path
