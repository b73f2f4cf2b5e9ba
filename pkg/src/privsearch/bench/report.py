"""CSV tables and SVG curve plots for sweep results."""
from __future__ import annotations

import csv
import io
import os
import tempfile
from collections import OrderedDict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..evaluation import wilcoxon_signed_rank
from ..graph_store import atomic_write_text
from .sweep import ResultRow

RESULT_COLUMNS = ("experiment", "lambda", "pb", "pc", "run", "metric", "value")
SUMMARY_COLUMNS = ("experiment", "lambda", "pb", "pc", "metric", "mean", "stddev", "n_runs", "p_value_vs_baseline")

# metric whose per-task rows serve as the paired reference for each experiment
BASELINE_METRIC = {"global_search": "baseline_map", "local_search": "baseline_map", "user_privacy": "full_social_map"}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_float(s: str) -> float | None:
    return None if s == "" else float(s)


def results_to_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        w.writerow([r.experiment, _fmt(r.lam), _fmt(r.pb), _fmt(r.pc), _fmt(r.run), r.metric, _fmt(r.value)])
    return buf.getvalue()


def read_results_csv(path: str | os.PathLike) -> list[ResultRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(RESULT_COLUMNS)}")
        return [ResultRow(r["experiment"], _parse_float(r["lambda"]), _parse_float(r["pb"]), _parse_float(r["pc"]),
                          None if r["run"] == "" else int(r["run"]), r["metric"], float(r["value"]))
                for r in reader]


def summarize(rows: Sequence[ResultRow]) -> list[dict]:
    """Mean/stddev over runs per (experiment, lambda, pb, pc, metric).

    Per-task metrics (``name:task``) are folded into the paired signed-rank
    p-value of their parent metric against the experiment's baseline and are not
    summarised on their own. Group order follows first appearance in ``rows``.
    """
    groups: OrderedDict[tuple, list[float]] = OrderedDict()
    per_task: dict[tuple, OrderedDict[str, list[float]]] = {}
    for r in rows:
        if ":" in r.metric:
            parent, task = r.metric.split(":", 1)
            key = (r.experiment, r.lam, r.pb, r.pc, parent)
            per_task.setdefault(key, OrderedDict()).setdefault(task, []).append(r.value)
            continue
        groups.setdefault((r.experiment, r.lam, r.pb, r.pc, r.metric), []).append(r.value)

    out = []
    for key, vals in groups.items():
        exp, lam, pb, pc, metric = key
        arr = np.array(vals)
        constant = bool(np.all(arr == arr[0]))
        mean = float(arr[0]) if constant else float(arr.mean())  # constant runs reproduce the value bit-for-bit
        std = float(arr.std(ddof=1)) if arr.shape[0] > 1 and not constant else 0.0
        p = None
        base_metric = BASELINE_METRIC.get(exp)
        if metric == "map" and base_metric is not None and key in per_task:
            base = per_task.get((exp, None, None, None, base_metric))
            if base is not None:
                cell = per_task[key]
                pairs = [(float(np.mean(cell[t])), float(np.mean(base[t]))) for t in cell if t in base]
                try:
                    p = wilcoxon_signed_rank(pairs).p_value
                except ValueError:
                    p = None  # fewer than 5 non-zero paired differences
        out.append({"experiment": exp, "lambda": lam, "pb": pb, "pc": pc, "metric": metric,
                    "mean": mean, "stddev": std, "n_runs": arr.shape[0], "p_value_vs_baseline": p})
    return out


def summary_to_csv(summary: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for s in summary:
        w.writerow([_fmt(s[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


_TITLES = {
    "global_mae": "Authority error under candidate privacy (MAE, lower is better)",
    "global_search": "Search with the global feature (MAP, higher is better)",
    "local_search": "Search with the local feature (MAP, higher is better)",
    "user_privacy": "Completeness of the user's connections (MAP, higher is better)",
}


def _plot_svg(exp: str, summary: Sequence[dict]) -> bytes:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = [s for s in summary if s["experiment"] == exp]
    with matplotlib.rc_context({"svg.hashsalt": "privsearch", "svg.fonttype": "none", "path.simplify": False}):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        if exp == "user_privacy":
            pts = sorted((s["pc"], s["mean"]) for s in rows if s["metric"] == "map")
            xs = [p for p, _ in pts] or [0.0, 1.0]
            ax.plot(xs, [m for _, m in pts], "r:o", label="Partial Social Info.")
            for metric, style, label in (("full_social_map", "b-", "Full Social Info."),
                                         ("no_social_map", "k--", "No Social Info.")):
                for s in rows:
                    if s["metric"] == metric:
                        ax.plot([min(xs), max(xs)], [s["mean"]] * 2, style, label=label)
            ax.set_xlabel("p_c (completeness of user-provided connections)")
            ax.set_ylabel("MAP")
        else:
            metric = "mae" if exp == "global_mae" else "map"
            lams = sorted({s["lambda"] for s in rows if s["metric"] == metric})
            all_x = sorted({s["pb"] for s in rows if s["metric"] == metric}) or [0.0, 1.0]
            for lam in lams:
                pts = sorted((s["pb"], s["mean"]) for s in rows if s["metric"] == metric and s["lambda"] == lam)
                ax.plot([p for p, _ in pts], [m for _, m in pts], marker="o", label=f"lambda = {lam:+.1f}")
            for s in rows:
                if s["metric"] == "baseline_map":
                    ax.plot([min(all_x), max(all_x)], [s["mean"]] * 2, "r-", linewidth=2, label="Full Networks")
            ax.set_xlabel("p_b (proportion of privacy-concerned candidates)")
            ax.set_ylabel("MAE" if metric == "mae" else "MAP")
        ax.set_title(_TITLES[exp], fontsize=10)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    return buf.getvalue()


def _check_writable(out_dir: Path) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        fd, probe = tempfile.mkstemp(dir=out_dir, prefix=".probe")
        os.close(fd)
        os.remove(probe)
    except OSError as exc:
        raise OSError(f"output directory {out_dir} is not writable: {exc}") from None


def emit_report(results: Sequence[ResultRow], out_dir: str | os.PathLike) -> dict[str, Path]:
    """Write results.csv, summary.csv and fig_<experiment>.svg into ``out_dir``.

    Output bytes depend only on ``results``. Every file goes through a temp file
    and a rename.
    """
    if not results:
        raise ValueError("no results to report")
    out = Path(out_dir)
    _check_writable(out)
    summary = summarize(results)
    written = {"results": out / "results.csv", "summary": out / "summary.csv"}
    atomic_write_text(written["results"], results_to_csv(results))
    atomic_write_text(written["summary"], summary_to_csv(summary))
    for exp in OrderedDict.fromkeys(r.experiment for r in results):
        path = out / f"fig_{exp}.svg"
        tmp = path.with_name(f".{path.name}.tmp")
        tmp.write_bytes(_plot_svg(exp, summary))
        os.replace(tmp, path)
        written[f"fig_{exp}"] = path
    return written
