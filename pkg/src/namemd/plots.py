"""SVG figures: stacked mode panels per channel and forecast overlays.

Output is byte-deterministic: the SVG hash salt is pinned and the date
metadata is dropped.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from namemd.evaluation import ForecastReport  # noqa: E402
from namemd.multivariate import ImfDecomposition  # noqa: E402

_SVG_METADATA = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "namemd", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    return path


def plot_modes(decomposition: ImfDecomposition, channel: str, path) -> Path:
    """Original series, IMFs (highest frequency first), then residue; one panel each."""
    imf_set = decomposition.channel(channel)
    original = imf_set.reconstruct()
    rows = [("original", original)]
    rows += [(f"IMF {j + 1}", imf_set.imfs[j]) for j in range(imf_set.n_imfs)]
    rows.append(("residue", imf_set.residue))
    t = decomposition.dates.to_timestamp()
    fig, axes = plt.subplots(len(rows), 1, sharex=True, figsize=(8, 1.4 * len(rows)), squeeze=False)
    for ax, (label, values) in zip(axes[:, 0], rows):
        ax.plot(t, values, lw=0.9, color="black" if label == "original" else "tab:blue")
        ax.set_ylabel(label, fontsize=8)
        ax.tick_params(labelsize=7)
    axes[0, 0].set_title(channel, fontsize=9)
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_forecast(report: ForecastReport, path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 3))
    x = np.arange(len(report.actuals))
    ax.plot(x, report.actuals, color="black", lw=1.0, label="actual")
    ax.plot(x, report.forecasts, color="tab:red", lw=1.0, ls="--", label="forecast")
    if report.dates:
        step = max(1, len(x) // 8)
        ax.set_xticks(x[::step])
        ax.set_xticklabels(report.dates[::step], fontsize=7)
    ax.set_title(f"{report.model} {report.variant} h={report.horizon}  MAPE={report.mape:.4f}", fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, Path(path))


def emit_plots(decomposition: ImfDecomposition | None, reports, out_dir) -> list[Path]:
    """Write ``modes_<channel>.svg`` per channel and ``forecast_<model>_<variant>_h<k>.svg`` per report."""
    out_dir = Path(out_dir)
    paths = []
    if decomposition is not None:
        for name in decomposition.channel_names:
            paths.append(plot_modes(decomposition, name, out_dir / f"modes_{name}.svg"))
    for r in reports:
        paths.append(plot_forecast(r, out_dir / f"forecast_{r.model}_{r.variant}_h{r.horizon}.svg"))
    return paths
