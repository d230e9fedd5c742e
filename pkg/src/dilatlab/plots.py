"""Figure rendering for sweep reports.

CSV remains the data interchange; figures are rendered next to it so a
report directory is browsable without replotting. The backend is forced to
Agg since rendering always targets files.
"""

from __future__ import annotations

import numpy as np

_FLOOR = 1e-17  # display floor for exactly-zero defects on log axes


def render_sweep_figure(report, out_path) -> str:
    """Render a log-log defect curve with its fitted slope to a PNG file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    grid = np.asarray(report.grid)
    defects = np.maximum(np.asarray(report.defects), _FLOOR)

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(grid, defects, "ko-", ms=5.0, label="sup defect")
    if report.order is not None:
        anchor = max(float(np.max(defects)), _FLOOR)
        ref = anchor * (grid / grid[0]) ** report.order
        ax.loglog(grid, ref, "k--", lw=1.0,
                  label=f"slope {report.order:.2f}")
    ax.set_xlabel(r"scale $\varepsilon$")
    ax.set_ylabel("sup defect")
    ax.set_title(f"{report.suite} on {report.structure}"
                 f" (verdict: {'pass' if report.verdict else 'fail'})")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return str(out_path)
