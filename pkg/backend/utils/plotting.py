"""
SVG figures of sweep results, byte-deterministic for identical inputs
"""

import logging
from pathlib import Path
from typing import Mapping, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from models.reports import SweepRow  # noqa: E402

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "bell-sweep"


def plot_sweeps(
    series: Mapping[str, Sequence[SweepRow]],
    path: Union[str, Path],
    title: str = "",
    x_label: str = "xi (rad)",
    y_label: str = "violation ratio Q/B"
) -> Path:
    """
    Plot ratio against xi for one or more sweeps

    Args:
        series: curve label -> sweep rows
        path: output .svg file
    """
    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for label, rows in series.items():
            ax.plot([r.xi for r in rows], [r.ratio for r in rows], marker=".", label=label)
        ax.axhline(1.0, color="grey", linestyle="--", linewidth=0.8, label="local bound")
        ax.set_xlabel(x_label)
        ax.set_ylabel(y_label)
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        ax.grid(True, linewidth=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.info(f"Wrote plot {path}")
    return path
