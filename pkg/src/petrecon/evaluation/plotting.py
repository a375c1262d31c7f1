"""
CR-vs-STD plots written as SVG.
"""

from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

from petrecon.errors import FormatError
from petrecon.evaluation.sweep import CURVE_COLUMNS

# Fixed id salt so repeated runs write identical files
SVG_HASH_SALT = "petrecon"

MARKERS = {"mlem": "o", "mapem": "s", "gauss": "^", "cnn-denoise": "D", "cnn-admm": "*"}


def plot_curves(
    curves: pd.DataFrame, path: Union[str, Path], title: str = "Contrast recovery vs. background STD"
) -> Path:
    """
    Plot one line per method from a ``method,sweep_value,std,cr`` table.

    Args:
        curves: Curve table
        path: Output SVG path
        title: Plot title

    Returns:
        Path: The written file
    """
    missing = [c for c in CURVE_COLUMNS if c not in curves.columns]
    if missing:
        raise FormatError(f"Curve table lacks columns {missing}")

    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for method, group in curves.groupby("method", sort=False):
            ax.plot(group["std"], group["cr"], marker=MARKERS.get(method, "o"), label=method)
        ax.set_xlabel("Background STD")
        ax.set_ylabel("Contrast recovery")
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
