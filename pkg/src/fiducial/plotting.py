"""Optional PNG rendering of CLI tables (requires matplotlib)."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

# x column, y columns, group column per command
_LAYOUT = {
    "density": ("theta", ["density"], "variant"),
    "cdf": ("theta", ["cdf"], "variant"),
    "curve": ("theta", ["density", "cc"], "variant"),
    "gfd": ("theta", ["r_cc", "h_cc"], "dataset"),
    "compare-bayes": ("theta", ["fiducial_cdf", "posterior_cdf"], "variant"),
    "risk": ("mu", ["gap", "analytic"], None),
    "coverage": ("level", ["coverage"], "variant"),
}


def plot_table(command: str, header: Sequence[str], rows: Sequence[Sequence], path: Path) -> Path | None:
    """Draw one panel per y column; returns ``None`` when no layout applies."""
    layout = _LAYOUT.get(command)
    if layout is None or not all(c in header for c in layout[1]):
        return None
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xcol, ycols, gcol = layout
    ix = header.index(xcol)
    ig = header.index(gcol) if gcol else None
    groups = defaultdict(list)
    for r in rows:
        groups[r[ig] if ig is not None else ""].append(r)
    fig, axes = plt.subplots(1, len(ycols), figsize=(4.5 * len(ycols), 3.6), squeeze=False)
    for ax, yc in zip(axes[0], ycols):
        iy = header.index(yc)
        for g, rs in groups.items():
            ax.plot([float(r[ix]) for r in rs], [float(r[iy]) for r in rs], label=str(g) if g != "" else None)
        if command == "coverage":
            ax.plot([0, 1], [0, 1], "k:", lw=0.8)
        ax.set_xlabel(xcol)
        ax.set_ylabel(yc)
        if len(groups) > 1:
            ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path
