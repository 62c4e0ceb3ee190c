"""Convergence and efficiency plots (log-log, one curve per scheme)."""
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURES = (
    ("e_deformation", "relative error of the gradient", "relative_error_gradient.svg"),
    ("efficiency_deformation", "efficiency factor of the gradient", "efficiency_gradient.svg"),
    ("e_energy", "relative error of the total energy", "relative_error_energy.svg"),
    ("efficiency_energy", "efficiency factor of the energy", "efficiency_energy.svg"),
)
MARKERS = {"optimal": "o", "gradient": "s", "energy": "^"}

plt.rcParams["svg.hashsalt"] = "qc1d"  # reproducible SVG ids


def plot_records(records, out_dir):
    """Write the four SVG figures; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    schemes = []
    for r in records:
        if r.scheme not in schemes:
            schemes.append(r.scheme)
    paths = []
    for key, title, fname in FIGURES:
        fig, ax = plt.subplots(figsize=(5.5, 4.0))
        for s in schemes:
            rows = [r for r in records if r.scheme == s and r.status == "ok"]
            x = np.array([r.dof for r in rows], dtype=float)
            y = np.array([getattr(r, key) for r in rows], dtype=float)
            ok = np.isfinite(y) & (y > 0)
            if ok.any():
                ax.loglog(x[ok], y[ok], marker=MARKERS.get(s, "o"), label=s)
        ax.set_xlabel("DOF")
        ax.set_ylabel(key)
        ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
        if ax.lines:
            ax.legend()
        path = os.path.join(out_dir, fname)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths
