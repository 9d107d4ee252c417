"""Report figures: spectral-flow tracks, spectra, index tables and surfaces."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_flow", "plot_spectrum", "plot_vekua", "plot_surfaces"]

_STYLE = {"figure.dpi": 120, "font.size": 9, "axes.grid": True,
          "grid.alpha": 0.3, "axes.spines.top": False, "axes.spines.right": False}


def _save(fig, path) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp.png")
    fig.savefig(tmp, bbox_inches="tight")
    plt.close(fig)
    tmp.replace(path)
    return path


def plot_flow(flow, path, title: str | None = None) -> Path:
    """Eigenvalue tracks in the flow window with the level and crossings."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 3.5))
        ts = np.concatenate([np.full(len(v), t) for t, v in zip(flow.t, flow.eigenvalues)])
        mu = np.concatenate([np.asarray(v) for v in flow.eigenvalues])
        ax.plot(ts, mu, ".", ms=2.5, color="tab:blue")
        ax.axhline(flow.level, color="0.3", lw=0.8, ls="--")
        for c in flow.crossings:
            ax.axvline(c.t, color="tab:red" if c.direction > 0 else "tab:green",
                       lw=0.8, ls=":" if c.flagged else "-")
        ax.set_xlabel("t")
        ax.set_ylabel(r"$\mu$")
        ax.set_ylim(flow.level - flow.halfwidth, flow.level + flow.halfwidth)
        ax.set_title(title or f"spectral flow sf = {flow.sf:+d}")
        return _save(fig, path)


def plot_spectrum(eigenvalues, path, title: str = "spectrum") -> Path:
    """Eigenvalues against their index."""
    ev = np.sort(np.asarray(eigenvalues, dtype=float))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        ax.plot(np.arange(len(ev)), ev, "o", ms=3)
        ax.set_xlabel("index")
        ax.set_ylabel(r"$\mu$")
        ax.set_title(title)
        return _save(fig, path)


def plot_vekua(rows, path) -> Path:
    """Finite element index against the predicted ``2 (1 - p1 - p2)``."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.5))
        pred = [r["pred_index"] for r in rows]
        fem = [r["index"] for r in rows]
        lim = (min(pred + fem) - 1, max(pred + fem) + 1)
        ax.plot(lim, lim, color="0.6", lw=0.8)
        ax.plot(pred, fem, "o")
        ax.set_xlabel("predicted index")
        ax.set_ylabel("FEM index")
        return _save(fig, path)


def plot_surfaces(meshes, labels, path, ncols: int = 3) -> Path:
    """Shaded renderings of triangle meshes, one panel each."""
    n = len(meshes)
    ncols = max(1, min(ncols, n))
    nrows = -(-n // ncols)
    with plt.rc_context({**_STYLE, "axes.grid": False}):
        fig = plt.figure(figsize=(3.0 * ncols, 3.0 * nrows))
        for k, (m, label) in enumerate(zip(meshes, labels)):
            ax = fig.add_subplot(nrows, ncols, k + 1, projection="3d")
            P = m.positions - m.positions.mean(axis=0)
            ax.plot_trisurf(P[:, 1], P[:, 2], P[:, 0], triangles=m.faces,
                            color="lightsteelblue", edgecolor="none", shade=True)
            r = np.abs(P).max()
            ax.set_xlim(-r, r)
            ax.set_ylim(-r, r)
            ax.set_zlim(-r, r)
            ax.set_box_aspect((1, 1, 1))
            ax.set_axis_off()
            ax.set_title(label)
        return _save(fig, path)
