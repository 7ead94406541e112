"""Report figures: per-view PSNR heatmaps, disparity-sweep curves and EPI strips."""

import math
import os
from pathlib import Path
from typing import List, Mapping, Optional, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from lfdfnet.evaluations.evaluation import MetricReport, SceneMetrics  # noqa: E402

FIGURE_DPI = 150


def _save(fig, path: Union[str, os.PathLike]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=FIGURE_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_view_heatmap(scene: SceneMetrics, path: Union[str, os.PathLike]) -> Path:
    """PSNR of every perspective of one scene, annotated in dB."""
    grid = np.where(np.isfinite(scene.psnr_grid), scene.psnr_grid, np.nan)
    u_size, v_size = grid.shape
    fig, ax = plt.subplots(figsize=(1.0 + 0.8 * v_size, 0.8 + 0.8 * u_size))
    image = ax.imshow(grid, cmap="viridis")
    for u in range(u_size):
        for v in range(v_size):
            value = scene.psnr_grid[u, v]
            label = "inf" if math.isinf(value) else f"{value:.2f}"
            ax.text(v, u, label, ha="center", va="center", fontsize=7, color="white")
    ax.set_xticks(range(v_size))
    ax.set_yticks(range(u_size))
    ax.set_xlabel("v")
    ax.set_ylabel("u")
    ax.set_title(f"{scene.name}: {scene.psnr:.2f} dB (std {scene.psnr_std:.2f})")
    fig.colorbar(image, ax=ax, label="PSNR (dB)")
    return _save(fig, path)


def plot_report_heatmaps(
    report: MetricReport, out_dir: Union[str, os.PathLike], image_format: str = "png"
) -> List[Path]:
    out_dir = Path(out_dir)
    return [plot_view_heatmap(scene, out_dir / f"heatmap_{scene.name}.{image_format}") for scene in report.scenes]


def plot_sweep_curves(
    table: pd.DataFrame,
    path: Union[str, os.PathLike],
    disparity_ranges: Optional[Mapping[str, Tuple[float, float]]] = None,
) -> Path:
    """One PSNR curve per model over the baseline multipliers (the table columns)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    positions = np.arange(len(table.columns))
    for name, row in table.iterrows():
        ax.plot(positions, row.to_numpy(dtype=np.float64), marker="o", label=str(name))
    labels = list(table.columns)
    if disparity_ranges:
        labels = [
            f"{column}\n[{disparity_ranges[column][0]:.2f}, {disparity_ranges[column][1]:.2f}]"
            if column in disparity_ranges
            else column
            for column in table.columns
        ]
    ax.set_xticks(positions)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_xlabel("baseline multiplier [disparity range]")
    ax.set_ylabel("PSNR (dB)")
    ax.grid(alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_epi_strips(epis: Mapping[str, np.ndarray], path: Union[str, os.PathLike], title: str = "") -> Path:
    """Stacks EPIs (ground truth and super-resolved) vertically, one labelled strip each."""
    fig, axes = plt.subplots(len(epis), 1, figsize=(6, 0.6 + 0.7 * len(epis)), squeeze=False)
    for ax, (name, epi) in zip(axes[:, 0], epis.items()):
        ax.imshow(np.clip(epi, 0.0, 1.0), cmap="gray", vmin=0.0, vmax=1.0, aspect="auto", interpolation="nearest")
        ax.set_ylabel(name, rotation=0, ha="right", va="center", fontsize=8)
        ax.set_xticks([])
        ax.set_yticks([])
    if title:
        axes[0, 0].set_title(title)
    return _save(fig, path)


def plot_from_file(report_path: Union[str, os.PathLike], out_dir: Union[str, os.PathLike], image_format="png"):
    """Renders the figures of a metric report JSON, a sweep CSV or an ablation CSV."""
    report_path = Path(report_path)
    if not report_path.exists():
        raise FileNotFoundError(f"Report {report_path} does not exist")
    if report_path.suffix == ".csv":
        table = pd.read_csv(report_path)
        figure_path = Path(out_dir) / f"{report_path.stem}.{image_format}"
        if "params" in table.columns:
            return [plot_ablation(table, figure_path)]
        return [plot_sweep_curves(table.set_index(table.columns[0]), figure_path)]
    return plot_report_heatmaps(MetricReport.from_json(report_path), out_dir, image_format)


def plot_ablation(frame: pd.DataFrame, path: Union[str, os.PathLike]) -> Path:
    """PSNR against parameter count for every ablation row that trained."""
    done = frame[frame["error"].isna()] if "error" in frame else frame
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(done["params"] / 1e6, done["psnr"])
    for _, row in done.iterrows():
        ax.annotate(str(row["name"]), (row["params"] / 1e6, row["psnr"]), fontsize=7)
    ax.set_xlabel("parameters (M)")
    ax.set_ylabel("PSNR (dB)")
    ax.grid(alpha=0.3)
    return _save(fig, path)

