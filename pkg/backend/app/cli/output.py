"""Float maps, colormapped images and CSV tables written by a run."""
from pathlib import Path
from typing import List, Optional
import logging

import matplotlib
import numpy as np
import pandas as pd
from PIL import Image

logger = logging.getLogger(__name__)

COLORMAP = "turbo"

CONVERGENCE_COLUMNS = ["round", "walks", "mse"]
TIMING_COLUMNS = ["round", "phase1_seconds", "phase2_seconds", "elapsed_seconds"]
COMPARISON_COLUMNS = ["strategy", "rounds", "walks", "mse"]


def write_pfm(path, image: np.ndarray) -> Path:
    """Single-channel little-endian PFM; rows are stored bottom to top."""
    path = Path(path)
    data = np.asarray(image, dtype="<f4")
    if data.ndim != 2:
        raise ValueError("PFM maps are two-dimensional")
    height, width = data.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as file:
        file.write(f"Pf\n{width} {height}\n-1.0\n".encode("ascii"))
        file.write(np.ascontiguousarray(data[::-1]).tobytes())
    return path


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as file:
        kind = file.readline().strip()
        if kind != b"Pf":
            raise ValueError(f"{path} is not a single-channel PFM file")
        width, height = (int(v) for v in file.readline().split())
        scale = float(file.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(file.read(width * height * 4), dtype=dtype)
    return data.reshape(height, width)[::-1].astype(np.float32)


def save_colormapped(path, image: np.ndarray, vmin: float, vmax: float) -> Path:
    """Map values to [0, 1] between vmin and vmax and write an RGBA PNG; NaN cells are transparent."""
    path = Path(path)
    image = np.asarray(image, dtype=float)
    span = vmax - vmin
    scaled = (image - vmin) / span if span > 0 else np.zeros_like(image)
    scaled = np.clip(np.nan_to_num(scaled, nan=0.0), 0.0, 1.0)
    rgba = matplotlib.colormaps[COLORMAP](scaled, bytes=True)
    rgba[np.isnan(image)] = 0
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(rgba).save(path)
    return path


def write_solution_map(estimate: np.ndarray, truth: Optional[np.ndarray], out_dir, stem: str = "solution",
                       image: bool = True) -> List[Path]:
    """Raw solution values, plus a colormapped image scaled to the reference range when known.

    Returns the written paths, the PFM first.
    """
    out_dir = Path(out_dir)
    written = [write_pfm(out_dir / f"{stem}.pfm", estimate)]
    if image:
        scale = truth if truth is not None and np.any(np.isfinite(truth)) else estimate
        finite = scale[np.isfinite(scale)]
        vmin, vmax = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
        written.append(save_colormapped(out_dir / f"{stem}.png", estimate, vmin, vmax))
    return written


def error_grid(estimate: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """|estimate - truth| per cell; the Euclidean norm for vector maps of shape (h, w, 3)."""
    diff = np.asarray(estimate, dtype=float) - np.asarray(truth, dtype=float)
    return np.linalg.norm(diff, axis=-1) if diff.ndim == 3 else np.abs(diff)


def write_error_map(estimate: np.ndarray, truth: np.ndarray, out_dir, stem: str = "error",
                    image: bool = True) -> List[Path]:
    """error_grid as a raw float map, plus a colormapped image; returns the written paths, the PFM first.

    The colormap runs from 0 to the largest finite error, so a zero-error field renders in the minimum color.
    """
    out_dir = Path(out_dir)
    error = error_grid(estimate, truth)
    written = [write_pfm(out_dir / f"{stem}.pfm", error)]
    finite = error[np.isfinite(error)]
    vmax = float(finite.max()) if finite.size else 0.0
    if image:
        written.append(save_colormapped(out_dir / f"{stem}.png", error, 0.0, vmax))
    logger.info(f"Wrote error map {written[0]} (max error {vmax:.3e})")
    return written


def write_convergence_csv(history, path, include_time: bool = False) -> Path:
    """round, walks, mse per round; elapsed_seconds only when include_time is set."""
    columns = CONVERGENCE_COLUMNS + (["elapsed_seconds"] if include_time else [])
    rows = [{column: getattr(summary, column) for column in columns} for summary in history]
    return _write_table(rows, columns, path)


def write_timing_csv(history, path) -> Path:
    rows = [{column: getattr(summary, column) for column in TIMING_COLUMNS} for summary in history]
    return _write_table(rows, TIMING_COLUMNS, path)


def write_comparison_csv(rows: List[dict], path) -> Path:
    return _write_table(rows, COMPARISON_COLUMNS, path)


def _write_table(rows: List[dict], columns: List[str], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False, float_format="%.17g")
    logger.debug(f"Wrote {len(rows)} rows to {path}")
    return path
