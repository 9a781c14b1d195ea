"""Offline grid search over the intermittent-send parameters (p, d).

A recorded workload is treated as ground truth; for each candidate (p, d)
the firmware's send/skip logic is replayed over it (same shadow-history
semantics, first two frames always sent, lossless channel assumed — the
search concerns the codec, not the radio). Each cell yields

    r   fraction of frames actually transmitted, in [2/total, 1]
    E   NRMSE of the receiver-view stream against the recording

and the objective alpha * E + (1 - alpha) * r. ``evaluate_params`` is the
readable reference path built directly on the firmware primitives; the
grid search runs a vectorized kernel over all cells at once and is tested
against the reference cell by cell.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import OptimizationError
from .firmware import predict_frame, should_send, trunc_div
from .recording import iter_recording, read_header
from .wire import Frame


def _frames_to_array(frames: Sequence[Frame]) -> np.ndarray:
    if len(frames) < 3:
        raise OptimizationError("recording too short: need at least 3 frames")
    shape = (frames[0].rows, frames[0].cols)
    for f in frames:
        if (f.rows, f.cols) != shape:
            raise OptimizationError("recording mixes frame geometries")
    return np.stack([f.values for f in frames]).astype(np.int32)


def evaluate_params(
    frames: Sequence[Frame], p: int, d: int, adc_bits: int = 12
) -> tuple[float, float]:
    """Reference evaluation of one (p, d) cell; returns (E, r)."""
    if p < 1 or d < 0:
        raise OptimizationError("need p >= 1 and d >= 0")
    _frames_to_array(frames)  # validates length and geometry
    full_scale = (1 << adc_bits) - 1
    sent = 0
    shadow_prev: Frame | None = None
    shadow_last: Frame | None = None
    sq_err = 0.0
    for frame in frames:
        if shadow_prev is None:
            view = frame
            sent += 1
        else:
            predicted = predict_frame(shadow_prev, shadow_last, p, full_scale)
            if should_send(frame, predicted, d):
                view = frame
                sent += 1
            else:
                view = predicted
                diff = view.values.astype(np.int64) - frame.values.astype(np.int64)
                sq_err += float((diff * diff).sum())
        shadow_prev, shadow_last = shadow_last, view
    total = len(frames)
    n = frames[0].rows * frames[0].cols
    e = float(np.sqrt(sq_err / (total * n)) / full_scale)
    r = sent / total
    return e, r


def _grid_kernel(
    values: np.ndarray, p_values: np.ndarray, d_values: np.ndarray, full_scale: int
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate every (p, d) cell in one vectorized sweep.

    State arrays are (P, D, N); per frame the prediction, the send decision
    and the shadow update all broadcast across the grid, with preallocated
    buffers so the hot loop does no large allocations. Integer-only in the
    prediction path, exactly like the firmware.
    """
    t_total, n = values.shape
    np_, nd = len(p_values), len(d_values)
    p_col = p_values.astype(np.int32).reshape(-1, 1, 1)
    d_n = d_values.astype(np.int64).reshape(1, -1) * n
    shape = (np_, nd, n)
    prev = np.broadcast_to(values[0], shape).copy()
    last = np.broadcast_to(values[1], shape).copy()
    pred = np.empty(shape, dtype=np.int32)
    delta = np.empty(shape, dtype=np.int32)
    magnitude = np.empty(shape, dtype=np.int32)
    sq = np.empty(shape, dtype=np.int64)
    sent = np.full((np_, nd), 2, dtype=np.int64)
    sq_err = np.zeros((np_, nd), dtype=np.float64)

    for t in range(2, t_total):
        actual = values[t]
        # pred = last + trunc((last - prev) / p), clamped to the ADC range
        np.subtract(last, prev, out=delta)
        np.abs(delta, out=magnitude)
        np.floor_divide(magnitude, p_col, out=magnitude)
        np.sign(delta, out=delta)
        np.multiply(delta, magnitude, out=magnitude)
        np.add(last, magnitude, out=pred)
        np.clip(pred, 0, full_scale, out=pred)
        # send decision: sum |pred - actual| > d * N per cell
        np.subtract(pred, actual, out=delta)
        np.abs(delta, out=magnitude)
        send = magnitude.sum(axis=2) > d_n
        sent += send
        # error contribution only where the frame is skipped; the explicit
        # dtype forces the wide loop so 16-bit counts cannot overflow a square
        np.multiply(delta, delta, out=sq, dtype=np.int64)
        sq_err += np.where(send, 0.0, sq.sum(axis=2))
        # shadow update: sent cells resync to the actual frame
        np.copyto(pred, actual, where=send[:, :, None])
        prev, last, pred = last, pred, prev

    e = np.sqrt(sq_err / (t_total * n)) / full_scale
    r = sent / t_total
    return e, r


@dataclass
class OptimizationSurface:
    p_values: list[int]
    d_values: list[int]
    alpha: float
    e_grid: np.ndarray          # shape (P, D)
    r_grid: np.ndarray
    objective_grid: np.ndarray
    argmin: tuple[int, int]     # (p, d)

    def cell(self, p: int, d: int) -> dict:
        i = self.p_values.index(p)
        j = self.d_values.index(d)
        return {
            "p": p,
            "d": d,
            "E": float(self.e_grid[i, j]),
            "r": float(self.r_grid[i, j]),
            "objective": float(self.objective_grid[i, j]),
        }

    def rows(self) -> list[dict]:
        return [self.cell(p, d) for p in self.p_values for d in self.d_values]


def _argmin_cell(surface_rows: list[dict]) -> tuple[int, int]:
    best = min(surface_rows, key=lambda c: (c["objective"], c["E"], c["p"], c["d"]))
    return best["p"], best["d"]


def grid_search(
    frames: Sequence[Frame],
    p_values: Sequence[int],
    d_values: Sequence[int],
    alpha: float,
    adc_bits: int = 12,
) -> OptimizationSurface:
    """Exhaustive, deterministic sweep; ties break toward low E then low (p, d)."""
    if not p_values or not d_values:
        raise OptimizationError("p and d ranges must be non-empty")
    if not 0.0 <= alpha <= 1.0:
        raise OptimizationError("alpha must be in [0, 1]")
    if any(p < 1 for p in p_values) or any(d < 0 for d in d_values):
        raise OptimizationError("need p >= 1 and d >= 0")
    values = _frames_to_array(frames)
    full_scale = (1 << adc_bits) - 1
    e_grid, r_grid = _grid_kernel(
        values, np.asarray(p_values), np.asarray(d_values), full_scale
    )
    objective = alpha * e_grid + (1.0 - alpha) * r_grid
    surface = OptimizationSurface(
        p_values=list(p_values),
        d_values=list(d_values),
        alpha=alpha,
        e_grid=e_grid,
        r_grid=r_grid,
        objective_grid=objective,
        argmin=(0, 0),
    )
    surface.argmin = _argmin_cell(surface.rows())
    return surface


def grid_search_recording(
    path: str | Path,
    p_values: Sequence[int],
    d_values: Sequence[int],
    alpha: float,
) -> OptimizationSurface:
    header = read_header(path)
    return grid_search(
        list(iter_recording(path)), p_values, d_values, alpha, adc_bits=header.adc_bits
    )


CSV_FIELDS = ("p", "d", "E", "r", "objective")


def export_surface(surface: OptimizationSurface, path: str | Path) -> None:
    """Write the surface; format chosen by extension (.csv or .json).

    CSV carries exactly one row per (p, d) cell under the fixed header; the
    JSON document additionally round-trips alpha and the argmin.
    """
    path = Path(path)
    if path.suffix == ".csv":
        with open(path, "w", newline="") as out:
            writer = csv.DictWriter(out, fieldnames=CSV_FIELDS)
            writer.writeheader()
            for row in surface.rows():
                writer.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k] for k in CSV_FIELDS})
    elif path.suffix == ".json":
        doc = {
            "alpha": surface.alpha,
            "pValues": surface.p_values,
            "dValues": surface.d_values,
            "argmin": {"p": surface.argmin[0], "d": surface.argmin[1]},
            "cells": surface.rows(),
        }
        with open(path, "w") as out:
            json.dump(doc, out, indent=2)
            out.write("\n")
    else:
        raise OptimizationError(f"unsupported surface format {path.suffix!r}")


def _surface_from_rows(rows: list[dict], alpha: float | None) -> OptimizationSurface:
    p_values = sorted({row["p"] for row in rows})
    d_values = sorted({row["d"] for row in rows})
    if len(rows) != len(p_values) * len(d_values):
        raise OptimizationError("surface rows do not form a full grid")
    e = np.zeros((len(p_values), len(d_values)))
    r = np.zeros_like(e)
    obj = np.zeros_like(e)
    for row in rows:
        i, j = p_values.index(row["p"]), d_values.index(row["d"])
        e[i, j], r[i, j], obj[i, j] = row["E"], row["r"], row["objective"]
    if alpha is None:
        # best-effort recovery from a cell where the two terms differ
        alpha = float("nan")
        for row in rows:
            if row["E"] != row["r"]:
                alpha = (row["objective"] - row["r"]) / (row["E"] - row["r"])
                break
    surface = OptimizationSurface(
        p_values=p_values, d_values=d_values, alpha=alpha,
        e_grid=e, r_grid=r, objective_grid=obj, argmin=(0, 0),
    )
    surface.argmin = _argmin_cell(surface.rows())
    return surface


def load_surface(path: str | Path) -> OptimizationSurface:
    path = Path(path)
    if path.suffix == ".csv":
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != list(CSV_FIELDS):
                raise OptimizationError(f"unexpected CSV header {reader.fieldnames}")
            rows = [
                {
                    "p": int(row["p"]),
                    "d": int(row["d"]),
                    "E": float(row["E"]),
                    "r": float(row["r"]),
                    "objective": float(row["objective"]),
                }
                for row in reader
            ]
        return _surface_from_rows(rows, alpha=None)
    if path.suffix == ".json":
        doc = json.loads(Path(path).read_text())
        return _surface_from_rows(doc["cells"], alpha=float(doc["alpha"]))
    raise OptimizationError(f"unsupported surface format {path.suffix!r}")
