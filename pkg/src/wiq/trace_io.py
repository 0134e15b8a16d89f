"""Plain-text trace files and their ground-truth sidecars.

Trace format: one header line `tick_seconds,snr_db,length` (snr_db is
`nan` for clean traces) followed by one strength value per line. The
sidecar `<path>.gt` holds `action,start,end,quality` rows, quality left
empty when unknown.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .signal_sim import ActionInterval, RssTrace


def gt_path(path: str) -> str:
    return path + ".gt"


def save_trace(trace: RssTrace, path: str, with_ground_truth: bool = True) -> None:
    snr = float("nan") if trace.snr_db is None else trace.snr_db
    lines = [f"{trace.tick_seconds!r},{snr!r},{trace.samples.size}"]
    lines.extend(repr(float(v)) for v in trace.samples)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if with_ground_truth:
        rows = [
            f"{iv.action},{iv.start_tick},{iv.end_tick},{iv.quality or ''}"
            for iv in trace.ground_truth
        ]
        with open(gt_path(path), "w") as fh:
            fh.write("\n".join(rows) + ("\n" if rows else ""))


def load_trace(path: str, with_ground_truth: bool = True) -> RssTrace:
    with open(path) as fh:
        header = fh.readline().strip()
        try:
            tick_s, snr_s, n_s = header.split(",")
            tick_seconds = float(tick_s)
            snr = float(snr_s)
            n = int(n_s)
        except ValueError as exc:
            raise ValueError(f"bad trace header in {path}: {header!r}") from exc
        samples = np.loadtxt(fh, dtype=float)
    if samples.size != n:
        raise ValueError(f"trace {path} declares {n} samples, found {samples.size}")
    ground_truth = []
    side = gt_path(path)
    if with_ground_truth and os.path.exists(side):
        with open(side) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                action, start, end, quality = line.split(",")
                ground_truth.append(
                    ActionInterval(action, int(start), int(end), quality or None)
                )
    return RssTrace(
        samples=samples,
        tick_seconds=tick_seconds,
        ground_truth=ground_truth,
        snr_db=None if math.isnan(snr) else snr,
    )
