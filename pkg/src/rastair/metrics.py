"""Trajectory alignment, ATE, suboptimality and trace/metric files.

Trace files are CSV with header ``iteration,f,grad_norm,suboptimality``, one
file per staircase rank. Metric files are CSV with header
``dataset,f_sdp,eps,ate_trans_m,ate_rot_deg``. Floats use 17 significant
digits so files re-import exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .exceptions import DegenerateConfiguration, EmptyOverlap, NonPositiveLowerBound
from .io import fmt, params_to_pose

TRACE_HEADER = ("iteration", "f", "grad_norm", "suboptimality")
METRIC_HEADER = ("dataset", "f_sdp", "eps", "ate_trans_m", "ate_rot_deg")


def umeyama_align(est: np.ndarray, ref: np.ndarray, rank_tol: float = 1e-10):
    """Rigid ``(R, t)`` minimising ``sum ||R est_i + t - ref_i||^2``; scale fixed to 1."""
    est = np.asarray(est, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if est.shape != ref.shape or est.ndim != 2:
        raise ValueError("est and ref must be matching (n, d) arrays")
    n, d = est.shape
    if n == 0:
        raise EmptyOverlap("no corresponding points")
    mu_e, mu_r = est.mean(axis=0), ref.mean(axis=0)
    cov = (ref - mu_r).T @ (est - mu_e) / n
    U, s, Vt = np.linalg.svd(cov)
    if n < 2 or np.sum(s > rank_tol * max(s[0], 1e-300)) < d - 1 or s[0] == 0.0:
        raise DegenerateConfiguration(f"covariance rank too low for a unique rotation (singular values {s})")
    D = np.eye(d)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        D[-1, -1] = -1.0
    R = U @ D @ Vt
    return R, mu_r - R @ mu_e


def rotation_angle(R: np.ndarray) -> float:
    """Geodesic angle of a rotation, accurate near zero (uses ``||R - I||_F``)."""
    d = R.shape[0]
    x = np.linalg.norm(R - np.eye(d)) / (2.0 * np.sqrt(2.0))
    return float(2.0 * np.arcsin(min(x, 1.0)))


def ate_rmse(est: dict, ref: dict, align: bool = True) -> tuple:
    """``(translation RMSE in m, rotation RMSE in degrees)`` over matching ids.

    ``est`` and ``ref`` map ids to ``(R, t)``. With ``align`` the estimate is
    first moved by the joint rigid Umeyama fit of its positions.
    """
    common = sorted(set(est) & set(ref), key=str)
    if not common:
        raise EmptyOverlap("estimate and reference share no ids")
    Pe = np.array([est[k][1] for k in common], dtype=float)
    Pr = np.array([ref[k][1] for k in common], dtype=float)
    d = Pe.shape[1]
    Ra, ta = (np.eye(d), np.zeros(d)) if not align else umeyama_align(Pe, Pr)
    Pa = Pe @ Ra.T + ta
    trans = float(np.sqrt(np.mean(np.sum((Pa - Pr) ** 2, axis=1))))
    angles = np.array([rotation_angle(Ra @ est[k][0] @ np.asarray(ref[k][0]).T) for k in common])
    rot = float(np.degrees(np.sqrt(np.mean(angles ** 2))))
    return trans, rot


def suboptimality(f_rounded: float, f_sdp: float) -> float:
    """Relative suboptimality upper bound ``(f_rounded - f_sdp) / f_sdp``."""
    if not f_sdp > 0:
        raise NonPositiveLowerBound(f"lower bound must be positive, got {f_sdp!r}")
    return (f_rounded - f_sdp) / f_sdp


def poses_from_values(values: dict, d: int) -> dict:
    """Pose parameter tuples (by id) to ``(R, t)``; landmark ids (``L...``) are skipped."""
    return {name: params_to_pose(p, d) for name, p in values.items() if not str(name).startswith("L")}


def poses_by_name(poses: dict) -> dict:
    return {getattr(s, "name", s): v for s, v in poses.items()}


# -- files -------------------------------------------------------------------------


def write_trace(trace, path, f_sdp: float | None = None, floor: float = 1.0) -> None:
    from .staircase import relative_gap

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for it, f, g in zip(trace.iterations, trace.costs, trace.grad_norms):
            sub = float("nan") if f_sdp is None else relative_gap(f, f_sdp, floor)
            w.writerow([int(it), fmt(f), fmt(g), fmt(sub)])


def export_traces(report, path) -> list:
    """One trace file per rank: ``<stem>_rank<p>.csv`` next to ``path``."""
    path = Path(path)
    out = []
    for trace in report.traces:
        target = path.with_name(f"{path.stem}_rank{trace.rank}.csv")
        write_trace(trace, target, report.f_sdp)
        out.append(target)
    return out


def read_traces(path) -> dict:
    """Columns of a trace file as arrays (``iteration`` as int)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRACE_HEADER:
        raise ValueError(f"{path}: not a trace file")
    body = rows[1:]
    out = {"iteration": np.array([int(r[0]) for r in body], dtype=int)}
    for c, name in enumerate(TRACE_HEADER[1:], start=1):
        out[name] = np.array([float(r[c]) for r in body], dtype=float)
    return out


def write_metrics(rows, path) -> None:
    """``rows`` are dicts with the metric header keys."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_HEADER)
        for row in rows:
            w.writerow([row["dataset"]] + [
                "" if row.get(k) is None else fmt(row[k]) for k in METRIC_HEADER[1:]])


def read_metrics(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRIC_HEADER:
            raise ValueError(f"{path}: not a metrics file")
        return [
            {k: (v if k == "dataset" else (None if v == "" else float(v))) for k, v in row.items()}
            for row in reader
        ]
