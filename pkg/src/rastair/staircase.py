"""Riemannian Staircase driver: RBCD, zero-pad lift, certify, escape, round."""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .certify import EPS_LADDER, Certificate, verify
from .exceptions import EscapeFailed, LanczosNoConverge, NotCriticalPoint
from .manifold import Layout, lift_random, lift_zero_pad, retract, tangent_project
from .objective import build_data_matrix, cost
from .problem import INTER_LOOP, INTRA_LOOP, ODOMETRY, ProblemGraph
from .rbcd import RbcdOptions, run_rbcd

logger = logging.getLogger(__name__)

_EDGE_PRIORITY = {ODOMETRY: 0, INTRA_LOOP: 1, INTER_LOOP: 2}


@dataclass
class StaircaseOptions:
    p0: int | None = None
    p_max: int | None = None
    eps_ladder: tuple = EPS_LADDER
    rbcd: RbcdOptions = field(default_factory=RbcdOptions)
    escape_grid_size: int = 20
    escape_base_step: float = 1.0
    escape_ratio: float = 0.5
    stationarity_tol: float = 1e-6
    krylov_dim: int = 60
    max_restarts: int = 1000
    seed: int = 0

    def resolve(self, d: int) -> "StaircaseOptions":
        p0 = d if self.p0 is None else int(self.p0)
        p_max = d + 5 if self.p_max is None else int(self.p_max)
        if not d <= p0 <= p_max:
            raise ValueError(f"need d <= p0 <= p_max, got d={d}, p0={p0}, p_max={p_max}")
        ladder = tuple(sorted(float(e) for e in self.eps_ladder))
        if not ladder or ladder[0] <= 0:
            raise ValueError("eps ladder must hold positive tolerances")
        return StaircaseOptions(p0, p_max, ladder, self.rbcd, self.escape_grid_size,
                                self.escape_base_step, self.escape_ratio, self.stationarity_tol,
                                self.krylov_dim, self.max_restarts, self.seed)

    @property
    def escape_grid(self) -> np.ndarray:
        return self.escape_base_step * self.escape_ratio ** np.arange(self.escape_grid_size)


def _project_so(R: np.ndarray) -> np.ndarray:
    """Nearest rotation (determinant-corrected polar factor)."""
    U, _, Vt = np.linalg.svd(R)
    D = np.eye(R.shape[-1])
    D[-1, -1] = np.sign(np.linalg.det(U @ Vt)) or 1.0
    return U @ D @ Vt


def _spanning_tree_poses(g: ProblemGraph) -> dict:
    """Chain relative pose measurements along a priority spanning forest.

    Odometry is preferred, then intra-agent and inter-agent loop closures, so
    each agent's trajectory is dead-reckoned and agents are aligned through
    loop closures. Poses unreachable through pose edges start at identity.
    """
    d = g.d
    adjacency = {s: [] for s in g.poses}
    for order, m in enumerate(g.pose_measurements):
        prio = _EDGE_PRIORITY[g.edge_class(m)]
        adjacency[m.i].append((prio, order, m, True))
        adjacency[m.j].append((prio, order, m, False))
    poses = {}
    tie = itertools.count()
    for root in g.poses:
        if root in poses:
            continue
        if poses:
            logger.warning("pose %s is not linked by relative pose measurements; starting at identity", root.name)
        poses[root] = (np.eye(d), np.zeros(d))
        heap = [(p, o, next(tie), m, fwd, root) for p, o, m, fwd in adjacency[root]]
        heapq.heapify(heap)
        while heap:
            _, _, _, m, forward, src = heapq.heappop(heap)
            dst = m.j if forward else m.i
            if dst in poses:
                continue
            R, t = poses[src]
            if forward:
                poses[dst] = (R @ m.rotation, t + R @ m.translation)
            else:
                Rn = R @ m.rotation.T
                poses[dst] = (Rn, t - Rn @ m.translation)
            for p, o, mm, fwd in adjacency[dst]:
                heapq.heappush(heap, (p, o, next(tie), mm, fwd, dst))
    return poses


def _place_landmarks(g: ProblemGraph, positions: dict) -> dict:
    """Least-squares trilateration of each landmark from ranges to placed poses."""
    d = g.d
    anchors = {lm: [] for lm in g.landmarks}
    for m in g.range_measurements:
        for this, other in ((m.i, m.j), (m.j, m.i)):
            if not this.is_pose and other.is_pose:
                anchors[this].append((positions[other], m.range))
    out = {}
    for lm in g.landmarks:
        if not anchors[lm]:
            out[lm] = np.zeros(d)
            continue
        C = np.array([c for c, _ in anchors[lm]])
        r = np.array([r for _, r in anchors[lm]])
        x0 = C.mean(axis=0)
        if len(C) > d:
            # ||x - c_i||^2 = r_i^2 differenced against the first anchor
            A = 2.0 * (C[1:] - C[0])
            b = (r[0] ** 2 - r[1:] ** 2) + np.sum(C[1:] ** 2, axis=1) - np.sum(C[0] ** 2)
            x0 = np.linalg.lstsq(A, b, rcond=None)[0]
        else:
            x0 = x0 + np.eye(d)[0] * max(r.mean(), 1e-3)
        res = least_squares(lambda x: np.linalg.norm(x - C, axis=1) - r, x0, method="lm"
                            if len(C) >= d else "trf", xtol=1e-15, ftol=1e-15, gtol=1e-15)
        out[lm] = res.x
    return out


def initialize(g: ProblemGraph) -> np.ndarray:
    """Rank-``d`` starting point: chained poses, trilaterated landmarks, unit directions."""
    d = g.d
    X = np.zeros((d, g.k))
    poses = _spanning_tree_poses(g)
    positions = {s: t for s, (_, t) in poses.items()}
    positions.update(_place_landmarks(g, positions))
    for s, (R, t) in poses.items():
        X[:, g.rotation_columns(s)] = R
    for s, t in positions.items():
        X[:, g.translation_column(s)] = t
    for a, m in enumerate(g.range_measurements):
        diff = positions[m.j] - positions[m.i]
        nrm = np.linalg.norm(diff)
        X[:, g.unit_column(a)] = diff / nrm if nrm > 1e-12 else np.eye(d)[0]
    return X


def escape_saddle(Q, X: np.ndarray, v: np.ndarray, layout: Layout, grid, retraction="polar") -> np.ndarray:
    """Line search along ``[0; v^T]`` (both signs) from a zero-padded critical point."""
    direction = np.zeros_like(X)
    direction[-1, :] = v
    direction = tangent_project(X, direction, layout)
    f0 = cost(Q, X)
    for step in grid:
        for sign in (1.0, -1.0):
            Y = retract(X, sign * direction, layout, step=step, method=retraction)
            if cost(Q, Y) < f0 - 1e-12 * abs(f0):
                return Y
    raise EscapeFailed("no step in the line-search grid decreased the cost")


@dataclass
class RoundedSolution:
    poses: dict
    landmarks: dict
    X: np.ndarray


def round_solution(g: ProblemGraph, X: np.ndarray) -> RoundedSolution:
    """Project a rank-``p`` point back to poses in SE(d) and landmark positions.

    Agents contribute their Gram matrices ``X_b X_b^T``; the top-``d``
    eigenvectors and a reflection vote are broadcast, then each agent projects
    its own columns. The first pose of the lowest agent is anchored at identity.
    """
    d = g.d
    blocks = g.agent_blocks()
    gram = sum(X[:, b.columns] @ X[:, b.columns].T for b in blocks.values())
    w, U = np.linalg.eigh(gram)
    U = U[:, np.argsort(w)[::-1][:d]]
    Xd = U.T @ X
    dets = [np.linalg.det(Xd[:, g.rotation_columns(s)]) for s in g.poses]
    if sum(np.sign(dets)) < 0:
        Xd[0, :] *= -1.0

    rotations = {s: _project_so(Xd[:, g.rotation_columns(s)]) for s in g.poses}
    positions = {s: Xd[:, g.translation_column(s)].copy() for s in g.states}
    anchor = g.poses[0]
    R0, t0 = rotations[anchor], positions[anchor]
    rotations = {s: R0.T @ R for s, R in rotations.items()}
    rotations[anchor] = np.eye(d)
    positions = {s: R0.T @ (t - t0) for s, t in positions.items()}
    positions[anchor] = np.zeros(d)

    Xr = np.zeros((d, g.k))
    for s, R in rotations.items():
        Xr[:, g.rotation_columns(s)] = R
    for s, t in positions.items():
        Xr[:, g.translation_column(s)] = t
    for a, m in enumerate(g.range_measurements):
        diff = positions[m.j] - positions[m.i]
        nrm = np.linalg.norm(diff)
        Xr[:, g.unit_column(a)] = diff / nrm if nrm > 1e-12 else np.eye(d)[0]
    poses = {s: (rotations[s], positions[s]) for s in g.poses}
    landmarks = {s: positions[s] for s in g.landmarks}
    return RoundedSolution(poses, landmarks, Xr)


def relative_gap(f: float, f_sdp: float, floor: float = 1.0) -> float:
    """``(f - f_sdp) / max(f_sdp, floor)``; the floor keeps noiseless problems finite."""
    return (f - f_sdp) / max(f_sdp, floor)


@dataclass
class RankRecord:
    rank: int
    X: np.ndarray
    certificate: Certificate | None
    rbcd_converged: bool


@dataclass
class SolveReport:
    poses: dict
    landmarks: dict
    f_sdp: float
    f_rounded: float
    suboptimality_bound: float
    certified: bool
    certified_rank: int | None
    epsilon: float | None
    traces: list
    certificate: Certificate | None
    X_star: np.ndarray
    X_rounded: np.ndarray
    messages: list = field(default_factory=list)
    status: str = "certified"
    ranks: list = field(default_factory=list)

    @property
    def lower_bound_ok(self) -> bool:
        return self.f_sdp <= self.f_rounded + 1e-6 * abs(self.f_sdp)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "certified": self.certified,
            "certified_rank": self.certified_rank,
            "epsilon": self.epsilon,
            "f_sdp": self.f_sdp,
            "f_rounded": self.f_rounded,
            "suboptimality_bound": self.suboptimality_bound,
            "ranks": [
                {"rank": r.rank, "min_eig": None if r.certificate is None else r.certificate.min_eig,
                 "rbcd_converged": r.rbcd_converged,
                 "iterations": len(t) - 1}
                for r, t in zip(self.ranks, self.traces)
            ],
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "num_messages": len(self.messages),
            "poses": {s.name: {"R": R.tolist(), "t": t.tolist()} for s, (R, t) in self.poses.items()},
            "landmarks": {s.name: t.tolist() for s, t in self.landmarks.items()},
        }


def solve(g: ProblemGraph, opts: StaircaseOptions | None = None, X_init: np.ndarray | None = None,
          Q=None) -> SolveReport:
    """Run the full staircase and round the certified point."""
    opts = (opts or StaircaseOptions()).resolve(g.d)
    Q = build_data_matrix(g) if Q is None else Q
    layout = g.layout
    X_init = initialize(g) if X_init is None else X_init
    X = lift_random(X_init, opts.p0, seed=opts.seed)

    records, traces, messages = [], [], []
    round_offset = 0
    status = "not_certified"
    for p in range(opts.p0, opts.p_max + 1):
        res = run_rbcd(g, Q, X, opts.rbcd, messages, round_offset)
        traces.append(res.trace)
        round_offset += res.iterations + 1
        X_star = lift_zero_pad(res.X)
        try:
            cert = verify(Q, X_star, layout, opts.eps_ladder[0], opts.stationarity_tol,
                          krylov_dim=opts.krylov_dim, max_restarts=opts.max_restarts, seed=opts.seed)
        except (NotCriticalPoint, LanczosNoConverge) as exc:
            logger.warning("rank %d: %s", p, exc)
            records.append(RankRecord(p, res.X, None, res.converged))
            status = "not_critical" if isinstance(exc, NotCriticalPoint) else "eigensolver_failed"
            break
        records.append(RankRecord(p, res.X, cert, res.converged))
        logger.info("rank %d: f=%.10g, lambda_min=%.3e", p, cost(Q, res.X), cert.min_eig)
        if cert.certified:
            status = "certified"
            break
        if p == opts.p_max:
            break
        try:
            X = escape_saddle(Q, X_star, cert.min_vec, layout, opts.escape_grid, opts.rbcd.retraction)
        except EscapeFailed as exc:
            logger.warning("rank %d: %s", p, exc)
            status = "escape_failed"
            break

    chosen, eps_used = records[-1], None
    if status == "certified":
        eps_used = opts.eps_ladder[0]
    else:
        # a rerun at a looser tolerance follows the same path and stops at the first passing rank
        for eps in opts.eps_ladder[1:]:
            passing = [r for r in records if r.certificate is not None and r.certificate.min_eig >= -eps]
            if passing:
                chosen, eps_used, status = passing[0], eps, "certified"
                break
    certified = status == "certified"
    if certified:
        idx = records.index(chosen)
        records, traces = records[: idx + 1], traces[: idx + 1]
        chosen.certificate.epsilon = eps_used
        chosen.certificate.verdict = "certified"

    f_sdp = cost(Q, chosen.X)
    rounded = round_solution(g, chosen.X)
    f_rounded = cost(Q, rounded.X)
    report = SolveReport(
        poses=rounded.poses,
        landmarks=rounded.landmarks,
        f_sdp=f_sdp,
        f_rounded=f_rounded,
        suboptimality_bound=relative_gap(f_rounded, f_sdp),
        certified=certified,
        certified_rank=chosen.rank if certified else None,
        epsilon=eps_used,
        traces=traces,
        certificate=chosen.certificate,
        X_star=chosen.X,
        X_rounded=rounded.X,
        messages=messages,
        status=status,
        ranks=records,
    )
    if not report.lower_bound_ok:
        logger.warning("lower bound violated: f_sdp=%.12g > f_rounded=%.12g", f_sdp, f_rounded)
    return report
