"""Text dataset format, ground-truth sidecars and the synthetic multi-agent generator.

Records (whitespace separated, ``#`` starts a comment)::

    VERTEX_SE3:QUAT a0 x y z qx qy qz qw
    VERTEX_SE2      a0 x y theta
    VERTEX_XYZ      La0 x y z
    VERTEX_XY       La0 x y
    EDGE_SE3:QUAT   a0 a1 x y z qx qy qz qw kappa tau
    EDGE_SE2        a0 a1 x y theta kappa tau
    EDGE_RANGE      a0 La0 range rho

Pose ids are an agent letter plus a local index; landmark ids are ``L`` plus
the owning agent letter and an index. Plain integers are read as poses of
agent ``a`` so standard g2o pose graphs load directly; their edges may carry
the full upper-triangular information matrix instead of ``kappa tau``.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from .exceptions import BaseDatasetTooSmall, OrphanLandmark, ParseError, UnitNormViolation
from .problem import (
    INTER_LOOP,
    INTRA_LOOP,
    ODOMETRY,
    ProblemGraph,
    RangeMeasurement,
    RelativePoseMeasurement,
    StateId,
    agent_from_letter,
    build_problem,
    landmark_id,
    landmark_owner,
    pose_id,
)

POSE_3D = "VERTEX_SE3:QUAT"
POSE_2D = "VERTEX_SE2"
LANDMARK_3D = "VERTEX_XYZ"
LANDMARK_2D = "VERTEX_XY"
EDGE_3D = "EDGE_SE3:QUAT"
EDGE_2D = "EDGE_SE2"
EDGE_RANGE = "EDGE_RANGE"

_POSE_NAME = re.compile(r"^([a-z])(\d+)$")
_LANDMARK_NAME = re.compile(r"^L([a-z])(\d+)$")
_INT_NAME = re.compile(r"^\d+$")

_CLASS_ORDER = {ODOMETRY: 0, INTRA_LOOP: 1, INTER_LOOP: 2}


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# -- rotation helpers ----------------------------------------------------------


def quat_to_matrix(q) -> np.ndarray:
    return Rotation.from_quat(np.asarray(q, dtype=float)).as_matrix()


def matrix_to_quat(R: np.ndarray) -> tuple:
    q = Rotation.from_matrix(R).as_quat()
    if q[3] < 0:
        q = -q
    return tuple(float(v) for v in q)


def angle_to_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def matrix_to_angle(R: np.ndarray) -> float:
    return float(np.arctan2(R[1, 0], R[0, 0]))


def pose_to_params(R: np.ndarray, t: np.ndarray) -> tuple:
    t = tuple(float(v) for v in t)
    if len(t) == 3:
        return t + matrix_to_quat(R)
    return t + (matrix_to_angle(R),)


def params_to_pose(params, d: int):
    params = np.asarray(params, dtype=float)
    if d == 3:
        return quat_to_matrix(params[3:7]), params[:3].copy()
    return angle_to_matrix(params[2]), params[:2].copy()


def _rotation_params(R: np.ndarray) -> tuple:
    return matrix_to_quat(R) if R.shape[0] == 3 else (matrix_to_angle(R),)


def _rotation_from_params(params, d: int) -> np.ndarray:
    return quat_to_matrix(params) if d == 3 else angle_to_matrix(params[0])


def weights_from_information(info: np.ndarray, d: int) -> tuple:
    """Isotropic ``(kappa, tau)`` from a full g2o information matrix.

    Translation first, rotation second (g2o ordering). ``tau = d / tr(Sigma_t)``;
    ``kappa = 3 / (2 tr(Sigma_R))`` in 3D and ``Omega_theta`` in 2D.
    """
    if d == 3:
        cov = np.linalg.inv(info)
        tau = 3.0 / np.trace(cov[:3, :3])
        kappa = 3.0 / (2.0 * np.trace(cov[3:, 3:]))
    else:
        cov = np.linalg.inv(info[:2, :2])
        tau = 2.0 / np.trace(cov)
        kappa = float(info[2, 2])
    return float(kappa), float(tau)


def _upper_to_full(vals, n) -> np.ndarray:
    M = np.zeros((n, n))
    M[np.triu_indices(n)] = vals
    return M + np.triu(M, 1).T


# -- parsing ---------------------------------------------------------------------


def _check_quat(q, lineno):
    if abs(np.linalg.norm(q) - 1.0) > 1e-6:
        raise UnitNormViolation(lineno, f"quaternion norm {np.linalg.norm(q):.9f} is not 1")


def _floats(tokens, n, lineno, what):
    if len(tokens) < n:
        raise ParseError(lineno, f"{what} needs {n} numbers, got {len(tokens)}")
    try:
        return [float(v) for v in tokens]
    except ValueError as exc:
        raise ParseError(lineno, f"bad number in {what}: {exc}") from None


def _pose_key(name, lineno):
    m = _POSE_NAME.match(name)
    if m:
        return pose_id(agent_from_letter(m.group(1)), int(m.group(2)))
    if _INT_NAME.match(name):
        return pose_id(0, int(name))
    raise ParseError(lineno, f"bad pose id {name!r}")


def _landmark_sort_key(name):
    m = _LANDMARK_NAME.match(name)
    if m:
        return (0, agent_from_letter(m.group(1)), int(m.group(2)), name)
    return (1, 0, 0, name)


def parse(path) -> ProblemGraph:
    """Read a dataset file into a validated :class:`ProblemGraph`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(0, f"cannot read {path}: {exc}") from None
    return parse_text(text)


def parse_text(text: str) -> ProblemGraph:
    d = None
    vertices = {}  # name -> (kind, params, lineno)
    pose_edges, range_edges = [], []

    def set_dim(dim, lineno):
        nonlocal d
        if d is None:
            d = dim
        elif d != dim:
            raise ParseError(lineno, "mixed 2D and 3D records")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        tag, args = tok[0], tok[1:]
        if tag in (POSE_3D, POSE_2D, LANDMARK_3D, LANDMARK_2D):
            dim = 3 if tag in (POSE_3D, LANDMARK_3D) else 2
            set_dim(dim, lineno)
            n = {POSE_3D: 7, POSE_2D: 3, LANDMARK_3D: 3, LANDMARK_2D: 2}[tag]
            if len(args) != n + 1:
                raise ParseError(lineno, f"{tag} expects an id and {n} numbers")
            name = args[0]
            vals = _floats(args[1:], n, lineno, tag)
            if name in vertices:
                raise ParseError(lineno, f"duplicate vertex {name}")
            if tag == POSE_3D:
                _check_quat(vals[3:], lineno)
            kind = "pose" if tag in (POSE_3D, POSE_2D) else "landmark"
            if kind == "landmark" and not name.startswith("L"):
                raise ParseError(lineno, f"landmark id {name!r} must start with 'L'")
            vertices[name] = (kind, tuple(vals), lineno)
        elif tag in (EDGE_3D, EDGE_2D):
            dim = 3 if tag == EDGE_3D else 2
            set_dim(dim, lineno)
            nmeas = 7 if dim == 3 else 3
            ninfo = 21 if dim == 3 else 6
            if len(args) - 2 not in (nmeas + 2, nmeas + ninfo):
                raise ParseError(lineno, f"{tag} expects {nmeas} numbers then kappa tau or {ninfo} information entries")
            vals = _floats(args[2:], nmeas, lineno, tag)
            meas, rest = vals[:nmeas], vals[nmeas:]
            if dim == 3:
                _check_quat(meas[3:], lineno)
            if len(rest) == 2:
                kappa, tau = rest
            else:
                kappa, tau = weights_from_information(_upper_to_full(rest, 6 if dim == 3 else 3), dim)
            pose_edges.append((args[0], args[1], meas, kappa, tau, lineno))
        elif tag == EDGE_RANGE:
            if len(args) != 4:
                raise ParseError(lineno, "EDGE_RANGE expects two ids, range and rho")
            r, rho = _floats(args[2:], 2, lineno, tag)
            range_edges.append((args[0], args[1], r, rho, lineno))
        else:
            raise ParseError(lineno, f"unknown record {tag!r}")

    if not vertices:
        raise ParseError(0, "no vertices")
    for e in pose_edges + range_edges:
        for name in e[:2]:
            if name not in vertices:
                raise ParseError(e[-1], f"edge references undeclared vertex {name!r}")
    for e in pose_edges:
        if vertices[e[0]][0] != "pose" or vertices[e[1]][0] != "pose":
            raise ParseError(e[-1], "relative pose edge must join two poses")

    ids = {}
    for name, (kind, _, lineno) in vertices.items():
        if kind == "pose":
            ids[name] = _pose_key(name, lineno)
    if len(set(ids.values())) != len(ids):
        raise ParseError(0, "pose ids collide after normalisation")

    counts = {name: Counter() for name, (kind, _, _) in vertices.items() if kind == "landmark"}
    for a, b, _, _, _ in range_edges:
        for this, other in ((a, b), (b, a)):
            if this in counts and other in ids:
                counts[this][ids[other].agent] += 1
    by_owner = {}
    for name in sorted(counts, key=_landmark_sort_key):
        try:
            owner = landmark_owner(counts[name], name)
        except OrphanLandmark as exc:
            raise ParseError(vertices[name][2], str(exc)) from None
        ids[name] = landmark_id(owner, by_owner.get(owner, 0))
        by_owner[owner] = by_owner.get(owner, 0) + 1

    pose_meas = []
    for a, b, meas, kappa, tau, lineno in pose_edges:
        if d == 3:
            rot_params, trans = tuple(meas[3:]), meas[:3]
        else:
            rot_params, trans = (meas[2],), meas[:2]
        pose_meas.append(RelativePoseMeasurement(
            ids[a], ids[b], _rotation_from_params(rot_params, d), trans, kappa, tau, rot_params))
    range_meas = [RangeMeasurement(ids[a], ids[b], r, rho) for a, b, r, rho, _ in range_edges]
    values = {ids[name]: vals for name, (_, vals, _) in vertices.items()}
    try:
        return build_problem(pose_meas, range_meas, d=d, states=ids.values(), vertex_values=values)
    except ValueError as exc:
        raise ParseError(0, str(exc)) from None


# -- writing ---------------------------------------------------------------------


def _vertex_line(s: StateId, params, d: int) -> str:
    if s.is_pose:
        tag = POSE_3D if d == 3 else POSE_2D
        if params is None:
            params = (0.0,) * d + ((0.0, 0.0, 0.0, 1.0) if d == 3 else (0.0,))
    else:
        tag = LANDMARK_3D if d == 3 else LANDMARK_2D
        if params is None:
            params = (0.0,) * d
    return " ".join([tag, s.name] + [fmt(v) for v in params])


def _sorted_measurements(g: ProblemGraph):
    slot = {s: i for i, s in enumerate(g.states)}
    keyed = []
    for m in g.measurements:
        kind = 0 if isinstance(m, RelativePoseMeasurement) else 1
        keyed.append(((_CLASS_ORDER[g.edge_class(m)], kind, slot[m.i], slot[m.j]), m))
    keyed.sort(key=lambda km: km[0])
    return [m for _, m in keyed]


def format_dataset(g: ProblemGraph) -> str:
    lines = [_vertex_line(s, g.vertex_values.get(s), g.d) for s in g.states]
    for m in _sorted_measurements(g):
        if isinstance(m, RelativePoseMeasurement):
            tag = EDGE_3D if g.d == 3 else EDGE_2D
            rot = m.rotation_params if m.rotation_params is not None else _rotation_params(m.rotation)
            nums = list(m.translation) + list(rot) + [m.kappa, m.tau]
            lines.append(" ".join([tag, m.i.name, m.j.name] + [fmt(v) for v in nums]))
        else:
            lines.append(" ".join([EDGE_RANGE, m.i.name, m.j.name, fmt(m.range), fmt(m.rho)]))
    return "\n".join(lines) + "\n"


def write(g: ProblemGraph, path, ground_truth: dict | None = None, ground_truth_path=None) -> None:
    """Write ``g`` canonically; optionally a vertex-only ground-truth sidecar."""
    Path(path).write_text(format_dataset(g))
    if ground_truth is not None:
        sidecar = ground_truth_path or ground_truth_sidecar(path)
        write_vertices(ground_truth, sidecar, g.d)


def ground_truth_sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".gt" + path.suffix)


def write_vertices(values: dict, path, d: int) -> None:
    """Vertex records only; ``values`` maps StateId to parameter tuples."""
    states = sorted(values, key=lambda s: (s.agent, 0 if s.is_pose else 1, s.index))
    Path(path).write_text("".join(_vertex_line(s, values[s], d) + "\n" for s in states))


def read_vertices(path) -> tuple:
    """Parse a vertex-only file; returns ``(d, {name: params})``."""
    d, out = None, {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(0, f"cannot read {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        n = {POSE_3D: 7, POSE_2D: 3, LANDMARK_3D: 3, LANDMARK_2D: 2}.get(tok[0])
        if n is None:
            continue
        dim = 3 if tok[0] in (POSE_3D, LANDMARK_3D) else 2
        if d is not None and d != dim:
            raise ParseError(lineno, "mixed 2D and 3D records")
        d = dim
        if len(tok) != n + 2:
            raise ParseError(lineno, f"{tok[0]} expects an id and {n} numbers")
        out[tok[1]] = tuple(_floats(tok[2:], n, lineno, tok[0]))
    if d is None:
        raise ParseError(0, "no vertices")
    return d, out


def estimate_values(poses: dict, landmarks: dict) -> dict:
    values = {s: pose_to_params(R, t) for s, (R, t) in poses.items()}
    values.update({s: tuple(float(v) for v in t) for s, t in landmarks.items()})
    return values


# -- synthetic generation --------------------------------------------------------


@dataclass
class GeneratorConfig:
    base: str = "grid3d"
    num_agents: int = 2
    num_landmarks: int = 8
    range_prob: float = 0.5
    rho: float = 100.0
    r_max: float = 100.0
    range_noise: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.range_prob <= 1.0:
            raise ValueError("range_prob must lie in [0, 1]")
        if self.rho <= 0 or self.r_max <= 0:
            raise ValueError("rho and r_max must be positive")
        if self.num_agents < 1 or self.num_agents > 26 or self.num_landmarks < 0:
            raise ValueError("num_agents must be in 1..26 and num_landmarks >= 0")


@dataclass
class SyntheticDataset:
    graph: ProblemGraph
    ground_truth: dict
    config: GeneratorConfig | None = None
    summary: dict = field(default_factory=dict)

    def truth_poses(self) -> dict:
        """Ground-truth poses as ``{name: (R, t)}``."""
        return {s.name: params_to_pose(p, self.graph.d) for s, p in self.ground_truth.items() if s.is_pose}


def split_contiguous(n: int, parts: int) -> list:
    """Even contiguous split; the remainder goes to the last part."""
    base = n // parts
    sizes = [base] * parts
    sizes[-1] += n - base * parts
    return sizes


def load_base(base) -> ProblemGraph:
    """A built-in base trajectory by name, or a pose-graph file path."""
    if isinstance(base, ProblemGraph):
        return base
    if base in BASE_DATASETS:
        return BASE_DATASETS[base]()
    return parse(base)


def generate_synthetic(cfg: GeneratorConfig, base: ProblemGraph | None = None) -> SyntheticDataset:
    """Turn a single-trajectory pose graph into a multi-agent RA-SLAM instance.

    Base vertex values are taken as ground truth. Poses are split evenly and
    contiguously across agents; landmarks are drawn uniformly in the
    trajectory's bounding box. Each pose, independently with probability
    ``range_prob``, ranges to a random other-agent pose and to a random
    landmark within ``r_max``.
    """
    base = load_base(cfg.base if base is None else base)
    rng = np.random.default_rng(cfg.seed)
    d = base.d
    base_poses = list(base.poses)
    n = len(base_poses)
    if n < cfg.num_agents:
        raise BaseDatasetTooSmall(f"{n} poses cannot be split among {cfg.num_agents} agents")
    truth = {s: params_to_pose(base.vertex_values[s], d) for s in base_poses}

    sizes = split_contiguous(n, cfg.num_agents)
    remap, owner_of = {}, []
    for agent, size in enumerate(sizes):
        for local in range(size):
            remap[base_poses[len(remap)]] = pose_id(agent, local)
            owner_of.append(agent)
    positions = np.array([truth[s][1] for s in base_poses])

    pose_meas = [
        RelativePoseMeasurement(remap[m.i], remap[m.j], m.rotation, m.translation, m.kappa, m.tau,
                                m.rotation_params)
        for m in base.pose_measurements
    ]

    lo, hi = positions.min(axis=0), positions.max(axis=0)
    landmarks = lo + (hi - lo) * rng.random((cfg.num_landmarks, d))
    sigma = 1.0 / np.sqrt(cfg.rho)
    owner_arr = np.array(owner_of)

    def measured(dist):
        return max(dist + (sigma * rng.standard_normal() if cfg.range_noise else 0.0), 0.0)

    pose_ranges, landmark_ranges = [], []
    for idx in range(n):
        here = positions[idx]
        if cfg.num_agents > 1 and rng.random() < cfg.range_prob:
            dist = np.linalg.norm(positions - here, axis=1)
            cand = np.flatnonzero((owner_arr != owner_arr[idx]) & (dist <= cfg.r_max))
            if cand.size:
                j = int(cand[rng.integers(cand.size)])
                pose_ranges.append((idx, j, measured(dist[j])))
        if cfg.num_landmarks and rng.random() < cfg.range_prob:
            dist = np.linalg.norm(landmarks - here, axis=1)
            cand = np.flatnonzero(dist <= cfg.r_max)
            if cand.size:
                j = int(cand[rng.integers(cand.size)])
                landmark_ranges.append((idx, j, measured(dist[j])))

    counts = [Counter() for _ in range(cfg.num_landmarks)]
    for idx, j, _ in landmark_ranges:
        counts[j][owner_of[idx]] += 1
    lm_ids, by_owner = {}, Counter()
    for j in range(cfg.num_landmarks):
        if not counts[j]:
            continue  # never observed, not part of the problem
        owner = landmark_owner(counts[j], j)
        lm_ids[j] = landmark_id(owner, by_owner[owner])
        by_owner[owner] += 1

    range_meas = [RangeMeasurement(remap[base_poses[i]], remap[base_poses[j]], r, cfg.rho)
                  for i, j, r in pose_ranges]
    range_meas += [RangeMeasurement(remap[base_poses[i]], lm_ids[j], r, cfg.rho)
                   for i, j, r in landmark_ranges]

    ground_truth = {remap[s]: pose_to_params(*truth[s]) for s in base_poses}
    ground_truth.update({lm_ids[j]: tuple(float(v) for v in landmarks[j]) for j in lm_ids})
    g = build_problem(pose_meas, range_meas, d=d, states=ground_truth.keys())

    from .staircase import initialize

    X0 = initialize(g)
    init_values = {}
    for s in g.poses:
        init_values[s] = pose_to_params(X0[:, g.rotation_columns(s)], X0[:, g.translation_column(s)])
    for s in g.landmarks:
        init_values[s] = tuple(float(v) for v in X0[:, g.translation_column(s)])
    g = g.with_vertex_values(init_values)
    summary = {
        "agents": cfg.num_agents,
        "poses": g.n_poses,
        "landmarks": g.n_landmarks,
        "range_edges": g.l,
        "pose_edges": len(g.pose_measurements),
    }
    return SyntheticDataset(g, ground_truth, cfg, summary)


def _noisy_measurement(Ri, ti, Rj, tj, i, j, rng, sigma_rot, sigma_trans):
    d = Ri.shape[0]
    R_rel = Ri.T @ Rj
    t_rel = Ri.T @ (tj - ti)
    if d == 3:
        R_rel = R_rel @ Rotation.from_rotvec(sigma_rot * rng.standard_normal(3)).as_matrix()
        kappa = 1.0 / (2.0 * sigma_rot ** 2) if sigma_rot > 0 else 1e4
    else:
        R_rel = R_rel @ angle_to_matrix(sigma_rot * rng.standard_normal())
        kappa = 1.0 / sigma_rot ** 2 if sigma_rot > 0 else 1e4
    t_rel = t_rel + sigma_trans * rng.standard_normal(d)
    tau = 1.0 / sigma_trans ** 2 if sigma_trans > 0 else 1e4
    params = _rotation_params(R_rel)
    R_rel = _rotation_from_params(params, d)
    return RelativePoseMeasurement(i, j, R_rel, t_rel, kappa, tau, params)


def _trajectory_graph(rotations, translations, edges, rng, sigma_rot, sigma_trans) -> ProblemGraph:
    d = translations.shape[1]
    ids = [pose_id(0, i) for i in range(len(translations))]
    meas = [
        _noisy_measurement(rotations[i], translations[i], rotations[j], translations[j],
                           ids[i], ids[j], rng, sigma_rot, sigma_trans)
        for i, j in edges
    ]
    values = {ids[i]: pose_to_params(rotations[i], translations[i]) for i in range(len(ids))}
    values = {s: tuple(float(v) for v in vals) for s, vals in values.items()}
    return build_problem(meas, (), d=d, states=ids, vertex_values=values)


def _random_rotations(n, d, rng, spread):
    if d == 3:
        return Rotation.from_rotvec(spread * rng.standard_normal((n, 3))).as_matrix()
    return np.array([angle_to_matrix(a) for a in spread * rng.standard_normal(n)])


def make_grid_dataset(side: int = 5, d: int = 3, spacing: float = 1.0, sigma_rot: float = 0.02,
                      sigma_trans: float = 0.05, seed: int = 0) -> ProblemGraph:
    """Boustrophedon walk through a ``side^d`` lattice with all lattice-neighbour loop closures."""
    rng = np.random.default_rng(seed)
    cells = []
    if d == 3:
        for z in range(side):
            layer = []
            for y in range(side):
                row = [(x, y, z) for x in range(side)]
                layer.extend(row if y % 2 == 0 else row[::-1])
            cells.extend(layer if z % 2 == 0 else layer[::-1])
    else:
        for y in range(side):
            row = [(x, y) for x in range(side)]
            cells.extend(row if y % 2 == 0 else row[::-1])
    translations = spacing * np.array(cells, dtype=float)
    rotations = _random_rotations(len(cells), d, rng, 0.5)
    index = {c: i for i, c in enumerate(cells)}
    edges = [(i, i + 1) for i in range(len(cells) - 1)]
    for c, i in index.items():
        for axis in range(d):
            nb = tuple(v + (1 if a == axis else 0) for a, v in enumerate(c))
            j = index.get(nb)
            if j is not None and abs(i - j) > 1:
                edges.append((min(i, j), max(i, j)))
    return _trajectory_graph(rotations, translations, edges, rng, sigma_rot, sigma_trans)


def make_sphere_dataset(rings: int = 10, per_ring: int = 12, radius: float = 10.0, sigma_rot: float = 0.02,
                        sigma_trans: float = 0.05, seed: int = 0) -> ProblemGraph:
    """Spiral of poses around a sphere; each pose also closes a loop with the ring below."""
    rng = np.random.default_rng(seed)
    n = rings * per_ring
    translations, rotations = [], []
    for r in range(rings):
        polar_angle = np.pi * (r + 1) / (rings + 1)
        for k in range(per_ring):
            az = 2 * np.pi * k / per_ring
            translations.append(radius * np.array([
                np.sin(polar_angle) * np.cos(az), np.sin(polar_angle) * np.sin(az), np.cos(polar_angle)]))
            rotations.append(Rotation.from_euler("zyx", [az + np.pi / 2, 0.0, 0.0]).as_matrix())
    translations = np.array(translations)
    rotations = np.array(rotations) @ _random_rotations(n, 3, rng, 0.05)
    edges = [(i, i + 1) for i in range(n - 1)]
    edges += [(i, i + per_ring) for i in range(n - per_ring)]
    return _trajectory_graph(rotations, translations, edges, rng, sigma_rot, sigma_trans)


BASE_DATASETS = {
    "grid3d": make_grid_dataset,
    "sphere": make_sphere_dataset,
}


def sweep_configs(bases=("grid3d", "sphere"), num_agents=(2, 4, 8), num_landmarks=(8, 16),
                  range_probs=(0.5, 1.0), seed=0):
    return [
        GeneratorConfig(base=b, num_agents=a, num_landmarks=lm, range_prob=p, seed=seed)
        for b in bases for a in num_agents for lm in num_landmarks for p in range_probs
    ]


def instance_name(cfg: GeneratorConfig) -> str:
    base = Path(str(cfg.base)).stem
    return f"{base}_a{cfg.num_agents}_l{cfg.num_landmarks}_p{cfg.range_prob:g}"
