"""Multi-agent measurement graph with ownership and public/private labels."""

from __future__ import annotations

import string
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import (
    DanglingStateReference,
    DisconnectedGraph,
    DuplicateMeasurementKey,
    OrphanLandmark,
    ProblemError,
)

POSE = "pose"
LANDMARK = "landmark"

PUBLIC = "public"
PRIVATE = "private"

ODOMETRY = "odometry"
INTRA_LOOP = "intra_loop"
INTER_LOOP = "inter_loop"

_LETTERS = string.ascii_lowercase


def agent_letter(agent: int) -> str:
    if not 0 <= agent < len(_LETTERS):
        raise ValueError(f"agent index {agent} has no letter prefix")
    return _LETTERS[agent]


def agent_from_letter(letter: str) -> int:
    return _LETTERS.index(letter)


class StateId(NamedTuple):
    """A pose or landmark, keyed by owning agent and local ordinal."""

    agent: int
    kind: str
    index: int

    @property
    def name(self) -> str:
        prefix = "L" if self.kind == LANDMARK else ""
        return f"{prefix}{agent_letter(self.agent)}{self.index}"

    @property
    def is_pose(self) -> bool:
        return self.kind == POSE


def pose_id(agent: int, index: int) -> StateId:
    return StateId(agent, POSE, index)


def landmark_id(agent: int, index: int) -> StateId:
    return StateId(agent, LANDMARK, index)


@dataclass(frozen=True, eq=False)
class RelativePoseMeasurement:
    """Noisy relative transform ``T_j = T_i * (rotation, translation)``.

    ``rotation_params`` optionally keeps the file representation (quaternion
    ``(qx, qy, qz, qw)`` in 3D, ``(theta,)`` in 2D) so writers can reproduce it
    bit for bit.
    """

    i: StateId
    j: StateId
    rotation: np.ndarray
    translation: np.ndarray
    kappa: float
    tau: float
    rotation_params: tuple | None = None

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float)
        trans = np.array(self.translation, dtype=float).reshape(-1)
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @property
    def key(self):
        return ("pose", self.i, self.j)


@dataclass(frozen=True, eq=False)
class RangeMeasurement:
    """Scalar distance between two states, collected by ``owner``."""

    i: StateId
    j: StateId
    range: float
    rho: float
    owner: int | None = None

    def __post_init__(self):
        if self.owner is None:
            # the collecting sensor sits on a pose; landmark-landmark edges fall back to i
            owner = self.i.agent if self.i.is_pose or not self.j.is_pose else self.j.agent
            object.__setattr__(self, "owner", owner)
        object.__setattr__(self, "range", float(self.range))
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def key(self):
        return ("range", self.i, self.j)


@dataclass(frozen=True)
class AgentBlock:
    """Column ranges of ``X`` owned by one agent (rotation, auxiliary, translation)."""

    agent: int
    rotation: range
    unit: range
    translation: range

    @property
    def ranges(self) -> list[range]:
        return [self.rotation, self.unit, self.translation]

    @property
    def columns(self) -> np.ndarray:
        return np.concatenate([np.arange(r.start, r.stop) for r in self.ranges]).astype(int)

    @property
    def width(self) -> int:
        return len(self.rotation) + len(self.unit) + len(self.translation)


@dataclass(frozen=True, eq=False)
class ProblemGraph:
    """Immutable distributed RA-SLAM instance.

    Built through :func:`build_problem`, which validates the inputs and fills in
    edge classes and public/private labels. Columns of the lifted variable are
    laid out as ``[rotations | unit vectors | translations]``; inside each
    section states are grouped by agent, poses before landmarks.
    """

    d: int
    poses: tuple
    landmarks: tuple
    pose_measurements: tuple
    range_measurements: tuple
    agents: tuple
    edge_classes: tuple = ()
    labels: dict = field(default_factory=dict)
    vertex_values: dict = field(default_factory=dict)

    @property
    def n_poses(self) -> int:
        return len(self.poses)

    @property
    def n_landmarks(self) -> int:
        return len(self.landmarks)

    @property
    def n(self) -> int:
        return self.n_poses + self.n_landmarks

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.range_measurements)

    @property
    def k(self) -> int:
        return self.n_poses * self.d + self.l + self.n

    @property
    def measurements(self) -> tuple:
        return self.pose_measurements + self.range_measurements

    @cached_property
    def states(self) -> tuple:
        return tuple(sorted(self.poses + self.landmarks, key=_state_sort_key))

    @property
    def ownership(self) -> dict:
        return {s: s.agent for s in self.states}

    @cached_property
    def _pose_slot(self) -> dict:
        return {s: i for i, s in enumerate(self.poses)}

    @cached_property
    def _translation_slot(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    @property
    def rotation_offset(self) -> int:
        return 0

    @property
    def unit_offset(self) -> int:
        return self.n_poses * self.d

    @property
    def translation_offset(self) -> int:
        return self.n_poses * self.d + self.l

    def rotation_columns(self, state: StateId) -> np.ndarray:
        start = self._pose_slot[state] * self.d
        return np.arange(start, start + self.d)

    def translation_column(self, state: StateId) -> int:
        return self.translation_offset + self._translation_slot[state]

    def unit_column(self, range_index: int) -> int:
        return self.unit_offset + range_index

    def state_columns(self, state: StateId) -> np.ndarray:
        """Columns a neighbour must cache to see ``state``."""
        t = np.array([self.translation_column(state)])
        if state.is_pose:
            return np.concatenate([self.rotation_columns(state), t])
        return t

    @cached_property
    def layout(self):
        from .manifold import Layout

        return Layout(self.d, self.n_poses, self.l, self.n)

    def edge_class(self, measurement) -> str:
        return self._class_by_key[measurement.key]

    @cached_property
    def _class_by_key(self) -> dict:
        return {m.key: c for m, c in zip(self.measurements, self.edge_classes)}

    @cached_property
    def communication_graph(self) -> dict:
        """Agent adjacency induced by inter-agent measurements."""
        adj = {a: set() for a in self.agents}
        for m in self.measurements:
            if m.i.agent != m.j.agent:
                adj[m.i.agent].add(m.j.agent)
                adj[m.j.agent].add(m.i.agent)
        return {a: frozenset(v) for a, v in adj.items()}

    def agent_blocks(self) -> dict:
        return agent_block_index(self)

    def with_vertex_values(self, values: dict) -> "ProblemGraph":
        return ProblemGraph(
            self.d, self.poses, self.landmarks, self.pose_measurements,
            self.range_measurements, self.agents, self.edge_classes,
            dict(self.labels), dict(values),
        )


def _state_sort_key(s: StateId):
    return (s.agent, 0 if s.is_pose else 1, s.index)


def _classify(m) -> str:
    if m.i.agent != m.j.agent:
        return INTER_LOOP
    if (isinstance(m, RelativePoseMeasurement) and m.i.is_pose and m.j.is_pose
            and abs(m.i.index - m.j.index) == 1):
        return ODOMETRY
    return INTRA_LOOP


def classify_edges(measurements: Iterable) -> tuple:
    """Edge class of each measurement; depends only on its endpoints."""
    return tuple(_classify(m) for m in measurements)


def classify_states(g: ProblemGraph) -> dict:
    """Public iff the state is an endpoint of an inter-agent measurement."""
    labels = {s: PRIVATE for s in g.states}
    for m, c in zip(g.measurements, g.edge_classes):
        if c == INTER_LOOP:
            labels[m.i] = PUBLIC
            labels[m.j] = PUBLIC
    return labels


def landmark_owner(agent_counts: Counter, landmark=None) -> int:
    """Agent with the most incident ranges; ties go to the lowest index."""
    if not agent_counts:
        raise OrphanLandmark(f"landmark {landmark!r} has no incident range measurement")
    best = max(agent_counts.values())
    return min(a for a, c in agent_counts.items() if c == best)


def assign_landmark_ownership(g: ProblemGraph) -> dict:
    counts = {lm: Counter() for lm in g.landmarks}
    for m in g.range_measurements:
        for this, other in ((m.i, m.j), (m.j, m.i)):
            if not this.is_pose and other.is_pose:
                counts[this][other.agent] += 1
    return {lm: landmark_owner(c, lm.name) for lm, c in counts.items()}


def agent_block_index(g: ProblemGraph, agents: Sequence[int] | None = None) -> dict:
    """Per-agent column ranges of ``X``; disjoint and exhaustive."""
    agents = sorted(set(g.agents) | set(agents or ()))
    rot_counts = Counter(s.agent for s in g.poses)
    unit_counts = Counter(m.owner for m in g.range_measurements)
    trans_counts = Counter(s.agent for s in g.states)
    rot, unit, trans = g.rotation_offset, g.unit_offset, g.translation_offset
    blocks = {}
    for a in agents:
        nr, nu, nt = rot_counts[a] * g.d, unit_counts[a], trans_counts[a]
        blocks[a] = AgentBlock(a, range(rot, rot + nr), range(unit, unit + nu),
                               range(trans, trans + nt))
        rot, unit, trans = rot + nr, unit + nu, trans + nt
    return blocks


def _check_rotation(R: np.ndarray, d: int, tol: float = 1e-9) -> None:
    if R.shape != (d, d):
        raise ProblemError(f"rotation has shape {R.shape}, expected {(d, d)}")
    if np.abs(R.T @ R - np.eye(d)).max() > tol or np.linalg.det(R) < 0:
        raise ProblemError("measured rotation is not in SO(d)")


def build_problem(
    pose_measurements: Sequence[RelativePoseMeasurement] = (),
    range_measurements: Sequence[RangeMeasurement] = (),
    d: int | None = None,
    states: Iterable[StateId] | None = None,
    vertex_values: dict | None = None,
) -> ProblemGraph:
    """Validate measurements and assemble a :class:`ProblemGraph`.

    ``states`` declares the variables; when omitted they are inferred from
    measurement endpoints.
    """
    pose_measurements = list(pose_measurements)
    range_measurements = list(range_measurements)
    if d is None:
        if not pose_measurements:
            raise ProblemError("dimension d is required when there are no pose measurements")
        d = pose_measurements[0].rotation.shape[0]
    if d not in (2, 3):
        raise ProblemError(f"dimension must be 2 or 3, got {d}")

    endpoints = {s for m in pose_measurements + range_measurements for s in (m.i, m.j)}
    declared = set(states) if states is not None else set(endpoints)
    missing = endpoints - declared
    if missing:
        raise DanglingStateReference(f"measurements reference undeclared states: {sorted(missing)[:5]}")
    if not declared:
        raise ProblemError("problem has no states")

    seen = set()
    for m in pose_measurements + range_measurements:
        if m.key in seen:
            raise DuplicateMeasurementKey(f"duplicate measurement {m.key}")
        seen.add(m.key)
        if m.i == m.j:
            raise ProblemError(f"self-loop on {m.i}")
    for m in pose_measurements:
        if not (m.i.is_pose and m.j.is_pose):
            raise ProblemError("relative pose measurements must join two poses")
        _check_rotation(m.rotation, d)
        if m.translation.shape != (d,):
            raise ProblemError("translation dimension does not match d")
        if not (m.kappa > 0 and m.tau > 0):
            raise ProblemError("kappa and tau must be positive")
    for m in range_measurements:
        if not m.rho > 0 or m.range < 0:
            raise ProblemError("range must be >= 0 and rho > 0")
        if m.owner not in (m.i.agent, m.j.agent):
            raise ProblemError("a range measurement must be owned by one of its endpoint agents")

    poses = tuple(sorted((s for s in declared if s.is_pose), key=_state_sort_key))
    landmarks = tuple(sorted((s for s in declared if not s.is_pose), key=_state_sort_key))
    agents = tuple(sorted({s.agent for s in poses}))
    stray = {s.agent for s in landmarks} - set(agents)
    stray |= {m.owner for m in range_measurements} - set(agents)
    if stray:
        raise ProblemError(f"agents {sorted(stray)} own no poses")

    states_sorted = sorted(declared, key=_state_sort_key)
    slot = {s: i for i, s in enumerate(states_sorted)}
    if len(states_sorted) > 1:
        rows = [slot[m.i] for m in pose_measurements + range_measurements]
        cols = [slot[m.j] for m in pose_measurements + range_measurements]
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(slot), len(slot)))
        n_comp, _ = connected_components(adj, directed=False)
        if n_comp != 1:
            raise DisconnectedGraph(f"measurement graph has {n_comp} connected components")

    # unit-vector columns are grouped by owning agent
    range_measurements.sort(key=lambda m: (m.owner, slot[m.i], slot[m.j]))
    pose_measurements.sort(key=lambda m: (slot[m.i], slot[m.j]))
    measurements = tuple(pose_measurements) + tuple(range_measurements)
    classes = classify_edges(measurements)
    g = ProblemGraph(
        d=d,
        poses=poses,
        landmarks=landmarks,
        pose_measurements=tuple(pose_measurements),
        range_measurements=tuple(range_measurements),
        agents=agents,
        edge_classes=classes,
        vertex_values=dict(vertex_values or {}),
    )
    object.__setattr__(g, "labels", classify_states(g))
    return g


def neighbor_columns(g: ProblemGraph) -> dict:
    """For each agent, the foreign columns it must cache, keyed by what they encode.

    Returns ``{agent: {owner: [(key, columns), ...]}}`` where ``key`` is a
    :class:`StateId` or ``("unit", range_index)``.
    """
    needed = defaultdict(lambda: defaultdict(dict))
    for m in g.pose_measurements:
        if m.i.agent != m.j.agent:
            needed[m.i.agent][m.j.agent][m.j] = g.state_columns(m.j)
            needed[m.j.agent][m.i.agent][m.i] = g.state_columns(m.i)
    for idx, m in enumerate(g.range_measurements):
        for this, other in ((m.i, m.j), (m.j, m.i)):
            if this.agent == other.agent:
                continue
            # a pose already cached for a relative pose edge keeps its rotation columns
            needed[this.agent][other.agent].setdefault(other, np.array([g.translation_column(other)]))
            if m.owner != this.agent:
                needed[this.agent][m.owner][("unit", idx)] = np.array([g.unit_column(idx)])
    return {
        a: {o: sorted(v.items(), key=lambda kv: int(kv[1][0])) for o, v in sorted(by_owner.items())}
        for a, by_owner in sorted(needed.items())
    }
