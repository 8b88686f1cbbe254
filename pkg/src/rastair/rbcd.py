"""Riemannian block coordinate descent with simulated synchronous message passing.

Each agent owns a block of columns of ``X``. Before updating, an agent reads
its own columns plus a :class:`PublicCache` holding copies of the neighbour
columns it is coupled to. After every round the agents that changed push their
public columns to their neighbours; every push is recorded in a message log
that can be audited for privacy.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .exceptions import NonDecreasingCostBug, StaleCacheError
from .manifold import retract, tangent_project
from .objective import CostTrace, block_layout, cost, riemannian_gradient
from .problem import INTER_LOOP, PUBLIC, ProblemGraph, StateId, agent_block_index, neighbor_columns
from .trust_region import QuadraticProblem, noise_floor, riemannian_trust_region

logger = logging.getLogger(__name__)

ROUND_ROBIN = "round_robin"
UNIFORM_RANDOM = "uniform_random"
PARALLEL = "parallel"
GREEDY = "greedy"

GRADIENT = "gradient"
TRUST_REGION = "trust_region"


@dataclass
class RbcdOptions:
    max_iterations: int = 5000
    grad_norm_tol: float = 1e-6
    block_selection: str = ROUND_ROBIN
    inner_solver: str = TRUST_REGION
    inner_iterations: int = 1
    armijo_c: float = 1e-4
    shrink: float = 0.5
    seed: int = 0
    n_jobs: int = 1
    retraction: str = "polar"

    def __post_init__(self):
        if self.grad_norm_tol <= 0 or self.max_iterations < 0:
            raise ValueError("grad_norm_tol must be > 0 and max_iterations >= 0")
        if self.block_selection not in (ROUND_ROBIN, UNIFORM_RANDOM, PARALLEL, GREEDY):
            raise ValueError(f"unknown block_selection {self.block_selection!r}")
        if self.inner_solver not in (GRADIENT, TRUST_REGION):
            raise ValueError(f"unknown inner_solver {self.inner_solver!r}")
        if not (0 < self.armijo_c < 1 and 0 < self.shrink < 1):
            raise ValueError("armijo_c and shrink must lie in (0, 1)")


@dataclass(frozen=True, slots=True)
class Message:
    round: int
    sender: int
    receiver: int
    state: str
    nbytes: int

    def to_line(self) -> str:
        return f"{self.round}\t{self.sender}\t{self.receiver}\t{self.state}\t{self.nbytes}"


def _key_name(key) -> str:
    if isinstance(key, StateId):
        return key.name
    return f"r{key[1]}"


@dataclass
class PublicCache:
    """Snapshot of the foreign columns one agent is coupled to."""

    agent: int
    entries: list  # (owner, key, columns, slot slice)
    columns: np.ndarray
    values: np.ndarray
    version: int = -1

    @classmethod
    def for_agent(cls, agent: int, needed: dict, p: int):
        entries, cols, start = [], [], 0
        for owner, items in needed.items():
            for key, c in items:
                entries.append((owner, key, c, slice(start, start + len(c))))
                cols.append(c)
                start += len(c)
        columns = np.concatenate(cols).astype(int) if cols else np.zeros(0, dtype=int)
        return cls(agent, entries, columns, np.zeros((p, len(columns))))


class AgentWorker:
    """Local state of one agent: its block of ``Q`` and its neighbour cache."""

    def __init__(self, g: ProblemGraph, Q, agent: int, needed: dict, p: int):
        block = agent_block_index(g)[agent]
        self.agent = agent
        self.columns = block.columns
        self.layout = block_layout(g, block)
        self.cache = PublicCache.for_agent(agent, needed, p)
        Qc = sp.csc_matrix(Q)
        self.Q_oo = sp.csr_matrix(Qc[:, self.columns][self.columns, :])
        self.Q_no = sp.csr_matrix(Qc[:, self.columns][self.cache.columns, :])
        self.B_o = self.B_n = None
        B = getattr(Q, "factor", None)
        if B is not None:
            # residual terms touching this agent, split into own and cached rows
            B = sp.csr_matrix(B)
            terms = np.unique(B[self.columns, :].indices)
            Bt = sp.csc_matrix(B[:, terms])
            rows = np.unique(Bt.indices)
            known = np.union1d(self.columns, self.cache.columns)
            if not np.all(np.isin(rows, known)):
                raise ValueError(f"agent {agent}: coupled columns missing from the neighbour cache")
            self.B_o = sp.csr_matrix(Bt[self.columns, :])
            self.B_n = sp.csr_matrix(Bt[self.cache.columns, :])
        lay = self.layout
        self.trans = np.arange(lay.sphere_end, lay.k)
        self.cons = np.arange(0, lay.sphere_end)
        Q_oo = self.Q_oo.toarray()
        self.Q_TT_pinv = np.linalg.pinv(Q_oo[np.ix_(self.trans, self.trans)], hermitian=True)
        self.Q_CT = Q_oo[np.ix_(self.cons, self.trans)]
        # Gershgorin bound on the local Lipschitz constant
        lip = 2.0 * float(np.abs(Q_oo).sum(axis=1).max()) if Q_oo.size else 1.0
        self.step = 1.0 / max(lip, 1e-12)
        # trust-region radius carried across rounds, so a rejected step is not retried verbatim
        self.radius = 1.0

    def local_problem(self) -> QuadraticProblem:
        if self.B_o is None:
            linear = np.asarray(self.Q_no.T @ self.cache.values.T).T
            return QuadraticProblem(self.Q_oo, self.layout, linear)
        offset = np.asarray(self.B_n.T @ self.cache.values.T).T
        linear = np.asarray(self.B_o @ offset.T).T
        return QuadraticProblem(self.Q_oo, self.layout, linear, factor=self.B_o, offset=offset)

    def solve_translations(self, Y, linear):
        if len(self.trans) == 0:
            return Y
        Y = Y.copy()
        rhs = Y[:, self.cons] @ self.Q_CT + linear[:, self.trans]
        Y[:, self.trans] = -rhs @ self.Q_TT_pinv
        return Y


def greedy_coloring(adjacency: dict) -> list:
    """Colour classes of the communication graph, lowest agent index first."""
    colors = {}
    for a in sorted(adjacency):
        used = {colors[b] for b in adjacency[a] if b in colors}
        colors[a] = next(c for c in range(len(adjacency) + 1) if c not in used)
    classes = [[] for _ in range(max(colors.values()) + 1)] if colors else []
    for a, c in sorted(colors.items()):
        classes[c].append(a)
    return classes


def select_blocks(round_index: int, opts: RbcdOptions, rng: np.random.Generator,
                  agents, adjacency: dict | None = None, block_norms: dict | None = None) -> list:
    """Agents to update this round.

    ``greedy`` picks the agent with the largest block gradient norm (ties to
    the lowest index); it needs ``block_norms``, one scalar per agent.
    """
    agents = sorted(agents)
    if opts.block_selection == GREEDY:
        if block_norms is None:
            raise ValueError("greedy selection needs block gradient norms")
        return [max(agents, key=lambda a: (block_norms[a], -a))]
    if opts.block_selection == ROUND_ROBIN:
        return [agents[round_index % len(agents)]]
    if opts.block_selection == UNIFORM_RANDOM:
        return [agents[int(rng.integers(len(agents)))]]
    classes = greedy_coloring(adjacency or {a: frozenset() for a in agents})
    return classes[round_index % len(classes)]


def exchange_public_states(workers: dict, X: np.ndarray, round_index: int, log: list,
                           senders=None) -> None:
    """Push owners' current columns into neighbour caches.

    Only agents in ``senders`` (all when ``None``) emit messages; every cache
    is stamped with ``round_index`` afterwards.
    """
    nbytes_per_col = X.shape[0] * X.itemsize
    for receiver in sorted(workers):
        cache = workers[receiver].cache
        cache.version = round_index
        for owner, key, cols, slot in cache.entries:
            if senders is not None and owner not in senders:
                continue
            cache.values[:, slot] = X[:, cols]
            log.append(Message(round_index, owner, receiver, _key_name(key), nbytes_per_col * len(cols)))


def block_update(worker: AgentWorker, X: np.ndarray, opts: RbcdOptions, round_index: int) -> np.ndarray:
    """Return the agent's improved block; neighbours are read from its cache only."""
    if worker.cache.version != round_index:
        raise StaleCacheError(
            f"agent {worker.agent} cache at version {worker.cache.version}, expected {round_index}")
    problem = worker.local_problem()
    Y = X[:, worker.columns].copy()
    Y_t = worker.solve_translations(Y, problem.linear)
    if problem.cost_change(Y, Y_t) <= 0:
        Y = Y_t
    if opts.inner_solver == TRUST_REGION:
        res = riemannian_trust_region(problem, Y, grad_norm_tol=0.1 * opts.grad_norm_tol,
                                      max_iterations=opts.inner_iterations, radius=worker.radius,
                                      retraction=opts.retraction, record=False)
        worker.radius = max(res.radius, 1e-10)
        return res.Y if problem.cost_change(Y, res.Y) <= noise_floor(problem.cost(Y)) else Y
    lay = worker.layout
    for _ in range(opts.inner_iterations):
        G = problem.egrad(Y)
        G[:, worker.trans] = 0.0
        grad = tangent_project(Y, G, lay)
        gg = float(np.sum(grad * grad))
        if np.sqrt(gg) <= 0.1 * opts.grad_norm_tol:
            break
        alpha = worker.step
        accepted = False
        for _ in range(60):
            Y_try = retract(Y, -grad, lay, step=alpha, method=opts.retraction)
            change = problem.cost_change(Y, Y_try)
            if change <= -opts.armijo_c * alpha * gg:
                accepted = True
                break
            alpha *= opts.shrink
        if not accepted:
            break
        worker.step = alpha / opts.shrink
        Y_t = worker.solve_translations(Y_try, problem.linear)
        Y = Y_t if problem.cost_change(Y_try, Y_t) <= 0 else Y_try
    return Y


@dataclass
class RbcdResult:
    X: np.ndarray
    trace: CostTrace
    messages: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    def __iter__(self):
        yield self.X
        yield self.trace


def make_workers(g: ProblemGraph, Q, p: int) -> dict:
    needed = neighbor_columns(g)
    return {a: AgentWorker(g, Q, a, needed.get(a, {}), p) for a in g.agents}


def run_rbcd(g: ProblemGraph, Q, X0: np.ndarray, opts: RbcdOptions | None = None,
             messages: list | None = None, round_offset: int = 0) -> RbcdResult:
    """Drive block updates until ``||grad f|| <= grad_norm_tol`` or the iteration cap."""
    opts = opts or RbcdOptions()
    X = np.array(X0, dtype=float, copy=True)
    p = X.shape[0]
    layout = g.layout
    workers = make_workers(g, Q, p)
    log = messages if messages is not None else []
    rng = np.random.default_rng(opts.seed)
    adjacency = g.communication_graph

    def gradient_norms(X):
        G = riemannian_gradient(Q, X, layout)
        per_agent = {a: float(np.linalg.norm(G[:, w.columns])) for a, w in workers.items()}
        return float(np.linalg.norm(G)), per_agent

    f = cost(Q, X)
    gn, block_norms = gradient_norms(X)
    trace = CostTrace(rank=p)
    trace.append(0, f, gn)
    exchange_public_states(workers, X, round_offset, log)

    pool = ThreadPoolExecutor(opts.n_jobs) if opts.n_jobs > 1 else None
    it = 0
    try:
        while gn > opts.grad_norm_tol and it < opts.max_iterations:
            round_index = round_offset + it
            blocks = select_blocks(it, opts, rng, g.agents, adjacency, block_norms)
            if pool is not None and len(blocks) > 1:
                updates = list(pool.map(lambda a: block_update(workers[a], X, opts, round_index), blocks))
            else:
                updates = [block_update(workers[a], X, opts, round_index) for a in blocks]
            for a, Y in zip(blocks, updates):
                X[:, workers[a].columns] = Y
            it += 1
            exchange_public_states(workers, X, round_offset + it, log, senders=set(blocks))
            f_new = cost(Q, X)
            if f_new > f + 1e-9 * abs(f):
                raise NonDecreasingCostBug(f"cost rose from {f!r} to {f_new!r} at iteration {it}")
            f = f_new
            gn, block_norms = gradient_norms(X)
            trace.append(it, f, gn)
    finally:
        if pool is not None:
            pool.shutdown()
    trace.converged = gn <= opts.grad_norm_tol
    if not trace.converged:
        logger.info("RBCD hit the iteration cap (%d) with gradient norm %.3e", it, gn)
    return RbcdResult(X, trace, log, trace.converged, it)


def audit_message_log(g: ProblemGraph, messages) -> list:
    """Messages that reference a private state or a non-shared auxiliary column."""
    public_names = {s.name for s, lab in g.labels.items() if lab == PUBLIC}
    shared_units = {
        f"r{i}" for i, m in enumerate(g.range_measurements) if g.edge_class(m) == INTER_LOOP
    }
    return [m for m in messages if m.state not in public_names and m.state not in shared_units]


def write_message_log(messages, path) -> None:
    with open(path, "w") as fh:
        fh.write("round\tsender\treceiver\tstate\tbytes\n")
        for m in messages:
            fh.write(m.to_line() + "\n")
