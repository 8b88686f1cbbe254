"""Sparse data matrix ``Q`` and the cost ``f(X) = <Q, X^T X>`` with its gradients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .manifold import Layout, tangent_project
from .problem import ProblemGraph


def build_factor(g: ProblemGraph) -> sp.csr_matrix:
    """Sparse ``B`` (``k x r``) with ``Q = B B^T``; ``X B`` stacks the weighted residuals.

    Every measurement contributes ``sqrt(w) * M`` on its own index set, with
    ``X[:, idx] @ M`` the residual:

    * rotation:    ``R_j - R_i Rt``          (weight kappa)
    * translation: ``t_j - t_i - R_i tt``    (weight tau)
    * range:       ``t_j - t_i - r * u_ij``  (weight rho)
    """
    d = g.d
    rows, cols, vals = [], [], []
    ncols = 0

    def add(idx, M, w):
        nonlocal ncols
        idx = np.asarray(idx)
        rows.append(np.repeat(idx, M.shape[1]))
        cols.append(np.tile(np.arange(ncols, ncols + M.shape[1]), len(idx)))
        vals.append(np.sqrt(w) * M.ravel())
        ncols += M.shape[1]

    eye = np.eye(d)
    for m in g.pose_measurements:
        ri, rj = g.rotation_columns(m.i), g.rotation_columns(m.j)
        add(np.concatenate([ri, rj]), np.vstack([-m.rotation, eye]), m.kappa)
        idx = np.concatenate([ri, [g.translation_column(m.i), g.translation_column(m.j)]])
        add(idx, np.concatenate([-m.translation, [-1.0, 1.0]])[:, None], m.tau)
    for a, m in enumerate(g.range_measurements):
        idx = [g.translation_column(m.i), g.translation_column(m.j), g.unit_column(a)]
        add(idx, np.array([[-1.0], [1.0], [-m.range]]), m.rho)

    k = g.k
    if not rows:
        return sp.csr_matrix((k, 0))
    B = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(k, ncols))
    return B.tocsr()


def build_data_matrix(g: ProblemGraph) -> sp.csr_matrix:
    """Assemble ``Q`` so that ``<Q, X^T X>`` is the QCQP cost at rank ``d``.

    The factor ``B`` is kept as ``Q.factor`` so :func:`cost` can sum squared
    residuals instead of the cancellation-prone quadratic form.
    """
    B = build_factor(g)
    Q = sp.csr_matrix(B @ B.T)
    Q = 0.5 * (Q + Q.T)
    Q.sum_duplicates()
    Q.sort_indices()
    Q = sp.csr_matrix(Q)
    Q.factor = B
    return Q


def cost(Q, X: np.ndarray) -> float:
    """``<Q, X^T X>_F``, as ``||X B||_F^2`` when ``Q`` carries its factor."""
    B = getattr(Q, "factor", None)
    if B is not None:
        R = np.asarray(B.T @ X.T)
        return float(np.sum(R * R))
    return float(np.sum((Q @ X.T) * X.T))


def euclidean_gradient(Q, X: np.ndarray) -> np.ndarray:
    return 2.0 * np.asarray(Q @ X.T).T


def riemannian_gradient(Q, X: np.ndarray, layout: Layout) -> np.ndarray:
    return tangent_project(X, euclidean_gradient(Q, X), layout)


def gradient_norm(Q, X: np.ndarray, layout: Layout) -> float:
    return float(np.linalg.norm(riemannian_gradient(Q, X, layout)))


def block_layout(g: ProblemGraph, block) -> Layout:
    return Layout(g.d, len(block.rotation) // g.d, len(block.unit), len(block.translation))


def block_gradient(Q, X: np.ndarray, columns: np.ndarray, layout: Layout) -> np.ndarray:
    """Riemannian gradient restricted to ``columns``.

    Only the rows of ``Q[:, columns]`` that are structurally nonzero are read,
    i.e. the block's own columns plus the neighbour columns it is coupled to.
    """
    Qc = sp.csc_matrix(Q)[:, columns]
    touched = np.unique(Qc.indices)
    egrad = 2.0 * (X[:, touched] @ Qc[touched, :].toarray())
    return tangent_project(X[:, columns], egrad, layout)


@dataclass
class CostTrace:
    """Per-iterate ``(iteration, f, ||grad f||)`` for one rank of the staircase."""

    rank: int
    iterations: list = field(default_factory=list)
    costs: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    converged: bool = False

    def append(self, iteration: int, f: float, grad_norm: float) -> None:
        self.iterations.append(int(iteration))
        self.costs.append(float(f))
        self.grad_norms.append(float(grad_norm))

    def __len__(self) -> int:
        return len(self.iterations)

    def is_monotone(self, rtol: float = 1e-9) -> bool:
        c = np.asarray(self.costs)
        return bool(np.all(c[1:] <= c[:-1] + rtol * np.abs(c[:-1])))
