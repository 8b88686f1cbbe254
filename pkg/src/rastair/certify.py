"""Dual certificate ``S = Q + sum_i lambda_i A_i`` and its minimum eigenpair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .exceptions import LanczosNoConverge, NotCriticalPoint
from .manifold import Layout

CERTIFIED = "certified"
DESCEND = "descend"

EPS_LADDER = (1e-3, 5e-3, 1e-2, 5e-2)


class ConstraintSet:
    """Equality constraints ``<A_i, Z> = b_i`` of the relaxation.

    Per rotation block: ``Z_aa = 1`` and ``Z_ab + Z_ba = 0`` for ``a < b``
    (block orthonormality). Per unit-vector column: unit diagonal.
    Multipliers are ordered block by block, upper triangle row-major, then the
    unit columns.
    """

    def __init__(self, layout: Layout):
        self.layout = layout
        d = layout.d
        self._pairs = [(a, b) for a in range(d) for b in range(a, d)]

    @property
    def per_block(self) -> int:
        return len(self._pairs)

    @property
    def m(self) -> int:
        return self.layout.n_rot * self.per_block + self.layout.n_sphere

    @property
    def rhs(self) -> np.ndarray:
        block = np.array([1.0 if a == b else 0.0 for a, b in self._pairs])
        return np.concatenate([np.tile(block, self.layout.n_rot), np.ones(self.layout.n_sphere)])

    def _entries(self):
        d = self.layout.d
        for blk in range(self.layout.n_rot):
            for a, b in self._pairs:
                i, j = blk * d + a, blk * d + b
                yield ([i], [i]) if a == b else ([i, j], [j, i])
        for c in range(self.layout.rot_end, self.layout.sphere_end):
            yield [c], [c]

    def matrices(self):
        k = self.layout.k
        for rows, cols in self._entries():
            yield sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(k, k))

    def combine(self, lam: np.ndarray) -> sp.csr_matrix:
        """``sum_i lam_i A_i`` as a sparse matrix."""
        rows, cols, vals = [], [], []
        for val, (r, c) in zip(lam, self._entries()):
            rows += r
            cols += c
            vals += [val] * len(r)
        k = self.layout.k
        return sp.csr_matrix((vals, (rows, cols)), shape=(k, k))

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """``<A_i, X^T X>`` for every constraint."""
        out = []
        for rows, cols in self._entries():
            out.append(sum(float(X[:, r] @ X[:, c]) for r, c in zip(rows, cols)))
        return np.array(out)


def _blockdiag_multipliers(Q, X: np.ndarray, layout: Layout):
    """Symmetric block-diagonal part of ``Q X^T X`` on the constrained blocks."""
    d, p = layout.d, X.shape[0]
    XQ = np.asarray(Q @ X.T).T
    B = X[:, : layout.rot_end].reshape(p, layout.n_rot, d).transpose(1, 0, 2)
    G = XQ[:, : layout.rot_end].reshape(p, layout.n_rot, d).transpose(1, 0, 2)
    M = np.swapaxes(G, 1, 2) @ B
    lam_rot = 0.5 * (M + np.swapaxes(M, 1, 2))
    sl = slice(layout.rot_end, layout.sphere_end)
    lam_unit = np.sum(X[:, sl] * XQ[:, sl], axis=0)
    return lam_rot, lam_unit


def compute_multipliers(Q, X: np.ndarray, layout: Layout, stationarity_tol: float = 1e-6) -> np.ndarray:
    """Closed-form Lagrange multipliers at a first-order critical point.

    Raises :class:`NotCriticalPoint` when ``||S X^T|| > tol * ||Q|| * ||X||``.
    """
    lam_rot, lam_unit = _blockdiag_multipliers(Q, X, layout)
    d = layout.d
    iu = np.triu_indices(d)
    lam = np.concatenate([(-lam_rot[:, iu[0], iu[1]]).reshape(-1), -lam_unit])
    cons = ConstraintSet(layout)
    S = build_certificate(Q, cons, lam)
    resid = float(np.linalg.norm(S @ X.T))
    scale = float(sp.linalg.norm(Q)) * float(np.linalg.norm(X))
    if resid > stationarity_tol * max(scale, 1e-300):
        raise NotCriticalPoint(f"stationarity residual {resid:.3e} exceeds {stationarity_tol:.1e} * {scale:.3e}")
    return lam


def build_certificate(Q, constraints: ConstraintSet, lam: np.ndarray) -> sp.csr_matrix:
    S = sp.csr_matrix(Q) + constraints.combine(lam)
    S = 0.5 * (S + S.T)
    return sp.csr_matrix(S)


def _power_norm(S, rng, iterations=20) -> float:
    """Power-iteration estimate of ``|lambda|_max``."""
    v = rng.standard_normal(S.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iterations):
        w = S @ v
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        v = w / est
    return est


DENSE_CUTOFF = 20


def min_eigenpair(S, eps: float = 0.0, tol: float = 1e-10, krylov_dim: int = 60,
                  max_restarts: int = 1000, seed: int = 0):
    """Smallest eigenpair of ``S + eps I`` by shifted, implicitly restarted Lanczos.

    ``S`` is shifted down by a bound on ``lambda_max`` so that every eigenvalue
    is negative and the target is the one of largest magnitude; the stopping
    test is then relative to ``||S||`` rather than to ``lambda_min`` itself,
    which may be zero. The start vector is drawn from ``seed``. Matrices
    smaller than ``DENSE_CUTOFF`` are handled by a dense solver.
    """
    S = sp.csr_matrix(S)
    k = S.shape[0]
    if k == 0:
        raise ValueError("empty matrix")
    if k < DENSE_CUTOFF:
        w, V = np.linalg.eigh(S.toarray())
        lam, x = float(w[0]), V[:, 0]
    else:
        rng = np.random.default_rng(seed)
        # 20 power steps can undershoot lambda_max by a few percent; pad it
        sigma = 1.5 * _power_norm(S, rng) + 1.0
        shifted = S - sigma * sp.identity(k, format="csr")
        try:
            w, V = eigsh(shifted, k=1, which="SA", ncv=min(krylov_dim, k - 1), tol=tol,
                         v0=rng.standard_normal(k), maxiter=max_restarts)
        except ArpackNoConvergence as exc:
            raise LanczosNoConverge(f"minimum eigenpair not converged after {max_restarts} restarts") from exc
        lam, x = float(w[0] + sigma), V[:, 0]
        x = x / np.linalg.norm(x)
        lam = float(x @ (S @ x))
        resid = float(np.linalg.norm(S @ x - lam * x))
        if resid > max(1e-6 * sigma, tol * sigma):
            raise LanczosNoConverge(f"Ritz residual {resid:.3e} too large for ||S|| ~ {sigma:.3e}")
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    return lam + eps, x


@dataclass
class Certificate:
    lam: np.ndarray
    S: sp.csr_matrix
    min_eig: float
    min_vec: np.ndarray
    epsilon: float
    verdict: str
    stationarity: float = 0.0

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED

    def to_dict(self) -> dict:
        return {
            "min_eig": self.min_eig,
            "epsilon": self.epsilon,
            "verdict": self.verdict,
            "stationarity_residual": self.stationarity,
            "num_multipliers": int(len(self.lam)),
        }


def verify(Q, X: np.ndarray, layout: Layout, eps: float = EPS_LADDER[0],
           stationarity_tol: float = 1e-6, **eig_kwargs) -> Certificate:
    """Certified iff ``lambda_min(S) >= -eps``; otherwise carry the descent eigenvector."""
    lam = compute_multipliers(Q, X, layout, stationarity_tol)
    cons = ConstraintSet(layout)
    S = build_certificate(Q, cons, lam)
    theta, v = min_eigenpair(S, 0.0, **eig_kwargs)
    stationarity = float(np.linalg.norm(S @ X.T))
    verdict = CERTIFIED if theta >= -eps else DESCEND
    return Certificate(lam, S, theta, v, eps, verdict, stationarity)
