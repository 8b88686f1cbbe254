"""Kernels for the product manifold St(p, d)^n x (S^{p-1})^l x R^{p x m}.

All functions take the lifted variable as a plain ``p x k`` array plus a
:class:`Layout` describing which columns belong to which factor. Tangent
vectors are arrays of the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import RankDeficientBlock, ZeroNormColumn

TOL_FEAS = 1e-8


@dataclass(frozen=True)
class Layout:
    """Column layout ``[Stiefel blocks | unit columns | Euclidean columns]``."""

    d: int
    n_rot: int
    n_sphere: int
    n_euc: int

    @property
    def rot_end(self) -> int:
        return self.d * self.n_rot

    @property
    def sphere_end(self) -> int:
        return self.rot_end + self.n_sphere

    @property
    def k(self) -> int:
        return self.sphere_end + self.n_euc

    @property
    def constrained(self) -> slice:
        return slice(0, self.sphere_end)

    @property
    def euclidean(self) -> slice:
        return slice(self.sphere_end, self.k)


def _blocks(X: np.ndarray, layout: Layout) -> np.ndarray:
    """``n_rot x p x d`` copy of the Stiefel blocks."""
    p = X.shape[0]
    return X[:, : layout.rot_end].reshape(p, layout.n_rot, layout.d).transpose(1, 0, 2)


def _set_blocks(X: np.ndarray, blocks: np.ndarray, layout: Layout) -> None:
    p = X.shape[0]
    X[:, : layout.rot_end] = blocks.transpose(1, 0, 2).reshape(p, layout.rot_end)


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def polar(B: np.ndarray) -> np.ndarray:
    """Orthonormal polar factor of each ``p x d`` block (nearest Stiefel point)."""
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    if s.size and s.min() < 1e-12:
        raise RankDeficientBlock(f"Stiefel block with singular value {s.min():.3e}")
    return U @ Vt


def _qf(B: np.ndarray) -> np.ndarray:
    Qf, R = np.linalg.qr(B)
    signs = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    return Qf * signs[..., None, :]


def _normalize_columns(C: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(C, axis=0)
    if norms.size and norms.min() == 0.0:
        raise ZeroNormColumn("cannot normalize an all-zero unit-vector column")
    return C / norms


def project_to_manifold(M: np.ndarray, layout: Layout) -> np.ndarray:
    """Nearest feasible point: polar factor per block, unit columns normalized."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] < layout.d:
        raise ValueError(f"rank p={M.shape[0]} is below d={layout.d}")
    X = M.copy()
    if layout.n_rot:
        _set_blocks(X, polar(_blocks(M, layout)), layout)
    X[:, layout.rot_end: layout.sphere_end] = _normalize_columns(M[:, layout.rot_end: layout.sphere_end])
    return X


def tangent_project(X: np.ndarray, V: np.ndarray, layout: Layout) -> np.ndarray:
    """Orthogonal projection of an ambient direction onto the tangent space at ``X``."""
    out = np.array(V, dtype=float, copy=True)
    if layout.n_rot:
        B, W = _blocks(X, layout), _blocks(V, layout)
        _set_blocks(out, W - B @ _sym(np.swapaxes(B, 1, 2) @ W), layout)
    sl = slice(layout.rot_end, layout.sphere_end)
    x, v = X[:, sl], V[:, sl]
    out[:, sl] = v - x * np.sum(x * v, axis=0)
    return out


def weingarten(X: np.ndarray, V: np.ndarray, G: np.ndarray, layout: Layout) -> np.ndarray:
    """Curvature correction ``V * sym(X^T G)`` used by the Riemannian Hessian."""
    out = np.zeros_like(V)
    if layout.n_rot:
        B, W, Gb = _blocks(X, layout), _blocks(V, layout), _blocks(G, layout)
        _set_blocks(out, W @ _sym(np.swapaxes(B, 1, 2) @ Gb), layout)
    sl = slice(layout.rot_end, layout.sphere_end)
    out[:, sl] = V[:, sl] * np.sum(X[:, sl] * G[:, sl], axis=0)
    return out


def retract(X: np.ndarray, V: np.ndarray, layout: Layout, step: float = 1.0,
            method: str = "polar") -> np.ndarray:
    """Metric-projection retraction (``method="qr"`` swaps in the Q-factor for Stiefel blocks)."""
    if step == 0:
        return np.array(X, copy=True)
    Y = X + step * V
    if layout.n_rot:
        B = _blocks(Y, layout)
        _set_blocks(Y, polar(B) if method == "polar" else _qf(B), layout)
    sl = slice(layout.rot_end, layout.sphere_end)
    Y[:, sl] = _normalize_columns(Y[:, sl])
    return Y


def feasibility_error(X: np.ndarray, layout: Layout) -> float:
    err = 0.0
    if layout.n_rot:
        B = _blocks(X, layout)
        err = float(np.abs(np.swapaxes(B, 1, 2) @ B - np.eye(layout.d)).max())
    sl = slice(layout.rot_end, layout.sphere_end)
    if layout.n_sphere:
        err = max(err, float(np.abs(np.linalg.norm(X[:, sl], axis=0) - 1.0).max()))
    return err


def tangency_error(X: np.ndarray, V: np.ndarray, layout: Layout) -> float:
    err = 0.0
    if layout.n_rot:
        B, W = _blocks(X, layout), _blocks(V, layout)
        err = float(np.abs(_sym(np.swapaxes(B, 1, 2) @ W)).max())
    sl = slice(layout.rot_end, layout.sphere_end)
    if layout.n_sphere:
        err = max(err, float(np.abs(np.sum(X[:, sl] * V[:, sl], axis=0)).max()))
    return err


def random_stiefel(p: int, d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    shape = (p, d) if size is None else (size, p, d)
    return _qf(rng.standard_normal(shape))


def random_state(p: int, layout: Layout, seed=None) -> np.ndarray:
    """Random feasible point: Haar Stiefel blocks, uniform unit columns, Gaussian translations."""
    if p < layout.d:
        raise ValueError("p must be >= d")
    rng = np.random.default_rng(seed)
    X = np.empty((p, layout.k))
    if layout.n_rot:
        _set_blocks(X, random_stiefel(p, layout.d, rng, layout.n_rot), layout)
    X[:, layout.rot_end: layout.sphere_end] = _normalize_columns(rng.standard_normal((p, layout.n_sphere)))
    X[:, layout.euclidean] = rng.standard_normal((p, layout.n_euc))
    return X


def lift_random(X: np.ndarray, p0: int, seed=None, Y: np.ndarray | None = None) -> np.ndarray:
    """Map a rank-``d`` point to rank ``p0`` through a random ``Y`` in St(p0, d)."""
    d = X.shape[0]
    if p0 < d:
        raise ValueError("p0 must be >= the current rank")
    if Y is None:
        Y = random_stiefel(p0, d, np.random.default_rng(seed))
    return Y @ X


def lift_zero_pad(X: np.ndarray) -> np.ndarray:
    return np.vstack([X, np.zeros((1, X.shape[1]))])


@dataclass
class LiftedState:
    """A feasible point with named views onto its factors."""

    matrix: np.ndarray
    layout: Layout

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.layout.d

    @property
    def rotations(self) -> np.ndarray:
        return _blocks(self.matrix, self.layout)

    @property
    def unit_vectors(self) -> np.ndarray:
        return self.matrix[:, self.layout.rot_end: self.layout.sphere_end]

    @property
    def translations(self) -> np.ndarray:
        return self.matrix[:, self.layout.euclidean]

    def check(self, tol: float = TOL_FEAS) -> None:
        if self.p < self.d:
            raise ValueError("p must be >= d")
        err = feasibility_error(self.matrix, self.layout)
        if err > tol:
            raise ValueError(f"state violates manifold constraints by {err:.3e}")
