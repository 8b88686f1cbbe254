"""Riemannian trust-region (truncated CG) for quadratic costs on the product manifold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifold import Layout, retract, tangent_project, weingarten
from .objective import CostTrace


class QuadraticProblem:
    """``f(Y) = <Q, Y^T Y> + 2 <Y, L>`` restricted to a manifold layout.

    ``L`` carries the coupling to fixed neighbour columns; it is zero for the
    full centralized problem. Given a factor ``B`` with ``Q = B B^T`` and the
    constant residual part ``C`` (so that ``L = C B^T``), the cost is evaluated
    as ``||Y B + C||^2``, which differs from the form above by a constant and
    does not suffer from cancellation near the optimum.
    """

    def __init__(self, Q, layout: Layout, linear: np.ndarray | None = None, factor=None, offset=None):
        self.Q = Q
        self.layout = layout
        self.linear = linear
        self.factor = getattr(Q, "factor", None) if factor is None else factor
        self.offset = offset
        if self.factor is None and offset is not None:
            raise ValueError("offset requires a factor")
        if self.factor is not None and linear is not None and offset is None:
            self.factor = None  # cannot reproduce the linear term

    def cost(self, Y):
        if self.factor is not None:
            R = np.asarray(self.factor.T @ Y.T).T
            if self.offset is not None:
                R = R + self.offset
            return float(np.sum(R * R))
        f = float(np.sum((self.Q @ Y.T) * Y.T))
        if self.linear is not None:
            f += 2.0 * float(np.sum(Y * self.linear))
        return f

    def cost_change(self, Y, Y_new):
        """``f(Y_new) - f(Y)`` without subtracting two large costs."""
        D = Y_new - Y
        if self.factor is not None:
            RD = np.asarray(self.factor.T @ D.T).T
            R = np.asarray(self.factor.T @ Y.T).T
            if self.offset is not None:
                R = R + self.offset
            return float(np.sum((2.0 * R + RD) * RD))
        change = float(np.sum(D * np.asarray(self.Q @ (Y_new + Y).T).T))
        if self.linear is not None:
            change += 2.0 * float(np.sum(D * self.linear))
        return change

    def egrad(self, Y):
        G = 2.0 * np.asarray(self.Q @ Y.T).T
        if self.linear is not None:
            G = G + 2.0 * self.linear
        return G

    def rgrad(self, Y, G=None):
        return tangent_project(Y, self.egrad(Y) if G is None else G, self.layout)

    def hess(self, Y, G, V):
        ehess = 2.0 * np.asarray(self.Q @ V.T).T
        return tangent_project(Y, ehess - weingarten(Y, V, G, self.layout), self.layout)


def noise_floor(f: float) -> float:
    """Cost changes smaller than this are indistinguishable from roundoff."""
    return 1e3 * np.finfo(float).eps * max(1.0, abs(f))


def _inner(a, b):
    return float(np.sum(a * b))


def _tcg(problem, Y, G, grad, radius, max_inner, kappa=0.1, theta=1.0):
    """Steihaug-Toint truncated conjugate gradient on the trust-region model."""
    eta = np.zeros_like(grad)
    heta = np.zeros_like(grad)
    r = grad.copy()
    rr = _inner(r, r)
    norm_r0 = np.sqrt(rr)
    delta = -r
    for _ in range(max_inner):
        hd = problem.hess(Y, G, delta)
        dhd = _inner(delta, hd)
        alpha = rr / dhd if dhd > 0 else np.inf
        eta_new = eta + alpha * delta if np.isfinite(alpha) else None
        if eta_new is None or np.linalg.norm(eta_new) >= radius:
            # step to the boundary along delta
            ed, dd, ee = _inner(eta, delta), _inner(delta, delta), _inner(eta, eta)
            tau = (-ed + np.sqrt(ed * ed + dd * (radius ** 2 - ee))) / dd
            return eta + tau * delta, heta + tau * hd
        eta, heta = eta_new, heta + alpha * hd
        r = tangent_project(Y, r + alpha * hd, problem.layout)
        rr_new = _inner(r, r)
        if np.sqrt(rr_new) <= norm_r0 * min(norm_r0 ** theta, kappa):
            break
        delta = -r + (rr_new / rr) * delta
        rr = rr_new
    return eta, heta


@dataclass
class TrustRegionResult:
    Y: np.ndarray
    trace: CostTrace
    converged: bool
    radius: float = 1.0


def riemannian_trust_region(
    problem: QuadraticProblem,
    Y0: np.ndarray,
    grad_norm_tol: float = 1e-9,
    max_iterations: int = 500,
    max_inner: int = 200,
    radius: float = 1.0,
    max_radius: float = 1e4,
    retraction: str = "polar",
    record: bool = True,
) -> TrustRegionResult:
    Y = np.array(Y0, dtype=float, copy=True)
    f = problem.cost(Y)
    trace = CostTrace(rank=Y.shape[0])
    converged = False
    for it in range(max_iterations + 1):
        G = problem.egrad(Y)
        grad = problem.rgrad(Y, G)
        gn = float(np.linalg.norm(grad))
        if record:
            trace.append(it, f, gn)
        if gn <= grad_norm_tol:
            converged = True
            break
        if it == max_iterations:
            break
        eta, heta = _tcg(problem, Y, G, grad, radius, max_inner)
        Y_new = retract(Y, eta, problem.layout, method=retraction)
        actual = -problem.cost_change(Y, Y_new)
        model = -(_inner(grad, eta) + 0.5 * _inner(eta, heta))
        # near a critical point both decreases sink below the roundoff of f;
        # regularising the ratio keeps steps from being rejected forever
        reg = noise_floor(f)
        ratio = (actual + reg) / (model + reg) if model + reg > 0 else -1.0
        if ratio < 0.25:
            radius *= 0.25
        elif ratio > 0.75 and np.linalg.norm(eta) >= 0.99 * radius:
            radius = min(2.0 * radius, max_radius)
        if ratio > 0.1 and actual >= -reg:
            Y, f = Y_new, problem.cost(Y_new)
        if radius < 1e-14:
            break
    trace.converged = converged
    return TrustRegionResult(Y, trace, converged, radius)


def centralized_solve(Q, X0: np.ndarray, layout: Layout, **kwargs) -> TrustRegionResult:
    """Second-order local solve of the full problem from ``X0``."""
    return riemannian_trust_region(QuadraticProblem(Q, layout), X0, **kwargs)
