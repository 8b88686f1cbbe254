"""Estimator-style wrappers around the solver and the trajectory aligner."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_choice, check_graph, check_int, check_points, check_positive, check_seed
from .certify import EPS_LADDER
from .metrics import ate_rmse, poses_by_name, umeyama_align
from .rbcd import GRADIENT, GREEDY, PARALLEL, ROUND_ROBIN, TRUST_REGION, UNIFORM_RANDOM, RbcdOptions
from .staircase import StaircaseOptions, solve


class StaircaseSolver(BaseEstimator):
    """Certifiably correct distributed RA-SLAM solver.

    ``fit`` takes a :class:`~rastair.problem.ProblemGraph` (or a dataset path)
    and stores the full :class:`~rastair.staircase.SolveReport` as ``report_``.

    Examples
    --------
    >>> from rastair.io import GeneratorConfig, generate_synthetic
    >>> data = generate_synthetic(GeneratorConfig(num_agents=2, num_landmarks=4, seed=1))
    >>> solver = StaircaseSolver().fit(data.graph)  # doctest: +SKIP
    >>> solver.certified_  # doctest: +SKIP
    True
    """

    def __init__(self, p0=None, p_max=None, eps_ladder=EPS_LADDER, max_iterations=5000,
                 grad_norm_tol=1e-6, block_selection=ROUND_ROBIN, inner_solver=TRUST_REGION,
                 inner_iterations=1, n_jobs=1, retraction="polar", stationarity_tol=1e-6,
                 random_state=0):
        self.p0 = p0
        self.p_max = p_max
        self.eps_ladder = eps_ladder
        self.max_iterations = max_iterations
        self.grad_norm_tol = grad_norm_tol
        self.block_selection = block_selection
        self.inner_solver = inner_solver
        self.inner_iterations = inner_iterations
        self.n_jobs = n_jobs
        self.retraction = retraction
        self.stationarity_tol = stationarity_tol
        self.random_state = random_state

    def _options(self) -> StaircaseOptions:
        seed = check_seed(self.random_state)
        check_int("p0", self.p0, 1, allow_none=True)
        check_int("p_max", self.p_max, 1, allow_none=True)
        check_choice("block_selection", self.block_selection, {ROUND_ROBIN, UNIFORM_RANDOM, PARALLEL, GREEDY})
        check_choice("inner_solver", self.inner_solver, {GRADIENT, TRUST_REGION})
        check_choice("retraction", self.retraction, {"polar", "qr"})
        check_positive("grad_norm_tol", self.grad_norm_tol)
        check_positive("stationarity_tol", self.stationarity_tol)
        for eps in self.eps_ladder:
            check_positive("eps_ladder entry", eps)
        rbcd = RbcdOptions(
            max_iterations=check_int("max_iterations", self.max_iterations),
            grad_norm_tol=self.grad_norm_tol,
            block_selection=self.block_selection,
            inner_solver=self.inner_solver,
            inner_iterations=check_int("inner_iterations", self.inner_iterations, 1),
            seed=seed,
            n_jobs=check_int("n_jobs", self.n_jobs, 1),
            retraction=self.retraction,
        )
        return StaircaseOptions(p0=self.p0, p_max=self.p_max, eps_ladder=tuple(self.eps_ladder), rbcd=rbcd,
                                stationarity_tol=self.stationarity_tol, seed=seed)

    def fit(self, graph, y=None, X_init=None):
        graph = check_graph(graph)
        self.report_ = solve(graph, self._options(), X_init=X_init)
        self.graph_ = graph
        self.poses_ = self.report_.poses
        self.landmarks_ = self.report_.landmarks
        self.f_sdp_ = self.report_.f_sdp
        self.certified_ = self.report_.certified
        self.certified_rank_ = self.report_.certified_rank
        self.n_iter_ = sum(len(t) - 1 for t in self.report_.traces)
        return self

    def predict(self, graph=None):
        """Rounded pose estimates keyed by state name."""
        check_is_fitted(self, "report_")
        return poses_by_name(self.poses_)

    def score(self, ground_truth, y=None):
        """Negative aligned translation ATE against ``{name: (R, t)}``; larger is better."""
        check_is_fitted(self, "report_")
        return -ate_rmse(self.predict(), ground_truth)[0]


class RigidAligner(TransformerMixin, BaseEstimator):
    """Rigid Umeyama fit of ``X`` onto ``y``; ``transform`` applies it."""

    def fit(self, X, y):
        X, y = check_points(X, y)
        self.rotation_, self.translation_ = umeyama_align(X, y)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "rotation_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return X @ self.rotation_.T + self.translation_

    def inverse_transform(self, X):
        check_is_fitted(self, "rotation_")
        X = check_array(X, dtype=float)
        return (X - self.translation_) @ self.rotation_

    def rmse(self, X, y) -> float:
        X, y = check_points(X, y)
        return float(np.sqrt(np.mean(np.sum((self.transform(X) - y) ** 2, axis=1))))
