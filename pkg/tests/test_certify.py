import numpy as np
import pytest
import scipy.sparse as sp

from conftest import small_dataset
from rastair.certify import (
    CERTIFIED,
    DESCEND,
    ConstraintSet,
    build_certificate,
    compute_multipliers,
    min_eigenpair,
    verify,
)
from rastair.exceptions import LanczosNoConverge, NotCriticalPoint
from rastair.manifold import Layout, lift_zero_pad, random_state
from rastair.objective import build_data_matrix, cost
from rastair.rbcd import RbcdOptions, run_rbcd
from rastair.staircase import escape_saddle, initialize


def kkt_certificate(Q, X, layout):
    """Least-squares multipliers: free symmetric ``d x d`` blocks and unit scalars with ``S X^T = 0``."""
    Q = Q.toarray()
    k, d = layout.k, layout.d
    unknowns = []  # (rows, cols) index pairs, each a basis matrix of the block-diagonal part
    for blk in range(layout.n_rot):
        for a in range(d):
            for b in range(a, d):
                i, j = blk * d + a, blk * d + b
                unknowns.append([(i, j), (j, i)] if a != b else [(i, i)])
    for c in range(layout.rot_end, layout.sphere_end):
        unknowns.append([(c, c)])
    cols = []
    for entries in unknowns:
        E = np.zeros((k, k))
        for i, j in entries:
            E[i, j] = 1.0
        cols.append((E @ X.T).ravel())
    A = np.stack(cols, axis=1)
    lam, *_ = np.linalg.lstsq(A, -(Q @ X.T).ravel(), rcond=None)
    S = Q.copy()
    for val, entries in zip(lam, unknowns):
        for i, j in entries:
            S[i, j] += val
    return S


@pytest.fixture(scope="module")
def critical_point():
    g = small_dataset(d=3, seed=6).graph
    Q = build_data_matrix(g)
    res = run_rbcd(g, Q, initialize(g), RbcdOptions(grad_norm_tol=1e-9, max_iterations=20000))
    return g, Q, res.X


def test_multipliers_match_kkt_least_squares(critical_point):
    g, Q, X = critical_point
    lam = compute_multipliers(Q, X, g.layout)
    S = build_certificate(Q, ConstraintSet(g.layout), lam).toarray()
    assert np.allclose(S, kkt_certificate(Q, X, g.layout), atol=1e-6 * np.abs(Q).max())
    assert np.linalg.norm(S @ X.T) < 1e-6 * np.abs(Q).max()


def test_constraint_set_counts_and_rhs():
    layout = Layout(3, 2, 4, 5)
    cons = ConstraintSet(layout)
    assert cons.m == 2 * 6 + 4
    X = random_state(5, layout, seed=0)
    assert np.allclose(cons.evaluate(X), cons.rhs)
    assert sum(1 for _ in cons.matrices()) == cons.m


def test_non_critical_point_rejected(graph3d):
    Q = build_data_matrix(graph3d)
    with pytest.raises(NotCriticalPoint):
        compute_multipliers(Q, random_state(3, graph3d.layout, seed=0), graph3d.layout)


@pytest.mark.parametrize("k", [5, 19, 20, 60, 200])
def test_min_eigenpair_matches_dense(k):
    rng = np.random.default_rng(k)
    A = sp.random(k, k, density=0.05, random_state=k) + sp.diags(rng.standard_normal(k))
    S = (A + A.T).tocsr()
    lam, v = min_eigenpair(S)
    w = np.linalg.eigvalsh(S.toarray())
    assert abs(lam - w[0]) <= 1e-8 * max(1.0, abs(w[0]))
    assert np.linalg.norm(S @ v - lam * v) < 1e-6 * np.abs(w).max()
    assert np.isclose(np.linalg.norm(v), 1.0)


def test_min_eigenpair_zero_eigenvalue_of_psd_matrix():
    B = sp.random(80, 40, density=0.1, random_state=3)
    S = (B @ B.T).tocsr()  # rank <= 40, so lambda_min = 0
    lam, _ = min_eigenpair(S)
    assert abs(lam) < 1e-8 * sp.linalg.norm(S)


def test_min_eigenpair_reports_non_convergence():
    rng = np.random.default_rng(0)
    S = sp.diags(np.sort(rng.standard_normal(400)) * 1e-3 + np.linspace(0, 1, 400)).tocsr()
    with pytest.raises(LanczosNoConverge):
        min_eigenpair(S, tol=1e-15, krylov_dim=4, max_restarts=1)


def saddle_problem():
    """Two unit columns with cost ``2 <x1, x2>``; ``x1 = x2`` is a critical point but a maximum."""
    Q = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    layout = Layout(2, 0, 2, 0)
    X = np.array([[1.0, 1.0], [0.0, 0.0]])
    return Q, layout, X


def test_indefinite_certificate_descends_and_escape_decreases_cost():
    Q, layout, X = saddle_problem()
    cert = verify(Q, X, layout, eps=1e-3)
    assert cert.verdict == DESCEND
    v = cert.min_vec
    assert v @ (cert.S @ v) < 0
    assert np.isclose(cert.min_eig, -2.0)
    Xp = lift_zero_pad(X)
    Y = escape_saddle(Q, Xp, v, layout, grid=0.5 ** np.arange(20))
    assert cost(Q, Y) < cost(Q, Xp)


def test_noiseless_ground_truth_is_certified():
    data = small_dataset(d=3, noise=False, seed=2)
    g = data.graph
    Q = build_data_matrix(g)
    X = initialize(g)
    assert cost(Q, X) < 1e-20
    cert = verify(Q, lift_zero_pad(X), g.layout, eps=1e-3)
    assert cert.verdict == CERTIFIED
    assert cert.min_eig > -1e-8


def test_eps_shifts_reported_eigenvalue():
    S = sp.diags([-1.0, 2.0, 3.0]).tocsr()
    assert np.isclose(min_eigenpair(S, eps=0.5)[0], -0.5)
