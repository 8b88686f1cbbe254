"""End-to-end acceptance checks; each test prints one PASS/FAIL line in the terminal summary."""

import json
import time

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import FIXTURES, five_pose_dataset, small_dataset
from rastair.certify import CERTIFIED, DESCEND, min_eigenpair, verify
from rastair.cli import main
from rastair.io import GeneratorConfig, generate_synthetic, make_grid_dataset, parse, write
from rastair.manifold import Layout, lift_random, lift_zero_pad, random_state, retract, tangent_project
from rastair.metrics import ate_rmse, poses_by_name, read_traces
from rastair.objective import build_data_matrix, cost, riemannian_gradient
from rastair.rbcd import RbcdOptions, audit_message_log, run_rbcd
from rastair.staircase import StaircaseOptions, escape_saddle, initialize, solve
from rastair.sweep import SWEEP_ROUNDS, run_sweep
from rastair.trust_region import centralized_solve

ORACLE = json.loads((FIXTURES / "sdp_oracle.json").read_text())
TINY = sorted(ORACLE)


def noiseless_instance(seed):
    d = 3 if seed % 2 == 0 else 2
    base = make_grid_dataset(side=3 if d == 3 else 5, d=d, sigma_rot=0.0, sigma_trans=0.0, seed=seed)
    cfg = GeneratorConfig(num_agents=2 + seed % 3, num_landmarks=4 + seed % 5, range_prob=0.5,
                          range_noise=False, seed=seed)
    return generate_synthetic(cfg, base=base)


@pytest.fixture(scope="module")
def noiseless_runs():
    runs = []
    for seed in range(10):
        data = noiseless_instance(seed)
        t0 = time.perf_counter()
        rep = solve(data.graph, StaircaseOptions(eps_ladder=(1e-3,)))
        runs.append((data, rep, time.perf_counter() - t0))
    return runs


@pytest.fixture(scope="module")
def oracle_runs():
    return {name: solve(parse(FIXTURES / f"{name}.txt")) for name in TINY}


@pytest.fixture(scope="module")
def sweep_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    t0 = time.perf_counter()
    results = run_sweep(out_dir=out)
    return results, time.perf_counter() - t0, out


def test_criterion_01_noiseless_exact_recovery(noiseless_runs, record_property):
    worst = {"sub": 0.0, "trans": 0.0, "rot": 0.0, "time": 0.0}
    ok = True
    for data, rep, elapsed in noiseless_runs:
        g = data.graph
        assert g.n_poses <= 50 and len(g.landmarks) <= 8 and 2 <= len(g.agents) <= 4
        trans, rot = ate_rmse(poses_by_name(rep.poses), data.truth_poses())
        ok &= rep.certified and rep.certified_rank == g.d and rep.epsilon == 1e-3
        for key, val in (("sub", rep.suboptimality_bound), ("trans", trans), ("rot", rot), ("time", elapsed)):
            worst[key] = max(worst[key], val)
    record_property("detail", "worst sub={sub:.1e} ate={trans:.1e} m/{rot:.1e} deg time={time:.1f}s".format(**worst))
    assert ok
    assert worst["sub"] <= 1e-8 and worst["trans"] <= 1e-6 and worst["rot"] <= 1e-6 and worst["time"] < 30


def test_criterion_03_sdp_oracle_agreement(oracle_runs, record_property):
    errs = {}
    for name, rep in oracle_runs.items():
        ref = ORACLE[name]["f_sdp"]
        assert ORACLE[name]["k"] <= 60
        assert rep.certified, name
        errs[name] = abs(rep.f_sdp - ref) / abs(ref)
    record_property("detail", f"max relative error {max(errs.values()):.1e} over {len(errs)} instances")
    assert max(errs.values()) <= 1e-5


@pytest.mark.parametrize("seed", range(10))
def test_criterion_04_centralized_equivalence(seed, record_property):
    if seed % 2:
        base = make_grid_dataset(side=2, d=2, sigma_rot=0.1, sigma_trans=0.2, seed=seed)
        data = generate_synthetic(GeneratorConfig(num_agents=2, num_landmarks=2, range_prob=1.0, rho=25.0,
                                                  seed=seed), base=base)
    else:
        data = five_pose_dataset(seed)
    g = data.graph
    assert g.n_poses <= 5
    Q = build_data_matrix(g)
    errs = []
    for p in (g.d, g.d + 1):
        X0 = lift_random(initialize(g), p, seed=seed)
        dist = run_rbcd(g, Q, X0, RbcdOptions(max_iterations=6000, grad_norm_tol=1e-8))
        cent = centralized_solve(Q, X0, g.layout, grad_norm_tol=1e-10, max_iterations=500)
        assert dist.converged and cent.converged
        errs.append(abs(cost(Q, dist.X) - cost(Q, cent.Y)) / abs(cost(Q, cent.Y)))
    record_property("detail", f"seed {seed}: relative cost difference {max(errs):.1e}")
    assert max(errs) <= 1e-6


def test_criterion_05_certification_mechanics(record_property):
    # hand-built saddle: two unit columns, cost 2 <x1, x2>, critical but maximal at x1 = x2
    Q = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    layout = Layout(2, 0, 2, 0)
    X = np.array([[1.0, 1.0], [0.0, 0.0]])
    cert = verify(Q, X, layout, eps=1e-3)
    v = cert.min_vec
    assert cert.verdict == DESCEND and v @ (cert.S @ v) < 0
    Xp = lift_zero_pad(X)
    assert cost(Q, escape_saddle(Q, Xp, v, layout, grid=0.5 ** np.arange(20))) < cost(Q, Xp)

    # a real rank-2 critical point with a negative certificate eigenvalue
    g = small_dataset(d=2, seed=2).graph
    Qg = build_data_matrix(g)
    res = run_rbcd(g, Qg, initialize(g), RbcdOptions(grad_norm_tol=1e-8, max_iterations=20000))
    Xs = lift_zero_pad(res.X)
    cert = verify(Qg, Xs, g.layout, eps=1e-3)
    assert cert.verdict == DESCEND and cert.min_vec @ (cert.S @ cert.min_vec) < 0
    escaped = escape_saddle(Qg, Xs, cert.min_vec, g.layout, StaircaseOptions().escape_grid)
    assert cost(Qg, escaped) < cost(Qg, Xs)

    # noiseless data: the ground truth is certified
    clean = small_dataset(d=3, noise=False, seed=2).graph
    cert = verify(build_data_matrix(clean), lift_zero_pad(initialize(clean)), clean.layout, eps=1e-3)
    assert cert.verdict == CERTIFIED

    worst = 0.0
    for k in (10, 25, 50, 100, 150, 200):
        rng = np.random.default_rng(k)
        A = sp.random(k, k, density=0.05, random_state=k) + sp.diags(rng.standard_normal(k))
        S = (A + A.T).tocsr()
        lam, _ = min_eigenpair(S)
        ref = np.linalg.eigvalsh(S.toarray())[0]
        worst = max(worst, abs(lam - ref) / max(1.0, abs(ref)))
    record_property("detail", f"saddle escapes, clean data certified, eigen error {worst:.1e}")
    assert worst <= 1e-8


@pytest.mark.parametrize("name", TINY)
def test_criterion_06_gradient_finite_differences(name, record_property):
    g = parse(FIXTURES / f"{name}.txt")
    Q = build_data_matrix(g)
    layout = g.layout
    h = 1e-5
    worst = 0.0
    for i in range(20):
        p = g.d + i % 3
        X = random_state(p, layout, seed=i)
        G = riemannian_gradient(Q, X, layout)
        fd = np.zeros_like(X)
        for idx in np.ndindex(*X.shape):
            E = np.zeros_like(X)
            E[idx] = 1.0
            xi = tangent_project(X, E, layout)
            fd[idx] = (cost(Q, retract(X, xi, layout, h)) - cost(Q, retract(X, xi, layout, -h))) / (2 * h)
        # <grad, P(E)> = <grad, E> because the gradient is tangent
        worst = max(worst, np.linalg.norm(fd - G) / np.linalg.norm(G))
    record_property("detail", f"{name}: max relative error {worst:.1e} over 20 points")
    assert worst < 1e-5


def test_criterion_07_monotone_descent_and_traces(sweep_run, record_property):
    results, elapsed, out = sweep_run
    assert len(results) == 24
    monotone = all(t.is_monotone(rtol=1e-12) for r in results for t in r.report.traces)
    decreasing, files = True, 0
    for r in results:
        for t in r.report.traces:
            cols = read_traces(out / f"{r.name}_trace_rank{t.rank}.csv")
            files += 1
            assert np.all(np.diff(cols["f"]) <= 1e-12 * np.abs(cols["f"][:-1]))
            decreasing &= cols["grad_norm"][-1] < cols["grad_norm"][0]
    record_property("detail", f"24 instances in {elapsed:.0f}s at {SWEEP_ROUNDS} rounds per rank, {files} traces")
    assert monotone and decreasing and elapsed < 600


def test_criterion_08_privacy(sweep_run, record_property):
    results, _, out = sweep_run
    total = sum(len(r.report.messages) for r in results)
    leaked = sum(len(audit_message_log(generate_synthetic(r.config).graph, r.report.messages)) for r in results)
    assert total > 0
    record_property("detail", f"{leaked} private transmissions in {total} messages")
    assert leaked == 0


def test_criterion_09_determinism(tmp_path, record_property):
    base = tmp_path / "base.txt"
    write(make_grid_dataset(side=3, d=3, seed=1), base)
    for run in ("a", "b"):
        d = tmp_path / run
        assert main(["generate", "--base", str(base), "--agents", "3", "--landmarks", "4", "--seed", "5",
                     "-o", str(d / "data.txt")]) == 0
        main(["solve", "-i", str(d / "data.txt"), "-o", str(d / "run"), "--max-iterations", "300"])
        main(["evaluate", "--estimate", str(d / "run" / "estimate.txt"), "--ground-truth", str(d / "data.gt.txt"),
              "--report", str(d / "run" / "report.json"), "-o", str(d / "metrics.csv")])
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert any(p.name.startswith("trace_rank") for p in files) and any(p.name == "metrics.csv" for p in files)
    same = [(tmp_path / "a" / p).read_bytes() == (tmp_path / "b" / p).read_bytes() for p in files]
    record_property("detail", f"{sum(same)}/{len(files)} files byte-identical")
    assert all(same)


def test_criterion_10_range_density(sweep_run, record_property):
    results, _, _ = sweep_run
    bound = {(r.config.num_landmarks, r.config.range_prob): r.report.suboptimality_bound
             for r in results if r.config.base == "sphere" and r.config.num_agents == 8}
    ratios = {lm: bound[(lm, 1.0)] / bound[(lm, 0.5)] for lm in (8, 16)}
    record_property("detail", "bound ratio p=1.0 / p=0.5: " + ", ".join(f"l{k} {v:.2f}" for k, v in ratios.items()))
    assert all(v <= 2.0 for v in ratios.values())


def test_criterion_02_lower_bound_soundness(noiseless_runs, oracle_runs, sweep_run, record_property):
    reports = [rep for _, rep, _ in noiseless_runs] + list(oracle_runs.values())
    reports += [r.report for r in sweep_run[0]]
    certified = [rep for rep in reports if rep.certified]
    bad = [rep for rep in certified if not rep.f_sdp <= rep.f_rounded + 1e-6 * abs(rep.f_sdp)]
    record_property("detail", f"{len(certified)} certified solves, {len(bad)} violations")
    assert certified and not bad
