"""``rastair`` command line: generate, solve, evaluate, certify, sweep.

Exit codes: 0 success (certified), 1 input error, 2 not certified at the
maximum rank, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .certify import EPS_LADDER, verify
from .exceptions import (
    BaseDatasetTooSmall,
    DegenerateConfiguration,
    EmptyOverlap,
    EscapeFailed,
    LanczosNoConverge,
    NotCriticalPoint,
    ParseError,
    ProblemError,
    RankDeficientBlock,
    ZeroNormColumn,
)
from .io import (
    GeneratorConfig,
    estimate_values,
    generate_synthetic,
    ground_truth_sidecar,
    parse,
    read_vertices,
    sweep_configs,
    write,
    write_vertices,
)
from .manifold import lift_zero_pad
from .metrics import ate_rmse, export_traces, poses_from_values, write_metrics
from .objective import build_data_matrix
from .rbcd import GRADIENT, GREEDY, PARALLEL, ROUND_ROBIN, TRUST_REGION, UNIFORM_RANDOM, RbcdOptions, write_message_log
from .staircase import StaircaseOptions, solve
from .sweep import SWEEP_ROUNDS, run_sweep

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CERTIFIED = 2
EXIT_NUMERICAL = 3

INPUT_ERRORS = (ParseError, ProblemError, BaseDatasetTooSmall, EmptyOverlap, DegenerateConfiguration,
                FileNotFoundError, IsADirectoryError, ValueError)
NUMERICAL_ERRORS = (LanczosNoConverge, NotCriticalPoint, EscapeFailed, RankDeficientBlock, ZeroNormColumn,
                    FloatingPointError, np.linalg.LinAlgError)

logger = logging.getLogger("rastair")


class UsageError(Exception):
    pass


def _float_list(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _name_list(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _int_list(text: str) -> tuple:
    return tuple(int(v) for v in _float_list(text))


def _flag(value: str) -> bool:
    low = value.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {value!r}")


def _add_solver_flags(p, max_iterations=5000):
    g = p.add_argument_group("solver")
    g.add_argument("--p0", type=int, default=None, help="initial rank (default: d)")
    g.add_argument("--p-max", type=int, default=None, help="maximum rank (default: d + 5)")
    g.add_argument("--eps", type=float, default=None, help="single certification tolerance (disables the ladder)")
    g.add_argument("--eps-ladder", type=_float_list, default=EPS_LADDER, help="comma-separated tolerances")
    g.add_argument("--max-iterations", type=int, default=max_iterations, help="RBCD rounds per rank")
    g.add_argument("--grad-norm-tol", type=float, default=1e-6)
    g.add_argument("--block-selection", choices=[ROUND_ROBIN, UNIFORM_RANDOM, PARALLEL, GREEDY], default=ROUND_ROBIN)
    g.add_argument("--inner-solver", choices=[GRADIENT, TRUST_REGION], default=TRUST_REGION)
    g.add_argument("--inner-iterations", type=int, default=1)
    g.add_argument("--retraction", choices=["polar", "qr"], default="polar")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=1, help="worker threads; 1 is the deterministic sequential mode")


def _add_generator_flags(p, sweep=False):
    g = p.add_argument_group("generator")
    if sweep:
        g.add_argument("--bases", type=_name_list, default=("grid3d", "sphere"))
        g.add_argument("--agents", type=_int_list, default=(2, 4, 8))
        g.add_argument("--landmarks", type=_int_list, default=(8, 16))
        g.add_argument("--range-prob", type=_float_list, default=(0.5, 1.0))
    else:
        g.add_argument("--base", default="grid3d", help="built-in base (grid3d, sphere) or a pose-graph file")
        g.add_argument("--agents", type=int, default=2)
        g.add_argument("--landmarks", type=int, default=8)
        g.add_argument("--range-prob", type=float, default=0.5)
    g.add_argument("--rho", type=float, default=100.0)
    g.add_argument("--r-max", type=float, default=100.0)
    g.add_argument("--range-noise", type=_flag, default=True)
    if not sweep:
        g.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rastair", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=version_string())
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic multi-agent dataset and its ground truth")
    _add_generator_flags(p)
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--ground-truth", default=None, help="sidecar path (default: <output stem>.gt<suffix>)")
    p.add_argument("--config", default=None, help="key=value file overriding flags")

    p = sub.add_parser("solve", help="run the certifiable solver on a dataset")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--output-dir", "-o", default=None, help="report, estimate, traces and message log")
    _add_solver_flags(p)
    p.add_argument("--config", default=None)

    p = sub.add_parser("evaluate", help="ATE of an estimate against ground truth")
    p.add_argument("--estimate", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--report", default=None, help="solve report (adds f_sdp and eps)")
    p.add_argument("--dataset", default=None, help="name written to the metrics file")
    p.add_argument("--no-align", action="store_true")
    p.add_argument("--output", "-o", default=None, help="metrics CSV")
    p.add_argument("--config", default=None)

    p = sub.add_parser("certify", help="check global optimality of a rank-d estimate")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--eps", type=float, default=EPS_LADDER[0])
    p.add_argument("--stationarity-tol", type=float, default=1e-6)
    p.add_argument("--config", default=None)

    p = sub.add_parser("sweep", help="generate and solve the full parametric study")
    _add_generator_flags(p, sweep=True)
    _add_solver_flags(p, max_iterations=SWEEP_ROUNDS)
    p.add_argument("--output-dir", "-o", required=True)
    p.add_argument("--config", default=None)
    return parser


def version_string() -> str:
    return (f"rastair {__version__} (python {platform.python_version()}, numpy {np.__version__}, "
            f"scipy {scipy.__version__})")


def apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> argparse.Namespace:
    """Override ``args`` from the ``key=value`` file named by ``--config``; unknown keys are errors."""
    path = getattr(args, "config", None)
    if not path:
        return args
    sub = next(a for a in parser._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
    actions = {a.dest: a for a in sub.choices[args.command]._actions if a.dest not in ("help", "config")}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        dest = key.lstrip("-").replace("-", "_")
        action = actions.get(dest)
        if action is None:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            converted = _flag(value)
        else:
            try:
                converted = action.type(value) if action.type else value
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
            if action.choices is not None and converted not in action.choices:
                raise UsageError(f"{path}:{lineno}: {key} must be one of {list(action.choices)}")
        setattr(args, dest, converted)
    return args


def staircase_options(args) -> StaircaseOptions:
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    ladder = (args.eps,) if args.eps is not None else tuple(args.eps_ladder)
    rbcd = RbcdOptions(
        max_iterations=args.max_iterations,
        grad_norm_tol=args.grad_norm_tol,
        block_selection=args.block_selection,
        inner_solver=args.inner_solver,
        inner_iterations=args.inner_iterations,
        seed=args.seed,
        n_jobs=args.threads,
        retraction=args.retraction,
    )
    return StaircaseOptions(p0=args.p0, p_max=args.p_max, eps_ladder=ladder, rbcd=rbcd, seed=args.seed)


# -- subcommands -----------------------------------------------------------------


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(base=args.base, num_agents=args.agents, num_landmarks=args.landmarks,
                          range_prob=args.range_prob, rho=args.rho, r_max=args.r_max,
                          range_noise=args.range_noise, seed=args.seed)
    data = generate_synthetic(cfg)
    gt_path = args.ground_truth or ground_truth_sidecar(args.output)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    Path(gt_path).parent.mkdir(parents=True, exist_ok=True)
    write(data.graph, args.output, ground_truth=data.ground_truth, ground_truth_path=gt_path)
    s = data.summary
    print(f"agents={s['agents']} poses={s['poses']} landmarks={s['landmarks']} "
          f"range_edges={s['range_edges']} pose_edges={s['pose_edges']}")
    print(f"wrote {args.output} and {gt_path}")
    return EXIT_OK


def _write_solve_outputs(report, g, out_dir: Path, opts: StaircaseOptions, source: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    doc["dataset"] = Path(source).name
    doc["options"] = {
        "p0": opts.p0, "p_max": opts.p_max, "eps_ladder": list(opts.eps_ladder),
        "max_iterations": opts.rbcd.max_iterations, "grad_norm_tol": opts.rbcd.grad_norm_tol,
        "block_selection": opts.rbcd.block_selection, "inner_solver": opts.rbcd.inner_solver,
        "inner_iterations": opts.rbcd.inner_iterations, "retraction": opts.rbcd.retraction, "seed": opts.seed,
    }
    (out_dir / "report.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    write_vertices(estimate_values(report.poses, report.landmarks), out_dir / "estimate.txt", g.d)
    export_traces(report, out_dir / "trace.csv")
    write_message_log(report.messages, out_dir / "messages.tsv")


def cmd_solve(args) -> int:
    g = parse(args.input)
    opts = staircase_options(args).resolve(g.d)
    report = solve(g, opts)
    if args.output_dir:
        _write_solve_outputs(report, g, Path(args.output_dir), opts, args.input)
    print(f"status={report.status} certified_rank={report.certified_rank} eps={report.epsilon} "
          f"f_sdp={report.f_sdp:.10g} f_rounded={report.f_rounded:.10g} "
          f"suboptimality_bound={report.suboptimality_bound:.3e}")
    if report.certified:
        return EXIT_OK
    if report.status in ("not_critical", "escape_failed", "eigensolver_failed"):
        print(f"numerical failure: {report.status}", file=sys.stderr)
        return EXIT_NUMERICAL
    print("not certified at the maximum rank", file=sys.stderr)
    return EXIT_NOT_CERTIFIED


def cmd_evaluate(args) -> int:
    d_est, est_vals = read_vertices(args.estimate)
    d_ref, ref_vals = read_vertices(args.ground_truth)
    if d_est != d_ref:
        raise UsageError(f"dimension mismatch: estimate is {d_est}D, ground truth is {d_ref}D")
    est, ref = poses_from_values(est_vals, d_est), poses_from_values(ref_vals, d_ref)
    if set(est) != set(ref):
        missing = sorted(set(est) ^ set(ref))[:5]
        if not set(est) & set(ref):
            raise EmptyOverlap("estimate and ground truth share no pose ids")
        raise EmptyOverlap(f"estimate and ground truth ids differ (e.g. {', '.join(missing)})")
    trans, rot = ate_rmse(est, ref, align=not args.no_align)
    f_sdp = eps = None
    if args.report:
        doc = json.loads(Path(args.report).read_text())
        f_sdp, eps = doc.get("f_sdp"), doc.get("epsilon")
    name = args.dataset or Path(args.ground_truth).name
    row = {"dataset": name, "f_sdp": f_sdp, "eps": eps, "ate_trans_m": trans, "ate_rot_deg": rot}
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        write_metrics([row], args.output)
    print(f"dataset={name} ate_trans_m={trans:.6g} ate_rot_deg={rot:.6g}"
          + ("" if f_sdp is None else f" f_sdp={f_sdp:.10g} eps={eps}"))
    return EXIT_OK


def cmd_certify(args) -> int:
    from .io import params_to_pose

    g = parse(args.input)
    d, values = read_vertices(args.estimate)
    if d != g.d:
        raise UsageError(f"dimension mismatch: estimate is {d}D, problem is {g.d}D")
    X = np.zeros((d, g.k))
    for s in g.states:
        if s.name not in values:
            raise EmptyOverlap(f"estimate has no value for {s.name}")
        if s.is_pose:
            R, t = params_to_pose(values[s.name], d)
            X[:, g.rotation_columns(s)] = R
        else:
            t = np.asarray(values[s.name], dtype=float)
        X[:, g.translation_column(s)] = t
    for a, m in enumerate(g.range_measurements):
        diff = X[:, g.translation_column(m.j)] - X[:, g.translation_column(m.i)]
        nrm = np.linalg.norm(diff)
        X[:, g.unit_column(a)] = diff / nrm if nrm > 1e-12 else np.eye(d)[0]
    Q = build_data_matrix(g)
    try:
        cert = verify(Q, lift_zero_pad(X), g.layout, args.eps, args.stationarity_tol)
    except NotCriticalPoint as exc:
        print(f"verdict=not_critical ({exc})")
        return EXIT_NOT_CERTIFIED
    print(f"verdict={cert.verdict} min_eig={cert.min_eig:.6e} eps={cert.epsilon:g} "
          f"stationarity={cert.stationarity:.3e}")
    return EXIT_OK if cert.certified else EXIT_NOT_CERTIFIED


def cmd_sweep(args) -> int:
    opts = staircase_options(args)
    configs = sweep_configs(bases=args.bases, num_agents=args.agents, num_landmarks=args.landmarks,
                            range_probs=args.range_prob, seed=args.seed)
    for cfg in configs:
        cfg.rho, cfg.r_max, cfg.range_noise = args.rho, args.r_max, args.range_noise
        cfg.__post_init__()

    def progress(res):
        row = res.row()
        print(f"{row['instance']}: status={row['status']} bound={row['suboptimality_bound']:.3e} "
              f"iterations={row['iterations']} private_messages={row['private_messages']}", flush=True)

    results = run_sweep(configs, opts, args.output_dir, progress)
    print(f"{len(results)} instances written to {args.output_dir}")
    return EXIT_OK if all(r.report.certified for r in results) else EXIT_NOT_CERTIFIED


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "evaluate": cmd_evaluate,
    "certify": cmd_certify,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s: %(message)s")
    try:
        args = apply_config(parser, args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
