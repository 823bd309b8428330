"""Command line harness.

Subcommands: ``solve`` (one decomposition run), ``synth`` (test-problem
generation), ``bench`` (multi-solver error-vs-time comparison against a
high-accuracy reference), ``derive-params`` (formulation parameters from
a reference split). Runs write the decomposition in the binary matrix
format, a trace CSV with header ``iter,seconds,objective,residual,
rel_error``, a rendered figure next to each CSV, and a text summary.

Exit codes: 0 success, 2 configuration error, 3 solver did not converge
(artifacts are still written).
"""

import argparse
import os
import sys

import numpy as np

from .dualsmooth import proximal_point
from .gauges import GaugeSpec, PenaltySpec
from .levelset import LevelSetError, solve_levelset
from .linalg import frobenius_norm, nuclear_norm, spectral_norm, svd_full
from .matio import load_matrix, save_matrix
from .metrics import default_lambda_sum, derive_parameters, relative_pair_error
from .models import default_mu, rpca_model, rpca_parts
from .operators import vec_to_pair
from .pdhg import solve_pdhg
from .plots import plot_comparison, plot_trace
from .subsolvers import FlipProblem, LagProblem, solve_flip_qn, solve_flip_spg
from .synth import synth_exponential, synth_lowrank_sparse


class ConfigError(Exception):
    pass


FORMULATION_SOLVERS = {
    "classic": ("tfocs", "pdhg", "levelset"),
    "sum": ("levelset", "tfocs", "pdhg"),
    "max": ("levelset",),
    "flip_sum": ("spg",),
    "flip_max": ("qn", "spg"),
    "lag": ("qn", "tfocs", "pdhg"),
    "linf": ("tfocs", "pdhg"),
}


def _require(value, name, formulation):
    if value is None:
        raise ConfigError(f"formulation {formulation!r} requires --{name}")
    return value


def _lambda_for(args, A):
    if args.formulation in ("max", "flip_max"):
        return _require(args.lambda_max, "lambda-max", args.formulation)
    if args.lambda_sum is not None:
        return args.lambda_sum
    return default_lambda_sum(*A.shape)


def _penalty(args):
    if args.penalty == "l2":
        return PenaltySpec("least_squares")
    return PenaltySpec("huber", delta=args.huber_delta)


def _eps_target(args, penalty):
    # --eps is a Frobenius residual budget for the least-squares penalty
    # and a raw penalty value for huber
    if penalty.kind == "least_squares":
        return penalty.target_from_residual_norm(args.eps)
    return args.eps


def _pair_error_fn(reference, shape, mode):
    m, n = shape

    def err(point):
        if isinstance(point, tuple):
            L, S = point
        else:
            L, S = vec_to_pair(np.asarray(point), m, n)
        return relative_pair_error((L, S), reference, mode=mode)

    return err


def _run_solver(args, A, error_fn=None):
    """Dispatch one (formulation, solver) run. Returns ((L, S), trace)."""
    formulation, solver = args.formulation, args.solver
    if formulation not in FORMULATION_SOLVERS:
        raise ConfigError(f"unknown formulation {formulation!r}")
    if solver not in FORMULATION_SOLVERS[formulation]:
        raise ConfigError(
            f"solver {solver!r} does not support formulation {formulation!r}; "
            f"choose from {', '.join(FORMULATION_SOLVERS[formulation])}")
    m, n = A.shape
    penalty = _penalty(args)

    if solver == "levelset":
        lam = _lambda_for(args, A)
        combiner = "max" if formulation == "max" else "sum"
        if formulation == "classic":
            eps_val = 0.0
        else:
            _require(args.eps, "eps", formulation)
            eps_val = _eps_target(args, penalty)
        gauge = GaugeSpec(combiner, lam, nonneg=args.nonneg)
        return solve_levelset(gauge, penalty, A, eps_val, tol=args.tol,
                              max_newton=args.max_newton,
                              inner_max_iters=args.max_iters,
                              error_fn=error_fn, time_limit=args.time_limit)

    if solver == "spg":
        tau = _require(args.tau, "tau", formulation)
        lam = _lambda_for(args, A)
        combiner = "max" if formulation == "flip_max" else "sum"
        gauge = GaugeSpec(combiner, lam, nonneg=args.nonneg)
        problem = FlipProblem(gauge=gauge, tau=tau, penalty=penalty, A=A)
        return solve_flip_spg(problem, tol=args.tol, max_iters=args.max_iters,
                              error_fn=error_fn, time_limit=args.time_limit)

    if solver == "qn":
        if formulation == "lag":
            problem = LagProblem(
                _require(args.lambda_l, "lambda-l", formulation),
                _require(args.lambda_s, "lambda-s", formulation),
                A, nonneg=args.nonneg)
        else:
            tau = _require(args.tau, "tau", formulation)
            gauge = GaugeSpec("max", _lambda_for(args, A), nonneg=args.nonneg)
            problem = FlipProblem(gauge=gauge, tau=tau, penalty=penalty, A=A)
        return solve_flip_qn(problem, tol=args.tol, max_iters=args.max_iters,
                             qn_scale=args.qn_scale, error_fn=error_fn,
                             use_randomized_svd=args.randomized_svd,
                             sv_limit_first_iters=args.sv_limit,
                             time_limit=args.time_limit)

    # composite-model paths
    kwargs = {"nonneg": args.nonneg}
    if formulation == "lag":
        kwargs = {"lam_l": _require(args.lambda_l, "lambda-l", formulation),
                  "lam_s": _require(args.lambda_s, "lambda-s", formulation)}
    else:
        kwargs["lam"] = _lambda_for(args, A)
        if formulation == "sum":
            kwargs["eps"] = _require(args.eps, "eps", formulation)
        elif formulation == "linf":
            kwargs["bound"] = args.bound
    mu = args.mu if args.mu is not None else default_mu(A)

    if solver == "tfocs":
        model = rpca_model(formulation, A, **kwargs)
        x, trace = proximal_point(model, mu, outer_tol=args.tol,
                                  max_outer=args.max_outer,
                                  inner_max_iters=args.max_iters,
                                  error_fn=error_fn, time_limit=args.time_limit)
        return vec_to_pair(x, m, n), trace

    if solver == "pdhg":
        psi0, psi1, op, b = rpca_parts(formulation, A, **kwargs)
        x, trace = solve_pdhg(psi0, psi1, op, b, step_ratio=args.step_ratio,
                              tol=args.tol, max_iters=args.max_iters,
                              error_fn=error_fn, time_limit=args.time_limit)
        return vec_to_pair(x, m, n), trace

    raise ConfigError(f"unknown solver {solver!r}")


def _matrix_stats(L, S):
    sl = svd_full(L).sigma
    rank = int(np.count_nonzero(sl > 1e-9 * max(sl[0], 1e-300))) if sl.size else 0
    smax = float(np.max(np.abs(S), initial=0.0))
    nnz = int(np.count_nonzero(np.abs(S) > 1e-12 * max(smax, 1e-300)))
    return {
        "nuclear_norm_L": nuclear_norm(L),
        "l1_norm_S": float(np.sum(np.abs(S))),
        "rank_L": rank,
        "nnz_S": nnz,
    }


def _write_summary(path, entries):
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={value}\n")


def cmd_solve(args):
    A = load_matrix(args.infile)
    error_fn = None
    reference = None
    if args.ref_low_rank and args.ref_sparse:
        reference = (load_matrix(args.ref_low_rank), load_matrix(args.ref_sparse))
        error_fn = _pair_error_fn(reference, A.shape, args.error_metric)

    (L, S), trace = _run_solver(args, A, error_fn=error_fn)

    os.makedirs(args.out_dir, exist_ok=True)
    save_matrix(os.path.join(args.out_dir, "L.mat"), L)
    save_matrix(os.path.join(args.out_dir, "S.mat"), S)
    trace.to_csv(os.path.join(args.out_dir, "trace.csv"))
    plot_trace(trace, os.path.join(args.out_dir, "trace.png"),
               title=f"{args.formulation} / {args.solver}")

    entries = {
        "formulation": args.formulation,
        "solver": args.solver,
        "rows": A.shape[0],
        "cols": A.shape[1],
        "lambda_sum": args.lambda_sum,
        "lambda_max": args.lambda_max,
        "lambda_l": args.lambda_l,
        "lambda_s": args.lambda_s,
        "eps": args.eps,
        "tau": args.tau,
        "tol": args.tol,
        "converged": trace.converged,
        "iterations": trace.iterations,
        "seconds": f"{trace.elapsed():.6f}",
        "residual_fro": frobenius_norm(L + S - A),
    }
    entries.update(_matrix_stats(L, S))
    if trace.message:
        entries["message"] = trace.message
    _write_summary(os.path.join(args.out_dir, "summary.txt"), entries)

    if not trace.converged:
        print(f"warning: {trace.message or 'did not converge'}", file=sys.stderr)
        return 3
    return 0


def cmd_synth(args):
    if args.kind == "exponential":
        A = synth_exponential(args.m, args.n, args.rank, seed=args.seed)
        save_matrix(args.out, A)
        print(f"wrote {args.out} ({args.m}x{args.n}, rank {args.rank})")
        return 0
    A, L0, S0 = synth_lowrank_sparse(args.m, args.n, args.rank,
                                     _sparse_count(args), args.snr_db,
                                     seed=args.seed)
    for name, M in (("A", A), ("L0", L0), ("S0", S0)):
        save_matrix(f"{args.out_prefix}_{name}.mat", M)
    print(f"wrote {args.out_prefix}_{{A,L0,S0}}.mat")
    return 0


def _sparse_count(args):
    if args.p is not None:
        return args.p
    return int(round(args.p_frac * args.m * args.n))


def _tuned_lag_reference(A, tol, max_iters=200000):
    """High-accuracy Lagrangian reference; the weights start at scale-free
    defaults and are halved until both blocks are nonzero."""
    lam_l = 0.25 * spectral_norm(A)
    lam_s = 0.1 * float(np.max(np.abs(A)))
    floor = 1e-10 * max(frobenius_norm(A), 1.0)
    for _ in range(12):
        (L, S), trace = solve_flip_qn(LagProblem(lam_l, lam_s, A),
                                      tol=tol, max_iters=max_iters)
        l_zero = frobenius_norm(L) <= floor
        s_zero = frobenius_norm(S) <= floor
        if not l_zero and not s_zero:
            return (L, S), lam_l, lam_s
        if l_zero:
            lam_l *= 0.5
        if s_zero:
            lam_s *= 0.5
    raise ConfigError("could not tune Lagrangian weights to a two-block solution")


BENCH_SOLVERS = ("qn", "qn-flip", "spg", "levelset", "levelset-sum", "tfocs", "pdhg")


def _bench_one(name, A, params, args, error_fn):
    penalty = PenaltySpec("least_squares")
    eps_rho = penalty.target_from_residual_norm(params["eps"])
    tol = args.tol
    limit = args.time_limit
    if name == "qn":
        problem = LagProblem(params["lam_l"], params["lam_s"], A)
        return solve_flip_qn(problem, tol=tol, max_iters=args.max_iters,
                             error_fn=error_fn, time_limit=limit)[1]
    if name == "qn-flip":
        gauge = GaugeSpec("max", params["lambda_max"])
        problem = FlipProblem(gauge=gauge, tau=params["tau_max"],
                              penalty=penalty, A=A)
        return solve_flip_qn(problem, tol=tol, max_iters=args.max_iters,
                             error_fn=error_fn, time_limit=limit)[1]
    if name == "spg":
        gauge = GaugeSpec("sum", params["lambda_sum"])
        problem = FlipProblem(gauge=gauge, tau=params["tau_sum"],
                              penalty=penalty, A=A)
        return solve_flip_spg(problem, tol=tol, max_iters=args.max_iters,
                              error_fn=error_fn, time_limit=limit)[1]
    if name in ("levelset", "levelset-sum"):
        combiner = "max" if name == "levelset" else "sum"
        gauge = GaugeSpec(combiner, params["lambda_max" if combiner == "max"
                                           else "lambda_sum"])
        return solve_levelset(gauge, penalty, A, eps_rho, tol=tol,
                              inner_max_iters=args.max_iters,
                              error_fn=error_fn, time_limit=limit)[1]
    if name == "tfocs":
        model = rpca_model("sum", A, lam=params["lambda_sum"], eps=params["eps"])
        mu = args.mu if args.mu is not None else default_mu(A)
        return proximal_point(model, mu, outer_tol=tol,
                              max_outer=args.max_outer,
                              inner_max_iters=args.max_iters,
                              error_fn=error_fn, time_limit=limit)[1]
    if name == "pdhg":
        psi0, psi1, op, b = rpca_parts("sum", A, lam=params["lambda_sum"],
                                       eps=params["eps"])
        return solve_pdhg(psi0, psi1, op, b, tol=tol, max_iters=args.max_iters,
                          error_fn=error_fn, time_limit=limit)[1]
    raise ConfigError(f"unknown bench solver {name!r}; choose from "
                      f"{', '.join(BENCH_SOLVERS)}")


def cmd_bench(args):
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    for s in solvers:
        if s not in BENCH_SOLVERS:
            raise ConfigError(f"unknown bench solver {s!r}; choose from "
                              f"{', '.join(BENCH_SOLVERS)}")
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    os.makedirs(args.out_dir, exist_ok=True)
    summary = {}

    for seed in seeds:
        if args.suite == "exponential":
            A = synth_exponential(args.m, args.n, args.rank, seed=seed)
            reference, lam_l, lam_s = _tuned_lag_reference(A, tol=args.ref_tol)
            params = derive_parameters(*reference, A, lam_l=lam_l, lam_s=lam_s)
            params.update(lam_l=lam_l, lam_s=lam_s)
        elif args.suite == "lowrank":
            A, L0, S0 = synth_lowrank_sparse(args.m, args.n, args.rank,
                                             _sparse_count(args), args.snr_db,
                                             seed=seed)
            lam_sum = default_lambda_sum(args.m, args.n)
            eps = frobenius_norm(A - L0 - S0)
            gauge = GaugeSpec("sum", lam_sum)
            penalty = PenaltySpec("least_squares")
            reference, _ = solve_levelset(
                gauge, penalty, A, penalty.target_from_residual_norm(eps),
                tol=args.ref_tol, inner_max_iters=args.max_iters)
            params = derive_parameters(*reference, A, lambda_sum=lam_sum)
            if "qn" in solvers:
                raise ConfigError(
                    "the lowrank suite has no Lagrangian weights; drop 'qn'")
        else:
            raise ConfigError(f"unknown suite {args.suite!r}")

        save_matrix(os.path.join(args.out_dir, f"ref_L_seed{seed}.mat"), reference[0])
        save_matrix(os.path.join(args.out_dir, f"ref_S_seed{seed}.mat"), reference[1])
        error_fn = _pair_error_fn(reference, A.shape, args.error_metric)

        traces = {}
        for name in solvers:
            trace = _bench_one(name, A, params, args, error_fn)
            trace.to_csv(os.path.join(args.out_dir, f"trace_{name}_seed{seed}.csv"))
            traces[name] = trace
            crossing = trace.first_time_below(args.error_threshold)
            summary[f"{name}_seed{seed}_time_to_{args.error_threshold}"] = (
                "" if crossing is None else f"{crossing:.6f}")
        plot_comparison(traces, os.path.join(args.out_dir, f"bench_seed{seed}.png"),
                        title=f"{args.suite} suite, seed {seed}")

    _write_summary(os.path.join(args.out_dir, "summary.txt"), summary)
    print(f"bench artifacts in {args.out_dir}")
    return 0


def cmd_derive_params(args):
    L = load_matrix(args.low_rank)
    S = load_matrix(args.sparse)
    A = load_matrix(args.observed)
    params = derive_parameters(L, S, A, lambda_sum=args.lambda_sum,
                               lam_l=args.lambda_l, lam_s=args.lambda_s)
    lines = "\n".join(f"{k}={v:.12g}" for k, v in sorted(params.items()))
    print(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(lines + "\n")
    return 0


def _add_solver_options(p):
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("--max-newton", type=int, default=30)
    p.add_argument("--max-outer", type=int, default=60)
    p.add_argument("--mu", type=float, default=None,
                   help="smoothing weight for tfocs (default 0.1*||A||_F/sqrt(mn))")
    p.add_argument("--qn-scale", type=float, default=1.25)
    p.add_argument("--step-ratio", type=float, default=1.0,
                   help="pdhg tau/sigma ratio")
    p.add_argument("--penalty", choices=("l2", "huber"), default="l2")
    p.add_argument("--huber-delta", type=float, default=1.0)
    p.add_argument("--nonneg", action="store_true")
    p.add_argument("--randomized-svd", action="store_true")
    p.add_argument("--sv-limit", type=int, default=10,
                   help="cap on singular values computed in the first two "
                        "quasi-Newton iterations")
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--error-metric", choices=("sum", "joint"), default="sum")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spcp",
        description="Low-rank plus sparse decomposition solvers and benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="decompose a matrix")
    p_solve.add_argument("--config", default=None,
                         help="key=value file; command-line flags override")
    p_solve.add_argument("--formulation", choices=sorted(FORMULATION_SOLVERS),
                         default=None)
    p_solve.add_argument("--solver", default=None)
    p_solve.add_argument("--in", dest="infile", default=None)
    p_solve.add_argument("--out-dir", default=".")
    p_solve.add_argument("--lambda-sum", type=float, default=None)
    p_solve.add_argument("--lambda-max", type=float, default=None)
    p_solve.add_argument("--lambda-l", type=float, default=None)
    p_solve.add_argument("--lambda-s", type=float, default=None)
    p_solve.add_argument("--eps", type=float, default=None,
                         help="residual budget (Frobenius norm for the l2 penalty)")
    p_solve.add_argument("--tau", type=float, default=None,
                         help="gauge budget for the flipped formulations")
    p_solve.add_argument("--bound", type=float, default=0.5,
                         help="entrywise bound for the linf formulation")
    p_solve.add_argument("--ref-low-rank", default=None)
    p_solve.add_argument("--ref-sparse", default=None)
    _add_solver_options(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_synth = sub.add_parser("synth", help="generate synthetic data")
    synth_sub = p_synth.add_subparsers(dest="kind", required=True)
    p_exp = synth_sub.add_parser("exponential")
    p_exp.add_argument("--m", type=int, required=True)
    p_exp.add_argument("--n", type=int, required=True)
    p_exp.add_argument("--rank", type=int, required=True)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--out", default="A.mat")
    p_exp.set_defaults(func=cmd_synth)
    p_lrs = synth_sub.add_parser("lowrank-sparse")
    p_lrs.add_argument("--m", type=int, required=True)
    p_lrs.add_argument("--n", type=int, required=True)
    p_lrs.add_argument("--rank", type=int, required=True)
    p_lrs.add_argument("--p", type=int, default=None,
                       help="number of sparse entries")
    p_lrs.add_argument("--p-frac", type=float, default=0.05,
                       help="sparse fraction of m*n when --p is absent")
    p_lrs.add_argument("--snr-db", type=float, default=45.0)
    p_lrs.add_argument("--seed", type=int, default=0)
    p_lrs.add_argument("--out-prefix", default="synth")
    p_lrs.set_defaults(func=cmd_synth)

    p_bench = sub.add_parser("bench", help="compare solvers on a suite")
    p_bench.add_argument("--suite", choices=("exponential", "lowrank"),
                         default="exponential")
    p_bench.add_argument("--m", type=int, default=100)
    p_bench.add_argument("--n", type=int, default=125)
    p_bench.add_argument("--rank", type=int, default=5)
    p_bench.add_argument("--p", type=int, default=None)
    p_bench.add_argument("--p-frac", type=float, default=0.05)
    p_bench.add_argument("--snr-db", type=float, default=45.0)
    p_bench.add_argument("--seeds", default="0,1,2")
    p_bench.add_argument("--solvers", default="qn,spg,levelset,tfocs,pdhg")
    p_bench.add_argument("--out-dir", default="bench")
    p_bench.add_argument("--ref-tol", type=float, default=1e-12)
    p_bench.add_argument("--error-threshold", type=float, default=1e-4)
    _add_solver_options(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_derive = sub.add_parser("derive-params",
                              help="formulation parameters from a reference split")
    p_derive.add_argument("--low-rank", required=True)
    p_derive.add_argument("--sparse", required=True)
    p_derive.add_argument("--observed", required=True)
    p_derive.add_argument("--lambda-sum", type=float, default=None)
    p_derive.add_argument("--lambda-l", type=float, default=None)
    p_derive.add_argument("--lambda-s", type=float, default=None)
    p_derive.add_argument("--out", default=None)
    p_derive.set_defaults(func=cmd_derive_params)
    solve_actions = {}
    for action in p_solve._actions:
        solve_actions[action.dest] = action
        for opt in action.option_strings:
            solve_actions[opt.lstrip("-").replace("-", "_")] = action
    parser.solve_actions = solve_actions
    return parser


def _apply_config(parser, args):
    if getattr(args, "config", None) is None:
        return args
    overrides = {}
    with open(args.config) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line: {line!r}")
            key, value = line.split("=", 1)
            overrides[key.strip().replace("-", "_")] = value.strip()
    for key, raw in overrides.items():
        action = parser.solve_actions.get(key)
        if action is None:
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, action.dest) != action.default:
            continue  # explicit command-line flags win
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("true", "1", "yes", "on")
        elif action.type is not None:
            try:
                value = action.type(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
        else:
            value = raw
        if action.choices is not None and value not in action.choices:
            raise ConfigError(f"bad value for {key!r}: {raw!r}")
        setattr(args, action.dest, value)
    return args


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.func is cmd_solve:
            args = _apply_config(parser, args)
            if args.formulation is None or args.solver is None or args.infile is None:
                raise ConfigError("solve requires --formulation, --solver and --in")
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LevelSetError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
