"""Command line front end: run experiments, generate data, plot, and check.

Subcommands:
    run <config>      execute every run block of a config file (a path or a
                      packaged preset name), writing one trace CSV per
                      (run, seed) and a summary CSV per output directory
    gen-data <seed> <out.csv>   write the synthetic regression instance
    pareto-toy        nominal vs. robust frontier of the toy pair (CSV + SVG)
    check             numeric invariant suite; --self-test verifies the
                      suite itself catches an injected gradient bug
    plot <metric> <out.svg> <traces...>   log-scale comparison plot

Exit codes: 0 success, 1 config or I/O error, 2 invariant check failure.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import checks
from .config import (
    ConfigError,
    build_solver_config,
    load_preset,
    parse_config,
    preset_names,
)
from .dual import DualContext, grad_eta
from .metrics import robust_frontier, window_means
from .problems import (
    WINE_ENV,
    LinearSpec,
    ToySpec,
    estimate_lipschitz,
    gen_linear,
    load_wine_tasks,
    resolve_wine_path,
    toy_problem,
)
from .solvers import (
    SolverDivergence,
    run_double_clip,
    run_double_loop,
    run_modo,
    run_stochastic_mgda,
)
from .svg import emit_svg_plot, emit_svg_scatter
from .trace import write_trace

_SOLVER_FNS = {
    "double_loop": run_double_loop,
    "double_clip": run_double_clip,
    "mgda": run_stochastic_mgda,
    "modo": run_modo,
}

SUMMARY_HEADER = (
    "run,problem,solver,seeds,status,init20_mean,final20_mean,final20_std,samples_per_seed"
)


def _fmt(x) -> str:
    return format(float(x), ".17g")


class _Parser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they exit with status 1, leaving
    status 2 to mean an invariant check failed."""

    def error(self, message):
        raise ConfigError(message)


def _build_problem(cfg):
    if cfg.problem == "linear":
        return gen_linear(LinearSpec(seed=cfg.data_seed))
    if cfg.problem == "wine":
        path = resolve_wine_path(cfg.wine_path)
        if path is None:
            raise ConfigError(
                "wine dataset not found; set wine_path in the config, export "
                f"{WINE_ENV}, or place the CSV at data/winequality-white.csv"
            )
        try:
            return load_wine_tasks(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"wine dataset: {exc}") from exc
    return toy_problem(
        ToySpec(perturbation_std=cfg.toy_std), num_draws=cfg.toy_draws, seed=cfg.data_seed
    )


def _make_context(cfg, problem) -> DualContext:
    g = estimate_lipschitz(problem) if cfg.g == "auto" else float(cfg.g)
    return DualContext(lam=cfg.lam, lipschitz_g=g, num_objectives=problem.num_objectives)


def run_experiment(runs, echo=print) -> int:
    """Execute parsed run blocks and write their artifacts.

    One trace CSV per (run, seed) under the block's output_dir, then one
    summary.csv per output_dir aggregating the first/last-20-iteration
    balanced-gradient windows across seeds. Solver divergence is recorded in
    the summary status column (its partial trace still gets written) and does
    not fail the invocation; only config and I/O trouble does, via raised
    ConfigError/OSError. Returns the process exit status, 0.
    """
    jobs = []
    for cfg in runs:
        problem = _build_problem(cfg)
        ctx = _make_context(cfg, problem)
        outdir = Path(cfg.output_dir)
        for seed in cfg.seeds:
            path = outdir / f"{cfg.name}_seed{seed}.csv"
            jobs.append((cfg, problem, ctx, seed, path))

    def work(job):
        cfg, problem, ctx, seed, path = job
        solver_cfg = build_solver_config(cfg, seed)
        try:
            tr = _SOLVER_FNS[cfg.solver](solver_cfg, problem, ctx)
            status = "ok"
        except SolverDivergence as exc:
            tr = exc.partial_trace
            status = f"diverged@{exc.iteration}"
        write_trace(tr, path)
        return status, tr

    with ThreadPoolExecutor(max_workers=min(len(jobs), os.cpu_count() or 2)) as pool:
        outcomes = list(pool.map(work, jobs))

    per_run = {}
    for (cfg, _, _, seed, path), (status, tr) in zip(jobs, outcomes):
        echo(f"{path}  [{status}]")
        per_run.setdefault(cfg.name, (cfg, []))[1].append((seed, status, tr))

    by_dir = {}
    for cfg, results in per_run.values():
        inits, finals, samples, bad = [], [], [0], []
        for seed, status, tr in results:
            if status != "ok":
                bad.append(f"seed{seed}:{status}")
            if len(tr):
                init, final = window_means(tr.balanced_grad)
                inits.append(init)
                finals.append(final)
                samples.append(int(tr.samples[-1]))
        row = ",".join(
            [
                cfg.name,
                cfg.problem,
                cfg.solver,
                " ".join(str(s) for s in cfg.seeds),
                ";".join(bad) if bad else "ok",
                _fmt(np.mean(inits)) if inits else "nan",
                _fmt(np.mean(finals)) if finals else "nan",
                _fmt(np.std(finals)) if finals else "nan",
                str(max(samples)),
            ]
        )
        by_dir.setdefault(cfg.output_dir, []).append(row)

    for outdir, rows in by_dir.items():
        spath = Path(outdir) / "summary.csv"
        spath.write_text(SUMMARY_HEADER + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
        echo(f"{spath}  [{len(rows)} run(s)]")
    return 0


def cmd_run(args) -> int:
    path = Path(args.config)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    else:
        try:
            text = load_preset(args.config)
        except ConfigError:
            raise ConfigError(
                f"no config file or preset named {args.config!r}; "
                f"presets: {', '.join(preset_names())}"
            ) from None
    return run_experiment(parse_config(text))


def cmd_gen_data(args) -> int:
    problem = gen_linear(LinearSpec(seed=args.seed))
    x = problem.features[0]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    header = [f"x{j + 1}" for j in range(x.shape[1])]
    header += [f"y{i + 1}" for i in range(problem.num_objectives)]
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in range(x.shape[0]):
            row = [_fmt(v) for v in x[r]]
            row += [_fmt(y[r]) for y in problem.labels]
            fh.write(",".join(row) + "\n")
    print(f"wrote {out} ({x.shape[0]} rows)")
    return 0


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise ConfigError(f"grid must look like lo:hi:count, got {text!r}") from None
    if count < 1 or not lo < hi:
        raise ConfigError(f"grid needs lo < hi and count >= 1, got {text!r}")
    return np.linspace(lo, hi, count)


def cmd_pareto_toy(args) -> int:
    grid = _parse_grid(args.grid)
    nominal, robust = robust_frontier(
        ToySpec(perturbation_std=args.std),
        perturbation_std=args.std,
        num_draws=args.draws,
        lam=args.lam,
        grid=grid,
        seed=args.seed,
    )
    out_csv = Path(args.out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        fh.write("frontier,theta,f1,f2\n")
        for tag, pts in (("nominal", nominal), ("robust", robust)):
            for p in pts:
                fh.write(f"{tag},{_fmt(p.theta)},{_fmt(p.values[0])},{_fmt(p.values[1])}\n")
    emit_svg_scatter(
        [[p.values for p in nominal], [p.values for p in robust]],
        ["nominal", "robust"],
        args.out_svg,
    )
    print(
        f"nominal frontier {len(nominal)} points, robust {len(robust)}; "
        f"wrote {out_csv} and {args.out_svg}"
    )
    return 0


def cmd_check(args) -> int:
    if args.self_test:
        # a deliberately sign-flipped eta gradient must trip the FD check
        def flipped(ctx, losses, eta):
            return -grad_eta(ctx, losses, eta)

        res = checks.check_gradient_fd_linear(grad_eta_fn=flipped)
        if res.passed:
            print("self-test FAILED: injected sign flip went undetected")
            return 2
        print(f"self-test ok: injected sign flip caught ({res.detail})")
        return 0
    results = checks.run_checks()
    failures = 0
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
        failures += 0 if r.passed else 1
    print(f"{len(results) - failures}/{len(results)} properties hold")
    return 2 if failures else 0


def cmd_plot(args) -> int:
    try:
        emit_svg_plot(args.traces, args.metric, args.out)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="drmoo",
        description="distributionally robust multi-objective optimization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="execute a config file or packaged preset")
    p.add_argument("config", help=f"config path or preset name ({', '.join(preset_names())})")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen-data", help="write the synthetic regression instance as CSV")
    p.add_argument("seed", type=int)
    p.add_argument("out", help="output CSV path (columns x1..x10, y1..y3)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("pareto-toy", help="nominal vs. robust toy frontier")
    p.add_argument("--std", type=float, default=0.5, help="perturbation std (default 0.5)")
    p.add_argument("--draws", type=int, default=200, help="perturbation draws (default 200)")
    p.add_argument(
        "--grid",
        default="-1:3:401",
        help='theta grid "lo:hi:count"; pass as --grid=-1:3:401 when lo is negative',
    )
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="dual regularization")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-csv", default="pareto_toy.csv")
    p.add_argument("--out-svg", default="pareto_toy.svg")
    p.set_defaults(func=cmd_pareto_toy)

    p = sub.add_parser("check", help="run the numeric invariant suite")
    p.add_argument(
        "--self-test",
        action="store_true",
        help="verify the suite catches an injected gradient sign flip",
    )
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("plot", help="log-scale metric plot from trace CSVs")
    p.add_argument("metric", help="trace column, e.g. balanced_grad")
    p.add_argument("out", help="output SVG path")
    p.add_argument("traces", nargs="+", help="trace CSV paths")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
