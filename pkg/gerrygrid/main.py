from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .analysis import (
    ExtremesTracker,
    RegressionAccumulator,
    SweepRecord,
    mirror_report,
    render_distribution,
    scatter_points,
    sign_pattern,
    sweep,
)
from .comparison import compare, soft_checks
from .config import Config
from .enumeration import (
    PlanSet,
    VoterDistribution,
    burnside_count,
    count_canonical_forms,
    enumerate_plans,
)
from .errors import GerryGridError, ParseError, UndefinedMetricError, UsageError
from .evaluator import Evaluator, build_evaluator
from .grid_graph import DualGraph, grid_graph
from .logging_utils import configure_logging
from .metrics import clus, clusp, rep_stats
from .optimizers import ALGORITHMS, OptimizerConfig, resolve_algorithm, run_trial
from .storage import (
    SweepCsvWriter,
    last_sweep_bits,
    read_plans,
    read_sweep_csv,
    read_sweep_meta,
    write_curves,
    write_plans,
    write_points,
    write_result_json,
    write_slopes,
)

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings of one command; recorded in every output's metadata."""

    command: str
    seed: int
    threads: int
    output_dir: Path
    flags: dict[str, Any] = field(default_factory=dict)
    base: Config | None = None

    def meta(self, **extra: Any) -> dict[str, Any]:
        return {
            "command": self.command,
            "seed": self.seed,
            "flags": self.flags,
            **extra,
        }

    def output_path(self, given: str | None, default_name: str) -> Path:
        return Path(given) if given else self.output_dir / default_name


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _run_config(ns: argparse.Namespace, config: Config) -> RunConfig:
    flags = {
        key: value
        for key, value in sorted(vars(ns).items())
        if key not in {"func", "log_level", "threads", "output_dir"}
    }
    seed = ns.seed if getattr(ns, "seed", None) is not None else config.seed
    flags["seed"] = seed
    return RunConfig(
        command=ns.command,
        seed=seed,
        threads=ns.threads or config.threads,
        output_dir=Path(ns.output_dir) if ns.output_dir else config.output_dir,
        flags=flags,
        base=config,
    )


def _grid(n: int) -> DualGraph:
    if n < 1:
        raise UsageError(f"-n must be positive, got {n}")
    return grid_graph(n, n)


def _load_plans(ns: argparse.Namespace) -> PlanSet:
    if getattr(ns, "plans", None):
        return read_plans(ns.plans, expected_n=ns.n)
    return enumerate_plans(ns.n)


def _parse_distribution(ns: argparse.Namespace, k: int) -> VoterDistribution:
    if ns.hex:
        try:
            bits = int(ns.hex, 16)
        except ValueError as exc:
            raise UsageError(f"--hex must be hexadecimal, got {ns.hex!r}") from exc
        return VoterDistribution(bits, k)
    if ns.grid:
        dist = VoterDistribution.from_grid(Path(ns.grid).read_text(encoding="utf-8"))
        if dist.k != k:
            raise UsageError(f"grid file has {dist.k} cells, expected {k}")
        return dist
    raise UsageError("give the distribution with --hex or --grid")


def _build_evaluator(ns: argparse.Namespace, run: RunConfig, g: DualGraph) -> Evaluator:
    base = run.base or Config.load()
    if ns.eval == "chain":
        return build_evaluator(
            "chain",
            graph=g,
            n_districts=ns.n,
            steps=ns.steps,
            burn_in=ns.burn_in if ns.burn_in is not None else base.chain_burn_in,
            thinning=ns.thin if ns.thin is not None else base.chain_thinning,
            seed=run.seed,
            debug=base.debug_chain,
        )
    return build_evaluator(
        ns.eval,
        plans=_load_plans(ns),
        sample_size=ns.sample_size,
        full_pass=ns.full_pass,
        seed=run.seed,
    )


def _optimizer_config(ns: argparse.Namespace, run: RunConfig) -> OptimizerConfig:
    return OptimizerConfig(
        theta=ns.theta,
        t0=ns.t0,
        alpha=ns.alpha,
        theta_r=ns.theta_r,
        n_swap=ns.n_swap,
        k_max=ns.k_max,
        seed=run.seed,
        cool_every_step=ns.cool_every_step,
    )


def _cmd_enumerate(ns: argparse.Namespace, run: RunConfig) -> None:
    plans = enumerate_plans(ns.n)
    target = write_plans(run.output_path(ns.out, f"plans{ns.n}.txt"), plans, run.meta(n=ns.n))
    LOGGER.info("Plan file written to %s", target)
    print(len(plans))


def _cmd_sweep(ns: argparse.Namespace, run: RunConfig) -> None:
    g = _grid(ns.n)
    plans = _load_plans(ns)
    mode = "dedup" if ns.dedup else "full"
    suffix = (f"_num{ns.num}" if ns.num is not None else "") + ("_dedup" if ns.dedup else "")
    target = run.output_path(ns.out, f"sweep{ns.n}{suffix}.csv")

    start = 0
    append = False
    if ns.resume_from:
        try:
            start = int(ns.resume_from, 16) + 1
        except ValueError as exc:
            raise UsageError(f"--resume-from must be hexadecimal, got {ns.resume_from!r}") from exc
        append = target.exists()
        if append:
            last = last_sweep_bits(target)
            if last is not None and last + 1 != start:
                LOGGER.warning("Resume point %s does not follow the last row %x of %s", ns.resume_from, last, target)

    batch_size = ns.batch_size or (run.base.batch_size if run.base else 2048)
    records = sweep(g, plans, mode, ns.num, threads=run.threads, batch_size=batch_size, start=start)
    meta = run.meta(n=ns.n, k=g.k, mode=mode, plans=len(plans))
    meta["flags"] = {key: value for key, value in meta["flags"].items() if key != "resume_from"}
    with SweepCsvWriter(target, ns.n, meta, append=append) as writer:
        rows = writer.write_all(records)
    LOGGER.info("Sweep wrote %s rows to %s", rows, target)
    print(rows)


def _cmd_analyze(ns: argparse.Namespace, run: RunConfig) -> None:
    source = Path(ns.sweep_csv)
    meta = read_sweep_meta(source)
    accumulator = RegressionAccumulator(weighted=ns.weighted)
    tracker = ExtremesTracker()
    k = 0
    for record in read_sweep_csv(source):
        k = record.k
        accumulator.add(record)
        tracker.add(record)
    if k == 0:
        raise ParseError(f"sweep CSV {source} has no records")
    side = int(meta.get("n", round(k ** 0.5)))

    rows = [accumulator.row(num) for num in accumulator.nums() if 1 <= num <= k - 1]
    out_meta = run.meta(source=str(source), sweep_mode=meta.get("mode"), weighted=ns.weighted)
    target = run.output_path(ns.out, f"{source.stem}_slopes.csv")
    write_slopes(target, rows, out_meta)
    if ns.points:
        write_points(ns.points, scatter_points(read_sweep_csv(source)), out_meta)

    print("num,slope,intercept,count")
    for row in rows:
        print(f"{row.num},{row.slope:.10g},{row.intercept:.10g},{row.count}")
    signs = sign_pattern(rows)
    print("sign pattern: " + " ".join(f"{num}:{'+' if s > 0 else '-' if s < 0 else '0'}" for num, s in signs.items()))
    for num, slope, mirror in mirror_report(rows, k):
        if mirror is not None:
            LOGGER.info("num %s slope %.6f, num %s slope %.6f", num, slope, k - num, mirror)

    nums = [ns.num] if ns.num is not None else tracker.nums()
    for num in nums:
        best, worst = tracker.get(num)
        _print_extreme("best", best, side)
        _print_extreme("worst", worst, side)


def _print_extreme(label: str, records: list[SweepRecord], side: int) -> None:
    head = records[0]
    clusp_text = "n/a" if head.clusp is None else f"{float(head.clusp):.3f}"
    print(
        f"{label} num={head.num} E={float(head.rep.expectation):.3f} "
        f"Var={float(head.rep.variance):.3f} ClusP={clusp_text} ties={len(records)}"
    )
    if side * side == head.k:
        print(render_distribution(head.bits, side, side))


def _cmd_rep(ns: argparse.Namespace, run: RunConfig) -> None:
    g = _grid(ns.n)
    dist = _parse_distribution(ns, g.k)
    stats = rep_stats(dist, _load_plans(ns))
    try:
        clusp_text = f"{float(clusp(g, dist)):.6f}"
    except UndefinedMetricError:
        clusp_text = "undefined"
    clus_text = f"{float(clus(g, dist)):.6f}" if g.edges else "undefined"
    print(render_distribution(dist.bits, ns.n, ns.n))
    print(f"num={dist.num} clus={clus_text} clusp={clusp_text}")
    print(
        f"E={float(stats.expectation):.6f} Var={float(stats.variance):.6f} "
        f"min={float(stats.min):g} max={float(stats.max):g} plans={stats.total_plans}"
    )
    for seats, share in stats.pdf().items():
        print(f"P(Rep={float(seats):g})={float(share):.6f}")


def _cmd_optimize(ns: argparse.Namespace, run: RunConfig) -> None:
    resolve_algorithm(ns.alg)
    g = _grid(ns.n)
    cfg = _optimizer_config(ns, run)
    evaluator = _build_evaluator(ns, run, g)
    result = run_trial(ns.alg, evaluator, g, ns.num, cfg)
    payload = {
        "algorithm": ns.alg,
        "config": {
            "theta": cfg.theta,
            "t0": cfg.t0,
            "alpha": cfg.alpha,
            "theta_r": cfg.theta_r,
            "n_swap": cfg.n_swap,
            "k_max": cfg.k_max,
            "cool_every_step": cfg.cool_every_step,
            "eval": ns.eval,
        },
        "seed": run.seed,
        "best_bits_hex": result.best_distribution.to_hex(),
        "best_score": result.best_score,
        "evaluations": result.evaluations,
    }
    target = run.output_path(ns.out, f"optimize_{ns.alg}_num{ns.num}.json")
    write_result_json(target, payload, run.meta(n=ns.n))
    print(f"{result.best_score:.6f} {result.best_distribution.to_hex()}")
    print(render_distribution(result.best_distribution.bits, ns.n, ns.n))


def _cmd_compare(ns: argparse.Namespace, run: RunConfig) -> None:
    algorithms = [name.strip() for name in ns.algs.split(",") if name.strip()]
    for name in algorithms:
        resolve_algorithm(name)
    try:
        grid = [int(value) for value in ns.k_max_grid.split(",") if value.strip()]
    except ValueError as exc:
        raise UsageError(f"--k-max-grid must be comma-separated integers, got {ns.k_max_grid!r}") from exc
    if not grid:
        raise UsageError("--k-max-grid is empty")

    g = _grid(ns.n)
    cfg = replace(_optimizer_config(ns, run), k_max=max(grid))
    evaluator = _build_evaluator(ns, run, g)

    known_max = ns.known_max
    if ns.known_max_from:
        tracker = ExtremesTracker()
        for record in read_sweep_csv(ns.known_max_from):
            if record.num == ns.num:
                tracker.add(record)
        best, _ = tracker.get(ns.num)
        known_max = float(best[0].rep.expectation)

    points = compare(algorithms, evaluator, g, ns.num, ns.trials, grid, run.seed, cfg=cfg, threads=run.threads)
    target = run.output_path(ns.out, f"compare_num{ns.num}.csv")
    write_curves(target, points, run.meta(n=ns.n), known_max=known_max)

    print("algorithm,k_max,mean_best,stderr")
    for point in points:
        print(f"{point.algorithm},{point.k_max},{point.mean_best:.6f},{point.stderr:.6f}")
    if known_max is not None:
        print(f"known_max,,{known_max:.6f},")
    for check in soft_checks(points, ns.num, known_max):
        print(f"soft-check {'ok' if check.passed else 'DIFFERS'}: {check.name} ({check.detail})")


def _cmd_orbits(ns: argparse.Namespace, run: RunConfig) -> None:
    print(f"burnside {burnside_count(ns.n)}")
    if ns.brute_force:
        print(f"brute-force {count_canonical_forms(ns.n)}")


def _add_eval_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-n", type=int, default=5, help="Grid side (default: 5)")
    parser.add_argument("--plans", help="Plan file from 'enumerate' (default: enumerate in-process)")
    parser.add_argument("--eval", choices=("exact", "sampled", "chain"), default="exact", help="Evaluator backend")
    parser.add_argument("--sample-size", type=int, default=1000, help="Plans drawn by the sampled evaluator")
    parser.add_argument("--full-pass", action="store_true", help="Sampled evaluator visits every plan once")
    parser.add_argument("--steps", type=int, default=10_000, help="Post-burn-in chain steps")
    parser.add_argument("--burn-in", type=int, default=None, help="Chain burn-in steps")
    parser.add_argument("--thin", type=int, default=None, help="Chain thinning interval")
    parser.add_argument("--seed", type=int, default=None, help="Random seed (default: GERRYGRID_SEED)")


def _add_optimizer_flags(parser: argparse.ArgumentParser) -> None:
    defaults = OptimizerConfig()
    parser.add_argument("--num", type=int, required=True, help="Number of dot blocks")
    parser.add_argument("--theta", type=float, default=defaults.theta, help="Happiness threshold")
    parser.add_argument("--t0", type=float, default=defaults.t0, help="Initial temperature")
    parser.add_argument("--alpha", type=float, default=defaults.alpha, help="Cooling factor")
    parser.add_argument("--theta-r", type=float, default=defaults.theta_r, help="Random restart probability")
    parser.add_argument("--n-swap", type=int, default=defaults.n_swap, help="Blocks shuffled per random step")
    parser.add_argument("--cool-every-step", action="store_true", help="Cool after every iteration, not only on acceptance")
    parser.add_argument("-o", "--out", help="Output path")


def _add_global_flags(parser: argparse.ArgumentParser, default: Any) -> None:
    parser.add_argument("--log-level", default=default, help="Log level (default: GERRYGRID_LOG_LEVEL)")
    parser.add_argument("--threads", type=int, default=default, help="Worker threads (default: GERRYGRID_THREADS)")
    parser.add_argument("--output-dir", default=default, help="Default output directory (default: GERRYGRID_OUTPUT_DIR)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gerrygrid", description="Exhaustive and heuristic gerrymandering analysis on grid graphs")
    parser.add_argument("--version", action="version", version=f"gerrygrid {__version__}")
    _add_global_flags(parser, None)
    # Repeated after the subcommand; SUPPRESS keeps a flag given before it.
    common = _Parser(add_help=False)
    _add_global_flags(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command")

    enumerate_parser = sub.add_parser("enumerate", parents=[common], help="Write every legal plan of the n x n grid")
    enumerate_parser.add_argument("-n", type=int, required=True, help="Grid side")
    enumerate_parser.add_argument("-o", "--out", help="Plan file path")
    enumerate_parser.set_defaults(func=_cmd_enumerate)

    sweep_parser = sub.add_parser("sweep", parents=[common], help="Score every voter distribution against every plan")
    sweep_parser.add_argument("-n", type=int, default=5, help="Grid side (default: 5)")
    sweep_parser.add_argument("--plans", help="Plan file from 'enumerate'")
    sweep_parser.add_argument("--num", type=int, default=None, help="Only distributions with this many dots")
    sweep_parser.add_argument("--dedup", action="store_true", help="One representative per symmetry orbit")
    sweep_parser.add_argument("--resume-from", default=None, help="Continue after this bits_hex value")
    sweep_parser.add_argument("--batch-size", type=int, default=None, help="Distributions per work unit")
    sweep_parser.add_argument("-o", "--out", help="Sweep CSV path")
    sweep_parser.set_defaults(func=_cmd_sweep)

    analyze_parser = sub.add_parser("analyze", parents=[common], help="Regression slopes and extreme distributions of a sweep")
    analyze_parser.add_argument("sweep_csv", help="Sweep CSV produced by 'sweep'")
    analyze_parser.add_argument("--num", type=int, default=None, help="Only report extremes for this dot count")
    analyze_parser.add_argument("--weighted", action="store_true", help="Weight dedup records by orbit size")
    analyze_parser.add_argument("--points", default=None, help="Also write (num, clusp, e_rep) points here")
    analyze_parser.add_argument("-o", "--out", help="Slope CSV path")
    analyze_parser.set_defaults(func=_cmd_analyze)

    rep_parser = sub.add_parser("rep", parents=[common], help="Seat statistics of one distribution")
    rep_parser.add_argument("-n", type=int, default=5, help="Grid side (default: 5)")
    rep_parser.add_argument("--plans", help="Plan file from 'enumerate'")
    rep_parser.add_argument("--hex", default=None, help="Distribution as a hexadecimal bit vector")
    rep_parser.add_argument("--grid", default=None, help="File holding the distribution as rows of . and *")
    rep_parser.set_defaults(func=_cmd_rep)

    optimize_parser = sub.add_parser("optimize", parents=[common], help="Run one optimizer trial")
    optimize_parser.add_argument("--alg", required=True, help=f"One of {', '.join(sorted(ALGORITHMS))}")
    optimize_parser.add_argument("--k-max", type=int, default=1000, help="Evaluation budget")
    _add_optimizer_flags(optimize_parser)
    _add_eval_flags(optimize_parser)
    optimize_parser.set_defaults(func=_cmd_optimize)

    compare_parser = sub.add_parser("compare", parents=[common], help="Mean best-so-far curves over many trials")
    compare_parser.add_argument("--algs", required=True, help="Comma-separated algorithm names")
    compare_parser.add_argument("--trials", type=int, default=100, help="Trials per algorithm")
    compare_parser.add_argument("--k-max-grid", default="1,10,100,1000", help="Comma-separated budgets")
    compare_parser.add_argument("--known-max", type=float, default=None, help="Exhaustive maximum for the known_max row")
    compare_parser.add_argument("--known-max-from", default=None, help="Sweep CSV to read the exhaustive maximum from")
    compare_parser.set_defaults(k_max=1)
    _add_optimizer_flags(compare_parser)
    _add_eval_flags(compare_parser)
    compare_parser.set_defaults(func=_cmd_compare)

    orbits_parser = sub.add_parser("orbits", parents=[common], help="Count distributions up to square symmetry")
    orbits_parser.add_argument("-n", type=int, default=5, help="Grid side (default: 5)")
    orbits_parser.add_argument("--brute-force", action="store_true", help="Also canonicalise every bit vector")
    orbits_parser.set_defaults(func=_cmd_orbits)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point for the gerrygrid command line; returns the exit status."""
    try:
        parser = build_parser()
        ns = parser.parse_args(argv)
        if getattr(ns, "func", None) is None:
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand is required")
        config = Config.load()
        configure_logging(ns.log_level or config.log_level)
        run = _run_config(ns, config)
        LOGGER.debug("Running %s with %s", run.command, run.flags)
        ns.func(ns, run)
    except (GerryGridError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - single-line diagnostic for unexpected failures
        LOGGER.debug("Unhandled failure", exc_info=True)
        print(f"error: internal: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
