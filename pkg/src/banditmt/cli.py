"""Command-line entry point: score, synth, run, sweep, report.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from .config import ConfigError, ExperimentConfig, parse_override, read_config
from .environment import write_dataset
from .evaluation import (
    SWEEP_METRICS,
    RunLog,
    aggregate_sweep,
    decision_heatmap,
    heatmap_starts,
    run_simulation,
    summarize,
)
from .scoring import build_reward_matrix
from .synth import SynthSpec, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return repr(float(x))


def write_heatmap_csv(path, matrix, arm_names, starts) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["arm"] + [str(s) for s in starts])
        for name, row in zip(arm_names, matrix):
            w.writerow([name] + [_fmt(v) for v in row])


def write_run_outputs(run_log: RunLog, dataset, out_dir: Path, interval: int) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    run_log.write(out_dir / "runlog.jsonl")
    (out_dir / "summary.json").write_text(summarize(run_log, dataset).dumps(), encoding="utf-8")
    write_heatmap_csv(
        out_dir / "heatmap.csv",
        decision_heatmap(run_log, interval),
        run_log.arm_names,
        heatmap_starts(run_log, interval),
    )


def _load_config(args) -> ExperimentConfig:
    overrides = [parse_override(s) for s in args.set or []]
    cfg = read_config(args.config, overrides)
    if getattr(args, "seeds", None):
        cfg.seeds = [int(s) for s in args.seeds.split(",")]
    if getattr(args, "seed", None) is not None:
        cfg.seeds = [args.seed]
    if args.out is not None:
        cfg.output_dir = Path(args.out)
    return cfg


def cmd_score(args) -> int:
    names = args.arms.split(",") if args.arms else [Path(h).stem for h in args.hyp]
    records = build_reward_matrix(args.ref, args.hyp, names, source_file=args.src, domain=args.domain)
    write_dataset(records, args.out)
    if args.arms_out:
        Path(args.arms_out).write_text("".join(n + "\n" for n in names), encoding="utf-8")
    print(f"wrote {len(records)} records x {len(names)} arms to {args.out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    raw = {"preset": "eight_systems"}
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            loaded = yaml.safe_load(f) or {}
        raw = dict(loaded.get("synth", loaded))
    for key, value in (("sigma", args.sigma), ("records_per_domain", args.records_per_domain),
                       ("seed", args.seed)):
        if value is not None:
            raw[key] = value
    if args.no_embedding:
        raw["embedding"] = None
    try:
        spec = SynthSpec.from_dict(raw)
    except TypeError as e:
        raise ConfigError(f"synth spec: {e}") from e
    dataset = generate(spec)
    write_dataset(dataset.records, args.out)
    arms_out = Path(args.arms_out) if args.arms_out else Path(args.out).with_suffix(".arms.txt")
    spec.catalog.to_file(arms_out)
    print(f"wrote {len(dataset)} records to {args.out}; arm catalog in {arms_out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load_config(args)
    if len(cfg.policies) != 1:
        raise UsageError("run takes exactly one policy; use sweep for several")
    if len(cfg.seeds) != 1:
        raise UsageError("run takes exactly one seed; use sweep for several")
    dataset = cfg.load_dataset()
    seed = cfg.seeds[0]
    policy = cfg.policies[0]
    run_log = run_simulation(dataset, cfg.plan_for(seed), policy, cfg.feedback,
                             cfg.features if policy.contextual else None, seed, cfg.max_steps)
    write_run_outputs(run_log, dataset, cfg.output_dir, cfg.heatmap_interval)
    s = summarize(run_log, dataset)
    print(f"{s.label} seed={seed} T={s.steps} average_regret={s.average_regret:.4f} -> {cfg.output_dir}")
    return EXIT_OK


def _sweep_job(cfg: ExperimentConfig, dataset, policy, seed) -> RunLog:
    return run_simulation(dataset, cfg.plan_for(seed), policy, cfg.feedback,
                          cfg.features if policy.contextual else None, seed, cfg.max_steps)


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    dataset = cfg.load_dataset()
    jobs = [(p, s) for p in cfg.policies for s in cfg.seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_sweep_job, cfg, dataset, p, s) for p, s in jobs]
            logs = [f.result() for f in futures]
    else:
        logs = [_sweep_job(cfg, dataset, p, s) for p, s in jobs]
    for (policy, seed), run_log in zip(jobs, logs):
        write_run_outputs(run_log, dataset, cfg.output_dir / policy.label / f"seed_{seed}", cfg.heatmap_interval)
    table = aggregate_sweep(logs, dataset)
    with open(cfg.output_dir / "aggregate.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        header = ["policy", "runs"]
        for m in SWEEP_METRICS:
            header += [f"{m}_mean", f"{m}_std"]
        w.writerow(header)
        for policy in cfg.policies:
            row = [policy.label, len(cfg.seeds)]
            for m in SWEEP_METRICS:
                mean_std = table[policy.label].get(m)
                row += [_fmt(v) for v in mean_std] if mean_std else ["", ""]
            w.writerow(row)
            print(f"{policy.label}: average_regret "
                  f"{table[policy.label]['average_regret'][0]:.4f} +- {table[policy.label]['average_regret'][1]:.4f}")
    return EXIT_OK


def _unique_labels(logs) -> list[str]:
    labels, seen = [], {}
    for run_log in logs:
        base = f"{run_log.label}_seed{run_log.meta.get('seed', 0)}"
        n = seen.get(base, 0)
        seen[base] = n + 1
        labels.append(base if n == 0 else f"{base}_{n}")
    return labels


def cmd_report(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    logs = [RunLog.read(p) for p in args.logs]
    for p, run_log in zip(args.logs, logs):
        if not run_log.steps:
            raise ValueError(f"{p}: log has no steps")
    labels = _unique_labels(logs)
    curves = {label: run_log.cumulative_regret() for label, run_log in zip(labels, logs)}
    horizon = max(len(c) for c in curves.values())
    with open(out / "regret_curve.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t"] + labels)
        for t in range(horizon):
            w.writerow([t + 1] + [_fmt(c[t]) if t < len(c) else "" for c in curves.values()])
    heatmaps = {}
    for label, run_log in zip(labels, logs):
        matrix = decision_heatmap(run_log, args.interval)
        starts = heatmap_starts(run_log, args.interval)
        write_heatmap_csv(out / f"{label}_heatmap.csv", matrix, run_log.arm_names, starts)
        heatmaps[label] = (matrix, run_log.arm_names, starts)
    if not args.no_figures:
        from .plotting import plot_heatmap, plot_regret_curves

        plot_regret_curves(curves, out / "regret_curve.png")
        for label, (matrix, names, starts) in heatmaps.items():
            plot_heatmap(matrix, names, starts, out / f"{label}_heatmap.png", title=label)
    print(f"wrote report for {len(logs)} log(s) to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="banditmt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", help="build a dataset of sentence-BLEU arm scores")
    p.add_argument("--ref", required=True, help="reference file, one tokenized sentence per line")
    p.add_argument("--hyp", required=True, action="append", help="hypothesis file of one arm (repeat per arm)")
    p.add_argument("--arms", help="comma-separated arm names (default: hypothesis file stems)")
    p.add_argument("--src", help="source file; defaults to the references")
    p.add_argument("--domain", default="default", help="domain label for every record")
    p.add_argument("--out", required=True, help="output dataset (JSON lines)")
    p.add_argument("--arms-out", help="also write the arm catalog here")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("synth", help="generate a synthetic multi-domain dataset")
    p.add_argument("--config", help="YAML file holding a synth spec (or a 'synth' section)")
    p.add_argument("--sigma", type=float)
    p.add_argument("--records-per-domain", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-embedding", action="store_true", help="omit domain one-hot embeddings")
    p.add_argument("--out", required=True)
    p.add_argument("--arms-out", help="arm catalog path (default: <out>.arms.txt)")
    p.set_defaults(func=cmd_synth)

    for name, func, help_ in (("run", cmd_run, "run one policy with one seed"),
                              ("sweep", cmd_sweep, "run every configured policy over every seed")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="experiment config (YAML or JSON)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key, e.g. policy.kind=ucb1 (repeatable)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        if name == "run":
            p.add_argument("--seed", type=int)
        else:
            p.add_argument("--seeds", help="comma-separated seeds (overrides seeds)")
            p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="regret-curve and heatmap CSVs plus figures from run logs")
    p.add_argument("logs", nargs="+", help="runlog.jsonl files")
    p.add_argument("--interval", type=int, default=100, help="heatmap interval in steps")
    p.add_argument("--out", default="report")
    p.add_argument("--no-figures", action="store_true", help="write CSVs only")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "interval", 1) < 1:
        parser.error("--interval must be positive")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"banditmt {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, KeyError) as e:
        print(f"banditmt {args.command}: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
