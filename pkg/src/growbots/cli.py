"""Command-line harness: run, batch, analyze, export-trajectory, replay-check.

Exit codes: 0 success, 2 bad configuration or arguments, 3 I/O failure,
4 refused to overwrite existing output (use --force), 5 batch completed
with per-cell failures.

The default output root is ``$GROWBOTS_OUT`` (falling back to ``./runs``).
Record files are written atomically; an interrupted run leaves only a
``.tmp`` file, and ``batch`` is resumable because completed cells are
exactly the record files that exist under their final names.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, analysis, configio, engine, records
from .evaluation import classify_rolling

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_EXISTS = 4
EXIT_PARTIAL = 5

REPLAY_TOLERANCE = 1e-9


def output_root() -> Path:
    return Path(os.environ.get("GROWBOTS_OUT", "runs"))


def _default_run_path(config_path: Path, seed: int) -> Path:
    return output_root() / config_path.stem / f"seed_{seed}.jsonl"


def cmd_run(args) -> int:
    config_path = Path(args.config)
    try:
        config = configio.load_search_config(config_path)
    except (configio.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else _default_run_path(config_path, args.seed)
    if out.exists() and not args.force:
        print(f"error: {out} already exists (use --force to overwrite)", file=sys.stderr)
        return EXIT_EXISTS
    t0 = time.perf_counter()
    try:
        result = records.run_and_record(config, args.seed, out, jobs=args.jobs)
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    wall = time.perf_counter() - t0
    record = records.load_record(out)
    champion = record.final_champion
    print(
        f"seed={args.seed} generations={len(result.generations)} "
        f"final_fitness={analysis.summarize_record(record).final_fitness:.6g} "
        f"rolling={classify_rolling(champion.rotation)} "
        f"engine={engine.active_engine()} wall={wall:.1f}s -> {out}"
    )
    return EXIT_OK


def _batch_cell(payload):
    """Run one (condition, seed) cell in a worker process."""
    config_doc, seed, out = payload
    config = records.config_from_dict(config_doc)
    try:
        records.run_and_record(config, seed, out)
        return (out, None)
    except Exception as exc:  # per-cell failures are reported, not fatal
        return (out, f"{type(exc).__name__}: {exc}")


def cmd_batch(args) -> int:
    try:
        spec = configio.load_experiment_spec(Path(args.spec))
    except (configio.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out or spec.out or (output_root() / spec.name))
    jobs = args.jobs or spec.jobs or 1

    cells = []
    for cname, config in spec.conditions.items():
        for seed in spec.seeds:
            path = out_dir / cname / f"seed_{seed}.jsonl"
            if path.exists() and not args.force:
                continue
            cells.append((records.config_to_dict(config), seed, str(path)))

    failures = []
    if cells:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for out, err in pool.map(_batch_cell, cells):
                    if err:
                        failures.append((out, err))
                        print(f"cell failed: {out}: {err}", file=sys.stderr)
                    else:
                        print(f"cell done: {out}")
        else:
            for payload in cells:
                out, err = _batch_cell(payload)
                if err:
                    failures.append((out, err))
                    print(f"cell failed: {out}: {err}", file=sys.stderr)
                else:
                    print(f"cell done: {out}")
    skipped = len(spec.conditions) * len(spec.seeds) - len(cells)
    if skipped:
        print(f"skipped {skipped} completed cells (resume)")

    for cname in spec.conditions:
        cond_dir = out_dir / cname
        paths = sorted(cond_dir.glob("seed_*.jsonl"))
        if not paths:
            continue
        rows = analysis.summarize_experiment([records.load_record(p) for p in paths])
        rows.sort(key=lambda r: r.seed)
        analysis.write_summary_csv(rows, out_dir / f"summary_{cname}.csv")
        analysis.write_summary_json(rows, out_dir / f"summary_{cname}.json")
        print(f"summary: {out_dir / f'summary_{cname}.csv'} ({len(rows)} runs)")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_analyze(args) -> int:
    target = Path(args.records)
    if target.is_dir():
        paths = sorted(target.glob("**/seed_*.jsonl"))
    else:
        paths = [target]
    if not paths:
        print(f"error: no record files under {target}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        loaded = [records.load_record(p) for p in paths]
        rows = analysis.summarize_experiment(loaded)
    except (records.RecordError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows.sort(key=lambda r: r.seed)
    out = Path(args.out) if args.out else target.with_suffix("") / "summary"
    csv_path = analysis.write_summary_csv(rows, Path(str(out) + ".csv"))
    analysis.write_summary_json(rows, Path(str(out) + ".json"))
    print(f"wrote {csv_path} ({len(rows)} runs)")
    return EXIT_OK


def cmd_export_trajectory(args) -> int:
    try:
        record = records.load_record(args.record)
    except (records.RecordError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    member_id = (args.generation, args.member)
    try:
        member = record.member(member_id)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from . import evaluation as ev
    from . import seeding

    eval_g, eval_i = member.eval_key
    config = record.config()
    coeffs = record.generations[eval_g - 1].coeffs
    body = ev.body_for_config(coeffs, config.evaluation)
    seed = seeding.noise_seed(record.run_seed, eval_g, eval_i)
    result = ev.evaluate(
        body, member.genotype, config.evaluation, seed, sample_interval=args.sample_interval
    )

    out = Path(args.out) if args.out else Path(
        f"trajectory_g{args.generation}_m{args.member}.csv"
    )
    out.parent.mkdir(parents=True, exist_ok=True)
    n_nodes = (result.trajectory.shape[1] - 1) // 2
    header = "t," + ",".join(f"x{i},y{i}" for i in range(n_nodes))
    np.savetxt(out, result.trajectory, delimiter=",", header=header, comments="")

    mismatch = abs(result.fitness - member.fitness)
    print(
        f"member ({args.generation},{args.member}) recorded={member.fitness!r} "
        f"replayed={result.fitness!r} |diff|={mismatch:.3g} rows={result.trajectory.shape[0]} -> {out}"
    )
    if not (mismatch <= REPLAY_TOLERANCE or (member.diverged and result.diverged)):
        print("error: replay does not reproduce the recorded fitness", file=sys.stderr)
        return 1
    return EXIT_OK


def cmd_replay_check(args) -> int:
    try:
        record = records.load_record(args.record)
    except (records.RecordError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ids = []
    if args.all:
        ids = [m.id for gen in record.generations for m in gen.members]
    else:
        stride = max(1, len(record.generations) // max(args.sample, 1))
        for gen in record.generations[::stride]:
            ids.append(gen.members[gen.champion].id)
        ids.extend(m.id for m in record.generations[-1].members)
        ids = sorted(set(ids))
    worst = 0.0
    failed = 0
    for member_id in ids:
        member = record.member(member_id)
        result = records.replay_member(record, member_id)
        if member.diverged or result.diverged:
            ok = member.diverged == result.diverged
        else:
            diff = abs(result.fitness - member.fitness)
            worst = max(worst, diff)
            ok = diff <= REPLAY_TOLERANCE
        if not ok:
            failed += 1
            print(f"MISMATCH {member_id}: recorded={member.fitness!r} replayed={result.fitness!r}")
    print(
        f"replay-check: {len(ids)} members, {failed} mismatches, "
        f"worst |diff|={worst:.3g} (tolerance {REPLAY_TOLERANCE:g})"
    )
    return EXIT_OK if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="growbots",
        description="Deterministic soft-robot gait evolution with developmental schedules.",
    )
    parser.add_argument("--version", action="version", version=f"growbots {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one evolutionary search")
    p_run.add_argument("config", help="search config TOML")
    p_run.add_argument("--seed", type=int, required=True)
    p_run.add_argument("--out", help="record file path (default under $GROWBOTS_OUT)")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel evaluations per generation")
    p_run.add_argument("--force", action="store_true", help="overwrite an existing record")
    p_run.set_defaults(func=cmd_run)

    p_batch = sub.add_parser("batch", help="run a conditions x seeds experiment matrix")
    p_batch.add_argument("spec", help="experiment spec TOML")
    p_batch.add_argument("--out", help="output directory (default from spec or $GROWBOTS_OUT)")
    p_batch.add_argument("--jobs", type=int, help="parallel worker processes")
    p_batch.add_argument("--force", action="store_true", help="recompute completed cells")
    p_batch.set_defaults(func=cmd_batch)

    p_an = sub.add_parser("analyze", help="summarize run records into CSV/JSON tables")
    p_an.add_argument("records", help="record file or directory of records")
    p_an.add_argument("--out", help="output path prefix (writes .csv and .json)")
    p_an.set_defaults(func=cmd_analyze)

    p_exp = sub.add_parser("export-trajectory", help="re-simulate a member and export positions")
    p_exp.add_argument("record", help="record file")
    p_exp.add_argument("--generation", type=int, required=True)
    p_exp.add_argument("--member", type=int, required=True)
    p_exp.add_argument("--out", help="CSV output path")
    p_exp.add_argument(
        "--sample-interval", type=float, default=0.1, help="seconds between samples"
    )
    p_exp.set_defaults(func=cmd_export_trajectory)

    p_rc = sub.add_parser("replay-check", help="verify recorded fitnesses replay exactly")
    p_rc.add_argument("record", help="record file")
    p_rc.add_argument("--all", action="store_true", help="check every member")
    p_rc.add_argument("--sample", type=int, default=20, help="number of sampled generations")
    p_rc.set_defaults(func=cmd_replay_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
