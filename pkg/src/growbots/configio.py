"""TOML experiment configuration.

A *search config* describes one evolutionary condition::

    [search]
    parents = 2
    children = 5
    generations = 600
    init = "random_population"      # or "single_root_best_of_15"

    [schedule]
    mode = "muscle_model"   # adult | muscle_model | size_only |
                            # stiffness_only | mass_only | gravity_only
    start = 0.5             # starting characteristic value (see below)
    length = 300            # development length in generations

    [evaluation]            # optional, these are the defaults
    settle = 9.42
    duration = 60.0
    dt = 0.005
    motor_noise = true
    noise_variance = 1e-4

    [evaluation.evo_devo]   # optional: development within the evaluation
    start_size = 0.5
    growth_start = 10.0
    growth_end = 40.0

``schedule.start`` names the starting value of the developed
*characteristic*: the size coefficient for size-driven modes, the starting
stiffness for ``stiffness_only`` (u0 = sqrt(start)), the starting mass or
gravity factor for the cubic modes (u0 = cbrt(start)).

An *experiment spec* is a matrix of conditions crossed with a seed range::

    [experiment]
    name = "devo_vs_adult"
    seed_first = 1
    seed_last = 20

    [conditions.devo]
    search = { parents = 2, children = 5, generations = 600 }
    schedule = { mode = "muscle_model", start = 0.5, length = 300 }

    [conditions.adult]
    search = { parents = 2, children = 5, generations = 600 }
    schedule = { mode = "adult" }

The same seed range across conditions yields paired experiments with
identical initial populations.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import evaluation, evolution, morphology


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _require(table: dict, field: str, where: str):
    if field not in table:
        raise ConfigError(f"{where}: missing required field '{field}'")
    return table[field]


def _check_known(table: dict, known: set, where: str):
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"{where}: unknown field '{sorted(unknown)[0]}'")


def search_config_from_tables(doc: dict, where: str = "config") -> evolution.SearchConfig:
    _check_known(doc, {"search", "schedule", "evaluation"}, where)
    search = _require(doc, "search", where)
    _check_known(search, {"parents", "children", "generations", "init"}, f"{where}.search")
    mu = int(_require(search, "parents", f"{where}.search"))
    lam = int(_require(search, "children", f"{where}.search"))
    generations = int(_require(search, "generations", f"{where}.search"))
    init_mode = search.get("init", "random_population")
    if init_mode not in evolution.INIT_MODES:
        raise ConfigError(f"{where}.search.init: unknown init mode {init_mode!r}")

    sched_doc = _require(doc, "schedule", where)
    _check_known(sched_doc, {"mode", "start", "length"}, f"{where}.schedule")
    mode = _require(sched_doc, "mode", f"{where}.schedule")
    if mode not in morphology.SCHEDULE_MODES:
        raise ConfigError(f"{where}.schedule.mode: unknown schedule mode {mode!r}")
    if mode == "adult":
        schedule = morphology.DevelopmentSchedule(mode="adult", total_generations=generations)
    else:
        start = float(_require(sched_doc, "start", f"{where}.schedule"))
        length = int(_require(sched_doc, "length", f"{where}.schedule"))
        try:
            schedule = morphology.schedule_from_start_value(mode, start, length, generations)
        except ValueError as exc:
            raise ConfigError(f"{where}.schedule: {exc}") from exc

    ev = doc.get("evaluation", {})
    _check_known(
        ev,
        {"settle", "duration", "dt", "motor_noise", "noise_variance", "evo_devo"},
        f"{where}.evaluation",
    )
    ed_doc = ev.get("evo_devo")
    evo_devo = None
    if ed_doc is not None:
        _check_known(ed_doc, {"start_size", "growth_start", "growth_end"}, f"{where}.evaluation.evo_devo")
        try:
            evo_devo = evaluation.EvoDevoConfig(
                start_size=float(_require(ed_doc, "start_size", f"{where}.evaluation.evo_devo")),
                growth_start=float(ed_doc.get("growth_start", 10.0)),
                growth_end=float(ed_doc.get("growth_end", 40.0)),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}.evaluation.evo_devo: {exc}") from exc
    try:
        eval_config = evaluation.EvaluationConfig(
            settle_duration=float(ev.get("settle", evaluation.SETTLE_DURATION)),
            total_duration=float(ev.get("duration", evaluation.TOTAL_DURATION)),
            dt=float(ev.get("dt", 0.005)),
            noise_enabled=bool(ev.get("motor_noise", True)),
            motor_noise_variance=float(ev.get("noise_variance", evaluation.MOTOR_NOISE_VARIANCE)),
            evo_devo=evo_devo,
        )
        return evolution.SearchConfig(
            mu=mu,
            lam=lam,
            generations=generations,
            schedule=schedule,
            init_mode=init_mode,
            evaluation=eval_config,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_search_config(path: str | Path) -> evolution.SearchConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return search_config_from_tables(doc, where=path.name)


@dataclass
class ExperimentSpec:
    name: str
    seeds: list[int]
    conditions: dict[str, evolution.SearchConfig]
    out: str | None = None
    jobs: int | None = None


def load_experiment_spec(path: str | Path) -> ExperimentSpec:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    _check_known(doc, {"experiment", "conditions"}, path.name)
    exp = _require(doc, "experiment", path.name)
    _check_known(
        exp, {"name", "seed_first", "seed_last", "seeds", "out", "jobs"}, f"{path.name}.experiment"
    )
    name = exp.get("name", path.stem)
    if "seeds" in exp:
        seeds = [int(s) for s in exp["seeds"]]
    else:
        first = int(_require(exp, "seed_first", f"{path.name}.experiment"))
        last = int(_require(exp, "seed_last", f"{path.name}.experiment"))
        if last < first:
            raise ConfigError(f"{path.name}.experiment: seed_last < seed_first")
        seeds = list(range(first, last + 1))
    conditions_doc = _require(doc, "conditions", path.name)
    if not conditions_doc:
        raise ConfigError(f"{path.name}.conditions: at least one condition required")
    conditions = {}
    for cname, ctable in conditions_doc.items():
        conditions[cname] = search_config_from_tables(
            ctable, where=f"{path.name}.conditions.{cname}"
        )
    return ExperimentSpec(
        name=name,
        seeds=seeds,
        conditions=conditions,
        out=exp.get("out"),
        jobs=int(exp["jobs"]) if "jobs" in exp else None,
    )
