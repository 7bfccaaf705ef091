"""Run records: streaming JSON Lines persistence and loading.

Format (one JSON object per line):

* line 1, the header::

    {"format_version": 1, "config": {...}, "run_seed": 7, "code_version": "0.1.0"}

* one line per generation::

    {"g": 1,
     "coeffs": {"size": 0.5, "stiffness": 0.25, "mass": 0.125, "gravity": 1.0},
     "champion": 3,
     "members": [{"id": [1, 0], "parent": null, "genotype": [...24 floats...],
                  "fitness": 1.25, "rotation": 0.4}, ...]}

Member entries carry an ``"eval": [g, i]`` key only when the recorded
fitness was produced by an earlier generation's evaluation (a surviving
parent that was not re-evaluated); replay derives the morphology and noise
seed from that key.  Diverged members are stored with ``"fitness": null``
(JSON has no -inf) and load back as ``-inf``.

Numbers are serialized with Python's shortest round-trip repr, so a loaded
record is bit-identical to the in-memory one and rewriting a record
reproduces the same bytes.  Files are written to a temporary name and
atomically renamed on completion; an interrupted run leaves only the
``.tmp`` file behind.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from . import __version__, evaluation, evolution, morphology

FORMAT_VERSION = 1


class RecordError(ValueError):
    pass


def config_to_dict(config: evolution.SearchConfig) -> dict:
    sched = config.schedule
    doc = {
        "search": {
            "parents": config.mu,
            "children": config.lam,
            "generations": config.generations,
            "init": config.init_mode,
        },
        "schedule": {
            "mode": sched.mode,
            "u0": sched.u0,
            "length": sched.length,
        },
        "evaluation": {
            "settle": config.evaluation.settle_duration,
            "duration": config.evaluation.total_duration,
            "dt": config.evaluation.dt,
            "motor_noise": config.evaluation.noise_enabled,
            "noise_variance": config.evaluation.motor_noise_variance,
        },
    }
    ed = config.evaluation.evo_devo
    if ed is not None:
        doc["evaluation"]["evo_devo"] = {
            "start_size": ed.start_size,
            "growth_start": ed.growth_start,
            "growth_end": ed.growth_end,
        }
    return doc


def config_from_dict(doc: dict) -> evolution.SearchConfig:
    try:
        search = doc["search"]
        sched = doc["schedule"]
        ev = doc["evaluation"]
        ed = ev.get("evo_devo")
        evo_devo = (
            evaluation.EvoDevoConfig(
                start_size=ed["start_size"],
                growth_start=ed["growth_start"],
                growth_end=ed["growth_end"],
            )
            if ed is not None
            else None
        )
        return evolution.SearchConfig(
            mu=search["parents"],
            lam=search["children"],
            generations=search["generations"],
            init_mode=search["init"],
            schedule=morphology.DevelopmentSchedule(
                mode=sched["mode"],
                u0=sched["u0"],
                length=sched["length"],
                total_generations=search["generations"],
            ),
            evaluation=evaluation.EvaluationConfig(
                settle_duration=ev["settle"],
                total_duration=ev["duration"],
                dt=ev["dt"],
                noise_enabled=ev["motor_noise"],
                motor_noise_variance=ev["noise_variance"],
                evo_devo=evo_devo,
            ),
        )
    except KeyError as exc:
        raise RecordError(f"record config missing field {exc}") from exc


def _member_to_doc(m: evolution.Member) -> dict:
    doc = {
        "id": list(m.id),
        "parent": list(m.parent_id) if m.parent_id is not None else None,
        "genotype": [float(x) for x in m.genotype],
        "fitness": None if m.diverged else m.fitness,
        "rotation": m.rotation,
    }
    if m.eval_key is not None and tuple(m.eval_key) != tuple(m.id):
        doc["eval"] = list(m.eval_key)
    return doc


def generation_to_line(entry: evolution.GenerationEntry) -> str:
    doc = {
        "g": entry.g,
        "coeffs": {
            "size": entry.coeffs.size,
            "stiffness": entry.coeffs.stiffness,
            "mass": entry.coeffs.mass,
            "gravity": entry.coeffs.gravity,
        },
        "champion": entry.champion,
        "members": [_member_to_doc(m) for m in entry.members],
    }
    return json.dumps(doc, separators=(",", ":"), allow_nan=False)


@dataclass
class RecordMember:
    id: tuple[int, int]
    parent_id: Optional[tuple[int, int]]
    genotype: np.ndarray
    fitness: float
    rotation: float
    diverged: bool
    eval_key: tuple[int, int]


@dataclass
class RecordGeneration:
    g: int
    coeffs: morphology.MorphologyCoefficients
    champion: int
    members: list[RecordMember]


@dataclass
class RunRecord:
    """Loaded run record with constant-time member lookup."""

    path: Optional[Path]
    format_version: int
    config_doc: dict
    run_seed: int
    code_version: str
    generations: list[RecordGeneration] = field(default_factory=list)

    def config(self) -> evolution.SearchConfig:
        return config_from_dict(self.config_doc)

    def member(self, member_id: tuple[int, int]) -> RecordMember:
        g, i = member_id
        if not 1 <= g <= len(self.generations):
            raise KeyError(f"generation {g} not in record")
        gen = self.generations[g - 1]
        if not 0 <= i < len(gen.members):
            raise KeyError(f"member {i} not in generation {g}")
        return gen.members[i]

    @property
    def final_champion(self) -> RecordMember:
        last = self.generations[-1]
        return last.members[last.champion]


class RecordWriter:
    """Streaming writer with atomic completion (temp file + rename)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.tmp_path = self.path.with_name(self.path.name + ".tmp")
        self._fh = None

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.tmp_path, "w", encoding="utf-8")
        return self

    def write_header(self, config: evolution.SearchConfig, run_seed: int):
        doc = {
            "format_version": FORMAT_VERSION,
            "config": config_to_dict(config),
            "run_seed": run_seed,
            "code_version": __version__,
        }
        self._fh.write(json.dumps(doc, separators=(",", ":"), allow_nan=False))
        self._fh.write("\n")

    def write_generation(self, entry: evolution.GenerationEntry):
        self._fh.write(generation_to_line(entry))
        self._fh.write("\n")

    def __exit__(self, exc_type, exc, tb):
        self._fh.close()
        if exc_type is None:
            os.replace(self.tmp_path, self.path)
        return False


def write_record(result: evolution.RunResult, path: str | Path) -> Path:
    with RecordWriter(path) as w:
        w.write_header(result.config, result.run_seed)
        for entry in result.generations:
            w.write_generation(entry)
    return Path(path)


def run_and_record(
    config: evolution.SearchConfig, run_seed: int, path: str | Path, jobs: int = 1
) -> evolution.RunResult:
    """Execute a search while streaming its record to disk."""
    with RecordWriter(path) as w:
        w.write_header(config, run_seed)
        result = evolution.run_search(
            config, run_seed, on_generation=w.write_generation, jobs=jobs
        )
    return result


def _member_from_doc(doc: dict) -> RecordMember:
    member_id = tuple(doc["id"])
    eval_key = tuple(doc["eval"]) if "eval" in doc else member_id
    fitness = doc["fitness"]
    return RecordMember(
        id=member_id,
        parent_id=tuple(doc["parent"]) if doc["parent"] is not None else None,
        genotype=np.array(doc["genotype"], dtype=float),
        fitness=float("-inf") if fitness is None else fitness,
        rotation=doc["rotation"],
        diverged=fitness is None,
        eval_key=eval_key,
    )


def iter_lines(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def load_record(path: str | Path) -> RunRecord:
    lines = iter_lines(path)
    try:
        header = next(lines)
    except StopIteration:
        raise RecordError(f"{path}: empty record") from None
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise RecordError(f"{path}: unsupported format version {version!r}")
    record = RunRecord(
        path=Path(path),
        format_version=version,
        config_doc=header["config"],
        run_seed=header["run_seed"],
        code_version=header.get("code_version", ""),
    )
    for doc in lines:
        record.generations.append(
            RecordGeneration(
                g=doc["g"],
                coeffs=morphology.MorphologyCoefficients(
                    size=doc["coeffs"]["size"],
                    stiffness=doc["coeffs"]["stiffness"],
                    mass=doc["coeffs"]["mass"],
                    gravity=doc["coeffs"]["gravity"],
                ),
                champion=doc["champion"],
                members=[_member_from_doc(m) for m in doc["members"]],
            )
        )
    if not record.generations:
        raise RecordError(f"{path}: record has no generations")
    expected = record.generations[0].g
    for i, gen in enumerate(record.generations):
        if gen.g != expected + i:
            raise RecordError(f"{path}: generation sequence broken at line {i + 2}")
    return record


def replay_member(record: RunRecord, member_id: tuple[int, int]) -> evaluation.EvaluationResult:
    """Re-simulate a recorded member exactly as its fitness was produced.

    Uses the member's eval key: the morphology of that generation's
    coefficients and the noise seed derived from (run_seed, eval_gen,
    eval_index).
    """
    from . import seeding

    member = record.member(member_id)
    eval_g, eval_i = member.eval_key
    config = record.config()
    coeffs = record.generations[eval_g - 1].coeffs
    body = evaluation.body_for_config(coeffs, config.evaluation)
    seed = seeding.noise_seed(record.run_seed, eval_g, eval_i)
    return evaluation.evaluate(body, member.genotype, config.evaluation, seed)
