"""growbots: deterministic 2D soft-robot simulation and developmental gait evolution."""

__version__ = "0.1.0"

from . import (  # noqa: E402, F401
    analysis,
    configio,
    control,
    engine,
    evaluation,
    evolution,
    morphology,
    physics2d,
    records,
    seeding,
)

__all__ = [
    "analysis",
    "configio",
    "control",
    "engine",
    "evaluation",
    "evolution",
    "morphology",
    "physics2d",
    "records",
    "seeding",
    "__version__",
]
