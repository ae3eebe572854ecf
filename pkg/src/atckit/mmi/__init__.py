"""Desk-scale multitask MMI objective over discrete-emission HMM graphs."""

from .graphs import Arc, HmmGraph, OovWord, build_denominator, build_numerator, phone_bigram_counts
from .model import (
    EmissionGradient,
    EmissionModel,
    MmiTask,
    TrainingUtterance,
    log_softmax,
    zero_lm,
)
from .objective import (
    NoPath,
    emission_occupancy,
    forward_logprob,
    mmi_gradient,
    mmi_objective,
    multitask_objective,
)
from .train import (
    DivergenceDetected,
    TrainConfig,
    TrainResult,
    build_tasks,
    load_phone_lexicon,
    load_training_corpus,
    pool_corpus,
    toy_train,
)

__all__ = [
    "Arc",
    "HmmGraph",
    "OovWord",
    "build_denominator",
    "build_numerator",
    "phone_bigram_counts",
    "EmissionGradient",
    "EmissionModel",
    "MmiTask",
    "TrainingUtterance",
    "log_softmax",
    "zero_lm",
    "NoPath",
    "emission_occupancy",
    "forward_logprob",
    "mmi_gradient",
    "mmi_objective",
    "multitask_objective",
    "DivergenceDetected",
    "TrainConfig",
    "TrainResult",
    "build_tasks",
    "load_phone_lexicon",
    "load_training_corpus",
    "pool_corpus",
    "toy_train",
]
