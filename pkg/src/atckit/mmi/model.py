"""Emission parameters and task descriptors for the discriminative objective.

Emissions are categorical per phone: the log-probability of symbol s under
phone p for task t is the log-softmax over symbols of
``shared[p] + bias[t][p]``. The shared matrix is common to all tasks, the
bias matrices are task-specific, which is the whole multitask story at
this scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .graphs import HmmGraph, build_numerator


def log_softmax(x: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax with max-shift, stable for any finite input."""
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def zero_lm(words: Sequence[str]) -> float:
    """Default word-sequence log-probability: log 1 for everything."""
    return 0.0


@dataclass
class EmissionModel:
    """Shared plus per-task emission logits, [n_phones, n_symbols] each."""

    shared: np.ndarray
    bias: dict[int, np.ndarray]

    @classmethod
    def zeros(cls, n_phones: int, n_symbols: int, task_ids: Sequence[int]) -> "EmissionModel":
        return cls(
            shared=np.zeros((n_phones, n_symbols)),
            bias={tid: np.zeros((n_phones, n_symbols)) for tid in task_ids},
        )

    @property
    def n_phones(self) -> int:
        return self.shared.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.shared.shape[1]

    def effective_logits(self, task_id: int) -> np.ndarray:
        return self.shared + self.bias[task_id]

    def log_probs(self, task_id: int) -> np.ndarray:
        """Emission log-probabilities for one task; rows are normalized."""
        return log_softmax(self.effective_logits(task_id))

    def probs(self, task_id: int) -> np.ndarray:
        return np.exp(self.log_probs(task_id))

    def normalization_error(self, task_id: int) -> float:
        """Largest |row sum - 1| over phones; should sit at float rounding."""
        return float(np.abs(self.probs(task_id).sum(axis=1) - 1.0).max())

    def copy(self) -> "EmissionModel":
        return EmissionModel(
            shared=self.shared.copy(), bias={tid: b.copy() for tid, b in self.bias.items()}
        )


@dataclass
class EmissionGradient:
    """Gradient with the same layout as EmissionModel."""

    shared: np.ndarray
    bias: dict[int, np.ndarray]

    @classmethod
    def zeros_like(cls, model: EmissionModel) -> "EmissionGradient":
        return cls(
            shared=np.zeros_like(model.shared),
            bias={tid: np.zeros_like(b) for tid, b in model.bias.items()},
        )

    def max_abs(self) -> float:
        parts = [np.abs(self.shared).max(initial=0.0)]
        parts.extend(np.abs(b).max(initial=0.0) for b in self.bias.values())
        return float(max(parts))


@dataclass(frozen=True)
class MmiTask:
    """One training task: lexicon, denominator graph, weight, word LM."""

    task_id: int
    phones: tuple[str, ...]
    lexicon: Mapping[str, tuple[int, ...]]  # word -> phone-id sequence
    den_graph: HmmGraph
    alpha: float = 0.5
    lm_logprob: Callable[[tuple[str, ...]], float] = zero_lm
    _num_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError(f"task weight must be non-negative, got {self.alpha}")

    def numerator_graph(self, words: tuple[str, ...]) -> HmmGraph:
        """Alignment graph for one transcript, memoized per task."""
        graph = self._num_cache.get(words)
        if graph is None:
            graph = build_numerator(words, self.lexicon)
            self._num_cache[words] = graph
        return graph


@dataclass(frozen=True)
class TrainingUtterance:
    """One observation sequence with its transcript and owning task."""

    task_id: int
    symbols: tuple[int, ...]
    words: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "words", tuple(self.words))
        if not self.symbols:
            raise ValueError("observation sequence must be non-empty")
