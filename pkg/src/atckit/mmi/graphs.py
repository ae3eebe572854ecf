"""HMM-style acceptors for the discriminative objective, in the log domain.

Each arc consumes exactly one observation frame and scores it with the
emission distribution of its phone label, so a path of length T accepts an
observation sequence of length T. Two graph shapes matter here:

* the numerator: a linear chain over the transcript's phone sequence with
  one self-loop per emitting state, accepting every monotonic alignment of
  at least one frame per phone;
* the denominator: a phone loop weighted by an add-one-smoothed bigram
  phone LM, accepting every non-empty phone sequence.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np


class OovWord(KeyError):
    """Raised when a transcript word is missing from the phone lexicon."""


@dataclass(frozen=True)
class Arc:
    src: int
    dst: int
    phone: int
    weight: float  # natural log


@dataclass(frozen=True)
class HmmGraph:
    """Arc-emitting acceptor: states 0..n_states-1, one start, weighted finals."""

    n_states: int
    arcs: tuple[Arc, ...]
    start: int
    finals: tuple[tuple[int, float], ...]  # (state, final log weight)

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.n_states):
            raise ValueError(f"start state {self.start} out of range")
        if not self.finals:
            raise ValueError("graph has no final states")
        for state, weight in self.finals:
            if not (0 <= state < self.n_states):
                raise ValueError(f"final state {state} out of range")
            if not math.isfinite(weight):
                raise ValueError(f"final weight of state {state} is not finite")
        for arc in self.arcs:
            if not (0 <= arc.src < self.n_states and 0 <= arc.dst < self.n_states):
                raise ValueError(f"arc {arc} out of range")
            if arc.phone < 0:
                raise ValueError(f"arc {arc} has a negative phone label")
            if not math.isfinite(arc.weight):
                raise ValueError(f"arc {arc} weight is not finite")
        if not self._reaches_final():
            raise ValueError("no path from start to any final state")

    def _reaches_final(self) -> bool:
        final_states = {state for state, _ in self.finals}
        seen = {self.start}
        frontier = [self.start]
        while frontier:
            if seen & final_states:
                return True
            nxt = []
            for arc in self.arcs:
                if arc.src in seen and arc.dst not in seen:
                    seen.add(arc.dst)
                    nxt.append(arc.dst)
            frontier = nxt
        return bool(seen & final_states)

    @cached_property
    def arc_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(src, dst, phone, weight) as flat arrays for vectorized recursions."""
        src = np.fromiter((a.src for a in self.arcs), dtype=np.int64, count=len(self.arcs))
        dst = np.fromiter((a.dst for a in self.arcs), dtype=np.int64, count=len(self.arcs))
        phone = np.fromiter((a.phone for a in self.arcs), dtype=np.int64, count=len(self.arcs))
        weight = np.fromiter((a.weight for a in self.arcs), dtype=np.float64, count=len(self.arcs))
        return src, dst, phone, weight

    @cached_property
    def final_vector(self) -> np.ndarray:
        """Per-state final log weight, -inf for non-final states."""
        vec = np.full(self.n_states, -np.inf)
        for state, weight in self.finals:
            vec[state] = weight
        return vec


def build_numerator(words: Sequence[str], lexicon: Mapping[str, Sequence[int]]) -> HmmGraph:
    """Linear alignment graph for one transcript.

    Concatenates the lexicon phone sequences of ``words`` into a chain;
    every emitting state carries a self-loop, so any observation length at
    least the phone count is accepted. All arc and final weights are log 1.
    An empty transcript yields the single-state graph accepting only the
    empty sequence.
    """
    phones: list[int] = []
    for word in words:
        if word not in lexicon:
            raise OovWord(f"word {word!r} not in lexicon")
        phones.extend(lexicon[word])
    arcs = []
    for i, phone in enumerate(phones):
        arcs.append(Arc(src=i, dst=i + 1, phone=phone, weight=0.0))
        arcs.append(Arc(src=i + 1, dst=i + 1, phone=phone, weight=0.0))
    return HmmGraph(
        n_states=len(phones) + 1,
        arcs=tuple(arcs),
        start=0,
        finals=((len(phones), 0.0),),
    )


def build_denominator(
    phones: Sequence[int], bigram_counts: Mapping[tuple[int, int], float]
) -> HmmGraph:
    """Phone-loop graph weighted by an add-one-smoothed bigram phone LM.

    State 0 is the entry point with uniform initial weights; state 1+p
    means "just emitted phone p". Every phone state is final with weight
    log 1, so every non-empty phone sequence is accepted (and the empty
    one is not).
    """
    phones = list(phones)
    if not phones:
        raise ValueError("phone set is empty")
    n = len(phones)
    state_of = {p: 1 + i for i, p in enumerate(phones)}
    arcs = [Arc(src=0, dst=state_of[p], phone=p, weight=-math.log(n)) for p in phones]
    for p in phones:
        row_total = sum(bigram_counts.get((p, q), 0) for q in phones)
        for q in phones:
            prob = (bigram_counts.get((p, q), 0) + 1) / (row_total + n)
            arcs.append(Arc(src=state_of[p], dst=state_of[q], phone=q, weight=math.log(prob)))
    return HmmGraph(
        n_states=n + 1,
        arcs=tuple(arcs),
        start=0,
        finals=tuple((state_of[p], 0.0) for p in phones),
    )


def phone_bigram_counts(sequences: Iterable[Sequence[int]]) -> Counter:
    """Adjacent-pair counts over phone sequences, for the denominator LM."""
    counts: Counter = Counter()
    for seq in sequences:
        for a, b in zip(seq, seq[1:]):
            counts[(a, b)] += 1
    return counts
