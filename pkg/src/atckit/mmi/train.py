"""Toy gradient-ascent trainer and task/corpus construction helpers.

Training file formats:

* lexicon TSV: ``word<TAB>phone phone ...`` per line, ``#`` comments;
* corpus JSONL: one object per line with ``task`` (int), ``symbols``
  (array of ints), ``words`` (array of strings).

The trainer runs full-batch gradient ascent on the weighted multitask
objective. Three configurations matter: one model per task ("single"),
one model over all data merged into one task ("pooled"), and shared
parameters with per-task biases and weights ("multitask").
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .graphs import OovWord, build_denominator, phone_bigram_counts
from .model import EmissionModel, MmiTask, TrainingUtterance, zero_lm
from .objective import mmi_gradient, multitask_objective

DEFAULT_TASK_WEIGHT = 0.5


class DivergenceDetected(RuntimeError):
    """Raised when the objective keeps falling; the step size is too large."""


@dataclass
class TrainConfig:
    steps: int = 200
    learning_rate: float = 0.1
    alpha: float | None = None  # overrides every task's weight when set
    divergence_patience: int = 10


@dataclass
class TrainResult:
    model: EmissionModel
    tasks: list[MmiTask]
    # trace[0] is the objective at initialization, trace[k] after k updates
    objective_trace: list[float] = field(default_factory=list)

    @property
    def initial_objective(self) -> float:
        return self.objective_trace[0]

    @property
    def final_objective(self) -> float:
        return self.objective_trace[-1]


def toy_train(
    tasks: Sequence[MmiTask],
    corpus: Mapping[int, Sequence[TrainingUtterance]],
    config: TrainConfig,
    n_symbols: int | None = None,
    init: EmissionModel | None = None,
) -> TrainResult:
    """Plain full-batch gradient ascent on the weighted multitask objective.

    The trace holds the objective at initialization and after every
    update; with a small enough learning rate on fixed batches it is
    non-decreasing. Ten consecutive decreases abort with
    DivergenceDetected.
    """
    tasks = list(tasks)
    for task in tasks:
        if not corpus.get(task.task_id):
            raise ValueError(f"task {task.task_id} has no training utterances")
    if config.alpha is not None:
        tasks = [dataclasses.replace(t, alpha=config.alpha) for t in tasks]
    if init is not None:
        model = init.copy()
    else:
        if n_symbols is None:
            n_symbols = 1 + max(
                max(utt.symbols) for batch in corpus.values() for utt in batch
            )
        n_phones = len(tasks[0].phones)
        model = EmissionModel.zeros(n_phones, n_symbols, [t.task_id for t in tasks])
    trace = [multitask_objective(corpus, tasks, model)]
    drops = 0
    for _ in range(config.steps):
        grad = mmi_gradient(corpus, tasks, model)
        model.shared += config.learning_rate * grad.shared
        for tid in model.bias:
            model.bias[tid] += config.learning_rate * grad.bias[tid]
        objective = multitask_objective(corpus, tasks, model)
        drops = drops + 1 if objective < trace[-1] else 0
        trace.append(objective)
        if drops >= config.divergence_patience:
            raise DivergenceDetected(
                f"objective fell for {drops} consecutive steps "
                f"(last {trace[-1]:.6f}); lower the learning rate"
            )
    return TrainResult(model=model, tasks=tasks, objective_trace=trace)


def load_phone_lexicon(path: str | Path) -> dict[str, tuple[str, ...]]:
    """Word-to-phones map from TSV: ``word<TAB>phone phone ...`` per line."""
    lexicon: dict[str, tuple[str, ...]] = {}
    path = Path(path)
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'word<TAB>phones', got {line!r}")
        word, phones = parts[0].strip(), tuple(parts[1].split())
        if not word or not phones:
            raise ValueError(f"{path}:{lineno}: empty word or phone list")
        lexicon[word] = phones
    return lexicon


def load_training_corpus(path: str | Path) -> dict[int, list[TrainingUtterance]]:
    """Per-task training utterances from a JSONL corpus file."""
    corpus: dict[int, list[TrainingUtterance]] = {}
    path = Path(path)
    with path.open("r", encoding="utf-8") as stream:
        for lineno, line in enumerate(stream, 1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            try:
                utt = TrainingUtterance(
                    task_id=int(obj["task"]),
                    symbols=tuple(int(s) for s in obj["symbols"]),
                    words=tuple(str(w) for w in obj["words"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad training record ({exc})") from None
            corpus.setdefault(utt.task_id, []).append(utt)
    return corpus


def build_tasks(
    corpus: Mapping[int, Sequence[TrainingUtterance]],
    word_phones: Mapping[str, Sequence[str]],
    alpha: float = DEFAULT_TASK_WEIGHT,
) -> list[MmiTask]:
    """One task per corpus key over a shared phone inventory.

    Phone ids index the sorted distinct phones of the lexicon. Each task's
    denominator LM is estimated from its own transcripts' phone sequences
    with add-one smoothing over the full inventory, so it accepts anything
    the lexicon can produce.
    """
    phones = tuple(sorted({p for seq in word_phones.values() for p in seq}))
    index = {p: i for i, p in enumerate(phones)}
    lexicon = {word: tuple(index[p] for p in seq) for word, seq in word_phones.items()}
    tasks = []
    for task_id in sorted(corpus):
        phone_seqs = []
        for utt in corpus[task_id]:
            for word in utt.words:
                if word not in lexicon:
                    raise OovWord(f"task {task_id}: word {word!r} missing from lexicon")
            phone_seqs.append([pid for word in utt.words for pid in lexicon[word]])
        den = build_denominator(range(len(phones)), phone_bigram_counts(phone_seqs))
        tasks.append(
            MmiTask(
                task_id=task_id,
                phones=phones,
                lexicon=lexicon,
                den_graph=den,
                alpha=alpha,
                lm_logprob=zero_lm,
            )
        )
    return tasks


def pool_corpus(
    corpus: Mapping[int, Sequence[TrainingUtterance]], pooled_id: int = 0
) -> dict[int, list[TrainingUtterance]]:
    """Relabel every utterance into one merged task, preserving task order."""
    merged = [
        dataclasses.replace(utt, task_id=pooled_id)
        for task_id in sorted(corpus)
        for utt in corpus[task_id]
    ]
    return {pooled_id: merged}
