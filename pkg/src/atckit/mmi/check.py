"""Self-contained numerical verification of the objective machinery.

Everything the dynamic programs compute is re-derived here by slower,
independent means: likelihoods by enumerating every path outright, and
gradients by central finite differences of the objective. The CLI's
``mmi-check`` subcommand runs this suite on randomized small instances and
fails loudly on any disagreement, so a broken recursion cannot hide.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .graphs import Arc, HmmGraph, build_denominator, phone_bigram_counts
from .model import EmissionGradient, EmissionModel, MmiTask, TrainingUtterance, zero_lm
from .objective import NoPath, forward_logprob, mmi_gradient, mmi_objective, multitask_objective


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def enumerate_logprob(
    graph: HmmGraph, em: EmissionModel, task_id: int, symbols: Sequence[int]
) -> float:
    """Likelihood by explicit enumeration of every accepting path.

    Exponential in the sequence length; intended for tiny graphs only.
    Returns -inf when no path accepts, mirroring NoPath.
    """
    em_logprobs = em.log_probs(task_id)
    finals = dict(graph.finals)
    arcs_from: dict[int, list[Arc]] = {}
    for arc in graph.arcs:
        arcs_from.setdefault(arc.src, []).append(arc)
    scores: list[float] = []

    def walk(state: int, t: int, acc: float) -> None:
        if t == len(symbols):
            if state in finals:
                scores.append(acc + finals[state])
            return
        for arc in arcs_from.get(state, ()):
            walk(arc.dst, t + 1, acc + arc.weight + float(em_logprobs[arc.phone, symbols[t]]))

    walk(graph.start, 0, 0.0)
    if not scores:
        return -math.inf
    peak = max(scores)
    return peak + math.log(sum(math.exp(s - peak) for s in scores))


def finite_difference_gradient(
    objective: Callable[[EmissionModel], float], em: EmissionModel, step: float = 1e-5
) -> EmissionGradient:
    """Central-difference gradient of an objective over every parameter."""
    grad = EmissionGradient.zeros_like(em)

    def fill(param: np.ndarray, out: np.ndarray) -> None:
        for idx in np.ndindex(param.shape):
            original = param[idx]
            param[idx] = original + step
            plus = objective(em)
            param[idx] = original - step
            minus = objective(em)
            param[idx] = original
            out[idx] = (plus - minus) / (2.0 * step)

    fill(em.shared, grad.shared)
    for tid in em.bias:
        fill(em.bias[tid], grad.bias[tid])
    return grad


def gradient_relative_error(analytic: EmissionGradient, numeric: EmissionGradient) -> float:
    """Norm-wise relative disagreement between two gradients.

    Per-coordinate relative error is meaningless near zero crossings, so
    the comparison stacks every parameter into one vector and takes
    ||a - n|| / max(||a||, ||n||).
    """
    a = np.concatenate([analytic.shared.ravel()] + [analytic.bias[t].ravel() for t in sorted(analytic.bias)])
    n = np.concatenate([numeric.shared.ravel()] + [numeric.bias[t].ravel() for t in sorted(numeric.bias)])
    denom = max(float(np.linalg.norm(a)), float(np.linalg.norm(n)), 1e-300)
    return float(np.linalg.norm(a - n)) / denom


def random_instance(rng: random.Random, n_tasks: int = 1) -> tuple[
    list[MmiTask], dict[int, list[TrainingUtterance]], EmissionModel
]:
    """A small random multitask problem with valid graphs and parameters."""
    n_phones = rng.randint(2, 3)
    n_symbols = rng.randint(2, 4)
    words = {}
    for w in range(rng.randint(1, 3)):
        words[f"w{w}"] = tuple(rng.randrange(n_phones) for _ in range(rng.randint(1, 2)))
    tasks = []
    batches: dict[int, list[TrainingUtterance]] = {}
    for tid in range(1, n_tasks + 1):
        utts = []
        for _ in range(rng.randint(1, 2)):
            transcript = tuple(rng.choice(sorted(words)) for _ in range(rng.randint(1, 2)))
            n_state_phones = sum(len(words[w]) for w in transcript)
            n_frames = rng.randint(max(1, n_state_phones), max(1, n_state_phones) + 2)
            symbols = tuple(rng.randrange(n_symbols) for _ in range(n_frames))
            utts.append(TrainingUtterance(task_id=tid, symbols=symbols, words=transcript))
        counts = phone_bigram_counts(
            [[p for w in u.words for p in words[w]] for u in utts]
        )
        tasks.append(
            MmiTask(
                task_id=tid,
                phones=tuple(f"p{i}" for i in range(n_phones)),
                lexicon=words,
                den_graph=build_denominator(range(n_phones), counts),
                alpha=rng.choice([0.5, 1.0, 2.0]),
                lm_logprob=zero_lm,
            )
        )
        batches[tid] = utts
    em = EmissionModel(
        shared=np.array(
            [[rng.uniform(-1.0, 1.0) for _ in range(n_symbols)] for _ in range(n_phones)]
        ),
        bias={
            t.task_id: np.array(
                [[rng.uniform(-0.5, 0.5) for _ in range(n_symbols)] for _ in range(n_phones)]
            )
            for t in tasks
        },
    )
    return tasks, batches, em


def random_graph(rng: random.Random, n_states: int, n_phones: int) -> HmmGraph:
    """Random acceptor with a guaranteed start-to-final backbone."""
    arcs = [
        Arc(src=i, dst=i + 1, phone=rng.randrange(n_phones), weight=rng.uniform(-1.5, 0.0))
        for i in range(n_states - 1)
    ]
    for _ in range(rng.randint(0, 2 * n_states)):
        arcs.append(
            Arc(
                src=rng.randrange(n_states),
                dst=rng.randrange(n_states),
                phone=rng.randrange(n_phones),
                weight=rng.uniform(-1.5, 0.0),
            )
        )
    finals = {n_states - 1: rng.uniform(-1.0, 0.0)}
    if n_states > 1 and rng.random() < 0.4:
        finals[rng.randrange(n_states)] = rng.uniform(-1.0, 0.0)
    return HmmGraph(
        n_states=n_states, arcs=tuple(arcs), start=0, finals=tuple(finals.items())
    )


def check_forward_enumeration(
    rng: random.Random, instances: int, tolerance: float = 1e-10
) -> CheckResult:
    """Forward recursion equals explicit path enumeration on small graphs."""
    worst = 0.0
    for _ in range(instances):
        n_states = rng.randint(1, 4)
        n_phones = rng.randint(1, 3)
        n_symbols = rng.randint(2, 4)
        graph = random_graph(rng, n_states, n_phones)
        em = EmissionModel(
            shared=np.array(
                [[rng.uniform(-1.0, 1.0) for _ in range(n_symbols)] for _ in range(n_phones)]
            ),
            bias={0: np.zeros((n_phones, n_symbols))},
        )
        symbols = tuple(rng.randrange(n_symbols) for _ in range(rng.randint(0, 5)))
        expected = enumerate_logprob(graph, em, 0, symbols)
        if expected == -math.inf:
            try:
                forward_logprob(graph, em, 0, symbols)
            except NoPath:
                continue
            return CheckResult(
                "forward_vs_enumeration", False, "forward accepted a sequence with no path"
            )
        got = forward_logprob(graph, em, 0, symbols)
        worst = max(worst, abs(got - expected))
        if abs(got - expected) > tolerance:
            return CheckResult(
                "forward_vs_enumeration",
                False,
                f"forward {got!r} vs enumeration {expected!r}",
            )
    return CheckResult(
        "forward_vs_enumeration", True, f"{instances} instances, max |diff| {worst:.3e}"
    )


def check_gradient_fd(
    rng: random.Random, instances: int, step: float = 1e-5, tolerance: float = 1e-5
) -> CheckResult:
    """Analytic gradient matches central finite differences, single and multitask."""
    worst = 0.0
    for k in range(instances):
        tasks, batches, em = random_instance(rng, n_tasks=1 + k % 2)
        analytic = mmi_gradient(batches, tasks, em)
        numeric = finite_difference_gradient(
            lambda m: multitask_objective(batches, tasks, m), em, step=step
        )
        err = gradient_relative_error(analytic, numeric)
        worst = max(worst, err)
        if err > tolerance:
            return CheckResult(
                "gradient_vs_finite_differences", False, f"relative error {err:.3e}"
            )
    return CheckResult(
        "gradient_vs_finite_differences",
        True,
        f"{instances} instances, worst relative error {worst:.3e}",
    )


def check_matched_graphs_zero(rng: random.Random, instances: int, tolerance: float = 1e-10) -> CheckResult:
    """Identical numerator and denominator give objective 0 and gradient 0."""
    for _ in range(instances):
        tasks, batches, em = random_instance(rng, n_tasks=1)
        task = tasks[0]
        utt = batches[task.task_id][0]
        num = task.numerator_graph(utt.words)
        matched = MmiTask(
            task_id=task.task_id,
            phones=task.phones,
            lexicon=task.lexicon,
            den_graph=num,
            alpha=1.0,
            lm_logprob=zero_lm,
        )
        batch = {task.task_id: [utt]}
        objective = mmi_objective([utt], matched, em)
        grad = mmi_gradient(batch, [matched], em)
        if abs(objective) > tolerance or grad.max_abs() > tolerance:
            return CheckResult(
                "matched_graphs_zero",
                False,
                f"objective {objective!r}, max |grad| {grad.max_abs():.3e}",
            )
    return CheckResult("matched_graphs_zero", True, f"{instances} instances, all exactly zero")


def check_single_task_reduction(rng: random.Random, instances: int) -> CheckResult:
    """At T=1 with weight 1 the multitask objective is bit-identical to the task objective."""
    for _ in range(instances):
        tasks, batches, em = random_instance(rng, n_tasks=1)
        task = MmiTask(
            task_id=tasks[0].task_id,
            phones=tasks[0].phones,
            lexicon=tasks[0].lexicon,
            den_graph=tasks[0].den_graph,
            alpha=1.0,
            lm_logprob=zero_lm,
        )
        combined = multitask_objective(batches, [task], em)
        single = mmi_objective(batches[task.task_id], task, em)
        if combined != single:
            return CheckResult(
                "single_task_reduction", False, f"{combined!r} != {single!r}"
            )
    return CheckResult("single_task_reduction", True, f"{instances} instances, bit-identical")


def run_verification(
    seed: int = 12345,
    enum_instances: int = 80,
    fd_instances: int = 30,
    zero_instances: int = 10,
) -> list[CheckResult]:
    """Run the full suite; every CheckResult reports one named check."""
    rng = random.Random(seed)
    return [
        check_forward_enumeration(rng, enum_instances),
        check_gradient_fd(rng, fd_instances),
        check_matched_graphs_zero(rng, zero_instances),
        check_single_task_reduction(rng, zero_instances),
    ]
