"""Single entry point exposing the pipeline as composable subcommands.

Every invocation prints exactly one single-line JSON manifest to stdout
(inputs, outputs, config hash, counts and metrics); data files between
stages are JSON lines, so stages compose through files or pipes. Output
files are written atomically (temp file, then rename). Exit codes: 0 on
success, 1 on a data error (the error name lands in the manifest), 2 on a
usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import IO, Callable

from .callsign import (
    MalformedCallsign,
    VariantKind,
    default_telephony_lexicon,
    expand_callsign,
    load_telephony_lexicon,
    parse_callsign,
)
from .classifier import classify_corpus, default_role_lexicon, load_role_lexicon, RULE_ORDERS
from .corpus import CorpusFormatError, RoleLabel, iter_jsonl, read_corpus, tokenize
from .evaluation import EmptyReference, accumulate, rates, wer_corpus
from .matcher import filter_corpus
from .mmi import (
    DivergenceDetected,
    NoPath,
    OovWord,
    TrainConfig,
    build_tasks,
    load_phone_lexicon,
    load_training_corpus,
    pool_corpus,
    toy_train,
)
from .mmi.check import run_verification

_DATA_ERRORS = (
    MalformedCallsign,
    CorpusFormatError,
    EmptyReference,
    OovWord,
    NoPath,
    DivergenceDetected,
    FileNotFoundError,
    ValueError,
)

_KIND_ORDER = {
    VariantKind.FULL_TELEPHONY: 0,
    VariantKind.LETTER_SPELLED: 1,
    VariantKind.SHORTENED: 2,
}


def _config_hash(args: argparse.Namespace) -> str:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "handler"}
    blob = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _write_atomic(path: Path, write: Callable[[IO[str]], None]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as stream:
            write(stream)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _telephony(args: argparse.Namespace):
    if args.telephony:
        return load_telephony_lexicon(args.telephony)
    return default_telephony_lexicon()


def _role_lexicon(args: argparse.Namespace):
    if args.lexicon:
        return load_role_lexicon(args.lexicon)
    return default_role_lexicon()


def _read_labels(path: str) -> dict[str, RoleLabel]:
    """id -> role from any JSONL whose records carry both fields."""
    labels: dict[str, RoleLabel] = {}
    with open(path, "r", encoding="utf-8") as stream:
        for obj in iter_jsonl(stream, source=path):
            if "id" not in obj or "role" not in obj:
                raise CorpusFormatError(f"{path}: every record needs 'id' and 'role'")
            uid = str(obj["id"])
            if uid in labels:
                raise CorpusFormatError(f"{path}: duplicate id {uid!r}")
            try:
                labels[uid] = RoleLabel(obj["role"])
            except ValueError:
                raise CorpusFormatError(f"{path}: unknown role {obj['role']!r}") from None
    return labels


# ----------------------------------------------------------------- handlers


def _cmd_expand(args, manifest: dict) -> int:
    cs = parse_callsign(args.callsign)
    variants = sorted(
        expand_callsign(cs, _telephony(args), icao_digits=args.icao_digits),
        key=lambda v: (_KIND_ORDER[v.kind], v.tokens),
    )
    manifest["result"] = {
        "callsign": {
            "airline_code": cs.airline_code,
            "number_part": cs.number_part,
            "suffix": cs.suffix,
        },
        "variants": [{"kind": v.kind.value, "text": v.text} for v in variants],
    }
    if args.pretty:
        manifest["pretty"] = [f"{v.kind.value}: {v.text}" for v in variants]
    return 0


def _cmd_filter(args, manifest: dict) -> int:
    kept, stats = filter_corpus(read_corpus(args.corpus), _telephony(args), icao_digits=args.icao_digits)

    def write(stream: IO[str]) -> None:
        for utt, matches in kept:
            record = utt.to_json()
            record["matches"] = [
                {
                    "callsign": m.callsign.raw,
                    "variant_kind": m.variant.kind.value,
                    "start": m.start_index,
                    "end": m.end_index,
                }
                for m in matches
            ]
            stream.write(json.dumps(record) + "\n")

    _write_atomic(Path(args.out), write)
    manifest["outputs"] = {"kept": args.out}
    manifest["result"] = {"stats": stats.to_json()}
    return 0


def _cmd_classify(args, manifest: dict) -> int:
    prefix = args.out_prefix
    paths = {
        "atco": Path(f"{prefix}.atco.jsonl"),
        "pilot": Path(f"{prefix}.pilot.jsonl"),
        "traces": Path(f"{prefix}.traces.jsonl"),
    }
    counts = {"atco": 0, "pilot": 0}
    rows = {"atco": [], "pilot": [], "traces": []}
    stream = classify_corpus(
        read_corpus(args.corpus),
        _role_lexicon(args),
        _telephony(args),
        rule_order=args.rule_order,
        icao_digits=args.icao_digits,
    )
    for utt, label, trace in stream:
        counts[label.value] += 1
        rows[label.value].append(json.dumps(utt.to_json()))
        trace_obj = {"id": utt.id, "role": label.value, **trace.to_json()}
        rows["traces"].append(json.dumps(trace_obj))
    for name, path in paths.items():
        _write_atomic(path, lambda s, lines=rows[name]: s.writelines(line + "\n" for line in lines))
    manifest["outputs"] = {name: str(path) for name, path in paths.items()}
    manifest["result"] = {"counts": {**counts, "total": counts["atco"] + counts["pilot"]}}
    return 0


def _cmd_evaluate(args, manifest: dict) -> int:
    gold = _read_labels(args.gold)
    pred = _read_labels(args.pred)
    missing = sorted(set(gold) - set(pred))
    extra = sorted(set(pred) - set(gold))
    if missing or extra:
        raise CorpusFormatError(
            f"gold/pred ids differ (missing {missing[:3]}, extra {extra[:3]})"
        )
    cm = accumulate((pred[uid], gold[uid]) for uid in gold)
    r = rates(cm)
    manifest["result"] = {"matrix": cm.to_json(), "rates": r.to_json(), "total": cm.total}
    manifest["table"] = cm.pretty_table(r).splitlines()
    return 0


def _cmd_wer(args, manifest: dict) -> int:
    ref_lines = Path(args.ref).read_text(encoding="utf-8").splitlines()
    hyp_lines = Path(args.hyp).read_text(encoding="utf-8").splitlines()
    if len(ref_lines) != len(hyp_lines):
        raise CorpusFormatError(
            f"line counts differ: {len(ref_lines)} references, {len(hyp_lines)} hypotheses"
        )
    breakdown = wer_corpus(
        (tokenize(ref), tokenize(hyp)) for ref, hyp in zip(ref_lines, hyp_lines)
    )
    manifest["result"] = {**breakdown.to_json(), "utterances": len(ref_lines)}
    return 0


def _cmd_mmi_check(args, manifest: dict) -> int:
    checks = run_verification(
        seed=args.seed,
        enum_instances=args.enum_instances,
        fd_instances=args.fd_instances,
        zero_instances=args.zero_instances,
    )
    all_passed = all(c.passed for c in checks)
    manifest["result"] = {"checks": [c.to_json() for c in checks], "all_passed": all_passed}
    return 0 if all_passed else 1


def _run_training(tasks, corpus, config, n_symbols):
    result = toy_train(tasks, corpus, config, n_symbols=n_symbols)
    return {
        "task_ids": sorted(corpus),
        "initial_objective": result.initial_objective,
        "final_objective": result.final_objective,
        "trace": result.objective_trace,
    }, result.model


def _cmd_mmi_train(args, manifest: dict) -> int:
    corpus = load_training_corpus(args.corpus)
    if not corpus:
        raise CorpusFormatError(f"{args.corpus}: no training utterances")
    lexicon = load_phone_lexicon(args.lexicon)
    n_symbols = args.n_symbols or 1 + max(
        max(utt.symbols) for batch in corpus.values() for utt in batch
    )
    runs = []
    saved_arrays: dict[str, object] = {}
    if args.mode == "multitask":
        tasks = build_tasks(corpus, lexicon, alpha=args.alpha)
        config = TrainConfig(steps=args.steps, learning_rate=args.learning_rate)
        run, model = _run_training(tasks, corpus, config, n_symbols)
        runs.append(run)
        saved_arrays["shared"] = model.shared
        for tid, bias in model.bias.items():
            saved_arrays[f"bias_{tid}"] = bias
    elif args.mode == "pooled":
        pooled = pool_corpus(corpus)
        tasks = build_tasks(pooled, lexicon, alpha=1.0)
        config = TrainConfig(steps=args.steps, learning_rate=args.learning_rate)
        run, model = _run_training(tasks, pooled, config, n_symbols)
        runs.append(run)
        saved_arrays["shared"] = model.shared
        saved_arrays["bias_0"] = model.bias[0]
    else:  # single: one independent model per task
        all_tasks = build_tasks(corpus, lexicon, alpha=1.0)
        for task in all_tasks:
            batch = {task.task_id: corpus[task.task_id]}
            config = TrainConfig(steps=args.steps, learning_rate=args.learning_rate)
            run, model = _run_training([task], batch, config, n_symbols)
            runs.append(run)
            saved_arrays[f"task{task.task_id}_shared"] = model.shared
            saved_arrays[f"task{task.task_id}_bias"] = model.bias[task.task_id]
    if args.out:
        import numpy as np

        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=str(out.parent), prefix=out.name + ".", suffix=".npz")
        os.close(fd)
        try:
            np.savez(tmp, **saved_arrays)
            os.replace(tmp, out)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        manifest["outputs"] = {"model": args.out}
    manifest["result"] = {"mode": args.mode, "n_symbols": n_symbols, "runs": runs}
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atckit", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="add human-readable output")
    common.add_argument("--threads", type=int, default=0, help="worker hint, 0 = auto")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", parents=[common], help="expand a callsign into spoken variants")
    p.add_argument("--callsign", required=True)
    p.add_argument("--telephony", help="telephony lexicon TSV (default: packaged)")
    p.add_argument("--icao-digits", action="store_true", help="use tree/fife/niner digit words")
    p.set_defaults(handler=_cmd_expand)

    p = sub.add_parser("filter", parents=[common], help="keep utterances mentioning a context callsign")
    p.add_argument("--corpus", required=True)
    p.add_argument("--telephony")
    p.add_argument("--icao-digits", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_filter)

    p = sub.add_parser("classify", parents=[common], help="split a corpus into ATCO and pilot halves")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", help="role keyword file (default: packaged)")
    p.add_argument("--telephony")
    p.add_argument("--rule-order", choices=RULE_ORDERS, default="keywords-first")
    p.add_argument("--icao-digits", action="store_true")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("evaluate", parents=[common], help="score predicted roles against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("wer", parents=[common], help="word error rate of hypothesis vs reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.set_defaults(handler=_cmd_wer)

    p = sub.add_parser("mmi-check", parents=[common], help="verify objective numerics against oracles")
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--enum-instances", type=int, default=80)
    p.add_argument("--fd-instances", type=int, default=30)
    p.add_argument("--zero-instances", type=int, default=10)
    p.set_defaults(handler=_cmd_mmi_check)

    p = sub.add_parser("mmi-train", parents=[common], help="toy gradient-ascent training")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True, help="word<TAB>phones TSV")
    p.add_argument("--mode", choices=("single", "pooled", "multitask"), default="multitask")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.5, help="task weight (multitask mode)")
    p.add_argument("--n-symbols", type=int, default=0, help="symbol inventory size (0 = infer)")
    p.add_argument("--out", help="write trained parameters as .npz")
    p.set_defaults(handler=_cmd_mmi_train)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    manifest: dict = {
        "subcommand": args.command,
        "inputs": {
            k: v
            for k, v in vars(args).items()
            if k in ("callsign", "corpus", "telephony", "lexicon", "gold", "pred", "ref", "hyp")
            and v is not None
        },
        "outputs": {},
        "config_hash": _config_hash(args),
    }
    try:
        code = args.handler(args, manifest)
    except _DATA_ERRORS as exc:
        manifest["error"] = type(exc).__name__
        manifest["message"] = str(exc)
        print(json.dumps(manifest, sort_keys=True))
        return 1
    table = manifest.pop("table", None)
    pretty = manifest.pop("pretty", None)
    print(json.dumps(manifest, sort_keys=True))
    if table:
        print("\n".join(table))
    if pretty:
        print("\n".join(pretty))
    return code


if __name__ == "__main__":
    sys.exit(main())
