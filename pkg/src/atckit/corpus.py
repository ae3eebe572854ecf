"""Shared corpus data model: utterance records, tokenization, JSONL I/O.

A corpus file is UTF-8 newline-delimited JSON, one utterance per line:

    {"id": "u17", "text": "skytravel eight four juliett descend",
     "role": "atco", "callsigns": ["TVS84J"]}

``role`` and ``callsigns`` are optional. ``text`` is normalized on ingest:
lowercased, split on ASCII whitespace, punctuation stripped from token
edges. Empty transcripts are representable and never dropped.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator


class CorpusFormatError(ValueError):
    """Raised when a corpus file line cannot be parsed into an utterance."""


class RoleLabel(Enum):
    """Speaker role of one utterance: ground controller or pilot."""

    ATCO = "atco"
    PILOT = "pilot"


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, split on whitespace, strip punctuation from token edges.

    Pure-punctuation tokens vanish; internal punctuation survives, so
    "x-ray" stays one token while "juliett," loses its comma.
    """
    out = []
    for raw in text.lower().split():
        tok = raw.strip(string.punctuation)
        if tok:
            out.append(tok)
    return tuple(out)


@dataclass
class Utterance:
    """One transcript record.

    ``context_callsigns`` holds the raw ICAO strings expected on frequency
    around this utterance (from surveillance metadata). Entries are kept
    verbatim on ingest; malformed ones are flagged and counted where they
    are used.
    """

    id: str
    tokens: tuple[str, ...]
    gold_role: RoleLabel | None = None
    context_callsigns: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        self.tokens = tuple(self.tokens)
        if self.context_callsigns is not None:
            self.context_callsigns = tuple(self.context_callsigns)

    @classmethod
    def from_text(
        cls,
        id: str,
        text: str,
        role: RoleLabel | str | None = None,
        callsigns: Iterable[str] | None = None,
    ) -> "Utterance":
        if isinstance(role, str):
            role = RoleLabel(role)
        return cls(
            id=id,
            tokens=tokenize(text),
            gold_role=role,
            context_callsigns=tuple(callsigns) if callsigns is not None else None,
        )

    @classmethod
    def from_json(cls, obj: dict) -> "Utterance":
        if "id" not in obj:
            raise CorpusFormatError("utterance record is missing 'id'")
        role = obj.get("role")
        if role is not None:
            try:
                role = RoleLabel(role)
            except ValueError:
                raise CorpusFormatError(f"unknown role {role!r} (want 'atco' or 'pilot')") from None
        callsigns = obj.get("callsigns")
        if callsigns is not None and not isinstance(callsigns, list):
            raise CorpusFormatError("'callsigns' must be an array of strings")
        return cls(
            id=str(obj["id"]),
            tokens=tokenize(obj.get("text", "")),
            gold_role=role,
            context_callsigns=tuple(str(c) for c in callsigns) if callsigns is not None else None,
        )

    def to_json(self) -> dict:
        obj: dict = {"id": self.id, "text": " ".join(self.tokens)}
        if self.gold_role is not None:
            obj["role"] = self.gold_role.value
        if self.context_callsigns is not None:
            obj["callsigns"] = list(self.context_callsigns)
        return obj


def iter_jsonl(stream: IO[str], source: str = "<stream>") -> Iterator[dict]:
    """Yield one decoded object per non-blank line, with line numbers on error."""
    for lineno, line in enumerate(stream, 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"{source}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise CorpusFormatError(f"{source}:{lineno}: expected a JSON object")
        yield obj


def read_corpus(path: str | Path) -> Iterator[Utterance]:
    """Stream utterances from a JSONL corpus file."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as stream:
        for obj in iter_jsonl(stream, source=str(path)):
            yield Utterance.from_json(obj)


def write_corpus(utterances: Iterable[Utterance], path: str | Path) -> int:
    """Write utterances as JSONL; returns the number of records written."""
    n = 0
    with Path(path).open("w", encoding="utf-8") as stream:
        for utt in utterances:
            stream.write(json.dumps(utt.to_json()) + "\n")
            n += 1
    return n
