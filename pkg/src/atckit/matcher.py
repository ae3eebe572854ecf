"""Locate spoken callsign variants inside transcripts and filter corpora.

Matching is exact token-sequence equality: a variant matches at position
``i`` iff ``tokens[i:i+len(variant)]`` equals the variant's tokens. No
edit-distance fuzziness and no sub-token boundaries. Corpus filtering
keeps an utterance iff at least one variant of one of its own context
callsigns occurs in it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .callsign import (
    Callsign,
    MalformedCallsign,
    SpokenVariant,
    TelephonyLexicon,
    expand_callsign,
    parse_callsign,
)
from .corpus import Utterance

VariantEntry = tuple[Callsign, SpokenVariant]

_MALFORMED = object()  # cache sentinel for context callsigns that fail to parse


@dataclass(frozen=True)
class CallsignMatch:
    """One exact occurrence of a spoken variant inside an utterance."""

    callsign: Callsign
    variant: SpokenVariant
    start_index: int
    end_index: int  # exclusive

    def __len__(self) -> int:
        return self.end_index - self.start_index


@dataclass
class FilterStats:
    """Counters accumulated over one filtering run; all commutative."""

    total: int = 0
    kept: int = 0
    dropped: int = 0
    no_context: int = 0
    malformed_callsigns: int = 0
    tokens_total: int = 0
    tokens_kept: int = 0

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "kept": self.kept,
            "dropped": self.dropped,
            "no_context": self.no_context,
            "malformed_callsigns": self.malformed_callsigns,
            "tokens_total": self.tokens_total,
            "tokens_kept": self.tokens_kept,
        }


def find_matches(utt: Utterance, variants: Iterable[VariantEntry]) -> list[CallsignMatch]:
    """All exact contiguous occurrences of any variant in the utterance.

    Overlapping matches are all reported. Output is sorted by start
    position, longer variants first, with a stable tie-break so identical
    inputs always produce identical output.
    """
    by_first: dict[str, list[VariantEntry]] = {}
    for entry in variants:
        by_first.setdefault(entry[1].tokens[0], []).append(entry)
    tokens = utt.tokens
    matches = []
    for start, tok in enumerate(tokens):
        for cs, var in by_first.get(tok, ()):
            end = start + len(var.tokens)
            if end <= len(tokens) and tokens[start:end] == var.tokens:
                matches.append(CallsignMatch(cs, var, start, end))
    matches.sort(
        key=lambda m: (
            m.start_index,
            m.start_index - m.end_index,
            m.callsign.raw,
            m.variant.kind.value,
            m.variant.tokens,
        )
    )
    return matches


def expand_context_callsigns(
    raw_callsigns: Iterable[str],
    lexicon: TelephonyLexicon,
    stats: FilterStats | None = None,
    cache: dict | None = None,
    icao_digits: bool = False,
) -> list[VariantEntry]:
    """Expand an utterance's context callsign list into variant entries.

    Malformed entries are skipped (and counted into ``stats`` when given);
    they are never fatal. ``cache`` memoizes expansion across utterances
    that share callsigns.
    """
    if cache is None:
        cache = {}
    out: list[VariantEntry] = []
    for raw in raw_callsigns:
        entry = cache.get(raw)
        if entry is None:
            try:
                cs = parse_callsign(raw)
            except MalformedCallsign:
                entry = _MALFORMED
            else:
                entry = [(cs, var) for var in expand_callsign(cs, lexicon, icao_digits)]
            cache[raw] = entry
        if entry is _MALFORMED:
            if stats is not None:
                stats.malformed_callsigns += 1
        else:
            out.extend(entry)
    return out


def filter_corpus(
    corpus: Iterable[Utterance],
    lexicon: TelephonyLexicon,
    icao_digits: bool = False,
) -> tuple[Iterator[tuple[Utterance, list[CallsignMatch]]], FilterStats]:
    """Keep utterances in which a variant of one of their context callsigns occurs.

    Returns a lazy stream of (utterance, matches) pairs plus a stats object
    that fills in as the stream is consumed; read the stats only after
    exhausting the stream. Utterances without context callsigns are counted
    and dropped. The corpus is processed one record at a time, so inputs
    larger than memory are fine.
    """
    stats = FilterStats()

    def kept() -> Iterator[tuple[Utterance, list[CallsignMatch]]]:
        cache: dict = {}
        for utt in corpus:
            stats.total += 1
            stats.tokens_total += len(utt.tokens)
            context = utt.context_callsigns
            if not context:
                stats.no_context += 1
                stats.dropped += 1
                continue
            variants = expand_context_callsigns(
                context, lexicon, stats=stats, cache=cache, icao_digits=icao_digits
            )
            matches = find_matches(utt, variants) if variants else []
            if matches:
                stats.kept += 1
                stats.tokens_kept += len(utt.tokens)
                yield utt, matches
            else:
                stats.dropped += 1

    return kept(), stats
