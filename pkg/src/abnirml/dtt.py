"""Dataset-transfer test builders: repurpose paired-text datasets where one
side is preferable (fluent / formal / summary) as ranking pair tests.

Inputs arrive in a normalized JSONL form, one record per line:
    {"source_id", "d1_text", "d2_text", "category"?, "title"?, "spellchecked"?}
with d1_text always the preferable side. Query-title resolution for the
formality builder uses a TSV index mapping sha256(source text) -> title.
"""

from __future__ import annotations

import hashlib
import json
import logging
import unicodedata
from dataclasses import dataclass

from .corpus import Doc, Query
from .errors import ConfigError, ParseError, ValidationError
from .pairtest import PairSample, TestSet
from .textproc import (
    PipelineConfig,
    default_pipeline,
    derive_rng,
    lemmatize,
    noun_chunks,
    tokenize,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TextPairRecord:
    source_id: str
    d1_text: str
    d2_text: str
    category: str | None = None
    title: str | None = None
    spellchecked: bool | None = None

    def __post_init__(self):
        if not self.source_id:
            raise ValidationError("source_id must be non-empty")
        if not self.d1_text or not self.d2_text:
            raise ValidationError(
                f"record {self.source_id!r}: both texts must be non-empty")


def load_pair_records(path) -> list[TextPairRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e}", path=str(path),
                                 line=lineno) from e
            if not isinstance(raw, dict):
                raise ParseError("expected a JSON object", path=str(path),
                                 line=lineno)
            try:
                records.append(TextPairRecord(
                    source_id=str(raw["source_id"]),
                    d1_text=unicodedata.normalize("NFC", str(raw["d1_text"])),
                    d2_text=unicodedata.normalize("NFC", str(raw["d2_text"])),
                    category=(None if raw.get("category") is None
                              else str(raw["category"])),
                    title=(None if raw.get("title") is None
                           else unicodedata.normalize("NFC", str(raw["title"]))),
                    spellchecked=(None if raw.get("spellchecked") is None
                                  else bool(raw["spellchecked"])),
                ))
            except KeyError as e:
                raise ParseError(f"missing field {e.args[0]!r}", path=str(path),
                                 line=lineno) from e
    seen = set()
    for r in records:
        if r.source_id in seen:
            raise ValidationError(f"duplicate source_id {r.source_id!r}; "
                                  "ids must be unique per record")
        seen.add(r.source_id)
    return records


def source_text_hash(text: str) -> str:
    """Key for the title index: sha256 hex of the NFC-normalized text."""
    return hashlib.sha256(
        unicodedata.normalize("NFC", text).encode("utf-8")).hexdigest()


def load_l6_index(path) -> dict[str, str]:
    """TSV of sha256(source text)<TAB>question title."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            key, sep, title = line.partition("\t")
            if not sep or not title.strip():
                raise ParseError("expected hash<TAB>title", path=str(path),
                                 line=lineno)
            key = key.strip()
            if key in out:
                raise ValidationError(f"{path}:{lineno}: duplicate hash {key!r}")
            out[key] = unicodedata.normalize("NFC", title.strip())
    return out


def _lemma_set(text: str, config: PipelineConfig,
               drop_stopwords: bool) -> set[str]:
    tokens = tokenize(text, config)
    if drop_stopwords:
        tokens = [t for t in tokens if t.surface not in config.stopword_list]
    return {lemmatize(t.surface) for t in tokens}


def query_lemma_overlap(q_text: str, d1_text: str, d2_text: str,
                        config: PipelineConfig) -> bool:
    """True when some non-stopword lemma of the query appears (as a token
    lemma) in both documents."""
    q = _lemma_set(q_text, config, drop_stopwords=True)
    if not q:
        return False
    return bool(q & _lemma_set(d1_text, config, drop_stopwords=False)
                  & _lemma_set(d2_text, config, drop_stopwords=False))


def _shared_chunks(d1_text: str, d2_text: str,
                   config: PipelineConfig) -> list[str]:
    """Noun chunks of either text that occur, case-insensitively, in both.
    First-seen order, deduplicated case-insensitively."""
    lo1, lo2 = d1_text.lower(), d2_text.lower()
    out = []
    seen = set()
    for chunk in noun_chunks(d1_text, config) + noun_chunks(d2_text, config):
        key = chunk.lower()
        if key in seen:
            continue
        seen.add(key)
        if key in lo1 and key in lo2:
            out.append(chunk)
    return out


def _finish(test_id: str, samples: list[PairSample], provenance: dict,
            counts: dict[str, int]) -> TestSet:
    for reason in sorted(counts):
        provenance[f"discarded_{reason}"] = str(counts[reason])
    if not samples:
        log.warning("%s build produced no samples", test_id)
    return TestSet(id=test_id, strategy="DTT", samples=samples,
                   provenance=provenance)


def build_fluency(pairs: list[TextPairRecord], seed: int,
                  config: PipelineConfig | None = None) -> TestSet:
    """d1 = fluent text, d2 = its non-fluent source. The query is a noun
    chunk shared by both texts, chosen uniformly per record; records with
    no shared chunk are discarded."""
    config = config or default_pipeline()
    samples = []
    counts: dict[str, int] = {}
    for r in pairs:
        candidates = _shared_chunks(r.d1_text, r.d2_text, config)
        if not candidates:
            counts["no_shared_chunk"] = counts.get("no_shared_chunk", 0) + 1
            continue
        rng = derive_rng(seed, r.source_id)
        meta = {"source_id": r.source_id}
        if r.spellchecked is not None:
            meta["spellchecked"] = "true" if r.spellchecked else "false"
        samples.append(PairSample(
            Query(r.source_id, rng.choice(candidates)),
            Doc(f"{r.source_id}.d1", r.d1_text),
            Doc(f"{r.source_id}.d2", r.d2_text),
            meta=meta,
        ))
    return _finish("dtt-fluency", samples, {"seed": str(seed)}, counts)


def build_formality(pairs: list[TextPairRecord], l6_index: dict[str, str],
                    config: PipelineConfig | None = None) -> TestSet:
    """d1 = formal rewrite, d2 = informal counterpart. The query is the
    question title resolved through the index (tried on d2, then d1, since
    either side may be the original). Discards records whose title cannot
    be resolved or shares no lemma with both texts."""
    config = config or default_pipeline()
    samples = []
    counts: dict[str, int] = {}
    for r in pairs:
        title = l6_index.get(source_text_hash(r.d2_text))
        if title is None:
            title = l6_index.get(source_text_hash(r.d1_text))
        if title is None:
            counts["unresolved_title"] = counts.get("unresolved_title", 0) + 1
            continue
        if not query_lemma_overlap(title, r.d1_text, r.d2_text, config):
            counts["no_lemma_overlap"] = counts.get("no_lemma_overlap", 0) + 1
            continue
        meta = {"source_id": r.source_id}
        if r.category is not None:
            meta["category"] = r.category
        samples.append(PairSample(
            Query(r.source_id, title),
            Doc(f"{r.source_id}.d1", r.d1_text),
            Doc(f"{r.source_id}.d2", r.d2_text),
            meta=meta,
        ))
    return _finish("dtt-formality", samples, {}, counts)


def build_summarization(articles: list[TextPairRecord], seed: int,
                        subsample_rate: float = 1.0,
                        config: PipelineConfig | None = None) -> TestSet:
    """d1 = summary, d2 = article body, query = article title. Records
    whose title shares no lemma with both texts are discarded; a seeded
    Bernoulli subsample is applied after that filter."""
    if not 0.0 < subsample_rate <= 1.0:
        raise ConfigError(
            f"subsample rate must be in (0, 1], got {subsample_rate}")
    config = config or default_pipeline()
    samples = []
    counts: dict[str, int] = {}
    for r in articles:
        if not r.title:
            raise ValidationError(
                f"record {r.source_id!r}: summarization requires a title")
        if not query_lemma_overlap(r.title, r.d1_text, r.d2_text, config):
            counts["no_lemma_overlap"] = counts.get("no_lemma_overlap", 0) + 1
            continue
        rng = derive_rng(seed, r.source_id)
        if rng.random() >= subsample_rate:
            counts["subsampled_out"] = counts.get("subsampled_out", 0) + 1
            continue
        meta = {"source_id": r.source_id}
        if r.category is not None:
            meta["corpus"] = r.category
        samples.append(PairSample(
            Query(r.source_id, r.title),
            Doc(f"{r.source_id}.d1", r.d1_text),
            Doc(f"{r.source_id}.d2", r.d2_text),
            meta=meta,
        ))
    return _finish("dtt-summarization", samples,
                   {"seed": str(seed), "subsample_rate": repr(subsample_rate)},
                   counts)
