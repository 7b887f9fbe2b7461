"""Textual-manipulation test builder: d2 = original judged document,
d1 = the same document after one manipulation. A positive summary score
therefore means the scorer prefers the manipulated text.

Shuffle-style manipulations rewrite token (or sentence / chunk) spans in
place, leaving everything between the spans untouched, so each kind
changes exactly what it names and nothing else.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

from .corpus import Doc, Judgment, Query
from .errors import ConfigError, ValidationError
from .pairtest import PairSample, TestSet
from .textproc import (
    PipelineConfig,
    Rng,
    default_pipeline,
    derive_rng,
    is_preposition,
    lemmatize,
    noun_chunk_spans,
    seeded_shuffle,
    sentence_spans,
    split_sentences,
    tokenize,
)

MANIPULATION_KINDS = (
    "RemoveStopsPunct",
    "Lemmatize",
    "ShuffleWords",
    "ShuffleWordsInSents",
    "ShufflePrepositions",
    "ShuffleSentences",
    "SwapNounChunks",
    "ReplaceWithQuery",
    "AddExpansionTerms",
    "AddNonRelSentence",
)


@dataclass(frozen=True)
class Skip:
    """Sentinel: the manipulation does not apply to this document."""

    reason: str


@dataclass(frozen=True)
class ManipulationContext:
    query: Query
    rng: Rng
    config: PipelineConfig
    expansion_map: dict[str, str] | None = None
    nonrel_pool: tuple[str, ...] | None = None


def _replace_spans(text: str, spans: list[tuple[int, int]],
                   replacements: list[str]) -> str:
    parts = []
    cursor = 0
    for (a, b), repl in zip(spans, replacements):
        parts.append(text[cursor:a])
        parts.append(repl)
        cursor = b
    parts.append(text[cursor:])
    return "".join(parts)


def _permute_spans(text: str, spans: list[tuple[int, int]], rng: Rng) -> str:
    pieces = [text[a:b] for a, b in spans]
    return _replace_spans(text, spans, seeded_shuffle(pieces, rng))


def _remove_stops_punct(text: str, ctx: ManipulationContext) -> str:
    kept = [text[t.span[0]:t.span[1]] for t in tokenize(text, ctx.config)
            if t.surface not in ctx.config.stopword_list]
    return " ".join(kept)


def _lemmatize_text(text: str, ctx: ManipulationContext) -> str:
    tokens = tokenize(text, ctx.config)
    return _replace_spans(text, [t.span for t in tokens],
                          [lemmatize(t.surface) for t in tokens])


def _shuffle_words(text: str, ctx: ManipulationContext) -> str:
    spans = [t.span for t in tokenize(text, ctx.config)]
    return _permute_spans(text, spans, ctx.rng)


def _shuffle_words_in_sents(text: str, ctx: ManipulationContext) -> str:
    spans = []
    pieces = []
    for a, b in sentence_spans(text):
        sent_tokens = tokenize(text[a:b], ctx.config)
        sent_spans = [(a + ta, a + tb) for ta, tb in (t.span for t in sent_tokens)]
        spans.extend(sent_spans)
        pieces.extend(seeded_shuffle([text[sa:sb] for sa, sb in sent_spans],
                                     ctx.rng))
    return _replace_spans(text, spans, pieces)


def _shuffle_prepositions(text: str, ctx: ManipulationContext) -> str:
    spans = [t.span for t in tokenize(text, ctx.config)
             if is_preposition(t.surface)]
    return _permute_spans(text, spans, ctx.rng)


def _shuffle_sentences(text: str, ctx: ManipulationContext) -> str:
    return _permute_spans(text, sentence_spans(text), ctx.rng)


def _swap_noun_chunks(text: str, ctx: ManipulationContext) -> str:
    return _permute_spans(text, noun_chunk_spans(text, ctx.config), ctx.rng)


def manipulate(doc: Doc, kind: str, ctx: ManipulationContext) -> Doc | Skip:
    """Apply one manipulation kind. Returns Skip when the result would be
    byte-identical to the input (nothing to permute, empty expansion, query
    equals the document, ...) or when AddNonRelSentence has no rel=0
    sentences to draw from."""
    if kind == "AddExpansionTerms":
        if ctx.expansion_map is None:
            raise ConfigError("AddExpansionTerms requires an expansion map "
                              "(docid -> expansion text)")
        expansion = ctx.expansion_map.get(doc.id)
        if expansion is None:
            return Skip("no_expansion_entry")
        new_text = f"{doc.text} {expansion}" if expansion else doc.text
    elif kind == "AddNonRelSentence":
        if not ctx.nonrel_pool:
            return Skip("empty_nonrel_pool")
        new_text = f"{doc.text} {ctx.rng.choice(ctx.nonrel_pool)}"
    elif kind == "ReplaceWithQuery":
        new_text = ctx.query.text
    elif kind == "RemoveStopsPunct":
        new_text = _remove_stops_punct(doc.text, ctx)
    elif kind == "Lemmatize":
        new_text = _lemmatize_text(doc.text, ctx)
    elif kind == "ShuffleWords":
        new_text = _shuffle_words(doc.text, ctx)
    elif kind == "ShuffleWordsInSents":
        new_text = _shuffle_words_in_sents(doc.text, ctx)
    elif kind == "ShufflePrepositions":
        new_text = _shuffle_prepositions(doc.text, ctx)
    elif kind == "ShuffleSentences":
        new_text = _shuffle_sentences(doc.text, ctx)
    elif kind == "SwapNounChunks":
        new_text = _swap_noun_chunks(doc.text, ctx)
    else:
        raise ValidationError(
            f"unknown manipulation kind {kind!r}; expected one of {MANIPULATION_KINDS}")
    if new_text == doc.text:
        return Skip("identity")
    return Doc(doc.id, new_text)


def _nonrel_pools(qrels: list[Judgment], collection: dict[str, Doc]):
    """Per query: all sentences of its rel=0 docs, in sorted-docid order."""
    pools: dict[str, list[str]] = {}
    zero_docs: dict[str, list[str]] = {}
    for j in qrels:
        if j.grade == 0:
            zero_docs.setdefault(j.query_id, []).append(j.doc_id)
    for qid, doc_ids in zero_docs.items():
        pool = []
        for doc_id in sorted(doc_ids):
            pool.extend(split_sentences(collection[doc_id].text))
        pools[qid] = pool
    return pools


def build_tmt(kind: str, qrels: list[Judgment], collection: dict[str, Doc],
              queries: dict[str, Query], seed: int,
              config: PipelineConfig | None = None,
              expansion_map: dict[str, str] | None = None) -> TestSet:
    """One sample per judged (query, doc) the manipulation applies to.
    Each sample draws from its own generator seeded by
    (seed, query_id, doc_id), so output is schedule-independent."""
    if kind not in MANIPULATION_KINDS:
        raise ValidationError(
            f"unknown manipulation kind {kind!r}; expected one of {MANIPULATION_KINDS}")
    config = config or default_pipeline()
    qrels = list(qrels)
    missing_docs = sorted({j.doc_id for j in qrels if j.doc_id not in collection})
    missing_queries = sorted({j.query_id for j in qrels if j.query_id not in queries})
    if missing_docs or missing_queries:
        raise ValidationError(
            "judgments reference unknown ids: "
            f"docs {missing_docs[:10]} queries {missing_queries[:10]}")
    pools = _nonrel_pools(qrels, collection) if kind == "AddNonRelSentence" else {}
    samples = []
    skips: dict[str, int] = {}
    for j in qrels:
        doc = collection[j.doc_id]
        ctx = ManipulationContext(
            query=queries[j.query_id],
            rng=derive_rng(seed, j.query_id, j.doc_id),
            config=config,
            expansion_map=expansion_map,
            nonrel_pool=tuple(pools.get(j.query_id, ())) or None,
        )
        result = manipulate(doc, kind, ctx)
        if isinstance(result, Skip):
            skips[result.reason] = skips.get(result.reason, 0) + 1
            continue
        samples.append(PairSample(ctx.query, result, doc,
                                  meta={"grade": j.grade, "kind": kind}))
    provenance = {"kind": kind, "seed": str(seed)}
    for reason in sorted(skips):
        provenance[f"skipped_{reason}"] = str(skips[reason])
    return TestSet(id=f"tmt-{kind.lower()}", strategy="TMT",
                   samples=samples, provenance=provenance)


def load_expansion_map(path) -> dict[str, str]:
    """docid<TAB>expansion text, one per line."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            docid, sep, text = line.partition("\t")
            if not sep:
                raise ValidationError(
                    f"{path}:{lineno}: expected docid<TAB>expansion text")
            docid = docid.strip()
            if docid in out:
                raise ValidationError(f"{path}:{lineno}: duplicate docid {docid!r}")
            out[docid] = unicodedata.normalize("NFC", text.strip())
    return out
