"""Loading, validation, and serialization of queries, document collections,
relevance judgments, and run files, plus the collection statistics BM25
needs.

File formats (UTF-8, LF):
  queries/collection  id<TAB>text          (first tab separates; text keeps any further tabs)
  qrels               qid col2 docid grade (whitespace-separated; col2 ignored)
  run                 qid Q0 docid rank score tag

Loaded structures are immutable and safe to share across threads.
"""

from __future__ import annotations

import json
import os
import tempfile
import unicodedata
from dataclasses import dataclass

from .errors import ParseError, ValidationError
from .textproc import PipelineConfig, terms


@dataclass(frozen=True)
class Query:
    id: str
    text: str


@dataclass(frozen=True)
class Doc:
    id: str
    text: str


@dataclass(frozen=True)
class Judgment:
    query_id: str
    doc_id: str
    grade: int


@dataclass(frozen=True)
class RunEntry:
    query_id: str
    doc_id: str
    rank: int
    score: float


@dataclass(frozen=True)
class CollectionStats:
    """num_docs is N; avg_doc_len is the mean processed-token count;
    doc_freq maps processed term -> number of docs containing it."""

    num_docs: int
    avg_doc_len: float
    doc_freq: dict  # term -> int; treat as read-only

    def df(self, term: str) -> int:
        return self.doc_freq.get(term, 0)


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def _iter_lines(path):
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            yield lineno, raw.rstrip("\n").rstrip("\r")


def _load_tsv(path, kind: str):
    seen = {}
    for lineno, line in _iter_lines(path):
        if "\t" not in line:
            raise ParseError(f"expected id<TAB>text, got {line!r}", path=str(path), line=lineno)
        ident, text = line.split("\t", 1)
        ident = ident.strip()
        text = _nfc(text.strip())
        if not ident:
            raise ParseError(f"empty {kind} id", path=str(path), line=lineno)
        if ident in seen:
            raise ValidationError(f"duplicate {kind} id {ident!r} in {path}")
        seen[ident] = text
    return seen


def load_queries(path) -> dict[str, Query]:
    """Queries keyed by id, in file order. Duplicate ids are an error."""
    return {i: Query(i, t) for i, t in _load_tsv(path, "query").items()}


def load_collection(path) -> dict[str, Doc]:
    """Documents keyed by id, in file order. Duplicate ids are an error."""
    return {i: Doc(i, t) for i, t in _load_tsv(path, "doc").items()}


def load_qrels(path) -> list[Judgment]:
    """TREC-style judgments. The second column is accepted as any token."""
    out = []
    seen = set()
    for lineno, line in _iter_lines(path):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 4:
            raise ParseError(
                f"expected `qid col2 docid grade`, got {len(fields)} fields",
                path=str(path), line=lineno)
        qid, _, did, grade_s = fields
        try:
            grade = int(grade_s)
        except ValueError:
            raise ParseError(f"non-integer grade {grade_s!r}", path=str(path), line=lineno) from None
        if grade < 0:
            raise ValidationError(f"negative grade {grade} at {path}:{lineno}")
        if (qid, did) in seen:
            raise ValidationError(f"duplicate judgment for ({qid}, {did}) in {path}")
        seen.add((qid, did))
        out.append(Judgment(qid, did, grade))
    return out


def qrels_by_query(judgments: list[Judgment]) -> dict[str, dict[str, int]]:
    """Index judgments as query_id -> doc_id -> grade."""
    index: dict[str, dict[str, int]] = {}
    for j in judgments:
        index.setdefault(j.query_id, {})[j.doc_id] = j.grade
    return index


def load_run(path) -> list[RunEntry]:
    """TREC run entries. Per query: ranks unique, doc ids unique, scores
    non-increasing with rank."""
    out = []
    seen_doc = set()
    seen_rank = set()
    for lineno, line in _iter_lines(path):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 6:
            raise ParseError(
                f"expected `qid Q0 docid rank score tag`, got {len(fields)} fields",
                path=str(path), line=lineno)
        qid, _, did, rank_s, score_s, _tag = fields
        try:
            rank = int(rank_s)
            score = float(score_s)
        except ValueError:
            raise ParseError(f"bad rank/score {rank_s!r}/{score_s!r}",
                             path=str(path), line=lineno) from None
        if rank < 1:
            raise ValidationError(f"rank must be positive, got {rank} at {path}:{lineno}")
        if (qid, did) in seen_doc:
            raise ValidationError(f"duplicate run entry for ({qid}, {did}) in {path}")
        if (qid, rank) in seen_rank:
            raise ValidationError(f"duplicate rank {rank} for query {qid} in {path}")
        seen_doc.add((qid, did))
        seen_rank.add((qid, rank))
        out.append(RunEntry(qid, did, rank, score))
    for qid, entries in run_by_query(out).items():
        for a, b in zip(entries, entries[1:]):
            if b.score > a.score:
                raise ValidationError(
                    f"scores increase with rank for query {qid} "
                    f"({a.doc_id}@{a.rank}={a.score!r} < {b.doc_id}@{b.rank}={b.score!r})")
    return out


def run_by_query(entries: list[RunEntry]) -> dict[str, list[RunEntry]]:
    """Index run entries as query_id -> entries sorted by rank."""
    index: dict[str, list[RunEntry]] = {}
    for e in entries:
        index.setdefault(e.query_id, []).append(e)
    for qid in index:
        index[qid].sort(key=lambda e: e.rank)
    return index


def sort_by_score(scored: list[tuple[str, float]]) -> list[tuple[str, float]]:
    """Descending score; equal scores broken by doc_id descending-lex, so
    the order is total and reproducible."""
    by_doc = sorted(scored, key=lambda p: p[0], reverse=True)
    return sorted(by_doc, key=lambda p: p[1], reverse=True)


def compute_stats(collection: dict[str, Doc], pipeline: PipelineConfig) -> CollectionStats:
    """Collection statistics over the processed-term representation."""
    if not collection:
        raise ValidationError("cannot compute statistics for an empty collection")
    df: dict[str, int] = {}
    total = 0
    for doc in collection.values():
        toks = terms(doc.text, pipeline)
        total += len(toks)
        for term in set(toks):
            df[term] = df.get(term, 0) + 1
    if total == 0:
        raise ValidationError("collection has no processed tokens; BM25 statistics undefined")
    return CollectionStats(len(collection), total / len(collection), df)


# --- serialization (inverse of the loaders; used for round-trips and by the CLI) ---


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory + os.replace, so readers
    never observe a partial file."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_queries(queries: dict[str, Query], path) -> None:
    atomic_write_text(path, "".join(f"{q.id}\t{q.text}\n" for q in queries.values()))


def save_collection(docs: dict[str, Doc], path) -> None:
    atomic_write_text(path, "".join(f"{d.id}\t{d.text}\n" for d in docs.values()))


def save_qrels(judgments: list[Judgment], path) -> None:
    atomic_write_text(
        path, "".join(f"{j.query_id} 0 {j.doc_id} {j.grade}\n" for j in judgments))


def save_run(entries: list[RunEntry], path, tag: str = "run") -> None:
    atomic_write_text(
        path,
        "".join(f"{e.query_id} Q0 {e.doc_id} {e.rank} {e.score!r} {tag}\n" for e in entries),
    )


def save_stats(stats: CollectionStats, path) -> None:
    atomic_write_text(path, json.dumps(
        {"num_docs": stats.num_docs, "avg_doc_len": stats.avg_doc_len,
         "doc_freq": stats.doc_freq},
        sort_keys=True, ensure_ascii=False) + "\n")


def load_stats(path) -> CollectionStats:
    with open(path, encoding="utf-8") as f:
        try:
            obj = json.load(f)
            df = {str(k): int(v) for k, v in obj["doc_freq"].items()}
            return CollectionStats(int(obj["num_docs"]),
                                   float(obj["avg_doc_len"]), df)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad stats file: {e}", path=str(path)) from None
