"""Ranking functions R(q, d): native BM25, external scorers spoken to over
a line-delimited JSON protocol, a persistent score cache, and per-scorer
delta calibration.

Wire protocol (child process stdin/stdout or TCP, UTF-8, LF):
  handshake  scorer's first line: {"protocol": "abnirml-scorer/1", "name": <str>}
  request    {"id": <str>, "q": <str>, "d": <str>}
  response   {"id": <str>, "score": <number>}
Responses may arrive out of order; EOF on the scorer's stdin terminates it.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import queue
import shlex
import socket
import sqlite3
import statistics
import subprocess
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .corpus import CollectionStats, run_by_query, sort_by_score
from .errors import CacheError, ScorerProtocolError, ScorerTimeoutError, ValidationError
from .textproc import PipelineConfig, terms

PROTOCOL_VERSION = "abnirml-scorer/1"


def _tag_pair_index(exc: BaseException, index: int) -> None:
    # evaluate() reads this to name the failing sample; first tag wins
    if getattr(exc, "pair_index", None) is None:
        exc.pair_index = index


class Scorer:
    """A deterministic function of (query text, doc text). Subclasses set a
    stable `id` used as the cache namespace."""

    id: str

    def score(self, query_text: str, doc_text: str) -> float:
        raise NotImplementedError

    def score_batch(self, pairs, jobs: int = 1) -> list[float]:
        """Scores in input order. A failing call re-raises with the failing
        pair's index attached as `pair_index`."""
        pairs = list(pairs)
        if jobs <= 1 or len(pairs) <= 1:
            out = []
            for i, (q, d) in enumerate(pairs):
                try:
                    out.append(self.score(q, d))
                except Exception as e:
                    _tag_pair_index(e, i)
                    raise
            return out
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(self.score, q, d) for q, d in pairs]
            out = []
            for i, fut in enumerate(futures):
                try:
                    out.append(fut.result())
                except Exception as e:
                    _tag_pair_index(e, i)
                    raise
            return out

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class Bm25Scorer(Scorer):
    """BM25 over the processed-term representation.

    score(q, d) = sum over distinct processed query terms t with df(t) > 0 of
      idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
    with idf(t) = ln((N - df + 0.5) / (df + 0.5)), unclamped by default.
    Terms unseen in the collection contribute nothing; an empty document
    scores 0.
    """

    def __init__(self, stats: CollectionStats, pipeline: PipelineConfig | None = None,
                 k1: float = 1.2, b: float = 0.75, clamp_negative_idf: bool = False,
                 scorer_id: str | None = None):
        if k1 < 0:
            raise ValidationError(f"k1 must be >= 0, got {k1}")
        if not 0 <= b <= 1:
            raise ValidationError(f"b must be in [0, 1], got {b}")
        self.stats = stats
        self.pipeline = pipeline or PipelineConfig()
        self.k1 = k1
        self.b = b
        self.clamp_negative_idf = clamp_negative_idf
        self.id = scorer_id or (
            f"bm25:k1={k1!r}:b={b!r}:clamp={int(clamp_negative_idf)}"
            f":stats={self._stats_fingerprint()}")

    def _stats_fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.stats.num_docs}\x1f{self.stats.avg_doc_len!r}\x1f".encode())
        for term in sorted(self.stats.doc_freq):
            h.update(f"{term}\x1f{self.stats.doc_freq[term]}\x1e".encode())
        return h.hexdigest()[:16]

    def idf(self, term: str) -> float:
        df = self.stats.df(term)
        if df == 0:
            return 0.0
        value = math.log((self.stats.num_docs - df + 0.5) / (df + 0.5))
        if self.clamp_negative_idf and value < 0:
            return 0.0
        return value

    def score(self, query_text: str, doc_text: str) -> float:
        doc_terms = terms(doc_text, self.pipeline)
        dl = len(doc_terms)
        counts = Counter(doc_terms)
        norm = self.k1 * (1 - self.b + self.b * dl / self.stats.avg_doc_len)
        total = 0.0
        # dict.fromkeys fixes summation order to first occurrence in the query
        for term in dict.fromkeys(terms(query_text, self.pipeline)):
            if self.stats.df(term) == 0:
                continue
            tf = counts.get(term, 0)
            if tf == 0:
                continue
            total += self.idf(term) * (tf * (self.k1 + 1)) / (tf + norm)
        return total


class CallableScorer(Scorer):
    """Adapts a plain function f(query_text, doc_text) -> float."""

    def __init__(self, fn, scorer_id: str):
        self._fn = fn
        self.id = scorer_id

    def score(self, query_text: str, doc_text: str) -> float:
        return self._fn(query_text, doc_text)


# --- external scorers -------------------------------------------------------


class _LineTransport:
    """Reader thread + blocking writes over a pair of text streams."""

    def __init__(self, reader, writer, describe: str):
        self._writer = writer
        self._describe = describe
        self._lines: queue.Queue = queue.Queue()
        self._thread = threading.Thread(target=self._drain, args=(reader,), daemon=True)
        self._thread.start()

    def _drain(self, reader):
        try:
            for line in reader:
                self._lines.put(line)
        except Exception as e:  # stream torn down mid-read
            self._lines.put(e)
        finally:
            self._lines.put(None)

    def send(self, line: str) -> None:
        try:
            self._writer.write(line + "\n")
            self._writer.flush()
        except (BrokenPipeError, ValueError, OSError) as e:
            raise ScorerProtocolError(f"{self._describe}: cannot send request: {e}") from e

    def recv(self, timeout: float):
        """Next line, None on EOF; raises on timeout."""
        try:
            item = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise ScorerTimeoutError(
                f"{self._describe}: no response within {timeout}s") from None
        if isinstance(item, Exception):
            raise ScorerProtocolError(f"{self._describe}: read failed: {item}") from item
        return item

    def close_writer(self):
        try:
            self._writer.close()
        except OSError:
            pass


class ExternalScorer(Scorer):
    """Talks the wire protocol to a child process (`command`) or an existing
    TCP endpoint (`host:port`). Requests are pipelined up to `window`
    in-flight; responses are matched by id, so arrival order is free."""

    def __init__(self, target: str, timeout: float = 30.0, window: int = 32,
                 scorer_id: str | None = None):
        if window < 1:
            raise ValidationError(f"window must be >= 1, got {window}")
        self.timeout = timeout
        self.window = window
        self._lock = threading.Lock()
        self._counter = 0
        self._proc = None
        self._sock = None
        if ":" in target and not any(c.isspace() for c in target) and \
                target.rsplit(":", 1)[1].isdigit():
            host, port = target.rsplit(":", 1)
            self._sock = socket.create_connection((host, int(port)), timeout=timeout)
            self._sock.settimeout(timeout)
            stream = self._sock.makefile("rw", encoding="utf-8", newline="\n")
            self._transport = _LineTransport(stream, stream, f"scorer at {target}")
            self._describe = f"scorer at {target}"
        else:
            self._proc = subprocess.Popen(
                shlex.split(target), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1)
            self._describe = f"scorer process {target!r}"
            self._transport = _LineTransport(self._proc.stdout, self._proc.stdin,
                                             self._describe)
        self.name = self._handshake()
        self.id = scorer_id or f"ext:{self.name}"

    def _handshake(self) -> str:
        line = self._transport.recv(self.timeout)
        if line is None:
            raise ScorerProtocolError(f"{self._describe}: closed before handshake")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            raise ScorerProtocolError(
                f"{self._describe}: malformed handshake line {line.strip()!r}") from None
        if not isinstance(obj, dict) or obj.get("protocol") != PROTOCOL_VERSION:
            raise ScorerProtocolError(
                f"{self._describe}: protocol mismatch: expected "
                f"{PROTOCOL_VERSION!r}, got {obj.get('protocol')!r}")
        return str(obj.get("name", "unnamed"))

    def score(self, query_text: str, doc_text: str) -> float:
        return self.score_batch([(query_text, doc_text)])[0]

    def score_batch(self, pairs, jobs: int = 1) -> list[float]:
        # jobs is accepted for interface parity; concurrency here is the
        # pipelining window, not threads.
        pairs = list(pairs)
        if not pairs:
            return []
        with self._lock:
            base = self._counter
            self._counter += len(pairs)
            ids = {f"r{base + i}": i for i in range(len(pairs))}
            scores: dict[int, float] = {}
            pending: set[str] = set()
            next_to_send = 0
            try:
                while len(scores) < len(pairs):
                    while next_to_send < len(pairs) and len(pending) < self.window:
                        rid = f"r{base + next_to_send}"
                        q, d = pairs[next_to_send]
                        self._transport.send(json.dumps(
                            {"id": rid, "q": q, "d": d}, ensure_ascii=False))
                        pending.add(rid)
                        next_to_send += 1
                    line = self._transport.recv(self.timeout)
                    if line is None:
                        raise ScorerProtocolError(
                            f"{self._describe}: connection closed with "
                            f"{len(pending)} unanswered request(s), e.g. "
                            f"{sorted(pending)[0]!r}")
                    self._accept(line, ids, pending, scores)
            except (ScorerProtocolError, ScorerTimeoutError) as e:
                _tag_pair_index(e, min((ids[r] for r in pending), default=0))
                raise
        return [scores[i] for i in range(len(pairs))]

    def _accept(self, line, ids, pending, scores):
        line = line.strip()
        if not line:
            return
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            raise ScorerProtocolError(
                f"{self._describe}: malformed response line {line!r}") from None
        if not isinstance(obj, dict) or "id" not in obj:
            raise ScorerProtocolError(
                f"{self._describe}: response without an id: {line!r}")
        rid = obj["id"]
        if "error" in obj:
            raise ScorerProtocolError(
                f"{self._describe}: scorer reported error for id {rid!r}: {obj['error']}")
        if rid not in ids:
            raise ScorerProtocolError(f"{self._describe}: unknown response id {rid!r}")
        if rid not in pending:
            raise ScorerProtocolError(f"{self._describe}: duplicate response id {rid!r}")
        if not isinstance(obj.get("score"), (int, float)) or isinstance(obj.get("score"), bool):
            raise ScorerProtocolError(
                f"{self._describe}: non-numeric score for id {rid!r}: {obj.get('score')!r}")
        pending.discard(rid)
        scores[ids[rid]] = float(obj["score"])

    def close(self) -> None:
        self._transport.close_writer()
        if self._proc is not None:
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass


# --- persistent score cache --------------------------------------------------


def _text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class CachedScorer(Scorer):
    """Content-addressed persistent cache around any scorer.

    Keyed by (scorer id, sha256(query text), sha256(doc text)), so changed
    text always misses even when ids are reused. A distinct (q, d) pair is
    forwarded to the inner scorer at most once, within and across runs.
    """

    def __init__(self, inner: Scorer, cache_dir):
        self.inner = inner
        self.id = inner.id
        os.makedirs(cache_dir, exist_ok=True)
        self.path = os.path.join(os.fspath(cache_dir), "scores.sqlite")
        self._lock = threading.Lock()
        try:
            self._db = sqlite3.connect(self.path, check_same_thread=False)
            self._db.execute(
                "CREATE TABLE IF NOT EXISTS scores ("
                " scorer_id TEXT NOT NULL, qhash TEXT NOT NULL, dhash TEXT NOT NULL,"
                " score REAL NOT NULL, PRIMARY KEY (scorer_id, qhash, dhash))")
            self._db.commit()
        except sqlite3.DatabaseError as e:
            raise CacheError(
                f"score cache at {self.path} is unreadable ({e}); "
                f"delete the file to clear it") from e

    def _get(self, qh: str, dh: str):
        try:
            row = self._db.execute(
                "SELECT score FROM scores WHERE scorer_id=? AND qhash=? AND dhash=?",
                (self.id, qh, dh)).fetchone()
        except sqlite3.DatabaseError as e:
            raise CacheError(
                f"score cache at {self.path} is corrupt ({e}); "
                f"delete the file to clear it") from e
        return None if row is None else row[0]

    def _put_many(self, rows) -> None:
        try:
            self._db.executemany(
                "INSERT OR REPLACE INTO scores (scorer_id, qhash, dhash, score)"
                " VALUES (?, ?, ?, ?)", rows)
            self._db.commit()
        except sqlite3.DatabaseError as e:
            raise CacheError(
                f"score cache at {self.path} is corrupt ({e}); "
                f"delete the file to clear it") from e

    def score(self, query_text: str, doc_text: str) -> float:
        return self.score_batch([(query_text, doc_text)])[0]

    def score_batch(self, pairs, jobs: int = 1) -> list[float]:
        pairs = list(pairs)
        keys = [(_text_hash(q), _text_hash(d)) for q, d in pairs]
        with self._lock:
            scores: dict[tuple, float] = {}
            for key in keys:
                if key not in scores:
                    hit = self._get(*key)
                    if hit is not None:
                        scores[key] = hit
            miss_keys = list(dict.fromkeys(
                key for key in keys if key not in scores))
            if miss_keys:
                first_pair_for = {}
                for key, pair in zip(keys, pairs):
                    first_pair_for.setdefault(key, pair)
                miss_pairs = [first_pair_for[k] for k in miss_keys]
                try:
                    computed = self.inner.score_batch(miss_pairs, jobs=jobs)
                except Exception as e:
                    # remap the inner (deduplicated) index to the caller's
                    inner_index = getattr(e, "pair_index", None)
                    if inner_index is not None:
                        e.pair_index = keys.index(miss_keys[inner_index])
                    raise
                self._put_many(
                    (self.id, qh, dh, s)
                    for (qh, dh), s in zip(miss_keys, computed))
                scores.update(zip(miss_keys, computed))
        return [scores[key] for key in keys]

    def close(self) -> None:
        self._db.close()
        self.inner.close()


# --- delta calibration --------------------------------------------------------


@dataclass(frozen=True)
class DeltaConfig:
    scorer_id: str
    delta: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.delta < 0:
            raise ValidationError(f"delta must be non-negative, got {self.delta}")


def calibrate_delta(scorer: Scorer, run_entries, collection, queries,
                    top_k_rescore: int = 100, top_k_diff: int = 10,
                    jobs: int = 1) -> DeltaConfig:
    """Pick delta for a scorer from a retrieval run.

    Per query: rescore its top `top_k_rescore` run documents with `scorer`,
    sort by the new scores (descending; ties by doc_id descending-lex), take
    the top `top_k_diff`, and collect the adjacent score differences. Delta
    is the median of the differences pooled across queries (even count:
    mean of the middle two). Queries with fewer than `top_k_diff` rescored
    documents are skipped; if every query is skipped, calibration fails.
    """
    by_query = run_by_query(list(run_entries))
    pooled: list[float] = []
    used = 0
    for qid in sorted(by_query):
        if qid not in queries:
            raise ValidationError(f"run references unknown query {qid!r}")
        entries = by_query[qid][:top_k_rescore]
        if len(entries) < top_k_diff:
            continue
        for e in entries:
            if e.doc_id not in collection:
                raise ValidationError(
                    f"run references unknown doc {e.doc_id!r} for query {qid!r}")
        qtext = queries[qid].text
        scores = scorer.score_batch(
            [(qtext, collection[e.doc_id].text) for e in entries], jobs=jobs)
        ranked = sort_by_score(
            [(e.doc_id, s) for e, s in zip(entries, scores)])[:top_k_diff]
        pooled.extend(a[1] - b[1] for a, b in zip(ranked, ranked[1:]))
        used += 1
    if not pooled:
        raise ValidationError(
            f"calibration impossible: no query has >= {top_k_diff} rescored documents")
    return DeltaConfig(
        scorer_id=scorer.id,
        delta=float(statistics.median(pooled)),
        provenance={"top_k_rescore": top_k_rescore, "top_k_diff": top_k_diff,
                    "queries_used": used, "num_diffs": len(pooled)},
    )


def save_delta(config: DeltaConfig, path) -> None:
    from .corpus import atomic_write_text
    atomic_write_text(path, json.dumps(
        {"scorer_id": config.scorer_id, "delta": config.delta,
         "provenance": config.provenance},
        sort_keys=True, ensure_ascii=False, indent=2) + "\n")


def load_delta(path) -> DeltaConfig:
    from .errors import ParseError
    with open(path, encoding="utf-8") as f:
        try:
            obj = json.load(f)
            return DeltaConfig(obj["scorer_id"], float(obj["delta"]),
                               obj.get("provenance", {}))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad delta file: {e}", path=str(path)) from None
