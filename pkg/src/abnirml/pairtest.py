"""Pair-testing core: samples, test sets, the delta-thresholded effect
function, the summary score, and evaluation of a test set under a scorer.

A sample is directional: d1 carries the property under test (higher measured
characteristic, manipulated text, preferred reference), d2 is its foil. The
summary score s in [-1, 1] is the mean effect; positive s means the scorer
prefers d1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .corpus import Doc, Query, atomic_write_text
from .errors import EvaluationError, ParseError, ValidationError

STRATEGIES = ("MMT", "TMT", "DTT")


@dataclass(frozen=True)
class PairSample:
    query: Query
    d1: Doc
    d2: Doc
    meta: tuple = ()  # sorted (key, value) pairs; use .info for a dict view

    def __post_init__(self):
        if self.d1.id == self.d2.id and self.d1.text == self.d2.text:
            raise ValidationError(
                f"d1 and d2 are identical ({self.d1.id!r}) for query {self.query.id!r}")
        if isinstance(self.meta, dict):
            object.__setattr__(
                self, "meta",
                tuple(sorted((str(k), str(v)) for k, v in self.meta.items())))

    @property
    def info(self) -> dict[str, str]:
        return dict(self.meta)

    def key(self):
        return (self.query.id, self.d1.id, self.d2.id)


@dataclass(frozen=True)
class TestSet:
    """An ordered collection of samples. Samples are kept in canonical order
    (query_id, d1.id, d2.id) so identical builds are byte-identical no
    matter how they were parallelized."""

    __test__ = False  # not a pytest class, despite the name

    id: str
    strategy: str
    samples: tuple
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        object.__setattr__(self, "samples",
                           tuple(sorted(self.samples, key=PairSample.key)))

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class EffectRecord:
    query_id: str
    d1_id: str
    d2_id: str
    score1: float
    score2: float
    effect: int


def effect(score1: float, score2: float, delta: float) -> int:
    """+1 if score1 exceeds score2 by more than delta, -1 if it trails by
    more than delta, else 0. The |difference| = delta boundary is neutral."""
    if math.isnan(score1) or math.isnan(score2):
        raise ValidationError("scores must not be NaN")
    if delta < 0:
        raise ValidationError(f"delta must be non-negative, got {delta}")
    diff = score1 - score2
    if diff > delta:
        return 1
    if diff < -delta:
        return -1
    return 0


def summary_score(effects) -> float:
    """Mean effect across samples; in [-1, 1]."""
    effects = list(effects)
    if not effects:
        raise ValidationError("summary score undefined for zero samples")
    return sum(effects) / len(effects)


def evaluate(test: TestSet, scorer, delta: float, jobs: int = 1) -> list[EffectRecord]:
    """Score every sample's documents and derive effects, in canonical
    sample order. Aborts on the first scorer failure, identifying the
    failing sample; no partial results."""
    pairs = []
    for s in test.samples:
        pairs.append((s.query.text, s.d1.text))
        pairs.append((s.query.text, s.d2.text))
    try:
        scores = scorer.score_batch(pairs, jobs=jobs)
    except Exception as e:
        # scorers annotate failures with the offending pair index
        index = getattr(e, "pair_index", None)
        if index is None:
            raise
        s = test.samples[index // 2]
        doc = s.d1 if index % 2 == 0 else s.d2
        raise EvaluationError(
            f"scorer failed on query={s.query.id!r} doc={doc.id!r}: {e}") from e
    records = []
    for i, s in enumerate(test.samples):
        s1, s2 = scores[2 * i], scores[2 * i + 1]
        records.append(EffectRecord(s.query.id, s.d1.id, s.d2.id,
                                    s1, s2, effect(s1, s2, delta)))
    return records


# --- serialization ---------------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def save_test_set(test: TestSet, path) -> None:
    """JSON-lines: a provenance header line, then one object per sample."""
    lines = [_dumps({"test_id": test.id, "strategy": test.strategy,
                     "provenance": test.provenance})]
    for s in test.samples:
        lines.append(_dumps({
            "test_id": test.id,
            "strategy": test.strategy,
            "query_id": s.query.id,
            "query_text": s.query.text,
            "d1_id": s.d1.id,
            "d1_text": s.d1.text,
            "d2_id": s.d2.id,
            "d2_text": s.d2.text,
            "meta": s.info,
        }))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_test_set(path) -> TestSet:
    with open(path, encoding="utf-8") as f:
        raw_lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not raw_lines:
        raise ParseError("empty test-set file", path=str(path))
    def parse(lineno, line):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"bad JSON: {e}", path=str(path), line=lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", path=str(path), line=lineno)
        return obj
    header = parse(1, raw_lines[0])
    if "provenance" not in header:
        raise ParseError("first line must be the provenance header",
                         path=str(path), line=1)
    samples = []
    for lineno, line in enumerate(raw_lines[1:], start=2):
        obj = parse(lineno, line)
        try:
            samples.append(PairSample(
                query=Query(obj["query_id"], obj["query_text"]),
                d1=Doc(obj["d1_id"], obj["d1_text"]),
                d2=Doc(obj["d2_id"], obj["d2_text"]),
                meta=obj.get("meta", {}),
            ))
        except KeyError as e:
            raise ParseError(f"sample missing field {e}", path=str(path), line=lineno) from None
    return TestSet(id=header["test_id"], strategy=header["strategy"],
                   samples=samples, provenance=header["provenance"])


def save_effects(records: list[EffectRecord], path) -> None:
    lines = [_dumps({"query_id": r.query_id, "d1_id": r.d1_id, "d2_id": r.d2_id,
                     "score1": r.score1, "score2": r.score2, "effect": r.effect})
             for r in records]
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def load_effects(path) -> list[EffectRecord]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                out.append(EffectRecord(obj["query_id"], obj["d1_id"], obj["d2_id"],
                                        float(obj["score1"]), float(obj["score2"]),
                                        int(obj["effect"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ParseError(f"bad effect record: {e}", path=str(path), line=lineno) from None
    return out
