"""Measure-and-match test builder: pair judged documents of the same query
whose control characteristic matches (within tolerance) while the variable
characteristic differs. d1 is always the document with the higher variable
value (for TF: the Pareto-dominating vector).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

from .corpus import Doc, Judgment, Query
from .errors import ValidationError
from .measures import doc_length, overlap, sum_tf, tf_dominates, tf_vector
from .pairtest import PairSample, TestSet
from .textproc import PipelineConfig

log = logging.getLogger(__name__)

CHARACTERISTICS = ("Relevance", "Length", "TF", "SumTF", "Overlap")

DEFAULT_TOLERANCES = {
    "Relevance": 0,
    "Length": 0,
    "SumTF": 0,
    "TF": 0,           # max per-term absolute difference
    "Overlap": Fraction(1, 10 ** 6),
}


@dataclass(frozen=True)
class MmtSpec:
    variable: str
    control: str
    control_tolerance: object = None  # characteristic-appropriate number

    def __post_init__(self):
        for name in (self.variable, self.control):
            if name not in CHARACTERISTICS:
                raise ValidationError(
                    f"unknown characteristic {name!r}; expected one of {CHARACTERISTICS}")
        if self.variable == self.control:
            raise ValidationError("variable and control must differ")
        if {self.variable, self.control} == {"TF", "SumTF"}:
            raise ValidationError(
                "TF/SumTF pairings are rejected: SumTF ties force equal vectors, "
                "so no pair can both match and differ")
        if self.control_tolerance is None:
            object.__setattr__(self, "control_tolerance",
                               DEFAULT_TOLERANCES[self.control])
        elif self.control_tolerance < 0:
            raise ValidationError("control tolerance must be non-negative")


@dataclass
class _Measured:
    """All characteristics of one judged doc, computed once."""

    doc: Doc
    grade: int
    length: int
    tf: dict
    sumtf: int
    ovl: Fraction | None  # None for zero-length docs

    @classmethod
    def compute(cls, doc: Doc, grade: int, query: Query, config: PipelineConfig):
        length = doc_length(doc.text, config)
        tf = tf_vector(query.text, doc.text, config)
        s = sum(tf.values())
        return cls(doc, grade, length, tf, s,
                   Fraction(s, length) if length else None)

    def value(self, characteristic: str):
        return {"Relevance": self.grade, "Length": self.length, "TF": self.tf,
                "SumTF": self.sumtf, "Overlap": self.ovl}[characteristic]


def _control_matches(characteristic: str, a, b, tol) -> bool:
    if characteristic == "TF":
        return all(abs(a[t] - b[t]) <= tol for t in a)
    return abs(a - b) <= tol


def _pick_d1(characteristic: str, a: _Measured, b: _Measured):
    """The (d1, d2) assignment if the variable rule holds, else None."""
    if characteristic == "TF":
        va, vb = a.tf, b.tf
        if tf_dominates(va, vb):
            return a, b
        if tf_dominates(vb, va):
            return b, a
        return None
    va, vb = a.value(characteristic), b.value(characteristic)
    if characteristic == "Overlap":
        eps = DEFAULT_TOLERANCES["Overlap"]
        if va - vb > eps:
            return a, b
        if vb - va > eps:
            return b, a
        return None
    if va > vb:
        return a, b
    if vb > va:
        return b, a
    return None


def _needs_positive_length(spec: MmtSpec) -> bool:
    involved = {spec.variable, spec.control}
    return bool(involved & {"Length", "Overlap"})


def _query_samples(spec: MmtSpec, query: Query, measured: list[_Measured],
                   brute_force: bool = False):
    out = []
    exact_control = (not brute_force and spec.control != "Overlap"
                     and spec.control_tolerance == 0)
    if exact_control:
        # bucket by exact control value: only same-bucket pairs can match
        buckets: dict = {}
        for m in measured:
            key = m.value(spec.control)
            if spec.control == "TF":
                key = tuple(sorted(key.items()))
            buckets.setdefault(key, []).append(m)
        groups = [b for b in buckets.values() if len(b) > 1]
    else:
        groups = [measured] if len(measured) > 1 else []
    for group in groups:
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                a, b = group[i], group[j]
                if not _control_matches(spec.control, a.value(spec.control),
                                        b.value(spec.control),
                                        spec.control_tolerance):
                    continue
                assigned = _pick_d1(spec.variable, a, b)
                if assigned is None:
                    continue
                d1, d2 = assigned
                out.append(PairSample(query, d1.doc, d2.doc, meta={
                    "grade1": d1.grade, "grade2": d2.grade,
                    "variable": spec.variable, "control": spec.control,
                }))
    return out


def build_mmt(spec: MmtSpec, qrels: list[Judgment], collection: dict[str, Doc],
              queries: dict[str, Query], config: PipelineConfig,
              _brute_force: bool = False) -> TestSet:
    """One sample per unordered judged-doc pair of a query that matches on
    the control and differs on the variable. Zero-length documents are
    excluded whenever Length or Overlap is involved."""
    qrels = list(qrels)
    missing_docs = sorted({j.doc_id for j in qrels if j.doc_id not in collection})
    missing_queries = sorted({j.query_id for j in qrels if j.query_id not in queries})
    if missing_docs or missing_queries:
        raise ValidationError(
            "judgments reference unknown ids: "
            f"docs {missing_docs[:10]} queries {missing_queries[:10]}")
    by_query: dict[str, list[Judgment]] = {}
    for j in qrels:
        by_query.setdefault(j.query_id, []).append(j)
    samples = []
    for qid in sorted(by_query):
        query = queries[qid]
        measured = [
            _Measured.compute(collection[j.doc_id], j.grade, query, config)
            for j in by_query[qid]
        ]
        if _needs_positive_length(spec):
            measured = [m for m in measured if m.length > 0]
        samples.extend(_query_samples(spec, query, measured, _brute_force))
    if not samples:
        log.warning("measure-and-match build produced no samples "
                    "(variable=%s control=%s)", spec.variable, spec.control)
    return TestSet(
        id=f"mmt-{spec.variable.lower()}-{spec.control.lower()}",
        strategy="MMT",
        samples=samples,
        provenance={"variable": spec.variable, "control": spec.control,
                    "control_tolerance": str(spec.control_tolerance)},
    )
