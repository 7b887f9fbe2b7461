"""Per-(query, document) characteristics used by measure-and-match pairing:
document length, query-term frequency vector, summed TF, overlap, and
Pareto dominance between TF vectors.

All functions are pure; overlap is an exact Fraction so equality checks in
matching never depend on float rounding.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ValidationError
from .textproc import PipelineConfig, remove_stopwords, terms, tokenize


def doc_length(text: str, config: PipelineConfig) -> int:
    """Number of non-stopword tokens in the document."""
    return len(remove_stopwords(tokenize(text, config), config))


def query_terms(query_text: str, config: PipelineConfig) -> list[str]:
    """Distinct processed query terms, in first-occurrence order.

    Duplicate query terms count once so TF dominance is well-defined.
    """
    return list(dict.fromkeys(terms(query_text, config)))


def tf_vector(query_text: str, doc_text: str, config: PipelineConfig) -> dict[str, int]:
    """Count of each distinct processed query term among the document's
    processed tokens. Keys are exactly the distinct query terms."""
    qterms = query_terms(query_text, config)
    counts = dict.fromkeys(qterms, 0)
    if not qterms:
        return counts
    for term in terms(doc_text, config):
        if term in counts:
            counts[term] += 1
    return counts


def sum_tf(query_text: str, doc_text: str, config: PipelineConfig) -> int:
    """Total frequency of the distinct query terms in the document."""
    return sum(tf_vector(query_text, doc_text, config).values())


def overlap(query_text: str, doc_text: str, config: PipelineConfig) -> Fraction:
    """sum_tf / doc_length as an exact rational.

    Zero-length documents are undefined here; callers exclude them before
    asking (degenerate-doc rule).
    """
    length = doc_length(doc_text, config)
    if length == 0:
        raise ValidationError("overlap undefined for a document with no non-stopword tokens")
    return Fraction(sum_tf(query_text, doc_text, config), length)


def tf_dominates(a: dict[str, int], b: dict[str, int]) -> bool:
    """True iff a >= b componentwise with at least one strict inequality."""
    if a.keys() != b.keys():
        raise ValidationError(
            f"TF vectors have different key sets: {sorted(a)} vs {sorted(b)}")
    strict = False
    for term, count in a.items():
        other = b[term]
        if count < other:
            return False
        if count > other:
            strict = True
    return strict
