"""Deterministic text-processing primitives: tokenization, stopwords, Porter
stemming, rule-based lemmatization, sentence splitting, noun chunks,
prepositions, and a seeded PRNG for reproducible shuffles.

Everything here is a pure function of its inputs (the PRNG is an explicit
value owned by the caller), so all of it is safe to use concurrently.
"""

from __future__ import annotations

import hashlib
import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

# The exact set used when stripping punctuation; identical to
# string.punctuation: ! " # $ % & \ ' ( ) * + , - . / : ; < = > ? @ [ ] ^ _ ` { | } ~
DEFAULT_PUNCTUATION = frozenset(string.punctuation)


def _read_data(name: str) -> str:
    return resources.files("abnirml.data").joinpath(name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def _wordlist(name: str) -> frozenset[str]:
    return frozenset(
        line.strip() for line in _read_data(name).splitlines() if line.strip()
    )


def default_stopwords() -> frozenset[str]:
    """The bundled English stopword list (one lowercase term per line)."""
    return _wordlist("stopwords.txt")


@dataclass(frozen=True)
class PipelineConfig:
    """Shared text-processing configuration.

    stemmer is one of {"porter", "none"}; lemmatizer one of
    {"rule_based", "none"}. The punctuation set defaults to the full ASCII
    punctuation block (see DEFAULT_PUNCTUATION).
    """

    stopword_list: frozenset[str] = field(default_factory=default_stopwords)
    punctuation_set: frozenset[str] = DEFAULT_PUNCTUATION
    stemmer: str = "porter"
    lemmatizer: str = "rule_based"

    def __post_init__(self):
        if self.stemmer not in ("porter", "none"):
            raise ValueError(f"unknown stemmer: {self.stemmer!r}")
        if self.lemmatizer not in ("rule_based", "none"):
            raise ValueError(f"unknown lemmatizer: {self.lemmatizer!r}")


def default_pipeline() -> PipelineConfig:
    return PipelineConfig()


@dataclass(frozen=True)
class Token:
    """A token with its character span in the source text.

    surface is the lowercased span content; text[span[0]:span[1]] recovers
    the original casing.
    """

    surface: str
    span: tuple[int, int]


@lru_cache(maxsize=8)
def _token_pattern(punctuation: frozenset[str]) -> re.Pattern:
    cls = re.escape("".join(sorted(punctuation)))
    return re.compile(rf"[^\s{cls}]+")


def tokenize(text: str, config: PipelineConfig | None = None) -> list[Token]:
    """Lowercased tokens split on whitespace and punctuation boundaries.

    Punctuation characters never appear inside a token.
    """
    config = config or default_pipeline()
    pattern = _token_pattern(config.punctuation_set)
    return [
        Token(m.group().lower(), (m.start(), m.end())) for m in pattern.finditer(text)
    ]


def remove_stopwords(tokens: list[Token], config: PipelineConfig) -> list[Token]:
    """Order-preserving filter dropping tokens on the stopword list."""
    stop = config.stopword_list
    return [t for t in tokens if t.surface not in stop]


def terms(text: str, config: PipelineConfig | None = None) -> list[str]:
    """The processed-term sequence: tokenize, drop stopwords, then stem or
    lemmatize per the pipeline config. This is the representation all
    collection statistics and measures are defined over."""
    config = config or default_pipeline()
    surfaces = [t.surface for t in remove_stopwords(tokenize(text, config), config)]
    if config.stemmer == "porter":
        return [porter_stem(s) for s in surfaces]
    if config.lemmatizer == "rule_based":
        return [lemmatize(s) for s in surfaces]
    return surfaces


# ---------------------------------------------------------------------------
# Porter stemmer (canonical variant, including its two published departures
# from the 1980 description: "bli"->"ble" and the added "logi"->"log").
# ---------------------------------------------------------------------------


def _cons(w: str, i: int) -> bool:
    c = w[i]
    if c in "aeiou":
        return False
    if c == "y":
        return True if i == 0 else not _cons(w, i - 1)
    return True


def _m(w: str) -> int:
    """Number of VC sequences in w (the Porter measure)."""
    n = len(w)
    i = 0
    while i < n and _cons(w, i):
        i += 1
    m = 0
    while True:
        while i < n and not _cons(w, i):
            i += 1
        if i >= n:
            return m
        m += 1
        while i < n and _cons(w, i):
            i += 1
        if i >= n:
            return m


def _has_vowel(w: str) -> bool:
    return any(not _cons(w, i) for i in range(len(w)))


def _ends_double_cons(w: str) -> bool:
    return len(w) >= 2 and w[-1] == w[-2] and _cons(w, len(w) - 1)


def _ends_cvc(w: str) -> bool:
    if len(w) < 3:
        return False
    if not (_cons(w, len(w) - 1) and not _cons(w, len(w) - 2) and _cons(w, len(w) - 3)):
        return False
    return w[-1] not in "wxy"


def _step1a(w: str) -> str:
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith("ies"):
        return w[:-3] + "i"
    if w.endswith("ss"):
        return w
    if w.endswith("s"):
        return w[:-1]
    return w


def _step1b(w: str) -> str:
    if w.endswith("eed"):
        if _m(w[:-3]) > 0:
            return w[:-1]
        return w
    if w.endswith("ed") and _has_vowel(w[:-2]):
        w = w[:-2]
    elif w.endswith("ing") and _has_vowel(w[:-3]):
        w = w[:-3]
    else:
        return w
    if w.endswith(("at", "bl", "iz")):
        return w + "e"
    if _ends_double_cons(w) and w[-1] not in "lsz":
        return w[:-1]
    if _m(w) == 1 and _ends_cvc(w):
        return w + "e"
    return w


def _step1c(w: str) -> str:
    if w.endswith("y") and _has_vowel(w[:-1]):
        return w[:-1] + "i"
    return w


_STEP2 = {
    "a": (("ational", "ate"), ("tional", "tion")),
    "c": (("enci", "ence"), ("anci", "ance")),
    "e": (("izer", "ize"),),
    "l": (("bli", "ble"), ("alli", "al"), ("entli", "ent"), ("eli", "e"), ("ousli", "ous")),
    "o": (("ization", "ize"), ("ation", "ate"), ("ator", "ate")),
    "s": (("alism", "al"), ("iveness", "ive"), ("fulness", "ful"), ("ousness", "ous")),
    "t": (("aliti", "al"), ("iviti", "ive"), ("biliti", "ble")),
    "g": (("logi", "log"),),
}

_STEP3 = {
    "e": (("icate", "ic"), ("ative", ""), ("alize", "al")),
    "i": (("iciti", "ic"),),
    "l": (("ical", "ic"), ("ful", "")),
    "s": (("ness", ""),),
}

_STEP4 = {
    "a": ("al",),
    "c": ("ance", "ence"),
    "e": ("er",),
    "i": ("ic",),
    "l": ("able", "ible"),
    "n": ("ant", "ement", "ment", "ent"),
    "o": ("ion", "ou"),
    "s": ("ism",),
    "t": ("ate", "iti"),
    "u": ("ous",),
    "v": ("ive",),
    "z": ("ize",),
}


def _map_step(w: str, table, key_offset: int) -> str:
    # First matching suffix wins; an insufficient measure stops the search
    # rather than trying shorter alternatives.
    if len(w) < key_offset:
        return w
    for suffix, repl in table.get(w[-key_offset], ()):
        if w.endswith(suffix):
            stem = w[: len(w) - len(suffix)]
            if _m(stem) > 0:
                return stem + repl
            return w
    return w


def _step4(w: str) -> str:
    if len(w) < 2:
        return w
    for suffix in _STEP4.get(w[-2], ()):
        if w.endswith(suffix):
            stem = w[: len(w) - len(suffix)]
            if suffix == "ion" and (not stem or stem[-1] not in "st"):
                continue
            if _m(stem) > 1:
                return stem
            return w
    return w


def _step5(w: str) -> str:
    if w.endswith("e"):
        a = _m(w)
        if a > 1 or (a == 1 and not _ends_cvc(w[:-1])):
            w = w[:-1]
    if w.endswith("l") and _ends_double_cons(w) and _m(w) > 1:
        w = w[:-1]
    return w


@lru_cache(maxsize=1 << 18)
def porter_stem(token: str) -> str:
    """Porter stem of a lowercase token (canonical tartarus variant)."""
    if len(token) <= 2:
        return token
    w = _step1a(token)
    w = _step1b(w)
    w = _step1c(w)
    w = _map_step(w, _STEP2, 2)
    w = _map_step(w, _STEP3, 1)
    w = _step4(w)
    return _step5(w)


# ---------------------------------------------------------------------------
# Rule-based lemmatizer: exception lexicon first, then English inflectional
# suffix rules. A deterministic substitute for a full statistical lemmatizer;
# a higher-fidelity annotator can be plugged in where a builder accepts one.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def _lemma_exceptions() -> dict[str, str]:
    table = {}
    for line in _read_data("lemma_exceptions.txt").splitlines():
        line = line.strip()
        if not line:
            continue
        word, lemma = line.split("\t")
        table[word] = lemma
    return table


def _strip_ed(w: str) -> str | None:
    if w.endswith("ied") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("eed") or not w.endswith("ed"):
        return None
    stem = w[:-2]
    if len(stem) < 2 or not _has_vowel(stem):
        return None
    if _ends_double_cons(stem) and stem[-1] not in "lsz":
        return stem[:-1]
    if _m(stem) == 1 and _ends_cvc(stem):
        return stem + "e"
    return stem


def _strip_ing(w: str) -> str | None:
    if not w.endswith("ing"):
        return None
    stem = w[:-3]
    if len(stem) < 2 or not _has_vowel(stem):
        return None
    if _ends_double_cons(stem) and stem[-1] not in "lsz":
        return stem[:-1]
    if _m(stem) == 1 and _ends_cvc(stem):
        return stem + "e"
    return stem


def _strip_plural(w: str) -> str | None:
    if len(w) < 3 or not w.endswith("s"):
        return None
    if w.endswith(("ss", "us", "is", "'s")):
        return None
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith(("xes", "zes", "ches", "shes", "oes")):
        return w[:-2]
    return w[:-1]


def lemmatize(token: str, pos_hint: str | None = None) -> str:
    """Lemma of a lowercase token: exception-lexicon lookup, else suffix
    rules (-s/-es/-ies, -ed, -ing with consonant doubling), else identity.

    pos_hint in {"noun", "verb", None} restricts which rule families apply.
    """
    exc = _lemma_exceptions().get(token)
    if exc is not None:
        return exc
    if pos_hint != "noun":
        stripped = _strip_ed(token) or _strip_ing(token)
        if stripped is not None:
            return stripped
    plural = _strip_plural(token)
    if plural is not None:
        return plural
    return token


# ---------------------------------------------------------------------------
# Sentence splitting
# ---------------------------------------------------------------------------

_ABBREVIATIONS = frozenset(
    """mr mrs ms dr prof sr jr st vs etc al fig figs no nos vol pp cf approx
    dept univ inc ltd co corp gov est ave blvd rd capt col gen lt sgt maj rev
    hon min max mt ft e.g i.e u.s u.k""".split()
)

_BOUNDARY = re.compile(r"([.!?]+)(\s+)")


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of sentences; the text between consecutive spans is
    whitespace, so the spans reconstruct the input."""
    spans = []
    n = len(text)
    start = 0
    while start < n and text[start].isspace():
        start += 1
    if start >= n:
        return []
    for m in _BOUNDARY.finditer(text):
        end = m.end(1)
        nxt = m.end(2)
        if nxt >= n or not (text[nxt].isupper() or text[nxt].isdigit()):
            continue
        if m.group(1) == ".":
            before = text[start : m.start(1)].rsplit(None, 1)
            word = before[-1].lower().lstrip("([\"'") if before else ""
            if word in _ABBREVIATIONS:
                continue
        spans.append((start, end))
        start = nxt
    if start < n:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append((start, end))
    return spans


def split_sentences(text: str) -> list[str]:
    """Sentences split at {. ! ?} followed by whitespace and an uppercase
    letter or digit, with an abbreviation exception list."""
    return [text[a:b] for a, b in sentence_spans(text)]


# ---------------------------------------------------------------------------
# POS heuristics: closed-class lexicon + suffix rules, enough to find noun
# chunks and prepositions without a statistical tagger.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def _pos_lexicon() -> dict[str, str]:
    table = {}
    for line in _read_data("pos_lexicon.txt").splitlines():
        line = line.strip()
        if not line:
            continue
        word, tag = line.split("\t")
        table[word] = tag
    return table


@lru_cache(maxsize=1)
def _verb_bases() -> frozenset[str]:
    return frozenset(w for w, t in _pos_lexicon().items() if t == "verb")


@lru_cache(maxsize=1)
def _adj_bases() -> frozenset[str]:
    return frozenset(w for w, t in _pos_lexicon().items() if t == "adj")


def prepositions() -> frozenset[str]:
    """The bundled closed-class preposition list."""
    return _wordlist("prepositions.txt")


def is_preposition(token: str) -> bool:
    """Membership of a lowercase token in the bundled preposition list."""
    return token in prepositions()


_ADJ_SUFFIXES = ("ous", "ful", "ive", "less", "ish", "able", "ible")
_NOUN_SUFFIXES = ("tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "hood", "ism")


@lru_cache(maxsize=1 << 16)
def _pos_tag(surface: str) -> str:
    tag = _pos_lexicon().get(surface)
    if tag is not None:
        return tag
    if surface in prepositions():
        return "prep"
    lemma = lemmatize(surface)
    if lemma in _verb_bases():
        return "verb"
    if lemma in _adj_bases():
        return "adj"
    if surface.endswith("ly") and len(surface) > 4:
        return "adv"
    if surface.endswith(_NOUN_SUFFIXES):
        return "noun"
    if surface.endswith(_ADJ_SUFFIXES):
        return "adj"
    return "noun"


def noun_chunk_spans(text: str, config: PipelineConfig | None = None) -> list[tuple[int, int]]:
    """Character spans of maximal (determiner? adjective* noun+) token runs."""
    tokens = tokenize(text, config)
    tags = [_pos_tag(t.surface) for t in tokens]
    spans = []
    i = 0
    n = len(tokens)
    while i < n:
        j = i
        if tags[j] == "det":
            j += 1
        while j < n and tags[j] == "adj":
            j += 1
        k = j
        while k < n and tags[k] == "noun":
            k += 1
        if k > j:
            spans.append((tokens[i].span[0], tokens[k - 1].span[1]))
            i = k
        else:
            i += 1
    return spans


def noun_chunks(text: str, config: PipelineConfig | None = None) -> list[str]:
    """Noun-chunk strings in document order (original casing preserved)."""
    return [text[a:b] for a, b in noun_chunk_spans(text, config)]


# ---------------------------------------------------------------------------
# Seeded PRNG (SplitMix64) and Fisher-Yates shuffling. Bit-exact across
# platforms; modulo range reduction is deliberate and documented.
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class Rng:
    """SplitMix64 generator; identical seeds yield identical sequences."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        """Uniform-ish integer in [0, n) by modulo reduction."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def random(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def choice(self, seq):
        if not seq:
            raise ValueError("cannot choose from an empty sequence")
        return seq[self.randbelow(len(seq))]


def seeded_shuffle(items: list, rng: Rng) -> list:
    """Fisher-Yates permutation of a copy of items, driven by rng."""
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.randbelow(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def stable_hash64(text: str) -> int:
    """Platform-stable 64-bit hash (first 8 bytes of SHA-256)."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def derive_rng(seed: int, *parts: str) -> Rng:
    """Independent per-item stream: seed XOR a stable hash of the item key.

    Lets parallel builders draw per-sample randomness without any shared
    sequential stream.
    """
    return Rng(seed ^ stable_hash64("\x1f".join(parts)))
