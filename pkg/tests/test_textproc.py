import random

import pytest

from abnirml.textproc import (
    DEFAULT_PUNCTUATION,
    PipelineConfig,
    Rng,
    default_stopwords,
    derive_rng,
    is_preposition,
    lemmatize,
    noun_chunks,
    porter_stem,
    prepositions,
    remove_stopwords,
    seeded_shuffle,
    sentence_spans,
    split_sentences,
    stable_hash64,
    terms,
    tokenize,
)
from abnirml.textproc import _lemma_exceptions, _pos_lexicon

# Verified against the published reference implementation's outputs.
PORTER_VECTORS = [
    ("caresses", "caress"), ("ponies", "poni"), ("ties", "ti"), ("caress", "caress"),
    ("cats", "cat"), ("feed", "feed"), ("agreed", "agre"), ("plastered", "plaster"),
    ("bled", "bled"), ("motoring", "motor"), ("sing", "sing"), ("conflated", "conflat"),
    ("troubled", "troubl"), ("sized", "size"), ("hopping", "hop"), ("tanned", "tan"),
    ("falling", "fall"), ("hissing", "hiss"), ("fizzed", "fizz"), ("failing", "fail"),
    ("filing", "file"), ("happy", "happi"), ("sky", "sky"), ("relational", "relat"),
    ("conditional", "condit"), ("rational", "ration"), ("valenci", "valenc"), ("hesitanci", "hesit"),
    ("digitizer", "digit"), ("differentli", "differ"), ("vileli", "vile"), ("analogousli", "analog"),
    ("vietnamization", "vietnam"), ("predication", "predic"), ("operator", "oper"), ("feudalism", "feudal"),
    ("decisiveness", "decis"), ("hopefulness", "hope"), ("callousness", "callous"), ("formaliti", "formal"),
    ("sensitiviti", "sensit"), ("sensibiliti", "sensibl"), ("triplicate", "triplic"), ("formative", "form"),
    ("formalize", "formal"), ("electriciti", "electr"), ("electrical", "electr"), ("hopeful", "hope"),
    ("goodness", "good"), ("revival", "reviv"), ("allowance", "allow"), ("inference", "infer"),
    ("airliner", "airlin"), ("gyroscopic", "gyroscop"), ("adjustable", "adjust"), ("defensible", "defens"),
    ("irritant", "irrit"), ("replacement", "replac"), ("adjustment", "adjust"), ("dependent", "depend"),
    ("adoption", "adopt"), ("communism", "commun"), ("activate", "activ"), ("homologous", "homolog"),
    ("effective", "effect"), ("bowdlerize", "bowdler"), ("probate", "probat"), ("rate", "rate"),
    ("cease", "ceas"), ("controll", "control"), ("roll", "roll"),
]


class TestTokenize:
    def test_basic(self):
        assert [t.surface for t in tokenize("The cat, sat!")] == ["the", "cat", "sat"]

    def test_empty(self):
        assert tokenize("") == []

    def test_hyphens_split(self):
        got = [t.surface for t in tokenize("state-of-the-art")]
        assert got == ["state", "of", "the", "art"]

    def test_spans_recover_original_casing(self):
        text = "Where is Waldo?"
        for tok in tokenize(text):
            a, b = tok.span
            assert text[a:b].lower() == tok.surface

    def test_spans_disjoint_and_ordered(self):
        rnd = random.Random(991)
        chars = "ab N.?!-'  \t\n"
        for _ in range(300):
            text = "".join(rnd.choice(chars) for _ in range(rnd.randrange(0, 60)))
            spans = [t.span for t in tokenize(text)]
            for (a1, b1), (a2, b2) in zip(spans, spans[1:]):
                assert a1 < b1 <= a2 < b2

    def test_no_punctuation_inside_tokens(self):
        for tok in tokenize("a.b c!d (e,f) g'h"):
            assert not set(tok.surface) & DEFAULT_PUNCTUATION


class TestStopwords:
    def test_filter(self):
        cfg = PipelineConfig(stopword_list=frozenset({"the"}))
        toks = tokenize("the cat sat", cfg)
        assert [t.surface for t in remove_stopwords(toks, cfg)] == ["cat", "sat"]

    def test_empty_list_is_identity(self):
        cfg = PipelineConfig(stopword_list=frozenset())
        toks = tokenize("the cat sat", cfg)
        assert remove_stopwords(toks, cfg) == toks

    def test_empty_tokens(self):
        assert remove_stopwords([], PipelineConfig()) == []

    def test_default_list_nonempty_and_lowercase(self):
        stops = default_stopwords()
        assert len(stops) > 100
        assert all(w == w.lower() for w in stops)


class TestPorter:
    @pytest.mark.parametrize("word,stem", PORTER_VECTORS)
    def test_reference_vectors(self, word, stem):
        assert porter_stem(word) == stem

    def test_short_words_unchanged(self):
        for w in ["a", "is", "be", "ox", ""]:
            assert porter_stem(w) == w

    @pytest.mark.xfail(
        strict=True,
        reason="canonical Porter is not idempotent: because->becaus->becau "
        "(step 1a refires), agree->agre->agr (step 5 refires)",
    )
    def test_idempotent_on_bundled_lexicons(self):
        vocab = set(default_stopwords()) | set(prepositions()) | set(_pos_lexicon())
        for w in sorted(vocab):
            assert porter_stem(porter_stem(w)) == porter_stem(w), w


class TestLemmatize:
    def test_exceptions(self):
        assert lemmatize("ran") == "run"
        assert lemmatize("went") == "go"
        assert lemmatize("wolves") == "wolf"
        assert lemmatize("children") == "child"

    def test_suffix_rules(self):
        assert lemmatize("cats") == "cat"
        assert lemmatize("boxes") == "box"
        assert lemmatize("ponies") == "pony"
        assert lemmatize("running") == "run"
        assert lemmatize("hoped") == "hope"
        assert lemmatize("stopped") == "stop"

    def test_identity_fallback(self):
        assert lemmatize("the") == "the"
        assert lemmatize("series") == "series"
        assert lemmatize("red") == "red"

    def test_pos_hint_restricts_rules(self):
        assert lemmatize("building", pos_hint="noun") == "building"
        assert lemmatize("building", pos_hint="verb") == "build"

    def test_idempotent_on_bundled_lexicons(self):
        vocab = set(default_stopwords()) | set(prepositions()) | set(_pos_lexicon())
        vocab |= set(_lemma_exceptions()) | set(_lemma_exceptions().values())
        for w in sorted(vocab):
            assert lemmatize(lemmatize(w)) == lemmatize(w), w


class TestTerms:
    def test_pipeline(self):
        got = terms("The cats were running quickly over THE fences.")
        assert got == ["cat", "run", "quickli", "fenc"]

    def test_no_stemming(self):
        cfg = PipelineConfig(stemmer="none", lemmatizer="none",
                             stopword_list=frozenset())
        assert terms("Dogs Barked", cfg) == ["dogs", "barked"]


class TestSentences:
    def test_basic(self):
        assert split_sentences("A. B? C!") == ["A.", "B?", "C!"]

    def test_no_terminator(self):
        assert split_sentences("no terminator") == ["no terminator"]

    def test_empty(self):
        assert split_sentences("") == []

    def test_abbreviations_do_not_split(self):
        got = split_sentences("Dr. Smith left. Mrs. Jones stayed.")
        assert got == ["Dr. Smith left.", "Mrs. Jones stayed."]

    def test_lowercase_continuation_does_not_split(self):
        assert split_sentences("it was 3 p.m. and quiet. Then rain.") == [
            "it was 3 p.m. and quiet.",
            "Then rain.",
        ]

    def test_reconstruction_modulo_whitespace(self):
        rnd = random.Random(4821)
        words = ["Alpha", "beta", "Gamma.", "delta!", "Eps?", "z.", "9th"]
        for _ in range(200):
            text = " ".join(rnd.choice(words) for _ in range(rnd.randrange(0, 12)))
            spans = sentence_spans(text)
            rebuilt = "".join(text[a:b] for a, b in spans)
            assert rebuilt.replace(" ", "") == text.replace(" ", "")
            for (a1, b1), (a2, b2) in zip(spans, spans[1:]):
                assert b1 <= a2
                assert text[b1:a2].isspace() or text[b1:a2] == ""


class TestNounChunks:
    def test_det_adj_noun(self):
        assert noun_chunks("the big cat sat") == ["the big cat"]

    def test_no_nouns(self):
        assert noun_chunks("run quickly") == []

    def test_empty(self):
        assert noun_chunks("") == []

    def test_chunks_are_substrings(self):
        text = "A Quick Review of the latest ranking models from 2021."
        for chunk in noun_chunks(text):
            assert chunk in text

    def test_multiple_chunks_in_order(self):
        got = noun_chunks("the old dog saw a red ball near the fence")
        assert got == ["the old dog", "a red ball", "the fence"]


class TestPrepositions:
    def test_membership(self):
        assert is_preposition("of")
        assert is_preposition("with")
        assert not is_preposition("cat")

    def test_requires_lowercase_input(self):
        assert not is_preposition("Of")
        assert is_preposition("Of".lower())


class TestRng:
    def test_published_splitmix_vector(self):
        r = Rng(1234567)
        assert [r.next_u64() for _ in range(5)] == [
            6457827717110365317,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
            16408922859458223821,
        ]

    def test_random_unit_interval(self):
        r = Rng(3)
        for _ in range(1000):
            x = r.random()
            assert 0.0 <= x < 1.0

    def test_randbelow_range(self):
        r = Rng(9)
        for _ in range(1000):
            assert 0 <= r.randbelow(7) < 7
        with pytest.raises(ValueError):
            r.randbelow(0)

    def test_derive_rng_is_stable_and_distinct(self):
        a = derive_rng(5, "q1", "d1").next_u64()
        b = derive_rng(5, "q1", "d1").next_u64()
        c = derive_rng(5, "q1", "d2").next_u64()
        assert a == b
        assert a != c

    def test_stable_hash64_known_value(self):
        # sha256("abc") first 8 bytes, big-endian
        assert stable_hash64("abc") == 0xBA7816BF8F01CFEA


class TestShuffle:
    def test_golden_permutations(self):
        # Frozen from an independent transcription of the generator.
        assert seeded_shuffle(["a", "b", "c", "d"], Rng(42)) == ["c", "a", "d", "b"]
        assert seeded_shuffle(list(range(10)), Rng(7)) == [8, 1, 5, 9, 0, 4, 3, 2, 6, 7]
        assert seeded_shuffle(["x", "y", "z"], Rng(0)) == ["z", "x", "y"]

    def test_single_element(self):
        assert seeded_shuffle(["a"], Rng(123)) == ["a"]
        assert seeded_shuffle([], Rng(123)) == []

    def test_determinism(self):
        items = list(range(50))
        assert seeded_shuffle(items, Rng(11)) == seeded_shuffle(items, Rng(11))

    def test_multiset_preserved(self):
        rnd = random.Random(777)
        for _ in range(200):
            items = [rnd.randrange(10) for _ in range(rnd.randrange(0, 40))]
            out = seeded_shuffle(items, Rng(rnd.randrange(1 << 32)))
            assert sorted(out) == sorted(items)

    def test_distinct_seeds_differ(self):
        items = list(range(32))
        same = 0
        trials = 1000
        for seed in range(trials):
            if seeded_shuffle(items, Rng(seed)) == seeded_shuffle(items, Rng(seed + 10_000)):
                same += 1
        assert same / trials <= 0.001

    def test_input_not_mutated(self):
        items = [3, 1, 2]
        seeded_shuffle(items, Rng(5))
        assert items == [3, 1, 2]
