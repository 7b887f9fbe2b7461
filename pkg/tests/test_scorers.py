import math
import random
import sys

import pytest

from abnirml.corpus import CollectionStats, Doc, Query, RunEntry, compute_stats
from abnirml.errors import (
    CacheError,
    EvaluationError,
    ScorerProtocolError,
    ScorerTimeoutError,
    ValidationError,
)
from abnirml.pairtest import PairSample, TestSet, evaluate
from abnirml.scorers import (
    Bm25Scorer,
    CachedScorer,
    CallableScorer,
    ExternalScorer,
    calibrate_delta,
    load_delta,
    save_delta,
)
from abnirml.textproc import PipelineConfig

RAW = PipelineConfig(stopword_list=frozenset(), stemmer="none", lemmatizer="none")


def toy_stats():
    docs = {"A": Doc("A", "cat sat mat"), "B": Doc("B", "cat cat dog"),
            "C": Doc("C", "bird")}
    return docs, compute_stats(docs, RAW)


class TestBm25:
    def test_hand_computed_example(self):
        docs, stats = toy_stats()
        scorer = Bm25Scorer(stats, RAW)
        got = scorer.score("dog", docs["B"].text)
        # independent recomputation of the stated formula
        idf = math.log((3 - 1 + 0.5) / (1 + 0.5))
        expected = idf * (1 * 2.2) / (1 + 1.2 * (1 - 0.75 + 0.75 * (3 / (7 / 3))))
        assert math.isclose(got, expected, rel_tol=1e-12)
        assert abs(got - 0.4574) < 5e-5

    def test_absent_query_scores_zero(self):
        docs, stats = toy_stats()
        scorer = Bm25Scorer(stats, RAW)
        assert scorer.score("zebra", docs["A"].text) == 0.0
        assert scorer.score("dog", docs["A"].text) == 0.0

    def test_empty_doc_scores_zero(self):
        _, stats = toy_stats()
        assert Bm25Scorer(stats, RAW).score("cat", "") == 0.0

    def test_tf_saturates_at_idf_times_k1_plus_1(self):
        # with b=0 no length term remains, so tf -> inf approaches the bound
        _, stats = toy_stats()
        scorer = Bm25Scorer(stats, RAW, b=0.0)
        bound = scorer.idf("dog") * 2.2
        prev = 0.0
        for tf in [1, 2, 4, 16, 256, 4096, 65536]:
            got = scorer.score("dog", " ".join(["dog"] * tf))
            assert prev < got < bound
            prev = got
        assert bound - prev < 1e-4 * bound

    def test_bounded_and_monotone_at_default_b(self):
        _, stats = toy_stats()
        scorer = Bm25Scorer(stats, RAW)
        bound = scorer.idf("dog") * 2.2
        total_len = 64  # fixed dl: pad with a term unseen by the collection
        prev = 0.0
        for tf in range(1, total_len + 1):
            doc = " ".join(["dog"] * tf + ["filler"] * (total_len - tf))
            got = scorer.score("dog", doc)
            assert prev < got < bound
            prev = got

    def test_monotone_in_tf_random_params(self):
        rnd = random.Random(88)
        _, stats = toy_stats()
        for _ in range(50):
            k1 = rnd.uniform(0.1, 3.0)
            b = rnd.uniform(0.0, 1.0)
            scorer = Bm25Scorer(stats, RAW, k1=k1, b=b)
            tf1, tf2 = sorted(rnd.sample(range(1, 30), 2))
            pad = 30
            d1 = " ".join(["dog"] * tf1 + ["filler"] * (pad - tf1))
            d2 = " ".join(["dog"] * tf2 + ["filler"] * (pad - tf2))
            assert scorer.score("dog", d1) < scorer.score("dog", d2)

    def test_token_order_invariance_is_exact(self):
        docs, stats = toy_stats()
        scorer = Bm25Scorer(stats, RAW)
        rnd = random.Random(3)
        tokens = "cat cat dog sat mat bird bird".split()
        reference = scorer.score("cat dog bird", " ".join(tokens))
        for _ in range(20):
            rnd.shuffle(tokens)
            assert scorer.score("cat dog bird", " ".join(tokens)) == reference

    def test_stopword_removal_invariance_is_exact(self):
        cfg = PipelineConfig(stopword_list=frozenset({"the", "of"}))
        docs = {"A": Doc("A", "the cat sat on the mat"),
                "B": Doc("B", "a dog of the village")}
        stats = compute_stats(docs, cfg)
        scorer = Bm25Scorer(stats, cfg)
        with_stops = scorer.score("cat mat", "the cat, sat... of the mat!")
        without = scorer.score("cat mat", "cat sat mat")
        assert with_stops == without

    def test_negative_idf_kept_unless_clamped(self):
        docs = {f"d{i}": Doc(f"d{i}", "common term") for i in range(9)}
        docs["rare"] = Doc("rare", "unusual")
        stats = compute_stats(docs, RAW)
        plain = Bm25Scorer(stats, RAW)
        clamped = Bm25Scorer(stats, RAW, clamp_negative_idf=True)
        assert plain.idf("common") < 0
        assert plain.score("common", "common") < 0
        assert clamped.idf("common") == 0.0
        assert clamped.score("common", "common") == 0.0

    def test_duplicate_query_terms_count_once(self):
        docs, stats = toy_stats()
        scorer = Bm25Scorer(stats, RAW)
        assert scorer.score("dog dog", docs["B"].text) == scorer.score("dog", docs["B"].text)

    def test_param_validation(self):
        _, stats = toy_stats()
        with pytest.raises(ValidationError):
            Bm25Scorer(stats, RAW, k1=-0.1)
        with pytest.raises(ValidationError):
            Bm25Scorer(stats, RAW, b=1.5)

    def test_id_distinguishes_collections(self):
        docs, stats = toy_stats()
        other = CollectionStats(stats.num_docs, stats.avg_doc_len,
                                dict(stats.doc_freq, extra=1))
        assert Bm25Scorer(stats, RAW).id != Bm25Scorer(other, RAW).id


class CountingScorer(CallableScorer):
    def __init__(self, fn, scorer_id="counting"):
        self.calls = 0
        def wrapped(q, d):
            self.calls += 1
            return fn(q, d)
        super().__init__(wrapped, scorer_id)


class TestCachedScorer:
    def test_identical_pair_scored_once(self, tmp_path):
        inner = CountingScorer(lambda q, d: float(len(d)))
        cached = CachedScorer(inner, tmp_path)
        assert cached.score("q", "doc") == 3.0
        assert cached.score("q", "doc") == 3.0
        assert inner.calls == 1

    def test_batch_deduplicates(self, tmp_path):
        inner = CountingScorer(lambda q, d: float(len(d)))
        cached = CachedScorer(inner, tmp_path)
        got = cached.score_batch([("q", "aa"), ("q", "bbb"), ("q", "aa")])
        assert got == [2.0, 3.0, 2.0]
        assert inner.calls == 2

    def test_text_keyed_not_id_keyed(self, tmp_path):
        inner = CountingScorer(lambda q, d: float(len(d)))
        cached = CachedScorer(inner, tmp_path)
        assert cached.score("q", "original") != cached.score("q", "manipulated")
        assert inner.calls == 2

    def test_persists_across_instances(self, tmp_path):
        inner1 = CountingScorer(lambda q, d: 7.25)
        CachedScorer(inner1, tmp_path).score("q", "d")
        inner2 = CountingScorer(lambda q, d: 7.25)
        assert CachedScorer(inner2, tmp_path).score("q", "d") == 7.25
        assert inner2.calls == 0

    def test_distinct_scorer_ids_do_not_collide(self, tmp_path):
        a = CachedScorer(CountingScorer(lambda q, d: 1.0, "s-a"), tmp_path)
        b = CachedScorer(CountingScorer(lambda q, d: 2.0, "s-b"), tmp_path)
        assert a.score("q", "d") == 1.0
        assert b.score("q", "d") == 2.0

    def test_corruption_raises_cache_error_with_instruction(self, tmp_path):
        (tmp_path / "scores.sqlite").write_bytes(b"this is not a database file at all")
        inner = CountingScorer(lambda q, d: 1.0)
        with pytest.raises(CacheError, match="delete"):
            CachedScorer(inner, tmp_path).score("q", "d")

    def test_failure_inside_batch_mapped_to_original_index(self, tmp_path):
        def fn(q, d):
            if d == "bad":
                raise RuntimeError("boom")
            return 1.0
        cached = CachedScorer(CountingScorer(fn), tmp_path)
        sample = PairSample(Query("q9", "q"), Doc("good", "fine"), Doc("oops", "bad"))
        ts = TestSet("t", "TMT", [sample])
        with pytest.raises(EvaluationError, match="oops"):
            evaluate(ts, cached, delta=0.0)


def arithmetic_scorer(table):
    return CallableScorer(lambda q, d: table[(q, d)], "scripted-arith")


def make_run(qid, n):
    return [RunEntry(qid, f"{qid}-d{i:03d}", i + 1, float(1000 - i)) for i in range(n)]


class TestCalibrateDelta:
    def build(self, per_query_scores):
        """per_query_scores: qid -> list of rescored values, assigned to that
        query's run docs in rank order."""
        run, collection, queries, table = [], {}, {}, {}
        for qid, values in per_query_scores.items():
            queries[qid] = Query(qid, f"query {qid}")
            entries = make_run(qid, len(values))
            run.extend(entries)
            for e, v in zip(entries, values):
                collection[e.doc_id] = Doc(e.doc_id, f"text {e.doc_id}")
                table[(queries[qid].text, f"text {e.doc_id}")] = v
        return arithmetic_scorer(table), run, collection, queries

    def test_two_queries_steps_pool_to_median(self):
        qa = [10.0 - 0.1 * i for i in range(10)]
        qb = [30.0 - 0.3 * i for i in range(10)]
        scorer, run, coll, queries = self.build({"qa": qa, "qb": qb})
        cfg = calibrate_delta(scorer, run, coll, queries)
        assert math.isclose(cfg.delta, 0.2, rel_tol=1e-9)
        assert cfg.provenance["num_diffs"] == 18

    def test_constant_step(self):
        scorer, run, coll, queries = self.build({"q": [50.0 - 2.5 * i for i in range(12)]})
        cfg = calibrate_delta(scorer, run, coll, queries)
        assert math.isclose(cfg.delta, 2.5, rel_tol=1e-12)

    def test_identical_scores_give_zero(self):
        scorer, run, coll, queries = self.build({"q": [4.0] * 15})
        assert calibrate_delta(scorer, run, coll, queries).delta == 0.0

    def test_short_queries_skipped(self):
        scorer, run, coll, queries = self.build({
            "short": [9.0 - i for i in range(9)],        # < 10 docs: skipped
            "full": [90.0 - 3.0 * i for i in range(10)],
        })
        cfg = calibrate_delta(scorer, run, coll, queries)
        assert math.isclose(cfg.delta, 3.0)
        assert cfg.provenance["queries_used"] == 1

    def test_all_queries_short_is_error(self):
        scorer, run, coll, queries = self.build({"q": [3.0, 2.0, 1.0]})
        with pytest.raises(ValidationError, match="calibration impossible"):
            calibrate_delta(scorer, run, coll, queries)

    def test_top10_taken_from_rescored_order(self):
        # Run rank order d000..d019. Rescorer interleaves: odd-ranked docs
        # (by run order) score 19,17,...,1 and even-ranked 20,18,...,2, so
        # the rescored top 10 (20..11) has adjacent gaps of 1, while the
        # run-order top 10 would have gaps of 2.
        values = []
        for i in range(10):
            values.append(19.0 - 2 * i)   # run ranks 1..10
        for i in range(10):
            values.append(20.0 - 2 * i)   # run ranks 11..20
        scorer, run, coll, queries = self.build({"q": values})
        cfg = calibrate_delta(scorer, run, coll, queries)
        assert math.isclose(cfg.delta, 1.0, rel_tol=1e-12)

    def test_rescore_window_is_100(self):
        # 120 run docs; docs past rank 100 would change the answer if used
        values = [1000.0 - 1.0 * i for i in range(100)]
        values += [5000.0] * 20  # huge scores beyond the rescore window
        scorer, run, coll, queries = self.build({"q": values})
        cfg = calibrate_delta(scorer, run, coll, queries)
        assert math.isclose(cfg.delta, 1.0, rel_tol=1e-12)

    def test_tie_break_by_docid_descending(self):
        # All equal rescored scores: top-10 choice falls back to doc ids;
        # diffs are zero either way, but the call must succeed determinate.
        scorer, run, coll, queries = self.build({"q": [1.0] * 20})
        assert calibrate_delta(scorer, run, coll, queries).delta == 0.0

    def test_invariant_to_entry_order(self):
        qa = [10.0 - 0.1 * i for i in range(10)]
        qb = [30.0 - 0.3 * i for i in range(10)]
        scorer, run, coll, queries = self.build({"qa": qa, "qb": qb})
        rnd = random.Random(1)
        shuffled = run[:]
        rnd.shuffle(shuffled)
        a = calibrate_delta(scorer, run, coll, queries).delta
        b = calibrate_delta(scorer, shuffled, coll, queries).delta
        assert a == b

    def test_unknown_doc_rejected(self):
        scorer, run, coll, queries = self.build({"q": [20.0 - i for i in range(10)]})
        del coll[run[0].doc_id]
        with pytest.raises(ValidationError, match="unknown doc"):
            calibrate_delta(scorer, run, coll, queries)

    def test_delta_file_round_trip(self, tmp_path):
        scorer, run, coll, queries = self.build({"q": [9.0 - 0.5 * i for i in range(10)]})
        cfg = calibrate_delta(scorer, run, coll, queries)
        save_delta(cfg, tmp_path / "delta.json")
        assert load_delta(tmp_path / "delta.json") == cfg


MOCK = f"{sys.executable} -m abnirml.mock_scorer"


class TestExternalScorer:
    def test_token_count_scores(self):
        with ExternalScorer(MOCK, timeout=10) as scorer:
            assert scorer.name == "mock"
            got = scorer.score_batch([("q", "one two three"), ("q", "one"), ("q", "")])
            assert got == [3.0, 1.0, 0.0]

    def test_out_of_order_responses_matched_by_id(self):
        with ExternalScorer(MOCK + " --reverse-within 5", timeout=10) as scorer:
            pairs = [("q", " ".join(["w"] * n)) for n in range(1, 6)]
            assert scorer.score_batch(pairs) == [1.0, 2.0, 3.0, 4.0, 5.0]

    def test_bad_handshake(self):
        with pytest.raises(ScorerProtocolError, match="protocol mismatch"):
            ExternalScorer(MOCK + " --bad-handshake", timeout=10)

    def test_missing_response_names_id(self):
        # the mock never answers r1 and exits after reading both requests
        with ExternalScorer(MOCK + " --skip-id r1 --quit-after 2",
                            timeout=10, window=8) as scorer:
            with pytest.raises(ScorerProtocolError, match="r1"):
                scorer.score_batch([("q", "x y"), ("q", "x y z")])

    def test_timeout_error_names_pending_request(self):
        with ExternalScorer(MOCK + " --skip-id r0", timeout=0.2, window=1) as scorer:
            with pytest.raises(ScorerTimeoutError):
                scorer.score("q", "d")

    def test_malformed_response(self):
        with ExternalScorer(MOCK + " --malformed-at 1", timeout=10) as scorer:
            with pytest.raises(ScorerProtocolError, match="malformed"):
                scorer.score_batch([("q", "a b")])

    def test_unknown_response_id(self):
        with ExternalScorer(MOCK + " --wrong-id-at 1", timeout=10) as scorer:
            with pytest.raises(ScorerProtocolError, match="bogus-r0"):
                scorer.score_batch([("q", "a b")])

    def test_scorer_error_response(self):
        with ExternalScorer(MOCK + " --error-id r0", timeout=10) as scorer:
            with pytest.raises(ScorerProtocolError, match="r0"):
                scorer.score_batch([("q", "a b")])

    def test_failure_during_evaluate_identifies_sample(self):
        with ExternalScorer(MOCK + " --error-id r1", timeout=10) as scorer:
            ts = TestSet("t", "TMT", [PairSample(
                Query("q7", "q"), Doc("da", "x y"), Doc("db", "x y z"))])
            with pytest.raises(EvaluationError, match="q7.*db"):
                evaluate(ts, scorer, delta=0.0)

    def test_unicode_pairs(self):
        with ExternalScorer(MOCK, timeout=10) as scorer:
            assert scorer.score("café", "über alles naïve") == 3.0

    def test_large_pipelined_batch(self):
        with ExternalScorer(MOCK, timeout=30, window=16) as scorer:
            pairs = [("q", " ".join(["t"] * (i % 7))) for i in range(200)]
            got = scorer.score_batch(pairs)
            assert got == [float(i % 7) for i in range(200)]
