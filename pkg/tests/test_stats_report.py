"""Significance machinery and report rendering tests. The t CDF is checked
against a frozen 200-point quadrature grid (tests/data/t_cdf_oracle.json,
regenerated by gen_t_cdf_oracle.py) plus live mpmath spot checks."""

import csv
import io
import json
import math
import pathlib
import random

import pytest

from abnirml.corpus import Doc, Query
from abnirml.errors import ValidationError
from abnirml.pairtest import EffectRecord, PairSample, TestSet, evaluate
from abnirml.scorers import CallableScorer
from abnirml.stats_report import (
    TestResult,
    apply_correction,
    bonferroni,
    format_score,
    paired_t_test,
    regularized_inc_beta,
    render_report,
    summarize_test,
    t_cdf,
)

ORACLE = json.loads(
    (pathlib.Path(__file__).parent / "data" / "t_cdf_oracle.json").read_text())


# --- t CDF -------------------------------------------------------------------


def test_oracle_grid_shape():
    assert len(ORACLE) == 200


def test_t_cdf_matches_quadrature_oracle_within_1e_10():
    worst = 0.0
    for t, df, expected in ORACLE:
        got = t_cdf(t, df)
        worst = max(worst, abs(got - expected))
    assert worst < 1e-10, f"worst absolute error {worst}"


def test_t_cdf_spot_checks_against_live_mpmath():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30
    rnd = random.Random(2024)
    for _ in range(5):
        t = rnd.uniform(-6, 6)
        df = rnd.choice([1, 3, 7, 12, 33])
        x = df / (df + t * t)
        tail = 0.5 * mp.betainc(df / 2, 0.5, 0, x, regularized=True)
        expected = float(1 - tail if t > 0 else tail)
        assert abs(t_cdf(t, df) - expected) < 1e-12


def test_t_cdf_symmetry_exact():
    rnd = random.Random(7)
    for _ in range(300):
        t = rnd.uniform(-50, 50)
        df = rnd.uniform(0.5, 200)
        assert abs(t_cdf(t, df) + t_cdf(-t, df) - 1.0) < 1e-12


def test_t_cdf_monotone_in_t():
    for df in (1, 2, 5, 10, 100):
        values = [t_cdf(t, df) for t in [x / 4 for x in range(-40, 41)]]
        assert all(a <= b for a, b in zip(values, values[1:]))


def test_t_cdf_edges():
    assert t_cdf(0.0, 3) == 0.5
    assert abs(t_cdf(1e6, 5) - 1.0) < 1e-12
    assert abs(t_cdf(-1e6, 5)) < 1e-12
    assert t_cdf(math.inf, 5) == 1.0
    with pytest.raises(ValidationError):
        t_cdf(1.0, 0)
    with pytest.raises(ValidationError):
        t_cdf(math.nan, 5)


def test_regularized_inc_beta_edges():
    assert regularized_inc_beta(2.0, 3.0, 0.0) == 0.0
    assert regularized_inc_beta(2.0, 3.0, 1.0) == 1.0
    with pytest.raises(ValidationError):
        regularized_inc_beta(-1.0, 1.0, 0.5)
    with pytest.raises(ValidationError):
        regularized_inc_beta(1.0, 1.0, 1.5)
    # I_x(1,1) is the uniform CDF
    assert abs(regularized_inc_beta(1.0, 1.0, 0.25) - 0.25) < 1e-14


# --- paired t-test -----------------------------------------------------------


def test_paired_t_zero_mean():
    t, p = paired_t_test([(1.0, 0.0), (0.0, 1.0)])
    assert t == 0.0
    assert p == 1.0


def test_paired_t_known_point():
    # engineered so mean(d) = 2/sqrt(11) and sd(d) = 1 with n = 11: t = 2, df = 10
    mu = 2 / math.sqrt(11)
    diffs = [mu + 1, mu - 1] * 5 + [mu]
    t, p = paired_t_test([(d, 0.0) for d in diffs])
    assert abs(t - 2.0) < 1e-12
    assert abs(p - 0.07338803477) < 1e-9
    assert round(p, 4) == 0.0734


def test_paired_t_degenerate_conventions():
    t, p = paired_t_test([(3.0, 1.0), (4.0, 2.0), (5.0, 3.0)])  # all diffs 2
    assert t == math.inf and p == 0.0
    t, p = paired_t_test([(1.0, 3.0), (2.0, 4.0)])  # all diffs -2
    assert t == -math.inf and p == 0.0
    t, p = paired_t_test([(2.0, 2.0), (5.0, 5.0)])  # all diffs 0
    assert t == 0.0 and p == 1.0


def test_paired_t_requires_two_pairs():
    with pytest.raises(ValidationError):
        paired_t_test([(1.0, 0.0)])
    with pytest.raises(ValidationError):
        paired_t_test([])


def test_paired_t_shift_invariance():
    rnd = random.Random(5)
    pairs = [(float(rnd.randint(-50, 50)), float(rnd.randint(-50, 50)))
             for _ in range(40)]
    base = paired_t_test(pairs)
    for c in (1.0, -17.0, 1024.0):  # integer-valued shifts keep diffs exact
        shifted = paired_t_test([(a + c, b + c) for a, b in pairs])
        assert shifted == base
    t, p = paired_t_test([(a + math.pi, b + math.pi) for a, b in pairs])
    assert abs(t - base[0]) < 1e-6
    assert abs(p - base[1]) < 1e-6


# --- bonferroni --------------------------------------------------------------


def test_bonferroni_examples():
    assert bonferroni([0.0005], alpha=0.001, m=3) == [False]
    assert bonferroni([0.0], alpha=0.001, m=1000) == [True]
    assert bonferroni([0.0009], alpha=0.001, m=1) == [True]
    assert bonferroni([0.0011], alpha=0.001, m=1) == [False]


def test_bonferroni_validation():
    with pytest.raises(ValidationError):
        bonferroni([])
    with pytest.raises(ValidationError):
        bonferroni([0.5, 0.5], m=1)
    with pytest.raises(ValidationError):
        bonferroni([0.5], alpha=0.0)


# --- summarize + strata ------------------------------------------------------


def _graded_fixture():
    q = Query("q1", "zork")
    grades = [0, 1, 2, 3, 0, 2]
    bonus = [+1, -1, +1, +1, +1, -1]
    samples = []
    score_of = {}
    for i, (g, b) in enumerate(zip(grades, bonus)):
        d1, d2 = Doc(f"d{i}a", f"text {i} a"), Doc(f"d{i}b", f"text {i} b")
        samples.append(PairSample(q, d1, d2, meta={"grade": g, "kind": "K"}))
        score_of[d1.text] = 10.0 + i + b
        score_of[d2.text] = 10.0 + i
    test = TestSet("tmt-k", "TMT", samples)
    scorer = CallableScorer(lambda qt, dt: score_of[dt], "scripted")
    return test, evaluate(test, scorer, delta=0.0)


def test_summarize_overall_and_strata():
    test, records = _graded_fixture()
    result = summarize_test(test, records)
    assert result.n == 6
    assert abs(result.s - 2 / 6) < 1e-15
    assert set(result.strata) == {"rel01", "rel23"}
    r01, r23 = result.strata["rel01"], result.strata["rel23"]
    assert (r01.n, r23.n) == (3, 3)
    assert abs(r01.s - 1 / 3) < 1e-15
    assert abs(r23.s - 1 / 3) < 1e-15


def test_strata_recombine_exactly_via_integer_sums():
    test, records = _graded_fixture()
    result = summarize_test(test, records)
    total = round(result.s * result.n)
    parts = sum(round(sub.s * sub.n) for sub in result.strata.values())
    assert total == parts == 2


def test_summarize_rejects_misaligned_records():
    test, records = _graded_fixture()
    with pytest.raises(ValidationError, match="do not line up"):
        summarize_test(test, list(reversed(records)))
    with pytest.raises(ValidationError):
        summarize_test(test, records[:-1])


def test_summarize_without_grades_has_no_strata():
    q = Query("q1", "zork")
    samples = [PairSample(q, Doc("a1", "x"), Doc("a2", "y")),
               PairSample(q, Doc("b1", "u"), Doc("b2", "v"))]
    test = TestSet("dtt-x", "DTT", samples)
    records = [EffectRecord("q1", "a1", "a2", 1.0, 0.0, 1),
               EffectRecord("q1", "b1", "b2", 1.0, 0.0, 1)]
    result = summarize_test(test, records)
    assert result.strata is None
    assert result.s == 1.0


def test_single_sample_stratum_reports_no_evidence():
    q = Query("q1", "zork")
    samples = [
        PairSample(q, Doc("a1", "x"), Doc("a2", "y"), meta={"grade": 0}),
        PairSample(q, Doc("b1", "u"), Doc("b2", "v"), meta={"grade": 3}),
        PairSample(q, Doc("c1", "m"), Doc("c2", "n"), meta={"grade": 3}),
    ]
    test = TestSet("tmt-k", "TMT", samples)
    records = [EffectRecord("q1", "a1", "a2", 5.0, 1.0, 1),
               EffectRecord("q1", "b1", "b2", 4.0, 1.0, 1),
               EffectRecord("q1", "c1", "c2", 9.0, 1.0, 1)]
    result = summarize_test(test, records)
    sub = result.strata["rel01"]
    assert (sub.n, sub.t_stat, sub.p_value) == (1, 0.0, 1.0)


# --- correction + rendering --------------------------------------------------


def test_apply_correction_counts_cells():
    test, records = _graded_fixture()
    result = summarize_test(test, records)
    plain = TestResult("other", 10, 0.5, 4.0, 1e-9)
    corrected, m = apply_correction([result, plain])
    assert m == 4  # overall + 2 strata + plain
    assert corrected[1].significant is True  # 1e-9 < 0.001/4
    assert corrected[0].significant is False


def test_apply_correction_boundary():
    just_below = TestResult("a", 5, 0.1, 1.0, 0.001 / 3 - 1e-12)
    at_threshold = TestResult("b", 5, 0.1, 1.0, 0.001 / 3)
    filler = TestResult("c", 5, 0.1, 1.0, 0.5)
    corrected, m = apply_correction([just_below, at_threshold, filler])
    assert m == 3
    assert corrected[0].significant is True
    assert corrected[1].significant is False  # strict inequality


def test_format_score_rules():
    assert format_score(0.4012, True) == "+0.40"
    assert format_score(-0.005, False) == "* -0.01"
    assert format_score(0.0, True) == "0.00"
    assert format_score(-0.0001, True) == "0.00"
    assert format_score(-0.40, True) == "-0.40"


def test_render_markdown():
    test, records = _graded_fixture()
    results = [summarize_test(test, records)]
    text = render_report(results, "markdown")
    lines = text.splitlines()
    assert lines[0] == "| test | stratum | n | s | t | p |"
    assert any("| tmt-k | overall | 6 |" in ln for ln in lines)
    assert any("| tmt-k | rel01 | 3 |" in ln for ln in lines)
    assert any("| tmt-k | rel23 | 3 |" in ln for ln in lines)
    assert "m = 3 cells" in text
    assert "* " in text  # n=6 with s=1/3 is nowhere near p < 0.001/3


def test_render_csv_round_trips_raw_values():
    test, records = _graded_fixture()
    results = [summarize_test(test, records)]
    text = render_report(results, "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["test_id", "stratum", "n", "s", "t", "p", "significant"]
    assert len(rows) == 4
    overall = rows[1]
    assert overall[0] == "tmt-k" and overall[1] == "overall"
    assert float(overall[3]) == results[0].s
    assert overall[6] in ("true", "false")


def test_render_json_preserves_values():
    test, records = _graded_fixture()
    results = [summarize_test(test, records)]
    payload = json.loads(render_report(results, "json"))
    assert payload["m"] == 3
    assert payload["alpha"] == 0.001
    entry = payload["results"][0]
    assert entry["test_id"] == "tmt-k"
    assert entry["s"] == results[0].s
    assert set(entry["strata"]) == {"rel01", "rel23"}


def test_render_empty_results():
    md = render_report([], "markdown")
    assert md.splitlines()[0] == "| test | stratum | n | s | t | p |"
    assert "m = 0" in md
    csv_text = render_report([], "csv")
    assert csv_text.splitlines() == ["test_id,stratum,n,s,t,p,significant"]
    payload = json.loads(render_report([], "json"))
    assert payload["results"] == []


def test_render_unknown_format():
    with pytest.raises(ValidationError, match="format"):
        render_report([], "yaml")
