"""Paired significance testing and report rendering.

The t distribution CDF is evaluated through the regularized incomplete
beta function (continued fraction), so there is no dependency on scipy.
Reports apply a Bonferroni correction where m counts every scored cell in
the rendered table: each test's overall row and each stratum row.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace

from .errors import ValidationError
from .pairtest import EffectRecord, TestSet, summary_score

DEFAULT_ALPHA = 0.001

REPORT_FORMATS = ("markdown", "csv", "json")


# --- Student t machinery -----------------------------------------------------

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 500


def _beta_cont_frac(a: float, b: float, x: float) -> float:
    """Lentz evaluation of the incomplete-beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_inc_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValidationError(f"beta parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    # the continued fraction converges fast only on one side of the mean;
    # use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) for the other side
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cont_frac(a, b, x) / a
    return 1.0 - front * _beta_cont_frac(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    """P(T <= t) for Student's t with df degrees of freedom.

    Both tails are derived from the same I_x value, so
    t_cdf(t) + t_cdf(-t) == 1 holds exactly.
    """
    if df <= 0:
        raise ValidationError(f"degrees of freedom must be positive, got {df}")
    if math.isnan(t):
        raise ValidationError("t must not be NaN")
    if t == 0.0:
        return 0.5
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    x = df / (df + t * t)
    tail = 0.5 * regularized_inc_beta(df / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def paired_t_test(score_pairs) -> tuple[float, float]:
    """Two-sided paired t-test over (score1, score2) pairs.

    Degenerate spread is resolved by convention: all differences equal and
    zero -> (0, 1); all equal and nonzero -> (+-inf, 0).
    """
    pairs = list(score_pairs)
    n = len(pairs)
    if n < 2:
        raise ValidationError(f"paired t-test requires at least 2 pairs, got {n}")
    diffs = [s1 - s2 for s1, s2 in pairs]
    mean = math.fsum(diffs) / n
    var = math.fsum((d - mean) ** 2 for d in diffs) / (n - 1)
    sd = math.sqrt(var)
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * (1.0 - t_cdf(abs(t), n - 1))
    return t, min(max(p, 0.0), 1.0)


def bonferroni(p_values, alpha: float = DEFAULT_ALPHA, m: int | None = None) -> list[bool]:
    """significant_i <=> p_i < alpha / m, with m >= len(p_values)."""
    p_values = list(p_values)
    if not p_values:
        raise ValidationError("bonferroni needs at least one p-value")
    if m is None:
        m = len(p_values)
    if m < len(p_values):
        raise ValidationError(
            f"m ({m}) must cover all {len(p_values)} simultaneous tests")
    if alpha <= 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    threshold = alpha / m
    return [p < threshold for p in p_values]


# --- result assembly ---------------------------------------------------------


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class, despite the name

    test_id: str
    n: int
    s: float
    t_stat: float
    p_value: float
    significant: bool | None = None  # None until a correction is applied
    strata: dict[str, "TestResult"] | None = None

    def to_dict(self) -> dict:
        out = {
            "test_id": self.test_id,
            "n": self.n,
            "s": self.s,
            "t_stat": self.t_stat,
            "p_value": self.p_value,
            "significant": self.significant,
        }
        if self.strata is not None:
            out["strata"] = {k: v.to_dict() for k, v in sorted(self.strata.items())}
        return out


def _result_for(test_id: str, records: list[EffectRecord]) -> TestResult:
    n = len(records)
    s = summary_score(r.effect for r in records)
    if n >= 2:
        t, p = paired_t_test((r.score1, r.score2) for r in records)
    else:
        # a single pair carries no evidence; report it as such
        t, p = 0.0, 1.0
    return TestResult(test_id, n, s, t, p)


def summarize_test(test: TestSet, records: list[EffectRecord]) -> TestResult:
    """Aggregate effects into a TestResult. Samples carrying an integer
    "grade" meta entry additionally get rel01 / rel23 strata (grade <= 1
    vs grade >= 2)."""
    if len(records) != len(test.samples):
        raise ValidationError(
            f"{len(records)} effect records for {len(test.samples)} samples")
    for sample, record in zip(test.samples, records):
        if (sample.query.id, sample.d1.id, sample.d2.id) \
                != (record.query_id, record.d1_id, record.d2_id):
            raise ValidationError(
                "effect records do not line up with the test set at "
                f"query={record.query_id!r} d1={record.d1_id!r} d2={record.d2_id!r}")
    overall = _result_for(test.id, records)
    graded = all("grade" in s.info for s in test.samples)
    if not graded or not records:
        return overall
    bands: dict[str, list[EffectRecord]] = {"rel01": [], "rel23": []}
    for sample, record in zip(test.samples, records):
        band = "rel01" if int(sample.info["grade"]) <= 1 else "rel23"
        bands[band].append(record)
    strata = {name: _result_for(f"{test.id}.{name}", rows)
              for name, rows in bands.items() if rows}
    return replace(overall, strata=strata)


# --- rendering ---------------------------------------------------------------


def _cells(results: list[TestResult]):
    for result in results:
        yield result, "overall"
        for name in sorted(result.strata or {}):
            yield result.strata[name], name


def apply_correction(results: list[TestResult],
                     alpha: float = DEFAULT_ALPHA) -> tuple[list[TestResult], int]:
    """Set each cell's significance at the alpha/m Bonferroni threshold,
    where m counts every rendered cell (overall + strata). Returns the
    updated results and m."""
    flat = list(_cells(results))
    m = len(flat)
    if m == 0:
        return [], 0
    flags = bonferroni([c.p_value for c, _ in flat], alpha=alpha, m=m)
    flag_of = {id(cell): flag for (cell, _), flag in zip(flat, flags)}
    corrected = []
    for result in results:
        strata = None
        if result.strata is not None:
            strata = {name: replace(sub, significant=flag_of[id(sub)])
                      for name, sub in result.strata.items()}
        corrected.append(replace(result, significant=flag_of[id(result)],
                                 strata=strata))
    return corrected, m


def format_score(s: float, significant: bool) -> str:
    """Two decimals, explicit sign except for zero, leading "* " marker on
    cells that did not reach significance."""
    text = f"{s:+.2f}"
    if text in ("+0.00", "-0.00"):
        text = "0.00"
    return text if significant else f"* {text}"


def render_report(results: list[TestResult], format: str = "markdown",
                  alpha: float = DEFAULT_ALPHA) -> str:
    if format not in REPORT_FORMATS:
        raise ValidationError(
            f"unknown report format {format!r}; expected one of {REPORT_FORMATS}")
    corrected, m = apply_correction(list(results), alpha=alpha)
    if format == "json":
        payload = {"alpha": alpha, "m": m,
                   "results": [r.to_dict() for r in corrected]}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["test_id", "stratum", "n", "s", "t", "p", "significant"])
        for cell, stratum in _cells(corrected):
            writer.writerow([cell.test_id.removesuffix(f".{stratum}"), stratum,
                             cell.n, repr(cell.s), repr(cell.t_stat),
                             repr(cell.p_value), str(cell.significant).lower()])
        return buf.getvalue()
    lines = ["| test | stratum | n | s | t | p |",
             "|---|---|---:|---:|---:|---:|"]
    for cell, stratum in _cells(corrected):
        test_id = cell.test_id.removesuffix(f".{stratum}")
        lines.append(
            f"| {test_id} | {stratum} | {cell.n} "
            f"| {format_score(cell.s, cell.significant)} "
            f"| {cell.t_stat:.2f} | {cell.p_value:.3g} |")
    lines.append("")
    lines.append(f"Bonferroni: m = {m} cells, alpha = {alpha}; "
                 "`* ` marks cells that are not statistically significant.")
    return "\n".join(lines) + "\n"
