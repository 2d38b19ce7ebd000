"""Rule catalog semantics: inclusive thresholds, day-over-day joins,
sample caps, and per-rule error isolation."""

import pytest

from tabqc.dataset import Dataset
from tabqc.errors import (DegenerateBaseline, DegenerateCorrelation,
                          EmptySuite, MissingPreviousDay, UnknownRule)
from tabqc.rules import (Rule, SAMPLE_CAP, default_assertion, evaluate_rule,
                         evaluate_suite, validate_params)
from tabqc.storage import MemoryStorage

from conftest import FROZEN_NOW, cat_col, make_ds, num_col


def run(rule, current, previous=None, storage=None):
    return evaluate_rule(current, previous, rule, storage=storage,
                         now=FROZEN_NOW)


# --- row_count ----------------------------------------------------------------


def test_row_count_inclusive_bounds():
    ds = make_ds(v=[1.0, 2.0, 3.0])
    rule = Rule.of("rows", "row_count", {"min": 3, "max": 3})
    assert run(rule, ds).status == "pass"
    rule = Rule.of("rows", "row_count", {"min": 4, "max": 9})
    got = run(rule, ds)
    assert got.status == "breach" and got.metric_value == 3.0


# --- null_rate ------------------------------------------------------------------


def test_null_rate_boundary_is_float_exact():
    # 3 nulls in 20 rows is exactly 15.0 percent; inclusive pass at the bound
    values = [None] * 3 + [1.0] * 17
    ds = make_ds(v=values)
    rule = Rule.of("nulls", "null_rate", {"column": "v", "max_pct": 15.0})
    got = run(rule, ds)
    assert got.status == "pass"
    assert got.metric_value == 15.0

    rule = Rule.of("nulls", "null_rate", {"column": "v", "max_pct": 14.999})
    got = run(rule, ds)
    assert got.status == "breach"
    assert got.sample_invalid == (("v", 15.0),)


def test_null_rate_all_columns_sentinel():
    ds = make_ds(a=[1.0, None], b=["x", "y"])
    rule = Rule.of("nulls", "null_rate", {"columns": "all", "max_pct": 0.0})
    got = run(rule, ds)
    assert got.status == "breach"
    assert got.sample_invalid == (("a", 50.0),)


def test_null_rate_zero_rows_passes():
    ds = Dataset.of("t", [num_col("v", [])])
    rule = Rule.of("nulls", "null_rate", {"column": "v", "max_pct": 0.0})
    assert run(rule, ds).status == "pass"


# --- null_rate_delta / mean_delta ------------------------------------------------


def test_null_rate_delta_needs_previous():
    ds = make_ds(v=[1.0])
    rule = Rule.of("d", "null_rate_delta", {"column": "v", "max_pct_change": 5})
    with pytest.raises(MissingPreviousDay):
        run(rule, ds)


def test_null_rate_delta_inclusive():
    cur = make_ds(v=[None, 1.0, 1.0, 1.0])   # 25%
    prev = make_ds(v=[None, None, 1.0, 1.0])  # 50%
    rule = Rule.of("d", "null_rate_delta", {"column": "v", "max_pct_change": 25.0})
    got = run(rule, cur, prev)
    assert got.status == "pass" and got.metric_value == 25.0
    rule = Rule.of("d", "null_rate_delta", {"column": "v", "max_pct_change": 24.0})
    assert run(rule, cur, prev).status == "breach"


def test_mean_delta_pct_change():
    cur = make_ds(v=[11.0, 11.0])
    prev = make_ds(v=[10.0, 10.0])
    rule = Rule.of("m", "mean_delta", {"column": "v", "max_pct_change": 10.0})
    got = run(rule, cur, prev)
    assert got.status == "pass" and got.metric_value == pytest.approx(10.0)
    rule = Rule.of("m", "mean_delta", {"column": "v", "max_pct_change": 9.99})
    assert run(rule, cur, prev).status == "breach"


def test_mean_delta_zero_baseline_raises():
    cur = make_ds(v=[1.0])
    prev = make_ds(v=[-1.0, 1.0])
    rule = Rule.of("m", "mean_delta", {"column": "v", "max_pct_change": 10})
    with pytest.raises(DegenerateBaseline):
        run(rule, cur, prev)


# --- correlation_min ---------------------------------------------------------------


def _corr_frames(cur_vals, prev_vals, keys=None):
    keys = keys or [f"k{i}" for i in range(len(cur_vals))]
    cur = Dataset.of("cur", [cat_col("cusip", keys), num_col("volume", cur_vals)])
    prev = Dataset.of("prev", [cat_col("cusip", keys), num_col("volume", prev_vals)])
    return cur, prev


def test_correlation_min_pass_and_breach():
    cur, prev = _corr_frames([1.0, 2.0, 3.0, 4.0], [2.0, 4.0, 6.0, 8.0])
    rule = Rule.of("corr", "correlation_min",
                   {"key": "cusip", "column": "volume", "min_corr": 0.8})
    got = run(rule, cur, prev)
    assert got.status == "pass" and got.metric_value == pytest.approx(1.0)

    cur, prev = _corr_frames([1.0, 2.0, 3.0, 4.0], [4.0, 3.0, 2.0, 1.0])
    got = run(rule, cur, prev)
    assert got.status == "breach" and got.metric_value == pytest.approx(-1.0)


def test_correlation_exact_threshold_passes():
    # r computed then compared inclusively at the bound
    cur, prev = _corr_frames([1.0, 2.0, 3.0], [2.0, 4.0, 6.0])
    rule = Rule.of("corr", "correlation_min",
                   {"key": "cusip", "column": "volume", "min_corr": 1.0})
    assert run(rule, cur, prev).status == "pass"


def test_correlation_too_few_pairs():
    cur, prev = _corr_frames([1.0, 2.0], [2.0, 4.0])
    rule = Rule.of("corr", "correlation_min",
                   {"key": "cusip", "column": "volume", "min_corr": 0.5})
    with pytest.raises(DegenerateCorrelation):
        run(rule, cur, prev)


def test_correlation_zero_variance_side():
    cur, prev = _corr_frames([1.0, 1.0, 1.0], [2.0, 4.0, 6.0])
    rule = Rule.of("corr", "correlation_min",
                   {"key": "cusip", "column": "volume", "min_corr": 0.5})
    with pytest.raises(DegenerateCorrelation):
        run(rule, cur, prev)


def test_correlation_assertion_echoes_threshold():
    rule = Rule.of("corr", "correlation_min",
                   {"key": "cusip", "column": "volume", "min_corr": 0.8})
    assert "Correlation Threshold is defined at 0.8" in rule.assertion


# --- common_key_value_change ----------------------------------------------------


def test_common_key_value_change_counts_changed_keys():
    cur, prev = _corr_frames([1.0, 2.0, 99.0, 4.0], [1.0, 2.0, 3.0, 4.0])
    rule = Rule.of("chg", "common_key_value_change",
                   {"key": "cusip", "column": "volume", "max_pct": 25.0})
    got = run(rule, cur, prev)
    assert got.status == "pass" and got.metric_value == 25.0
    assert got.sample_invalid == (("key=k2", 99.0),)

    rule = Rule.of("chg", "common_key_value_change",
                   {"key": "cusip", "column": "volume", "max_pct": 24.9})
    assert run(rule, cur, prev).status == "breach"


def test_common_key_change_null_to_value_counts():
    cur, prev = _corr_frames([1.0, None], [1.0, 2.0], keys=["a", "b"])
    rule = Rule.of("chg", "common_key_value_change",
                   {"key": "cusip", "column": "volume", "max_pct": 0.0})
    got = run(rule, cur, prev)
    assert got.status == "breach" and got.metric_value == 50.0


def test_common_key_change_first_occurrence_wins():
    cur, prev = _corr_frames([1.0, 5.0], [1.0, 9.0], keys=["a", "a"])
    rule = Rule.of("chg", "common_key_value_change",
                   {"key": "cusip", "column": "volume", "max_pct": 0.0})
    # only key "a" with first-row values 1.0 vs 1.0: unchanged
    assert run(rule, cur, prev).status == "pass"


def test_common_key_change_relative_tolerance():
    cur, prev = _corr_frames([1.0 + 1e-12], [1.0], keys=["a"])
    rule = Rule.of("chg", "common_key_value_change",
                   {"key": "cusip", "column": "volume", "max_pct": 0.0})
    assert run(rule, cur, prev).status == "pass"


def test_common_key_no_overlap_passes():
    cur, _ = _corr_frames([1.0], [1.0], keys=["a"])
    _, prev = _corr_frames([1.0], [1.0], keys=["b"])
    rule = Rule.of("chg", "common_key_value_change",
                   {"key": "cusip", "column": "volume", "max_pct": 0.0})
    assert run(rule, cur, prev).status == "pass"


# --- schema_match -----------------------------------------------------------------


def test_schema_match_reports_both_sides():
    cur = make_ds(a=[1.0], c=[2.0])
    prev = make_ds(a=[1.0], b=[2.0])
    rule = Rule.of("schema", "schema_match", {})
    got = run(rule, cur, prev)
    assert got.status == "breach"
    assert ("current_only:c", "c") in got.sample_invalid
    assert ("previous_only:b", "b") in got.sample_invalid


def test_schema_match_ignores_column_order():
    cur = Dataset.of("c", [num_col("a", [1.0]), num_col("b", [2.0])])
    prev = Dataset.of("p", [num_col("b", [5.0]), num_col("a", [6.0])])
    assert run(Rule.of("schema", "schema_match", {}), cur, prev).status == "pass"


# --- row scans ----------------------------------------------------------------------


def test_no_nulls_locators_single_vs_multi():
    ds = make_ds(a=[1.0, None], b=[None, 2.0])
    got = run(Rule.of("n", "no_nulls", {"column": "a"}), ds)
    assert got.sample_invalid == ((1, None),)
    got = run(Rule.of("n", "no_nulls", {"columns": ["a", "b"]}), ds)
    assert got.sample_invalid == (("a:1", None), ("b:0", None))


def test_unique_flags_every_duplicate_row():
    ds = make_ds(k=["x", "y", "x"])
    got = run(Rule.of("u", "unique", {"column": "k"}), ds)
    assert got.status == "breach"
    assert got.sample_invalid == ((0, "x"), (2, "x"))


def test_unique_ignores_nulls():
    ds = make_ds(k=[None, None, "x"])
    assert run(Rule.of("u", "unique", {"column": "k"}), ds).status == "pass"


def test_value_range_inclusive_bounds():
    ds = make_ds(v=[0.0, 100.0, 100.0001, -0.0001])
    rule = Rule.of("r", "value_range", {"column": "v", "min": 0, "max": 100})
    got = run(rule, ds)
    assert got.status == "breach"
    assert got.sample_invalid == ((2, 100.0001), (3, -0.0001))


def test_value_range_open_ended():
    ds = make_ds(v=[5.0, -1.0])
    rule = Rule.of("r", "value_range", {"column": "v", "min": 0})
    got = run(rule, ds)
    assert got.sample_invalid == ((1, -1.0),)


def test_positive_only_zero_passes():
    ds = make_ds(v=[0.0, 1.0, -0.5])
    got = run(Rule.of("p", "positive_only", {"column": "v"}), ds)
    assert got.sample_invalid == ((2, -0.5),)
    assert run(Rule.of("p", "positive_only", {"column": "v"}),
               make_ds(v=[0.0, 2.0])).status == "pass"


def test_positive_only_all_numeric_sentinel_skips_categoricals():
    ds = make_ds(v=[-1.0], label=["x"])
    got = run(Rule.of("p", "positive_only", {"columns": "all_numeric"}), ds)
    assert got.sample_invalid == ((0, -1.0),)


def test_sample_cap_at_20():
    ds = make_ds(v=[-1.0] * 50)
    got = run(Rule.of("p", "positive_only", {"column": "v"}), ds)
    assert len(got.sample_invalid) == SAMPLE_CAP
    assert got.metric_value == 50.0


# --- ratio_max ------------------------------------------------------------------------


def test_ratio_max_inclusive_and_percent():
    ds = make_ds(volume=[10.0, 5.0], amount_issued=[100.0, 100.0])
    rule = Rule.of("ratio", "ratio_max",
                   {"num_column": "volume", "den_column": "amount_issued",
                    "max_pct": 10.0})
    assert run(rule, ds).status == "pass"  # 10% sits on the bound

    ds = make_ds(volume=[10.001], amount_issued=[100.0])
    got = run(rule, ds)
    assert got.status == "breach"
    assert got.sample_invalid[0][0] == 0


def test_ratio_max_zero_denominator_error_status():
    ds = make_ds(volume=[1.0, 1.0], amount_issued=[0.0, 100.0])
    rule = Rule.of("ratio", "ratio_max",
                   {"num_column": "volume", "den_column": "amount_issued",
                    "max_pct": 50.0})
    got = run(rule, ds)
    assert got.status == "error"
    assert got.row_errors == ((0, "denominator is zero"),)


def test_ratio_max_breach_wins_over_row_errors():
    ds = make_ds(volume=[1.0, 90.0], amount_issued=[0.0, 100.0])
    rule = Rule.of("ratio", "ratio_max",
                   {"num_column": "volume", "den_column": "amount_issued",
                    "max_pct": 50.0})
    got = run(rule, ds)
    assert got.status == "breach"
    assert got.row_errors == ((0, "denominator is zero"),)


def test_ratio_percentage_is_float_exact():
    ds = make_ds(volume=[3.0], amount_issued=[20.0])
    rule = Rule.of("ratio", "ratio_max",
                   {"num_column": "volume", "den_column": "amount_issued",
                    "max_pct": 15.0})
    assert run(rule, ds).status == "pass"


# --- constant_across_days ----------------------------------------------------------


def test_constant_must_change():
    cur, prev = _corr_frames([1.0, 7.0], [1.0, 6.0])
    rule = Rule.of("c", "constant_across_days",
                   {"key": "cusip", "column": "volume", "direction": "must_change"})
    got = run(rule, cur, prev)
    assert got.status == "breach"
    assert got.sample_invalid == (("key=k0", 1.0),)


def test_constant_must_not_be_zero_sum():
    cur, prev = _corr_frames([5.0, -3.0], [-5.0, 4.0])
    rule = Rule.of("c", "constant_across_days",
                   {"key": "cusip", "column": "volume",
                    "direction": "must_not_be_zero_sum"})
    got = run(rule, cur, prev)
    assert got.status == "breach"
    assert got.sample_invalid == (("key=k0", 0.0),)


# --- file_present -------------------------------------------------------------------


def test_file_present_pass_breach_on_missing_and_empty():
    st = MemoryStorage()
    st.write_text("ok.csv", "v\n1\n")
    st.write_text("empty.csv", "v\n")
    ok = Rule.of("f", "file_present", {"path": "ok.csv"})
    assert run(ok, None, storage=st).status == "pass"

    missing = Rule.of("f", "file_present", {"path": "gone.csv"})
    assert run(missing, None, storage=st).status == "breach"

    empty = Rule.of("f", "file_present", {"path": "empty.csv"})
    got = run(empty, None, storage=st)
    assert got.status == "breach"
    assert got.sample_invalid == (("empty.csv", "0 rows"),)


def test_file_present_unparseable_breaches():
    st = MemoryStorage()
    st.write_text("bad.csv", "a,b\n1\n")
    rule = Rule.of("f", "file_present", {"path": "bad.csv"})
    assert run(rule, None, storage=st).status == "breach"


def test_non_file_rule_requires_current():
    rule = Rule.of("p", "positive_only", {"column": "v"})
    with pytest.raises(UnknownRule):
        run(rule, None)


# --- rule construction / validation ---------------------------------------------------


def test_rule_of_validates_params():
    with pytest.raises(UnknownRule):
        Rule.of("bad", "null_rate", {})  # missing max_pct and column
    with pytest.raises(UnknownRule):
        Rule.of("bad", "no_such_kind", {})
    with pytest.raises(UnknownRule):
        Rule.of("bad", "null_rate", {"column": "v", "max_pct": 120})


def test_validate_params_lists_every_problem():
    problems = validate_params("null_rate", {"max_pct": 150, "bogus": 1})
    assert len(problems) == 3  # over-range, unknown key, no column selector


def test_default_assertion_mentions_threshold():
    text = default_assertion("null_rate", {"column": "v", "max_pct": 5.0})
    assert "5.0" in text and "v" in text


def test_custom_assertion_is_echoed_verbatim():
    rule = Rule.of("n", "positive_only", {"column": "v"},
                   assertion="Prices must never be negative")
    got = run(rule, make_ds(v=[1.0]))
    assert got.threshold_echo == "Prices must never be negative"


def test_break_the_process_flag_carried():
    rule = Rule.of("n", "positive_only", {"column": "v"},
                   break_the_process=True)
    assert rule.break_the_process is True


# --- evaluate_suite --------------------------------------------------------------------


def test_suite_isolates_rule_failures():
    ds = make_ds(v=[1.0])
    suite = [
        Rule.of("ok", "positive_only", {"column": "v"}),
        Rule.of("boom", "mean_delta", {"column": "v", "max_pct_change": 5}),
        Rule.of("ok2", "row_count", {"min": 1, "max": 1}),
    ]
    results = evaluate_suite(ds, None, suite, now=FROZEN_NOW)
    assert [r.status for r in results] == ["pass", "error", "pass"]
    assert "MissingPreviousDay" in results[1].error


def test_suite_preserves_order_and_is_deterministic():
    ds = make_ds(v=[1.0, -2.0])
    suite = [Rule.of("a", "positive_only", {"column": "v"}),
             Rule.of("b", "row_count", {"min": 0, "max": 99})]
    r1 = evaluate_suite(ds, None, suite, now=FROZEN_NOW)
    r2 = evaluate_suite(ds, None, suite, now=FROZEN_NOW)
    assert r1 == r2
    assert [r.rule_name for r in r1] == ["a", "b"]


def test_empty_suite_rejected():
    with pytest.raises(EmptySuite):
        evaluate_suite(make_ds(v=[1.0]), None, [])


def test_unknown_column_becomes_error_result():
    ds = make_ds(v=[1.0])
    suite = [Rule.of("u", "unique", {"column": "nope"})]
    got = evaluate_suite(ds, None, suite, now=FROZEN_NOW)[0]
    assert got.status == "error" and "UnknownColumn" in got.error
