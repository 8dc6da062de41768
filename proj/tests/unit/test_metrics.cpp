#include <doctest.h>

#include <cmath>

#include "sqleval/metrics/metrics.hpp"

using namespace sqleval;
using namespace sqleval::metrics;
using data::Cell;
using data::ResultTable;

namespace {

ResultTable table(std::vector<std::string> cols, std::vector<data::Row> rows, bool ordered = false) {
  ResultTable t;
  t.columns = std::move(cols);
  t.rows = std::move(rows);
  t.ordered = ordered;
  return t;
}

Cell i(std::int64_t v) { return v; }
Cell s(const char* v) { return std::string(v); }
Cell r(double v) { return v; }

}  // namespace

TEST_CASE("bag semantics and order sensitivity") {
  auto a = table({"n", "c"}, {{i(1), s("a")}, {i(2), s("b")}});
  auto b = table({"n", "c"}, {{i(2), s("b")}, {i(1), s("a")}});
  CHECK(compare_result_tables(a, b));
  b.ordered = true;
  CHECK_FALSE(compare_result_tables(a, b));
  ComparisonPolicy relaxed;
  relaxed.order_sensitive_iff_gt_ordered = false;
  CHECK(compare_result_tables(a, b, relaxed));
  // duplicates matter
  auto dup = table({"n", "c"}, {{i(1), s("a")}, {i(1), s("a")}, {i(2), s("b")}});
  CHECK_FALSE(compare_result_tables(dup, a));
}

TEST_CASE("float tolerance") {
  // |3.1415926 - 3.1415927| / 3.1415927 ~= 3.2e-8, below 1e-6.
  const double ratio = std::fabs(3.1415926 - 3.1415927) / 3.1415927;
  CHECK(ratio < 1e-6);
  CHECK(ratio > 3.1e-8);
  CHECK(cells_equal(r(3.1415926), r(3.1415927), {}));
  CHECK_FALSE(cells_equal(r(3.14), r(3.15), {}));
  CHECK(cells_equal(r(0.0), r(1e-10), {}));
  CHECK_FALSE(cells_equal(r(0.0), r(1e-8), {}));
  CHECK(cells_equal(i(2), r(2.0), {}));
  CHECK_FALSE(cells_equal(s("1"), i(1), {}));
  CHECK(cells_equal(Cell{}, Cell{}, {}));
  ComparisonPolicy strict_null;
  strict_null.null_equals_null = false;
  CHECK_FALSE(cells_equal(Cell{}, Cell{}, strict_null));
  ComparisonPolicy exact;
  exact.float_rel_tol = 0;
  exact.float_abs_tol = 0;
  CHECK_FALSE(cells_equal(r(3.1415926), r(3.1415927), exact));
}

TEST_CASE("near-equal reals that sort differently still match") {
  auto a = table({"x", "y"}, {{r(1.0000000001), s("b")}, {r(1.0), s("a")}});
  auto b = table({"x", "y"}, {{r(1.0), s("b")}, {r(1.0000000001), s("a")}});
  CHECK(compare_result_tables(a, b));
}

TEST_CASE("column order policy") {
  auto gt = table({"name", "age"}, {{s("x"), i(3)}, {s("y"), i(4)}});
  auto swapped = table({"age", "name"}, {{i(3), s("x")}, {i(4), s("y")}});
  CHECK_FALSE(compare_result_tables(swapped, gt));
  ComparisonPolicy loose;
  loose.column_order_sensitive = false;
  CHECK(compare_result_tables(swapped, gt, loose));
  auto orders = matching_column_orders(swapped, gt, {});
  REQUIRE(orders.size() == 1);
  CHECK(orders[0] == std::vector<std::size_t>{1, 0});
}

TEST_CASE("execution accuracy") {
  auto gt = table({"a"}, {{i(1)}});
  ExecOutcome failed{std::nullopt, "no such table", false};
  auto o = execution_accuracy(failed, gt);
  CHECK_FALSE(o.passed());
  CHECK_FALSE(o.absent());
  CHECK(o.detail == "execution failed");
  CHECK(execution_accuracy(ExecOutcome{gt, "", false}, gt).passed());
  auto wide = table({"a", "b"}, {{i(1), i(2)}});
  CHECK_FALSE(execution_accuracy(ExecOutcome{wide, "", false}, gt).passed());
}

TEST_CASE("complexity consistency") {
  using sql::TaxonomyLabel;
  CHECK(complexity_consistency(TaxonomyLabel{1, 3}, TaxonomyLabel{4, 1}).passed());
  CHECK_FALSE(complexity_consistency(TaxonomyLabel{3, 1}, TaxonomyLabel{2, 6}).passed());
  CHECK(complexity_consistency(TaxonomyLabel{4, 2}, TaxonomyLabel{4, 6}).passed());
  auto unparsable = complexity_consistency(std::nullopt, TaxonomyLabel{4, 6});
  CHECK_FALSE(unparsable.passed());
  CHECK(unparsable.detail == "unparsable");
  // monotone in the ground-truth category
  for (int g = 1; g <= 6; ++g)
    for (int t = 1; t < 6; ++t)
      if (complexity_consistency(TaxonomyLabel{g, 1}, TaxonomyLabel{t, 1}).passed())
        CHECK(complexity_consistency(TaxonomyLabel{g, 1}, TaxonomyLabel{t + 1, 1}).passed());
}

TEST_CASE("execution time consistency") {
  auto t = [](double ms, bool timeout = false) {
    data::TimingStats s;
    s.samples = {ms};
    s.median_ms = ms;
    s.timeout = timeout;
    return s;
  };
  CHECK(execution_time_consistency(t(120), t(100), 1.0).passed());
  CHECK_FALSE(execution_time_consistency(t(201), t(100), 1.0).passed());
  CHECK_FALSE(execution_time_consistency(t(0, true), t(100), 1.0).passed());
  CHECK(execution_time_consistency(t(1.8), t(0.01), 1.0, 1.0).passed());
  CHECK(execution_time_consistency(t(5), t(5), 0.0).passed());
  CHECK(execution_time_consistency(t(1e9), t(1), INFINITY).passed());
}

TEST_CASE("token usage") {
  gateway::GenerationRecord rec;
  rec.input_tokens = 812;
  rec.output_tokens = 45;
  CHECK(token_usage(rec).count() == 857);
  CHECK(token_usage(rec).detail.is_null());
  gateway::GenerationRecord approx;
  approx.prompt_chars = 30;
  approx.response_chars = 10;
  CHECK(token_usage(approx).count() == 10);
  CHECK(token_usage(approx).detail == "approximate");
  gateway::GenerationRecord empty;
  empty.input_tokens = 100;
  empty.output_tokens = 0;
  CHECK(token_usage(empty).count() == 100);
  gateway::GenerationRecord odd;
  odd.prompt_chars = 41;
  CHECK(token_usage(odd).count() == 11);
}

TEST_CASE("exact match outcome") {
  CHECK(exact_match_outcome("SELECT a FROM r", "select A from R", sql::MatchMode::strict).passed());
  auto bad = exact_match_outcome("SELEC a", "SELECT a FROM r", sql::MatchMode::strict);
  CHECK_FALSE(bad.passed());
  auto diff = exact_match_outcome("SELECT a, b FROM r", "SELECT b FROM r", sql::MatchMode::strict);
  CHECK(diff.detail == nlohmann::json::array({"select-items"}));
}

TEST_CASE("outcomes round trip through json") {
  MetricOutcome a{Metric::EA, true, {}};
  MetricOutcome b{Metric::TU, std::int64_t{12}, "approximate"};
  MetricOutcome c{Metric::ETC, {}, "ground truth failed"};
  for (const auto& o : {a, b, c}) CHECK(outcome_from_json(to_json(o)) == o);
  CHECK(outcome_from_json(to_json(c)).absent());
}

TEST_CASE("comparison is an equivalence at zero tolerance") {
  ComparisonPolicy p;
  p.float_rel_tol = 0;
  p.float_abs_tol = 0;
  std::vector<ResultTable> ts = {
      table({"a"}, {{i(1)}, {i(2)}}), table({"a"}, {{i(2)}, {i(1)}}), table({"a"}, {{i(2)}, {i(2)}}),
      table({"a"}, {{r(1.0)}, {i(2)}}), table({"a"}, {{Cell{}}, {i(2)}}),
  };
  for (const auto& x : ts) {
    CHECK(compare_result_tables(x, x, p));
    for (const auto& y : ts) {
      CHECK(compare_result_tables(x, y, p) == compare_result_tables(y, x, p));
      for (const auto& z : ts)
        if (compare_result_tables(x, y, p) && compare_result_tables(y, z, p)) CHECK(compare_result_tables(x, z, p));
    }
  }
}
