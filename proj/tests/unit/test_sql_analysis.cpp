#include <doctest.h>

#include <random>
#include <set>

#include "sqleval/errors.hpp"
#include "sqleval/sql/exact_match.hpp"
#include "sqleval/sql/normalize.hpp"
#include "sqleval/sql/parser.hpp"
#include "sqleval/sql/render.hpp"
#include "sqleval/sql/taxonomy.hpp"
#include "support/corpus.hpp"
#include "support/perturb.hpp"

using namespace sqleval;
using namespace sqleval::sql;
using sqleval::testing::demo_schema;
using sqleval::testing::load_corpus;

namespace {

const std::string kCorpus = std::string(SQLEVAL_TEST_DATA) + "/classifier_corpus.tsv";

NormalizedAst norm(const std::string& text, const SchemaInfo* schema = nullptr) {
  return normalize(parse_sql(text), schema);
}

}  // namespace

TEST_CASE("alias and case differences normalize away") {
  SchemaInfo schema{{"students", {"name", "age"}}};
  CHECK(norm("select T1.name from students as T1", &schema) == norm("SELECT name FROM students", &schema));
  CHECK(norm("SELECT a FROM r WHERE x=1 AND y=2") == norm("SELECT a FROM r WHERE y=2 AND x=1"));
  CHECK(norm("SELECT a FROM r WHERE 1 < x") == norm("SELECT a FROM r WHERE x > 1"));
  CHECK_FALSE(norm("SELECT a FROM r WHERE x=1") == norm("SELECT a FROM r WHERE x=2"));
}

TEST_CASE("unqualified column over several tables needs a schema") {
  const char* q = "SELECT name FROM students s JOIN enrollments e ON s.id = e.student_id";
  CHECK_THROWS_AS(norm(q), AmbiguousColumn);
  CHECK_NOTHROW(norm(q, &demo_schema("school")));
  SchemaInfo clash{{"students", {"id", "name"}}, {"enrollments", {"id", "name"}}};
  CHECK_THROWS_AS(norm(q, &clash), AmbiguousColumn);
}

TEST_CASE("feature extraction examples") {
  auto f = extract_features(parse_sql("SELECT * FROM r"));
  FeatureSet star;
  star.star_select = true;
  star.join_table_count = 1;
  CHECK(f == star);

  f = extract_features(parse_sql("SELECT a FROM r WHERE a IN (SELECT b FROM s)"));
  CHECK(f.in_subquery);
  CHECK(f.nesting_depth == 1);

  f = extract_features(parse_sql("SELECT e1.n FROM emp e1 JOIN emp e2 ON e1.m=e2.id"));
  CHECK(f.inner_join);
  CHECK(f.self_join);
  CHECK(f.join_table_count == 2);
}

TEST_CASE("classification examples") {
  CHECK(classify(parse_sql("SELECT name FROM students WHERE age > 20")).to_string() == "c1 1.3");
  CHECK(classify(parse_sql("SELECT d.name, COUNT(*) FROM emp e JOIN dept d ON e.did=d.id GROUP BY d.name"))
            .to_string() == "c3 3.5");
  CHECK(classify(parse_sql("SELECT name, RANK() OVER (PARTITION BY dept ORDER BY sal DESC) FROM emp")).to_string() ==
        "c6 6.3");
  CHECK(classify(parse_sql("SELECT 1")).to_string() == "c1 1.1");
}

TEST_CASE("taxonomy has 36 ordered entries") {
  const auto& t = taxonomy();
  CHECK(t.size() == 36);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i - 1].label < t[i].label);
  CHECK(TaxonomyLabel::parse("c4 4.2") == TaxonomyLabel{4, 2});
  CHECK(TaxonomyLabel::parse("4.2") == TaxonomyLabel{4, 2});
  CHECK(TaxonomyLabel{3, 6} < TaxonomyLabel{4, 1});
}

TEST_CASE("feature set invariants hold on the corpus") {
  for (const auto& e : load_corpus(kCorpus)) {
    CAPTURE(e.sql);
    auto f = extract_features(parse_sql(e.sql));
    if (f.self_join) CHECK((f.inner_join || f.outer_join));
    if (f.multi_cte) CHECK(f.cte);
    if (f.window_frame) CHECK(f.any_window());
  }
}

TEST_CASE("classifier agrees with the hand labels") {
  const auto corpus = load_corpus(kCorpus);
  REQUIRE(corpus.size() == 72);
  std::map<std::string, int> per_label;
  for (const auto& e : corpus) {
    CAPTURE(e.sql);
    CHECK(classify(parse_sql(e.sql)).subcategory_code() == e.label);
    ++per_label[e.label];
  }
  CHECK(per_label.size() == 36);
  for (const auto& [label, n] : per_label) CHECK(n == 2);
}

TEST_CASE("corpus round trips and normalization is idempotent") {
  for (const auto& e : load_corpus(kCorpus)) {
    CAPTURE(e.sql);
    const auto& schema = demo_schema(e.db_id);
    auto ast = parse_sql(e.sql);
    CHECK(parse_sql(render(ast)) == ast);
    auto once = normalize(ast, &schema);
    auto twice = normalize(once, &schema);
    CHECK(once == twice);
    CHECK(ast_fingerprint(once) == ast_fingerprint(twice));
    CHECK(parse_sql(render(once.ast)) == once.ast);
  }
}

TEST_CASE("corpus fingerprints are pairwise distinct") {
  std::vector<std::uint64_t> fps;
  for (const auto& e : load_corpus(kCorpus)) fps.push_back(ast_fingerprint(norm(e.sql, &demo_schema(e.db_id))));
  int collisions = 0;
  for (std::size_t i = 0; i < fps.size(); ++i)
    for (std::size_t j = i + 1; j < fps.size(); ++j) collisions += fps[i] == fps[j];
  CHECK(collisions == 0);
}

TEST_CASE("fingerprint is a fixed function of the canonical text") {
  // FNV-1a 64 of "SELECT r.a FROM r", computed by hand from the published constants.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : std::string("SELECT r.a FROM r")) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  CHECK(ast_fingerprint(norm("select A from R")) == h);
  CHECK(fingerprint_hex(0x1fULL) == "000000000000001f");
  CHECK(ast_fingerprint(norm("SELECT x.a FROM r x")) == ast_fingerprint(norm("SELECT y.a FROM r AS y")));
}

TEST_CASE("exact match examples") {
  auto q = [](const char* s) { return parse_sql(s); };
  auto r = exact_match(q("SELECT name FROM students WHERE age > 20"), q("select  S.NAME from students s where s.age>20"),
                       MatchMode::strict);
  CHECK(r.match);
  CHECK(r.diff.empty());

  auto a = q("SELECT name FROM students WHERE age > 20");
  auto b = q("SELECT name FROM students WHERE age > 30");
  CHECK(exact_match(a, b, MatchMode::spider_compatible).match);
  auto strict = exact_match(a, b, MatchMode::strict);
  CHECK_FALSE(strict.match);
  CHECK(strict.diff.components == std::vector<std::string>{"where-conjuncts"});

  auto c = exact_match(q("SELECT a,b FROM r"), q("SELECT b FROM r"), MatchMode::strict);
  CHECK_FALSE(c.match);
  CHECK(c.diff.components == std::vector<std::string>{"select-items"});
  CHECK(c.diff.to_json().dump() == R"(["select-items"])");

  auto d = exact_match(q("SELECT a FROM r ORDER BY a"), q("SELECT a FROM r ORDER BY a DESC"), MatchMode::strict);
  CHECK(d.diff.components == std::vector<std::string>{"order-by"});
  auto e = exact_match(q("SELECT a FROM r LIMIT 3"), q("SELECT a FROM r LIMIT 4"), MatchMode::spider_compatible);
  CHECK(e.match);
  auto f = exact_match(q("SELECT a FROM r UNION SELECT a FROM s"), q("SELECT a FROM r UNION SELECT b FROM s"),
                       MatchMode::strict);
  CHECK(f.diff.components == std::vector<std::string>{"right.select-items"});
  auto g = exact_match(q("SELECT a FROM r UNION SELECT a FROM s"), q("SELECT a FROM r INTERSECT SELECT a FROM s"),
                       MatchMode::strict);
  CHECK(g.diff.components == std::vector<std::string>{"set-operators"});
}

TEST_CASE("exact match is reflexive, symmetric and label preserving on the corpus") {
  const auto corpus = load_corpus(kCorpus);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& schema = demo_schema(corpus[i].db_id);
    auto a = parse_sql(corpus[i].sql);
    CHECK(exact_match(a, a, MatchMode::strict, &schema).match);
    for (std::size_t j = i + 1; j < corpus.size(); ++j) {
      if (corpus[j].db_id != corpus[i].db_id) continue;
      auto b = parse_sql(corpus[j].sql);
      for (auto mode : {MatchMode::strict, MatchMode::spider_compatible}) {
        auto ab = exact_match(a, b, mode, &schema);
        auto ba = exact_match(b, a, mode, &schema);
        CHECK(ab.match == ba.match);
        CHECK(ab.diff == ba.diff);
        if (ab.match && mode == MatchMode::strict) CHECK(classify(a) == classify(b));
      }
    }
  }
}

TEST_CASE("exact match survives layout, case and alias perturbation") {
  std::mt19937_64 rng(7);
  for (const auto& e : load_corpus(kCorpus)) {
    CAPTURE(e.sql);
    const auto& schema = demo_schema(e.db_id);
    auto gt = parse_sql(e.sql);
    const std::string aliased = sqleval::testing::perturb_aliases(e.sql);
    for (const auto& variant : {sqleval::testing::perturb_layout(e.sql, rng), aliased,
                                sqleval::testing::perturb_layout(aliased, rng)}) {
      CAPTURE(variant);
      auto r = exact_match(parse_sql(variant), gt, MatchMode::strict, &schema);
      CHECK(r.match);
      CHECK(r.diff.empty());
      CHECK(classify(parse_sql(variant)) == classify(gt));
    }
    auto [shifted, changed] = sqleval::testing::perturb_values(e.sql);
    if (changed > 0) {
      CAPTURE(shifted);
      CHECK(exact_match(parse_sql(shifted), gt, MatchMode::spider_compatible, &schema).match);
      CHECK_FALSE(exact_match(parse_sql(shifted), gt, MatchMode::strict, &schema).match);
    }
  }
}

TEST_CASE("wrapping in a set operator never lowers the category") {
  for (const auto& e : load_corpus(kCorpus)) {
    auto base = classify(parse_sql(e.sql));
    auto wrapped = classify(parse_sql("(" + e.sql + ") UNION SELECT 1"));
    CAPTURE(e.sql);
    CHECK(wrapped.category >= base.category);
    CHECK(wrapped.category >= 5);
  }
}
