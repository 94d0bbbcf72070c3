#include <catch2/catch_amalgamated.hpp>

#include "support/gen.hpp"
#include "xordy/term.hpp"

using namespace xordy;

TEST_CASE("xor normalization: nilpotence, unit, flattening") {
  TermArena a;
  TermId na = a.name("a"), nb = a.name("b"), nc = a.name("c");
  TermId k = a.key("k");

  CHECK(a.xor_of({na, na}) == a.zero());
  CHECK(a.senc(a.xor_of({na, nb, na}), k) == a.senc(nb, k));
  CHECK(a.xor_of({a.xor_of({na, nb}), a.xor_of({nb, nc})}) == a.xor_of({na, nc}));

  CHECK(a.xor_of({na}) == na);
  CHECK(a.xor_of(std::initializer_list<TermId>{}) == a.zero());
  CHECK(a.xor_of({na, a.zero()}) == na);
  CHECK(a.xor_of({a.zero(), a.zero()}) == a.zero());

  // Canonical child order, no nested xor, no duplicates, no 0.
  TermId t = a.xor_of({a.senc(na, k), nb, a.xor_of({na, nc})});
  const TermNode& n = a.node(t);
  REQUIRE(n.shape == Shape::Xor);
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    CHECK(a.shape(n.children[i]) != Shape::Xor);
    CHECK(n.children[i] != a.zero());
    if (i + 1 < n.children.size()) CHECK(a.compare(n.children[i], n.children[i + 1]) < 0);
  }
}

TEST_CASE("factors") {
  TermArena a;
  TermId na = a.name("a"), nb = a.name("b");
  TermId k = a.key("k");
  CHECK(a.factors(a.pair(na, nb)) == std::vector<TermId>{a.pair(na, nb)});
  TermId x = a.xor_of({na, a.senc(nb, k)});
  auto fs = a.factors(x);
  std::sort(fs.begin(), fs.end());
  std::vector<TermId> want{na, a.senc(nb, k)};
  std::sort(want.begin(), want.end());
  CHECK(fs == want);
  CHECK(a.factors(a.zero()) == std::vector<TermId>{a.zero()});
}

TEST_CASE("subterms and dag size") {
  TermArena a;
  TermId na = a.name("a"), nb = a.name("b");
  TermId k = a.key("k");

  std::vector<TermId> st_pk = a.subterms(a.pk(k));
  std::vector<TermId> want_pk{a.pk(k), k};
  std::sort(want_pk.begin(), want_pk.end());
  CHECK(st_pk == want_pk);
  CHECK(a.subterms(na) == std::vector<TermId>{na});

  TermId x = a.xor_of({na, a.senc(nb, k)});
  std::vector<TermId> want_x{x, na, a.senc(nb, k), nb, k};
  std::sort(want_x.begin(), want_x.end());
  CHECK(a.subterms(x) == want_x);

  CHECK(a.dag_size(na) == 1);
  CHECK(a.dag_size(a.pair(na, na)) == 2);
  std::vector<TermId> set{a.pk(k), k};
  CHECK(a.dag_size(std::span<const TermId>(set)) == 2);
}

TEST_CASE("substitution application") {
  TermArena a;
  TermId na = a.name("a"), nb = a.name("b");
  TermId k = a.key("k");
  TermId x = a.variable("x"), y = a.variable("y");

  Substitution s;
  s.bind(x, na);
  CHECK(apply(a, a.xor_of({x, na}), s) == a.zero());
  Substitution s2;
  s2.bind(x, nb);
  CHECK(apply(a, a.senc(x, k), s2) == a.senc(nb, k));
  CHECK(apply(a, y, s) == y);

  s.unbind(x);
  CHECK(apply(a, x, s) == x);

  Substitution g;
  g.bind(x, a.pair(na, na));
  g.bind(y, na);
  CHECK(g.is_ground(a));
  CHECK(g.dag_size(a) == 2);  // pair(a,a) and a, shared
}

TEST_CASE("canonical order") {
  TermArena a;
  TermId na = a.name("a"), nb = a.name("b");
  CHECK(a.compare(na, na) == 0);
  CHECK(a.compare(na, nb) < 0);
  CHECK(a.compare(na, a.pair(na, nb)) < 0);  // atoms before composites
  CHECK(a.compare(a.pair(na, nb), na) > 0);
}

TEST_CASE("builder guards") {
  TermArena a;
  TermId na = a.name("a");
  TermId k = a.key("k");
  CHECK_THROWS_AS(a.pk(na), std::invalid_argument);
  CHECK_THROWS_AS(a.aenc(na, k), std::invalid_argument);
  CHECK_THROWS_AS(a.key("a"), std::invalid_argument);  // label already a name
  CHECK_NOTHROW(a.aenc(na, a.pk(k)));
}

TEST_CASE("randomized: idempotence, AC invariance, nilpotence, unit") {
  TermArena a;
  testgen::Rng rng(101);
  testgen::TermGen tg{a, rng};
  for (int i = 0; i < 1500; ++i) {
    RawTerm raw = tg.raw(3);
    TermId t = normalize(a, raw);
    CHECK(normalize(a, testgen::to_raw(a, t)) == t);       // idempotence
    CHECK(normalize(a, testgen::scramble(rng, raw)) == t);  // AC invariance
    CHECK(a.xor_of({t, t}) == a.zero());                    // nilpotence
    CHECK(a.xor_of({t, a.zero()}) == t);                    // unit
  }
}

TEST_CASE("randomized: substitution commutes with xor normalization") {
  TermArena a;
  testgen::Rng rng(202);
  testgen::TermGen tg{a, rng};
  tg.with_vars = true;
  for (int i = 0; i < 400; ++i) {
    std::vector<TermId> parts;
    std::size_t n = 1 + rng.below(4);
    for (std::size_t j = 0; j < n; ++j) parts.push_back(tg.standard_term(2));
    Substitution sigma = tg.ground_subst(parts, 2);

    TermId lhs = apply(a, a.xor_of(parts), sigma);
    std::vector<TermId> mapped;
    for (TermId p : parts) mapped.push_back(apply(a, p, sigma));
    CHECK(lhs == a.xor_of(mapped));
  }
}

TEST_CASE("randomized: subterm sets are subterm-closed") {
  TermArena a;
  testgen::Rng rng(303);
  testgen::TermGen tg{a, rng};
  for (int i = 0; i < 200; ++i) {
    TermId t = tg.term(3);
    std::vector<TermId> st = a.subterms(t);
    for (TermId u : st) {
      std::vector<TermId> su = a.subterms(u);
      CHECK(std::includes(st.begin(), st.end(), su.begin(), su.end()));
    }
  }
}
