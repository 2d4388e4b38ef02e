#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "finext/errors.hpp"
#include "finext/freegroup.hpp"
#include "finext/rng.hpp"

using namespace finext;

namespace {

// X = {x, y}, one partial isometry x -> y.
OrbitAutomaton e1_automaton() { return OrbitAutomaton(2, {{1, -1}}); }

FiniteQuotient z3() { return FiniteQuotient({3}, {{{1, 2, 0}}}); }

// Image set of {w : w(x) = y} by direct word enumeration up to a length
// bound; independent of the BFS in orbit_image.
std::set<FiniteQuotient::Element> image_by_enumeration(const OrbitAutomaton& aut,
                                                       const FiniteQuotient& q,
                                                       int x, int y, int max_len) {
  std::set<FiniteQuotient::Element> out;
  std::vector<int> letters;
  auto rec = [&](auto&& self) -> void {
    auto end = aut.apply_letters(letters, x);
    if (end && *end == y)
      out.insert(q.image(Word::reduce(letters, aut.n_generators())));
    if (static_cast<int>(letters.size()) == max_len) return;
    for (int g = 1; g <= aut.n_generators(); ++g)
      for (int l : {g, -g}) {
        letters.push_back(l);
        self(self);
        letters.pop_back();
      }
  };
  rec(rec);
  return out;
}

std::vector<int> random_letters(Rng& rng, int n_gens, int len) {
  std::vector<int> out;
  for (int i = 0; i < len; ++i) {
    int g = static_cast<int>(rng.range(1, n_gens));
    out.push_back(rng.below(2) ? g : -g);
  }
  return out;
}

}  // namespace

TEST_CASE("free reduction") {
  CHECK(Word::reduce({1, -1}, 2).empty());
  CHECK(Word::reduce({1, 2, -2, 1}, 2).letters() == std::vector<int>{1, 1});
  CHECK_THROWS_AS(Word::reduce({3}, 2), InputError);
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    std::vector<int> raw = random_letters(rng, 2, 12);
    Word w = Word::reduce(raw, 2);
    // Idempotent, and the length drops by an even amount.
    CHECK(Word::reduce(w.letters(), 2) == w);
    CHECK((raw.size() - w.size()) % 2 == 0);
  }
}

TEST_CASE("word action applies the rightmost letter first") {
  OrbitAutomaton aut = e1_automaton();
  CHECK(aut.apply(Word::reduce({1}, 1), 0) == 1);
  CHECK(!aut.apply(Word::reduce({1}, 1), 1));
  // a1^-1 a1 sends x to x, stepwise: a1 first, then its inverse.
  CHECK(aut.apply_letters({-1, 1}, 0) == 0);
  CHECK(!aut.apply_letters({1, 1}, 0));
}

TEST_CASE("orbit images match direct enumeration") {
  OrbitAutomaton aut = e1_automaton();
  FiniteQuotient q = z3();
  QuotientSubset xy = orbit_image(aut, q, 0, 1, 100);
  CHECK(xy.indices == std::vector<int>{1});
  QuotientSubset xx = orbit_image(aut, q, 0, 0, 100);
  CHECK(xx.indices == std::vector<int>{0});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      auto brute = image_by_enumeration(aut, q, a, b, 8);
      QuotientSubset fast = orbit_image(aut, q, a, b, 100);
      std::set<int> brute_idx;
      for (const auto& e : brute) brute_idx.insert(q.index_of(e, 100));
      CHECK(std::set<int>(fast.indices.begin(), fast.indices.end()) == brute_idx);
    }
  // Unreachable pair on a disconnected point.
  OrbitAutomaton aut3(3, {{1, -1, -1}});
  CHECK(orbit_image(aut3, q, 0, 2, 100).indices.empty());
}

TEST_CASE("quotient materialization and budgets") {
  FiniteQuotient q = z3();
  CHECK(q.order(100) == 3);
  CHECK(q.elements(100)[0] == q.identity());
  CHECK_THROWS_AS(FiniteQuotient(z3()).materialize(2), BudgetError);
  FiniteQuotient t = FiniteQuotient::trivial(2);
  CHECK(t.order(10) == 1);
}

TEST_CASE("triviality by saturation, with verified witnesses") {
  OrbitAutomaton aut = e1_automaton();
  // (x,y) then (y,x): realization (a1, a1^-1), product reduces to e.
  TrivialityResult t = benois_trivial(aut, {{0, 1}, {1, 0}});
  CHECK(t.trivial);
  REQUIRE(t.witness.size() == 2);
  Word product = t.witness[0] * t.witness[1];
  CHECK(product.empty());
  CHECK(aut.apply(t.witness[0], 0) == 1);
  CHECK(aut.apply(t.witness[1], 1) == 0);

  // Single pair (x,y): the product set is {a1}, so no identity.
  TrivialityResult s = benois_trivial(aut, {{0, 1}});
  CHECK(!s.trivial);
  CHECK(!bounded_factorization(aut, {{0, 1}}, 8).conclusive);

  // Single pair (x,x): the empty word realizes.
  TrivialityResult r = benois_trivial(aut, {{0, 0}});
  CHECK(r.trivial);
  REQUIRE(r.witness.size() == 1);
  CHECK(r.witness[0].empty());
}

TEST_CASE("saturation agrees with the bounded factorization oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    int n_points = static_cast<int>(rng.range(2, 4));
    int n_gens = static_cast<int>(rng.range(1, 2));
    std::vector<std::vector<int>> fwd(n_gens, std::vector<int>(n_points, -1));
    for (int g = 0; g < n_gens; ++g) {
      int x = static_cast<int>(rng.below(n_points));
      int y = static_cast<int>(rng.below(n_points));
      fwd[g][x] = y;
    }
    OrbitAutomaton aut(n_points, fwd);
    auto reachable = aut.reachable_pairs();
    int m = static_cast<int>(rng.range(1, 3));
    ChainPairs pairs;
    for (int i = 0; i < m; ++i) pairs.push_back(reachable[rng.below(reachable.size())]);
    TrivialityResult t = benois_trivial(aut, pairs);
    FactorizationOracle oracle = bounded_factorization(aut, pairs, 8);
    if (oracle.conclusive) {
      CHECK(t.trivial);
      Word prod;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(aut.apply(oracle.witness[i], pairs[i].first) == pairs[i].second);
        prod = prod * oracle.witness[i];
      }
      CHECK(prod.empty());
    }
    if (t.trivial) {
      // Witness re-verification.
      Word prod;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(aut.apply(t.witness[i], pairs[i].first) == pairs[i].second);
        prod = prod * t.witness[i];
      }
      CHECK(prod.empty());
    }
  }
}

TEST_CASE("canonical separation search") {
  OrbitAutomaton aut = e1_automaton();
  // Product {a1}: the first success is the degree-2 transposition.
  SeparationResult s1 = separate_chain(aut, {{0, 1}}, SeparationBudget{});
  CHECK(s1.quotient.degrees() == std::vector<int>{2});
  CHECK(s1.quotient.generator_images()[0][0] == std::vector<int>{1, 0});
  CHECK(s1.tried_degrees == std::vector<int>{1, 2});
  CHECK(!s1.product_image.contains_identity());

  // Product {a1^2}: the transposition fails, the first 3-cycle wins.
  SeparationResult s2 = separate_chain(aut, {{0, 1}, {0, 1}}, SeparationBudget{});
  CHECK(s2.quotient.degrees() == std::vector<int>{3});
  CHECK(s2.quotient.generator_images()[0][0] == std::vector<int>{1, 2, 0});
  CHECK(s2.tried_degrees == std::vector<int>{1, 2, 3});

  // Trivial chains cannot be separated.
  CHECK_THROWS_WITH_AS(separate_chain(aut, {{0, 0}}, SeparationBudget{}),
                       "cannot separate: identity lies in product", InputError);

  // Exhausted budget carries the last degree tried.
  try {
    separate_chain(aut, {{0, 1}, {0, 1}}, SeparationBudget{10000, 2});
    FAIL("expected a budget error");
  } catch (const BudgetError& e) {
    CHECK(e.last_tried == 2);
  }
}

TEST_CASE("combining quotients") {
  FiniteQuotient z2({2}, {{{1, 0}}});
  FiniteQuotient combined1 = combine_quotients({z2}, 1, 1000);
  CHECK(combined1.order(1000) == 2);
  FiniteQuotient combined2 = combine_quotients({z2, z3()}, 1, 1000);
  CHECK(combined2.degrees() == std::vector<int>{2, 3});
  CHECK(combined2.order(1000) == 6);
  FiniteQuotient none = combine_quotients({}, 1, 1000);
  CHECK(none.order(1000) == 1);
}

TEST_CASE("image sets compose along orbits") {
  Rng rng(47);
  for (int trial = 0; trial < 25; ++trial) {
    int n_points = 3;
    std::vector<std::vector<int>> fwd(2, std::vector<int>(n_points, -1));
    for (int g = 0; g < 2; ++g) {
      int x = static_cast<int>(rng.below(n_points));
      int y = static_cast<int>(rng.below(n_points));
      fwd[g][x] = y;
    }
    OrbitAutomaton aut(n_points, fwd);
    std::vector<std::vector<int>> perms{{1, 0, 2}, {0, 2, 1}};
    FiniteQuotient q({3, 3}, {{perms[0], perms[1]}, {perms[1], perms[0]}});
    long budget = 10000;
    for (int x = 0; x < n_points; ++x)
      for (int y = 0; y < n_points; ++y)
        for (int z = 0; z < n_points; ++z) {
          QuotientSubset xy = orbit_image(aut, q, x, y, budget);
          QuotientSubset yz = orbit_image(aut, q, y, z, budget);
          QuotientSubset xz = orbit_image(aut, q, x, z, budget);
          QuotientSubset prod = subset_product(q, yz, xy, budget);
          for (int idx : prod.indices)
            CHECK(std::binary_search(xz.indices.begin(), xz.indices.end(), idx));
        }
    // T_x^x maps to a subgroup image: identity, closed under product/inverse.
    for (int x = 0; x < n_points; ++x) {
      QuotientSubset xx = orbit_image(aut, q, x, x, budget);
      CHECK(xx.contains_identity());
      CHECK(subset_product(q, xx, xx, budget) == xx);
    }
  }
}
