#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "finext/errors.hpp"
#include "finext/extension.hpp"
#include "finext/rng.hpp"
#include "helpers.hpp"

using namespace finext;

namespace {

FiniteMetricSpace e1() {
  return FiniteMetricSpace({"x", "y"}, {{Scalar(0), Scalar(1)}, {Scalar(1), Scalar(0)}});
}

std::vector<PartialIsometry> e1_isos() { return {PartialIsometry{{1, -1}}}; }

}  // namespace

TEST_CASE("two points with one map extend to the equilateral triangle") {
  ExtensionResult r = extend_isometries(e1(), e1_isos());
  CHECK(r.quotient_order == 3);
  REQUIRE(r.classes.size() == 3);
  // Classes by minimal representative: {(x,0),(y,2)}, {(x,1),(y,0)}, {(x,2),(y,1)}.
  using Members = std::vector<std::pair<int, int>>;
  CHECK(r.classes[0] == Members{{0, 0}, {1, 2}});
  CHECK(r.classes[1] == Members{{0, 1}, {1, 0}});
  CHECK(r.classes[2] == Members{{0, 2}, {1, 1}});
  for (int c = 0; c < 3; ++c)
    for (int d = 0; d < 3; ++d)
      CHECK(r.d_Y[c][d] == (c == d ? Scalar(0) : Scalar(1)));
  CHECK(r.generator_perms[0] == std::vector<int>{1, 2, 0});
  CHECK(r.embedding == std::vector<int>{0, 1});
  // The extension restricts to the partial map on the embedded copy.
  CHECK(r.generator_perms[0][r.embedding[0]] == r.embedding[1]);
}

TEST_CASE("no partial maps leave the space unchanged") {
  FiniteMetricSpace space(
      {"a", "b", "c"},
      {{Scalar(0), Scalar(1), Scalar(2)},
       {Scalar(1), Scalar(0), Scalar(1)},
       {Scalar(2), Scalar(1), Scalar(0)}});
  ExtensionResult r = extend_isometries(space, {});
  CHECK(r.quotient_order == 1);
  REQUIRE(r.classes.size() == 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(r.d_Y[i][j] == space.d(i, j));
}

TEST_CASE("identity on a single point is already total") {
  FiniteMetricSpace space = e1();
  ExtensionResult r = extend_isometries(space, {PartialIsometry{{0, -1}}});
  CHECK(r.classes.size() == 2);
  CHECK(r.generator_perms[0] == std::vector<int>{0, 1});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(r.d_Y[i][j] == space.d(i, j));
}

TEST_CASE("certificate records signatures, witnesses and the quotient") {
  ExtensionResult r = extend_isometries(e1(), e1_isos());
  const ExtensionCertificate& cert = r.certificate;
  CHECK(cert.chain_bound == 2);
  CHECK(*cert.delta == Scalar(1));
  CHECK(cert.diameter == Scalar(1));
  CHECK(cert.chains_considered == static_cast<long>(cert.signatures.size()) * 2);
  bool found_nontrivial = false;
  for (const SignatureRecord& rec : cert.signatures) {
    if (rec.trivial) {
      Word prod;
      for (const Word& w : rec.witness) prod = prod * w;
      CHECK(prod.empty());
    } else {
      REQUIRE(rec.separation);
      CHECK(!rec.image_in_combined.contains_identity());
      found_nontrivial = true;
    }
  }
  CHECK(found_nontrivial);
}

TEST_CASE("chain oracle equals shortest paths on the two-point example") {
  FiniteMetricSpace space = e1();
  ExtensionResult r = extend_isometries(space, e1_isos());
  // (x, x, identity) is 0 by both routes.
  auto [v_xx, c_xx] =
      chain_oracle_distance(space, e1_isos(), r.quotient, 0, 0, 0, 1, 10);
  CHECK(v_xx == Scalar(0));
  CHECK(r.d_Y[r.class_of(0, 0)][r.class_of(0, 0)] == Scalar(0));
  // (x, y, identity) is the original distance by both routes.
  auto [v_xy, c_xy] =
      chain_oracle_distance(space, e1_isos(), r.quotient, 0, 1, 0, 1, 10);
  CHECK(v_xy == Scalar(1));
  CHECK(r.d_Y[r.class_of(0, 0)][r.class_of(1, 0)] == Scalar(1));
  REQUIRE(c_xy);
  CHECK(c_xy->pairs == ChainPairs{{1, 1}});
  // Every sampled triple agrees between the two routes.
  VerifyReport rep = verify_extension(space, e1_isos(), r);
  CHECK(rep.ok);
  CHECK(rep.triples_checked >= 12);
  CHECK(rep.inconclusive == 0);
}

TEST_CASE("budget exhaustion propagates with the last degree") {
  try {
    extend_isometries(e1(), e1_isos(), ExtensionBudget{10000, 2});
    FAIL("expected a budget error");
  } catch (const BudgetError& e) {
    CHECK(e.last_tried == 2);
  }
}

TEST_CASE("cancellation rewrite preserves distance and product") {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    testgen::MetricCorpusInstance inst = testgen::random_corpus_instance(rng);
    OrbitAutomaton aut = make_automaton(inst.space, inst.isometries);
    int n = inst.space.size();
    // Build two adjacent realizations w_1 = v_1 a and w_2 = a^-1 v_2.
    int g = 1;
    int z1 = -1, t = -1;
    for (int x = 0; x < n && z1 < 0; ++x)
      if (aut.step(x, g) >= 0) {
        z1 = x;
        t = aut.step(x, g);
      }
    if (z1 < 0) continue;
    // v_1: any short word defined at t; v_2: any short word whose image
    // under a^-1 exists.
    std::vector<int> v1 = {};
    int z1p = t;
    int s = aut.step(t, g);  // point with a^-1(s) = t defined
    if (s < 0) continue;
    int z2 = t;  // v_2 = a maps z2 = t to s, then a^-1 brings it back to t
    std::vector<int> w1 = {g};             // v_1 empty, w_1 = a
    std::vector<int> w2 = {-g, g};         // w_2 = a^-1 v_2 with v_2 = a
    int z2p = *aut.apply_letters(w2, z2);
    int z0 = static_cast<int>(rng.below(n));
    Chain before{z0, {{z1, z1p}, {z2, z2p}}};
    // Rewrite: y_1 = a(z_1), realizations become v_1 = e and v_2 = a.
    Chain after{z0, {{t, z1p}, {z2, s}}};
    validate_chain(inst.space, aut, before);
    validate_chain(inst.space, aut, after);
    CHECK(chain_distance(inst.space, before) == chain_distance(inst.space, after));
    Word before_prod = Word::reduce(w1, 1) * Word::reduce(w2, 1);
    Word after_prod = Word::reduce({}, 1) * Word::reduce({g}, 1);
    CHECK(before_prod == after_prod);
  }
}

TEST_CASE("random corpus instances satisfy the extension contract") {
  Rng rng(4242);
  int built = 0;
  for (int trial = 0; trial < 12; ++trial) {
    testgen::MetricCorpusInstance inst = testgen::random_corpus_instance(rng);
    ExtensionResult r;
    try {
      r = extend_isometries(inst.space, inst.isometries);
    } catch (const BudgetError&) {
      continue;  // reported, never silent; checked in the acceptance suite
    }
    ++built;
    // d_Y is capped by the diameter and extends the original metric.
    for (const auto& row : r.d_Y)
      for (const Scalar& v : row) CHECK(v <= inst.space.diameter());
    for (int x = 0; x < inst.space.size(); ++x)
      for (int y = 0; y < inst.space.size(); ++y)
        CHECK(r.d_Y[r.embedding[x]][r.embedding[y]] == inst.space.d(x, y));
    VerifyReport rep = verify_extension(inst.space, inst.isometries, r);
    CHECK(rep.ok);
  }
  CHECK(built > 0);
}
