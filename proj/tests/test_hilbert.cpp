#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "finext/errors.hpp"
#include "finext/hilbert.hpp"
#include "finext/rng.hpp"
#include "helpers.hpp"

using namespace finext;

namespace {

Vec v3(long a, long b, long c) { return Vec{Scalar(a), Scalar(b), Scalar(c)}; }

QuadraticSpace std3() { return QuadraticSpace(3, mat_identity(3)); }

}  // namespace

TEST_CASE("positive definiteness is checked exactly") {
  CHECK_NOTHROW(QuadraticSpace(2, {{Scalar(2), Scalar(1)}, {Scalar(1), Scalar(2)}}));
  CHECK_THROWS_AS(QuadraticSpace(2, {{Scalar(1), Scalar(2)}, {Scalar(2), Scalar(1)}}),
                  InputError);
  CHECK_THROWS_AS(QuadraticSpace(2, {{Scalar(1), Scalar(1)}, {Scalar(2), Scalar(1)}}),
                  InputError);  // asymmetric
  // 1 + sqrt(2)/2 > 0 keeps a quadratic diagonal positive definite.
  Scalar bump = Scalar::quadratic(1, mpq_class(1, 2), 2);
  CHECK_NOTHROW(QuadraticSpace(2, {{bump, Scalar(0)}, {Scalar(0), Scalar(1)}}));
}

TEST_CASE("orthogonalization is exact and span-preserving") {
  QuadraticSpace s = std3();
  auto gs = gram_schmidt(s, {v3(1, 1, 0), v3(0, 1, 1)});
  CHECK(gs[0] == v3(1, 1, 0));
  CHECK(gs[1] == Vec{Scalar(-1, 2), Scalar(1, 2), Scalar(1)});
  CHECK(s.inner(gs[0], gs[1]).is_zero());

  auto same = gram_schmidt(s, {v3(1, 0, 0), v3(0, 1, 0)});
  CHECK(same[0] == v3(1, 0, 0));
  CHECK(same[1] == v3(0, 1, 0));

  auto single = gram_schmidt(s, {v3(2, 3, 5)});
  CHECK(single[0] == v3(2, 3, 5));

  CHECK_THROWS_AS(gram_schmidt(s, {v3(1, 1, 0), v3(2, 2, 0)}), InputError);

  // Change of basis is unit triangular: output[i] - input[i] lies in the
  // span of the earlier inputs.
  Rng rng(64);
  for (int trial = 0; trial < 20; ++trial) {
    Subspace u = testgen::random_subspace(s, rng, 2);
    auto out = gram_schmidt(s, u.basis);
    Vec diff = Vec{out[1][0] - u.basis[1][0], out[1][1] - u.basis[1][1],
                   out[1][2] - u.basis[1][2]};
    auto coords = coordinates_in(s, {u.basis[0]}, diff);
    CHECK(coords.has_value());
  }
}

TEST_CASE("reflection extension swaps basis vectors") {
  QuadraticSpace s = std3();
  WittResult w = witt_extend(
      s, PartialLinearIsometry{Subspace{{v3(1, 0, 0)}}, Subspace{{v3(0, 1, 0)}}});
  CHECK(w.reflection_vectors.size() == 1);
  CHECK(mat_vec(w.matrix, v3(1, 0, 0)) == v3(0, 1, 0));
  CHECK(mat_vec(w.matrix, v3(0, 1, 0)) == v3(1, 0, 0));
  CHECK(mat_vec(w.matrix, v3(0, 0, 1)) == v3(0, 0, 1));

  WittResult id = witt_extend(
      s, PartialLinearIsometry{Subspace{{v3(1, 0, 0), v3(0, 1, 0)}},
                               Subspace{{v3(1, 0, 0), v3(0, 1, 0)}}});
  CHECK(id.matrix == mat_identity(3));
  CHECK(id.reflection_vectors.empty());

  WittResult two = witt_extend(
      s, PartialLinearIsometry{Subspace{{v3(1, 1, 0)}}, Subspace{{v3(0, 1, 1)}}});
  CHECK(two.reflection_vectors.size() <= 2);
  Mat check = mat_mul(mat_transpose(two.matrix), mat_mul(s.gram(), two.matrix));
  CHECK(check == s.gram());

  CHECK_THROWS_AS(
      witt_extend(s, PartialLinearIsometry{Subspace{{v3(1, 0, 0)}},
                                           Subspace{{v3(1, 1, 0)}}}),
      InputError);  // norms differ
}

TEST_CASE("random exact maps extend with exact Gram identities") {
  Rng rng(2718);
  int done = 0;
  for (int trial = 0; trial < 40; ++trial) {
    int dim = 2 + trial % 4;
    QuadraticSpace space(dim, testgen::random_gram(rng, dim, trial % 5 == 0));
    PartialLinearIsometry phi = testgen::random_partial_map(space, rng);
    WittResult w = witt_extend(space, phi);
    Mat gram_check =
        mat_mul(mat_transpose(w.matrix), mat_mul(space.gram(), w.matrix));
    CHECK(gram_check == space.gram());
    for (std::size_t i = 0; i < phi.domain.basis.size(); ++i)
      CHECK(mat_vec(w.matrix, phi.domain.basis[i]) == phi.codomain.basis[i]);
    for (const Vec& rv : w.reflection_vectors) {
      Mat r = reflection_matrix(space, rv);
      CHECK(mat_mul(r, r) == mat_identity(dim));
    }
    ++done;
  }
  CHECK(done == 40);
}

TEST_CASE("orthogonal amalgam finds a perpendicular copy") {
  QuadraticSpace s = std3();
  Subspace a{{v3(1, 0, 0), v3(0, 1, 0)}};
  Subspace c{{v3(1, 0, 0)}};

  // C = B: nothing to add.
  OrthogonalAmalgam trivial = orthogonal_amalgam(s, a, c, c);
  CHECK(trivial.d.dim() == 0);

  // B = A over the first coordinate: the copy is forced onto e3.
  OrthogonalAmalgam forced = orthogonal_amalgam(s, a, a, c);
  REQUIRE(forced.d.dim() == 1);
  CHECK(forced.d.basis[0][0].is_zero());
  CHECK(forced.d.basis[0][1].is_zero());
  CHECK(!forced.d.basis[0][2].is_zero());
  CHECK(s.norm2(forced.d.basis[0]) == Scalar(1));

  // Capacity: dim 2 cannot host A of dim 2 plus one more direction.
  QuadraticSpace s2(2, mat_identity(2));
  Subspace a2{{Vec{Scalar(1), Scalar(0)}, Vec{Scalar(0), Scalar(1)}}};
  Subspace b2{{Vec{Scalar(1), Scalar(0)}}};
  CHECK_THROWS_AS(orthogonal_amalgam(s2, a2, b2, Subspace{}),
                  UnsupportedInstanceError);
}

TEST_CASE("planted dim-5 amalgams pass perpendicularity and type checks") {
  Rng rng(31415);
  for (int trial = 0; trial < 20; ++trial) {
    QuadraticSpace s(5, mat_identity(5));
    // C on the first coordinate, B adds two clean directions mixed with C,
    // A adds one direction that overlaps B's block; two coordinates stay
    // reserved.
    Vec c1 = v3(1, 0, 0);
    c1.resize(5, Scalar(0));
    Subspace c{{c1}};
    auto mix = [&](int coord) {
      Vec v(5, Scalar(0));
      v[coord] = Scalar(1);
      v[0] = Scalar(rng.range(-2, 2));
      return v;
    };
    Subspace b{{c1, mix(1), mix(2)}};
    Vec a_extra(5, Scalar(0));
    a_extra[1] = Scalar(rng.range(-2, 2));
    a_extra[2] = Scalar(rng.range(-2, 2));
    a_extra[0] = Scalar(rng.range(-1, 1));
    bool zero = true;
    for (const Scalar& x : a_extra)
      if (!x.is_zero()) zero = false;
    if (zero) a_extra[1] = Scalar(1);
    Subspace a{{c1, a_extra}};
    if (static_cast<int>(gram_schmidt_filter(s, a.basis).size()) != 2) continue;

    OrthogonalAmalgam am = orthogonal_amalgam(s, a, b, c);
    CHECK(am.d.dim() == 2);
    for (const Vec& d : am.d.basis)
      for (const Vec& av : a.basis) CHECK(s.inner(d, av).is_zero());
    // Gram equality between C + D and B's matching basis.
    const auto& dom = am.witness.domain.basis;
    const auto& cod = am.witness.codomain.basis;
    for (std::size_t i = 0; i < dom.size(); ++i)
      for (std::size_t j = 0; j < dom.size(); ++j)
        CHECK(s.inner(dom[i], dom[j]) == s.inner(cod[i], cod[j]));
    // The copy is independent from A over C.
    PerpIndependenceReport rep = check_perp_independence(s, a, am.witness.domain, c);
    CHECK(rep.perpendicular);
    CHECK(rep.ok);
  }
}

TEST_CASE("perpendicular complements certify independence") {
  QuadraticSpace s = std3();
  Subspace a{{v3(1, 0, 0), v3(0, 1, 0)}};
  Subspace b{{v3(1, 0, 0), v3(0, 0, 1)}};
  Subspace c{{v3(1, 0, 0)}};
  PerpIndependenceReport rep = check_perp_independence(s, a, b, c);
  CHECK(rep.perpendicular);
  CHECK(rep.ok);
  CHECK(rep.samples > 0);

  // B = A with a larger complement is never perpendicular to itself.
  PerpIndependenceReport self = check_perp_independence(s, a, a, c);
  CHECK(!self.perpendicular);
}

TEST_CASE("norm realization strategies") {
  QuadraticSpace s(4, mat_identity(4));
  std::vector<Vec> units;
  for (int i = 0; i < 4; ++i) {
    Vec e(4, Scalar(0));
    e[i] = Scalar(1);
    units.push_back(e);
  }
  // 7 = 4 + 1 + 1 + 1 needs four squares.
  auto v7 = vector_with_norm(s, units, Scalar(7));
  REQUIRE(v7);
  CHECK(s.norm2(*v7) == Scalar(7));
  // 1/3 = (1/3)^2 * 3 over three unit vectors.
  auto third = vector_with_norm(s, units, Scalar(1, 3));
  REQUIRE(third);
  CHECK(s.norm2(*third) == Scalar(1, 3));
  // Square ratios scale a single vector.
  QuadraticSpace sd(2, {{Scalar(3), Scalar(0)}, {Scalar(0), Scalar(5)}});
  std::vector<Vec> diag{{Scalar(1), Scalar(0)}, {Scalar(0), Scalar(1)}};
  auto v12 = vector_with_norm(sd, diag, Scalar(12));
  REQUIRE(v12);
  CHECK(sd.norm2(*v12) == Scalar(12));
}
