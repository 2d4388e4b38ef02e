#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "finext/errors.hpp"
#include "finext/rng.hpp"
#include "finext/scalar.hpp"

using namespace finext;

namespace {

Scalar rt2(long num, long den) {
  return Scalar::quadratic(0, mpq_class(num, den), 2);
}

Scalar random_scalar(Rng& rng, bool quadratic) {
  Scalar s(rng.range(-30, 30), rng.range(1, 12));
  if (quadratic) s += Scalar::quadratic(0, mpq_class(rng.range(-30, 30), rng.range(1, 12)), 2);
  return s;
}

int sgn(const mpq_class& q) { return mpq_sgn(q.get_mpq_t()); }

// Interval comparison with >= 64 fractional bits: sqrt(d) is bracketed by
// integer square roots of d * 4^k, scaled back down.
int interval_compare(const Scalar& a, const Scalar& b, int bits) {
  Scalar diff = a - b;
  if (diff.is_rational()) return diff.sign();
  mpz_class scale = 1;
  scale <<= (2 * bits);
  mpz_class d_scaled = scale * diff.discriminant();
  mpz_class root;
  mpz_sqrt(root.get_mpz_t(), d_scaled.get_mpz_t());
  mpq_class lo(root, mpz_class(1) << bits);
  mpq_class hi(root + 1, mpz_class(1) << bits);
  lo.canonicalize();
  hi.canonicalize();
  const mpq_class& p = diff.rational_part();
  const mpq_class& q = diff.radical_part();
  mpq_class low = p + q * (sgn(q) > 0 ? lo : hi);
  mpq_class high = p + q * (sgn(q) > 0 ? hi : lo);
  if (sgn(low) > 0) return 1;
  if (sgn(high) < 0) return -1;
  return 0;  // interval straddles zero: not separated at this precision
}

}  // namespace

TEST_CASE("normalization produces canonical forms") {
  CHECK(Scalar(2, 4) == Scalar(1, 2));
  Scalar one_plus = Scalar::quadratic(mpq_class(1, 1), mpq_class(2, 2), 2);
  CHECK(one_plus.rational_part() == 1);
  CHECK(one_plus.radical_part() == 1);
  CHECK(one_plus.discriminant() == 2);
  Scalar signs = Scalar::quadratic(mpq_class(3, 6), mpq_class(-2, -4), 2);
  CHECK(signs.rational_part() == mpq_class(1, 2));
  CHECK(signs.radical_part() == mpq_class(1, 2));
  // Zero radical coefficient drops the discriminant entirely.
  Scalar plain = Scalar::quadratic(mpq_class(1, 2), mpq_class(0), 7);
  CHECK(plain.is_rational());
  CHECK(plain == Scalar(1, 2));
}

TEST_CASE("zero denominators and bad discriminants are rejected") {
  CHECK_THROWS_AS(Scalar(1, 0), InputError);
  CHECK_THROWS_AS(Scalar::parse("1/0"), InputError);
  CHECK_THROWS_AS(Scalar::quadratic(0, 1, 4), InputError);   // square
  CHECK_THROWS_AS(Scalar::quadratic(0, 1, 12), InputError);  // 4 | 12
  CHECK_NOTHROW(Scalar::quadratic(0, 1, 6));
}

TEST_CASE("comparison is exact sign analysis") {
  CHECK(compare(Scalar(1, 2), Scalar(3, 4)) == Ordering::less);
  // 1 < sqrt(2) because 1^2 < 2; integer arithmetic oracle.
  CHECK(compare(Scalar(1), rt2(1, 1)) == Ordering::less);
  CHECK(mpz_class(1) * 1 < mpz_class(2));
  Scalar x = Scalar::quadratic(mpq_class(7, 3), mpq_class(-1, 5), 2);
  CHECK(compare(x, x) == Ordering::equal);
  // Opposite-sign parts: 3/2 - sqrt(2) > 0 and 4/3 - sqrt(2) < 0.
  CHECK((Scalar(3, 2) - rt2(1, 1)).sign() == 1);
  CHECK((Scalar(4, 3) - rt2(1, 1)).sign() == -1);
}

TEST_CASE("mixed discriminants raise a context error") {
  Scalar a = rt2(1, 1);
  Scalar b = Scalar::quadratic(0, 1, 3);
  CHECK_THROWS_AS((void)(a + b), ContextError);
  CHECK_THROWS_AS((void)compare(a, b), ContextError);
}

TEST_CASE("field axioms hold exactly on random samples") {
  Rng rng(2024);
  for (int i = 0; i < 300; ++i) {
    bool quadratic = i % 2 == 0;
    Scalar a = random_scalar(rng, quadratic);
    Scalar b = random_scalar(rng, quadratic);
    Scalar c = random_scalar(rng, quadratic);
    CHECK((a + b) + c == a + (b + c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK((a * b) * c == a * (b * c));
    if (b.sign() != 0) CHECK((a / b) * b == a);
  }
}

TEST_CASE("total order: trichotomy and transitivity") {
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    Scalar a = random_scalar(rng, true);
    Scalar b = random_scalar(rng, true);
    Scalar c = random_scalar(rng, true);
    int verdicts = (a < b) + (a == b) + (b < a);
    CHECK(verdicts == 1);
    if (a < b && b < c) CHECK(a < c);
  }
}

TEST_CASE("comparison agrees with 64-bit interval evaluation") {
  Rng rng(99);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    Scalar a = random_scalar(rng, true);
    Scalar b = random_scalar(rng, true);
    int oracle = interval_compare(a, b, 80);
    Ordering fast = compare(a, b);
    if (oracle == 0) {
      // Only exact equality may fail to separate at 80 bits.
      CHECK(fast == Ordering::equal);
    } else {
      CHECK(fast == (oracle < 0 ? Ordering::less : Ordering::greater));
      ++checked;
    }
  }
  CHECK(checked > 900);
}

TEST_CASE("text codec round trips") {
  CHECK(Scalar::parse("3/2").str() == "3/2");
  CHECK(Scalar::parse("2/4").str() == "1/2");
  CHECK(Scalar::parse("1/2+1/2*sqrt(2)").str() == "1/2+1/2*sqrt(2)");
  CHECK(Scalar::parse("1-1/2*sqrt(2)").str() == "1-1/2*sqrt(2)");
  CHECK(Scalar::parse("sqrt(5)").str() == "0+1*sqrt(5)");
  CHECK(Scalar::parse(" 7 / 2 ").str() == "7/2");
  CHECK(Scalar::parse("-3").str() == "-3");
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    Scalar s = random_scalar(rng, i % 2 == 0);
    CHECK(Scalar::parse(s.str()) == s);
  }
  CHECK_THROWS_AS(Scalar::parse(""), InputError);
  CHECK_THROWS_AS(Scalar::parse("1/2+1/3*sqrt(2)+1*sqrt(2)"), InputError);
  CHECK_THROWS_AS(Scalar::parse("x"), InputError);
}

TEST_CASE("floor is exact") {
  CHECK(rt2(1, 1).floor_long() == 1);
  CHECK((-rt2(1, 1)).floor_long() == -2);
  CHECK(Scalar(7, 2).floor_long() == 3);
  CHECK(Scalar(-7, 2).floor_long() == -4);
  CHECK(Scalar(3).floor_long() == 3);
  CHECK((Scalar(2) / Scalar(1)).floor_long() == 2);
}

TEST_CASE("square roots in the field") {
  auto r = sqrt_in_field(Scalar(9, 4), 0);
  REQUIRE(r);
  CHECK(*r == Scalar(3, 2));
  auto r2 = sqrt_in_field(Scalar(2), 2);
  REQUIRE(r2);
  CHECK(*r2 == rt2(1, 1));
  // (1 + sqrt(2))^2 = 3 + 2 sqrt(2)
  Scalar s = Scalar::quadratic(3, 2, 2);
  auto r3 = sqrt_in_field(s, 2);
  REQUIRE(r3);
  CHECK(*r3 * *r3 == s);
  CHECK(r3->sign() > 0);
  CHECK(!sqrt_in_field(Scalar(5), 2));
  CHECK(!sqrt_in_field(Scalar(-1), 2));
}
