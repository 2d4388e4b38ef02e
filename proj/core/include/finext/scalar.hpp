#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <vector>

namespace finext {

enum class Ordering { less, equal, greater };

/// Exact element of Q or of a real quadratic extension Q(sqrt(d)).
///
/// A value is rational_part + radical_part * sqrt(discriminant), with both
/// fractions reduced and the discriminant a square-free integer >= 2 (0 when
/// the value is rational).  All arithmetic and comparisons are exact; there is
/// no floating-point path.  One computation mixes at most one discriminant:
/// combining values over different discriminants raises ContextError.
///
/// Scalars are immutable values and safe to share between threads.
class Scalar {
public:
  Scalar() : rat_(0), rad_(0), disc_(0) {}
  Scalar(long n) : rat_(n), rad_(0), disc_(0) {}  // NOLINT(runtime/explicit)
  Scalar(long num, long den);
  explicit Scalar(const mpq_class& r);

  /// Builds rat + rad*sqrt(disc), canonicalizing the representation.
  /// disc must be square-free and >= 2 unless rad == 0.
  static Scalar quadratic(const mpq_class& rat, const mpq_class& rad, long disc);

  const mpq_class& rational_part() const { return rat_; }
  const mpq_class& radical_part() const { return rad_; }
  /// 0 for purely rational values.
  long discriminant() const { return disc_; }
  bool is_rational() const { return disc_ == 0; }
  bool is_zero() const { return disc_ == 0 && rat_ == 0; }

  /// Exact sign: -1, 0 or +1.
  int sign() const;

  Scalar operator-() const;
  Scalar operator+(const Scalar& o) const;
  Scalar operator-(const Scalar& o) const;
  Scalar operator*(const Scalar& o) const;
  Scalar operator/(const Scalar& o) const;
  Scalar& operator+=(const Scalar& o) { return *this = *this + o; }
  Scalar& operator-=(const Scalar& o) { return *this = *this - o; }
  Scalar& operator*=(const Scalar& o) { return *this = *this * o; }
  Scalar& operator/=(const Scalar& o) { return *this = *this / o; }

  bool operator==(const Scalar& o) const;
  bool operator!=(const Scalar& o) const { return !(*this == o); }
  bool operator<(const Scalar& o) const;
  bool operator<=(const Scalar& o) const { return !(o < *this); }
  bool operator>(const Scalar& o) const { return o < *this; }
  bool operator>=(const Scalar& o) const { return !(*this < o); }

  Scalar abs() const { return sign() < 0 ? -*this : *this; }
  Scalar inverse() const;

  /// Exact floor; the result must fit in long.
  long floor_long() const;

  /// Double approximation, used only as a search hint, never for decisions.
  double approx() const;

  /// Canonical text form: "p", "p/q", or "p/q+r/s*sqrt(d)" (minus sign folded
  /// into the radical coefficient as "...-r/s*sqrt(d)").
  std::string str() const;

  /// Parses the canonical form and common relaxations (whitespace, missing
  /// denominator, leading sign, bare "sqrt(d)" coefficient).
  static Scalar parse(const std::string& text);

private:
  void canonicalize();

  mpq_class rat_;
  mpq_class rad_;
  long disc_;
};

Ordering compare(const Scalar& a, const Scalar& b);

/// Discriminant both values can live over; ContextError when incompatible.
long merge_discriminants(const Scalar& a, const Scalar& b);

/// Throws InputError unless d is square-free and >= 2.
void validate_discriminant(long d);

/// Exact square root within Q(sqrt(d)) when one exists.
/// context_disc extends the search to radical values for rational inputs.
std::optional<Scalar> sqrt_in_field(const Scalar& s, long context_disc);

Scalar min(const Scalar& a, const Scalar& b);
Scalar max(const Scalar& a, const Scalar& b);

/// Sum of a range of scalars.
Scalar sum(const std::vector<Scalar>& values);

}  // namespace finext
