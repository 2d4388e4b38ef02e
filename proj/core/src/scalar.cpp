#include "finext/scalar.hpp"

#include <cmath>
#include <cstddef>

#include "finext/errors.hpp"

namespace finext {

namespace {

int sgn(const mpq_class& q) { return mpq_sgn(q.get_mpq_t()); }

// Floor of the exact square root when the argument is a perfect square.
std::optional<mpq_class> rational_sqrt(const mpq_class& q) {
  if (sgn(q) < 0) return std::nullopt;
  const mpz_class& num = q.get_num();
  const mpz_class& den = q.get_den();
  if (!mpz_perfect_square_p(num.get_mpz_t()) ||
      !mpz_perfect_square_p(den.get_mpz_t()))
    return std::nullopt;
  mpz_class rn, rd;
  mpz_sqrt(rn.get_mpz_t(), num.get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), den.get_mpz_t());
  return mpq_class(rn, rd);
}

mpz_class parse_integer(const std::string& s) {
  if (s.empty()) throw InputError("scalar parse: empty integer");
  std::string t = s[0] == '+' ? s.substr(1) : s;
  if (t.empty()) throw InputError("scalar parse: bad integer '" + s + "'");
  for (std::size_t i = 0; i < t.size(); ++i) {
    char c = t[i];
    if (i == 0 && c == '-' && t.size() > 1) continue;
    if (c < '0' || c > '9')
      throw InputError("scalar parse: bad integer '" + s + "'");
  }
  return mpz_class(t);
}

mpq_class parse_rational(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return mpq_class(parse_integer(s));
  mpz_class num = parse_integer(s.substr(0, slash));
  mpz_class den = parse_integer(s.substr(slash + 1));
  if (den == 0) throw InputError("scalar parse: zero denominator in '" + s + "'");
  mpq_class q(num, den);
  q.canonicalize();
  return q;
}

// Term is either a rational or [coef *] sqrt(d); returns (coef, disc or 0).
std::pair<mpq_class, long> parse_term(const std::string& term) {
  auto sq = term.find("sqrt(");
  if (sq == std::string::npos) return {parse_rational(term), 0};
  if (term.back() != ')')
    throw InputError("scalar parse: malformed radical '" + term + "'");
  std::string dstr = term.substr(sq + 5, term.size() - sq - 6);
  mpz_class d = parse_integer(dstr);
  if (d <= 0 || !d.fits_slong_p())
    throw InputError("scalar parse: bad discriminant '" + dstr + "'");
  std::string coef = term.substr(0, sq);
  mpq_class c;
  if (coef.empty())
    c = 1;
  else if (coef == "-")
    c = -1;
  else if (coef == "+")
    c = 1;
  else {
    if (coef.back() != '*')
      throw InputError("scalar parse: expected '*' before sqrt in '" + term + "'");
    c = parse_rational(coef.substr(0, coef.size() - 1));
  }
  return {c, d.get_si()};
}

}  // namespace

void validate_discriminant(long d) {
  if (d < 2) throw InputError("discriminant must be >= 2");
  for (long p = 2; p * p <= d; ++p)
    if (d % (p * p) == 0)
      throw InputError("discriminant " + std::to_string(d) + " is not square-free");
}

namespace {

// GMP's mpq routines require canonical operands (positive denominator in
// lowest terms); copying a raw fraction before canonicalizing is undefined.
// Rebuilding from the integer parts is safe for any sign pattern.
mpq_class canonical(const mpq_class& q) {
  if (q.get_den() == 0) throw InputError("zero denominator");
  mpq_class out(q.get_num(), q.get_den());
  out.canonicalize();
  return out;
}

}  // namespace

Scalar::Scalar(long num, long den) : rat_(0), rad_(0), disc_(0) {
  if (den == 0) throw InputError("zero denominator");
  rat_ = canonical(mpq_class(mpz_class(num), mpz_class(den)));
}

Scalar::Scalar(const mpq_class& r) : rat_(canonical(r)), rad_(0), disc_(0) {}

Scalar Scalar::quadratic(const mpq_class& rat, const mpq_class& rad, long disc) {
  Scalar s;
  s.rat_ = canonical(rat);
  s.rad_ = canonical(rad);
  s.disc_ = disc;
  if (sgn(s.rad_) != 0) validate_discriminant(disc);
  s.canonicalize();
  return s;
}

void Scalar::canonicalize() {
  rat_.canonicalize();
  rad_.canonicalize();
  if (sgn(rad_) == 0) {
    rad_ = 0;
    disc_ = 0;
  }
}

int Scalar::sign() const {
  int sr = sgn(rat_);
  int sd = sgn(rad_);
  if (sd == 0) return sr;
  if (sr == 0) return sd;
  if (sr == sd) return sr;
  // Opposite signs: decide by comparing rat^2 with rad^2 * d.
  mpq_class lhs = rat_ * rat_;
  mpq_class rhs = rad_ * rad_ * disc_;
  int c = cmp(lhs, rhs);
  if (c > 0) return sr;
  if (c < 0) return sd;
  return 0;  // unreachable for square-free discriminants
}

long merge_discriminants(const Scalar& a, const Scalar& b) {
  if (a.discriminant() == 0) return b.discriminant();
  if (b.discriminant() == 0) return a.discriminant();
  if (a.discriminant() != b.discriminant())
    throw ContextError("mixed discriminants: sqrt(" +
                       std::to_string(a.discriminant()) + ") vs sqrt(" +
                       std::to_string(b.discriminant()) + ")");
  return a.discriminant();
}

Scalar Scalar::operator-() const {
  Scalar r = *this;
  r.rat_ = -r.rat_;
  r.rad_ = -r.rad_;
  return r;
}

Scalar Scalar::operator+(const Scalar& o) const {
  long d = merge_discriminants(*this, o);
  return quadratic(rat_ + o.rat_, rad_ + o.rad_, d == 0 ? 2 : d);
}

Scalar Scalar::operator-(const Scalar& o) const { return *this + (-o); }

Scalar Scalar::operator*(const Scalar& o) const {
  long d = merge_discriminants(*this, o);
  mpq_class rat = rat_ * o.rat_;
  mpq_class rad = rat_ * o.rad_ + rad_ * o.rat_;
  if (d != 0) rat += rad_ * o.rad_ * d;
  return quadratic(rat, rad, d == 0 ? 2 : d);
}

Scalar Scalar::inverse() const {
  if (sign() == 0) throw InputError("division by zero");
  if (disc_ == 0) {
    Scalar r;
    r.rat_ = 1 / rat_;
    return r;
  }
  // 1/(p + q sqrt(d)) = (p - q sqrt(d)) / (p^2 - q^2 d); the norm is nonzero
  // because d is not a rational square.
  mpq_class norm = rat_ * rat_ - rad_ * rad_ * disc_;
  return quadratic(rat_ / norm, -rad_ / norm, disc_);
}

Scalar Scalar::operator/(const Scalar& o) const { return *this * o.inverse(); }

bool Scalar::operator==(const Scalar& o) const {
  return disc_ == o.disc_ && rat_ == o.rat_ && rad_ == o.rad_;
}

bool Scalar::operator<(const Scalar& o) const {
  return compare(*this, o) == Ordering::less;
}

Ordering compare(const Scalar& a, const Scalar& b) {
  merge_discriminants(a, b);
  int s = (a - b).sign();
  if (s < 0) return Ordering::less;
  if (s > 0) return Ordering::greater;
  return Ordering::equal;
}

double Scalar::approx() const {
  double v = rat_.get_d();
  if (disc_ != 0) v += rad_.get_d() * std::sqrt(static_cast<double>(disc_));
  return v;
}

long Scalar::floor_long() const {
  long f = static_cast<long>(std::floor(approx()));
  while (*this >= Scalar(f + 1)) ++f;
  while (*this < Scalar(f)) --f;
  return f;
}

std::string Scalar::str() const {
  std::string out = rat_.get_str();
  if (disc_ != 0) {
    if (sgn(rad_) > 0) {
      out += "+" + rad_.get_str();
    } else {
      mpq_class a = -rad_;
      out += "-" + a.get_str();
    }
    out += "*sqrt(" + std::to_string(disc_) + ")";
  }
  return out;
}

Scalar Scalar::parse(const std::string& text) {
  std::string s;
  s.reserve(text.size());
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw InputError("scalar parse: empty string");

  // Split into at most two top-level terms at a '+'/'-' that is neither the
  // leading sign nor inside "sqrt(...)".
  std::vector<std::string> terms;
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if ((c == '+' || c == '-') && i > start && depth == 0 && s[i - 1] != '*' &&
        s[i - 1] != '/') {
      terms.push_back(s.substr(start, i - start));
      start = i;  // keep the sign with the next term
    }
  }
  terms.push_back(s.substr(start));
  if (terms.size() > 2) throw InputError("scalar parse: too many terms in '" + text + "'");

  mpq_class rat = 0, rad = 0;
  long disc = 0;
  for (const std::string& t : terms) {
    auto [coef, d] = parse_term(t);
    if (d == 0) {
      rat += coef;
    } else {
      if (disc != 0 && disc != d)
        throw ContextError("scalar parse: mixed discriminants in '" + text + "'");
      disc = d;
      rad += coef;
    }
  }
  if (disc == 0) return Scalar(rat);
  return quadratic(rat, rad, disc);
}

std::optional<Scalar> sqrt_in_field(const Scalar& s, long context_disc) {
  if (s.sign() < 0) return std::nullopt;
  if (s.is_zero()) return Scalar();
  if (s.is_rational()) {
    if (auto r = rational_sqrt(s.rational_part())) return Scalar(*r);
    if (context_disc >= 2) {
      if (auto r = rational_sqrt(s.rational_part() / context_disc))
        return Scalar::quadratic(0, *r, context_disc);
    }
    return std::nullopt;
  }
  // (p + q sqrt(d))^2 = (p^2 + q^2 d) + 2pq sqrt(d); solve for p^2 as a root
  // of u^2 - A u + B^2 d / 4 with A, B the parts of s.
  long d = s.discriminant();
  const mpq_class& A = s.rational_part();
  const mpq_class& B = s.radical_part();
  mpq_class delta = A * A - B * B * d;
  auto sd = rational_sqrt(delta);
  if (!sd) return std::nullopt;
  for (int pick = 0; pick < 2; ++pick) {
    mpq_class u = pick == 0 ? mpq_class((A + *sd) / 2) : mpq_class((A - *sd) / 2);
    if (sgn(u) <= 0) continue;
    auto p = rational_sqrt(u);
    if (!p || sgn(*p) == 0) continue;
    mpq_class q = B / (2 * *p);
    Scalar t = Scalar::quadratic(*p, q, d);
    if (t * t == s) return t.sign() > 0 ? t : -t;
  }
  return std::nullopt;
}

Scalar min(const Scalar& a, const Scalar& b) { return a < b ? a : b; }
Scalar max(const Scalar& a, const Scalar& b) { return a < b ? b : a; }

Scalar sum(const std::vector<Scalar>& values) {
  Scalar acc;
  for (const Scalar& v : values) acc += v;
  return acc;
}

}  // namespace finext
