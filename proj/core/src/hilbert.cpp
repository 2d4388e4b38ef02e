#include "finext/hilbert.hpp"

#include <algorithm>
#include <cmath>

#include "finext/errors.hpp"
#include "finext/rng.hpp"

namespace finext {

// ---------------------------------------------------------------------------
// Matrix helpers

Mat mat_identity(int n) {
  Mat m(n, Vec(n, Scalar(0)));
  for (int i = 0; i < n; ++i) m[i][i] = Scalar(1);
  return m;
}

Mat mat_mul(const Mat& a, const Mat& b) {
  int n = static_cast<int>(a.size());
  int k = static_cast<int>(b.size());
  int m = static_cast<int>(b[0].size());
  Mat out(n, Vec(m, Scalar(0)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      Scalar acc;
      for (int t = 0; t < k; ++t) acc += a[i][t] * b[t][j];
      out[i][j] = acc;
    }
  return out;
}

Vec mat_vec(const Mat& m, const Vec& v) {
  int n = static_cast<int>(m.size());
  Vec out(n, Scalar(0));
  for (int i = 0; i < n; ++i) {
    Scalar acc;
    for (int j = 0; j < static_cast<int>(v.size()); ++j) acc += m[i][j] * v[j];
    out[i] = acc;
  }
  return out;
}

Mat mat_transpose(const Mat& m) {
  int n = static_cast<int>(m.size());
  int k = static_cast<int>(m[0].size());
  Mat out(k, Vec(n, Scalar(0)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) out[j][i] = m[i][j];
  return out;
}

namespace {

bool vec_is_zero(const Vec& v) {
  for (const Scalar& x : v)
    if (!x.is_zero()) return false;
  return true;
}

Vec vec_sub(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vec vec_scale(const Vec& a, const Scalar& c) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
  return out;
}

Vec vec_add(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// QuadraticSpace

QuadraticSpace::QuadraticSpace(int dim, Mat gram) : dim_(dim), gram_(std::move(gram)) {
  if (dim <= 0) throw InputError("space dimension must be positive");
  if (static_cast<int>(gram_.size()) != dim)
    throw InputError("Gram matrix dimension mismatch");
  for (const auto& row : gram_)
    if (static_cast<int>(row.size()) != dim)
      throw InputError("Gram matrix dimension mismatch");
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (gram_[i][j] != gram_[j][i]) throw InputError("Gram matrix not symmetric");
  // Positive definiteness via exact leading principal minors: symmetric
  // Gaussian elimination pivots stay positive exactly when all minors do.
  Mat work = gram_;
  for (int k = 0; k < dim; ++k) {
    if (work[k][k].sign() <= 0)
      throw InputError("Gram matrix is not positive definite (minor " +
                       std::to_string(k + 1) + ")");
    for (int i = k + 1; i < dim; ++i) {
      Scalar f = work[i][k] / work[k][k];
      for (int j = k; j < dim; ++j) work[i][j] -= f * work[k][j];
    }
  }
}

Scalar QuadraticSpace::inner(const Vec& u, const Vec& v) const {
  if (static_cast<int>(u.size()) != dim_ || static_cast<int>(v.size()) != dim_)
    throw InputError("vector dimension mismatch");
  Scalar acc;
  for (int i = 0; i < dim_; ++i) {
    if (u[i].is_zero()) continue;
    Scalar row;
    for (int j = 0; j < dim_; ++j) row += gram_[i][j] * v[j];
    acc += u[i] * row;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Subspaces and Gram-Schmidt

std::vector<Vec> gram_schmidt_filter(const QuadraticSpace& space,
                                     const std::vector<Vec>& vectors) {
  std::vector<Vec> out;
  for (const Vec& v : vectors) {
    Vec w = v;
    for (const Vec& b : out) {
      Scalar coef = space.inner(w, b) / space.norm2(b);
      w = vec_sub(w, vec_scale(b, coef));
    }
    if (!vec_is_zero(w)) out.push_back(w);
  }
  return out;
}

std::vector<Vec> gram_schmidt(const QuadraticSpace& space,
                              const std::vector<Vec>& vectors) {
  std::vector<Vec> out;
  for (const Vec& v : vectors) {
    Vec w = v;
    for (const Vec& b : out) {
      Scalar coef = space.inner(w, b) / space.norm2(b);
      w = vec_sub(w, vec_scale(b, coef));
    }
    if (vec_is_zero(w))
      throw InputError("vectors are linearly dependent at position " +
                       std::to_string(out.size() + 1));
    out.push_back(w);
  }
  return out;
}

void validate_subspace(const QuadraticSpace& space, const Subspace& s) {
  for (const Vec& v : s.basis)
    if (static_cast<int>(v.size()) != space.dim())
      throw InputError("basis vector dimension mismatch");
  gram_schmidt(space, s.basis);
}

std::optional<Vec> coordinates_in(const QuadraticSpace& space,
                                  const std::vector<Vec>& basis, const Vec& v) {
  // Solve the normal system over the exact field: v in span(basis) iff the
  // residual after projection onto the span vanishes.
  std::vector<Vec> ortho;
  std::vector<Vec> expr;  // ortho[i] expressed over basis
  for (std::size_t i = 0; i < basis.size(); ++i) {
    Vec w = basis[i];
    Vec coords(basis.size(), Scalar(0));
    coords[i] = Scalar(1);
    for (std::size_t j = 0; j < ortho.size(); ++j) {
      Scalar coef = space.inner(w, ortho[j]) / space.norm2(ortho[j]);
      w = vec_sub(w, vec_scale(ortho[j], coef));
      for (std::size_t t = 0; t < basis.size(); ++t)
        coords[t] -= coef * expr[j][t];
    }
    if (vec_is_zero(w)) throw InputError("coordinates_in needs an independent list");
    ortho.push_back(w);
    expr.push_back(coords);
  }
  Vec residual = v;
  Vec out(basis.size(), Scalar(0));
  for (std::size_t j = 0; j < ortho.size(); ++j) {
    Scalar coef = space.inner(residual, ortho[j]) / space.norm2(ortho[j]);
    residual = vec_sub(residual, vec_scale(ortho[j], coef));
    for (std::size_t t = 0; t < basis.size(); ++t) out[t] += coef * expr[j][t];
  }
  if (!vec_is_zero(residual)) return std::nullopt;
  return out;
}

std::vector<Vec> orthogonal_complement(const QuadraticSpace& space,
                                       const std::vector<Vec>& within,
                                       const std::vector<Vec>& of) {
  std::vector<Vec> seed = within;
  std::size_t inner_count;
  if (of.empty()) {
    inner_count = gram_schmidt_filter(space, within).size();
    for (int i = 0; i < space.dim(); ++i) {
      Vec e(space.dim(), Scalar(0));
      e[i] = Scalar(1);
      seed.push_back(e);
    }
  } else {
    inner_count = gram_schmidt_filter(space, within).size();
    seed.insert(seed.end(), of.begin(), of.end());
  }
  std::vector<Vec> all = gram_schmidt_filter(space, seed);
  return std::vector<Vec>(all.begin() + inner_count, all.end());
}

void validate_partial_linear_isometry(const QuadraticSpace& space,
                                      const PartialLinearIsometry& phi) {
  if (phi.domain.dim() != phi.codomain.dim())
    throw InputError("partial isometry domain and codomain ranks differ");
  validate_subspace(space, phi.domain);
  validate_subspace(space, phi.codomain);
  for (int i = 0; i < phi.domain.dim(); ++i)
    for (int j = 0; j < phi.domain.dim(); ++j)
      if (space.inner(phi.domain.basis[i], phi.domain.basis[j]) !=
          space.inner(phi.codomain.basis[i], phi.codomain.basis[j]))
        throw InputError("map does not preserve the Gram matrix at (" +
                         std::to_string(i + 1) + ", " + std::to_string(j + 1) + ")");
}

// ---------------------------------------------------------------------------
// Witt extension by reflections

Mat reflection_matrix(const QuadraticSpace& space, const Vec& w) {
  Scalar n2 = space.norm2(w);
  if (n2.is_zero()) throw InputError("reflection vector has zero norm");
  int n = space.dim();
  // r_w = I - (2/<w,w>) w (w^T G)
  Vec wg(n, Scalar(0));
  for (int j = 0; j < n; ++j) {
    Scalar acc;
    for (int k = 0; k < n; ++k) acc += w[k] * space.gram()[k][j];
    wg[j] = acc;
  }
  Scalar f = Scalar(2) / n2;
  Mat r = mat_identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r[i][j] -= f * w[i] * wg[j];
  return r;
}

WittResult witt_extend(const QuadraticSpace& space, const PartialLinearIsometry& phi) {
  validate_partial_linear_isometry(space, phi);
  int n = space.dim();
  WittResult result;
  result.matrix = mat_identity(n);
  for (int i = 0; i < phi.domain.dim(); ++i) {
    Vec x = mat_vec(result.matrix, phi.domain.basis[i]);
    const Vec& y = phi.codomain.basis[i];
    Vec w = vec_sub(x, y);
    if (vec_is_zero(w)) continue;
    // Positive definiteness gives <w,w> > 0; the reflection through w
    // swaps x and y and fixes every already-matched image.
    Mat r = reflection_matrix(space, w);
    result.matrix = mat_mul(r, result.matrix);
    result.reflection_vectors.push_back(w);
  }
  Mat check = mat_mul(mat_transpose(result.matrix),
                      mat_mul(space.gram(), result.matrix));
  if (check != space.gram())
    throw InternalInvariantError("extension does not preserve the Gram matrix");
  for (int i = 0; i < phi.domain.dim(); ++i)
    if (mat_vec(result.matrix, phi.domain.basis[i]) != phi.codomain.basis[i])
      throw InternalInvariantError("extension does not extend the partial map");
  return result;
}

// ---------------------------------------------------------------------------
// Exact norm realization

namespace {

long isqrt_floor(long n) {
  if (n < 0) return -1;
  long r = static_cast<long>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

// n as a sum of at most max_terms integer squares; terms descending.
std::optional<std::vector<long>> sum_of_squares(long n, int max_terms) {
  if (n < 0) return std::nullopt;
  if (n == 0) return std::vector<long>{};
  long r = isqrt_floor(n);
  if (max_terms >= 1) {
    if (r * r == n) return std::vector<long>{r};
  }
  if (max_terms >= 2) {
    for (long a = r; a >= 1; --a) {
      long rest = n - a * a;
      long b = isqrt_floor(rest);
      if (b > a) break;
      if (b * b == rest && b >= 1) return std::vector<long>{a, b};
    }
  }
  if (max_terms >= 3) {
    for (long a = r; a >= 1; --a)
      for (long b = std::min(a, isqrt_floor(n - a * a)); b >= 1; --b) {
        long rest = n - a * a - b * b;
        long c = isqrt_floor(rest);
        if (c > b) break;
        if (c * c == rest && c >= 1) return std::vector<long>{a, b, c};
      }
  }
  if (max_terms >= 4) {
    for (long a = r; a >= 1; --a)
      for (long b = std::min(a, isqrt_floor(n - a * a)); b >= 1; --b)
        for (long c = std::min(b, isqrt_floor(n - a * a - b * b)); c >= 1; --c) {
          long rest = n - a * a - b * b - c * c;
          long d = isqrt_floor(rest);
          if (d > c) break;
          if (d * d == rest && d >= 1) return std::vector<long>{a, b, c, d};
        }
  }
  return std::nullopt;
}

// Deterministic small rational candidates for two-term searches.
const std::vector<Scalar>& coefficient_candidates() {
  static const std::vector<Scalar> kCandidates = [] {
    std::vector<Scalar> out;
    for (long q = 1; q <= 4; ++q)
      for (long p = 1; p <= 8; ++p) {
        Scalar c(p, q);
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
      }
    return out;
  }();
  return kCandidates;
}

}  // namespace

std::optional<Vec> vector_with_norm(const QuadraticSpace& space,
                                    const std::vector<Vec>& basis,
                                    const Scalar& target) {
  if (basis.empty()) return std::nullopt;
  if (target.sign() <= 0) return std::nullopt;
  long disc = target.discriminant();
  std::vector<Scalar> norms;
  for (const Vec& w : basis) {
    norms.push_back(space.norm2(w));
    if (disc == 0) disc = norms.back().discriminant();
  }

  // Single vector, scaled: target / norm must be a square in the field.
  for (std::size_t j = 0; j < basis.size(); ++j)
    if (auto c = sqrt_in_field(target / norms[j], disc))
      return vec_scale(basis[j], *c);

  // Sums of rational squares over vectors of one common norm.
  for (std::size_t j = 0; j < basis.size(); ++j) {
    std::vector<std::size_t> group{j};
    for (std::size_t k = j + 1; k < basis.size(); ++k)
      if (norms[k] == norms[j]) group.push_back(k);
    if (group.size() < 2) continue;
    Scalar ratio = target / norms[j];
    if (!ratio.is_rational() || ratio.sign() <= 0) continue;
    const mpq_class& q = ratio.rational_part();
    mpz_class prod = q.get_num() * q.get_den();
    if (!prod.fits_slong_p() || prod.get_si() > 4000000) continue;
    auto squares = sum_of_squares(prod.get_si(),
                                  static_cast<int>(std::min<std::size_t>(group.size(), 4)));
    if (!squares) continue;
    Vec out(space.dim(), Scalar(0));
    mpz_class den = q.get_den();
    for (std::size_t t = 0; t < squares->size(); ++t) {
      Scalar coef(mpq_class((*squares)[t], den));
      out = vec_add(out, vec_scale(basis[group[t]], coef));
    }
    if (space.norm2(out) != target)
      throw InternalInvariantError("square decomposition lost exactness");
    return out;
  }

  // Two-term combinations with one enumerated coefficient.
  for (std::size_t j1 = 0; j1 < basis.size(); ++j1)
    for (std::size_t j2 = 0; j2 < basis.size(); ++j2) {
      if (j1 == j2) continue;
      for (const Scalar& c1 : coefficient_candidates()) {
        Scalar rest = target - c1 * c1 * norms[j1];
        if (rest.sign() <= 0) continue;
        if (auto c2 = sqrt_in_field(rest / norms[j2], disc))
          return vec_add(vec_scale(basis[j1], c1), vec_scale(basis[j2], *c2));
      }
    }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Orthogonal amalgamation

OrthogonalAmalgam orthogonal_amalgam(const QuadraticSpace& space, const Subspace& a,
                                     const Subspace& b, const Subspace& c) {
  validate_subspace(space, a);
  validate_subspace(space, b);
  validate_subspace(space, c);
  for (const Vec& v : c.basis) {
    if (!coordinates_in(space, a.basis, v))
      throw InputError("common part must lie inside A");
    if (!coordinates_in(space, b.basis, v))
      throw InputError("common part must lie inside B");
  }
  std::vector<Vec> b_comp = orthogonal_complement(space, c.basis, b.basis);
  int t = static_cast<int>(b_comp.size());
  if (space.dim() < a.dim() + t)
    throw UnsupportedInstanceError("ambient dimension too small for the amalgam");

  std::vector<Vec> used = a.basis;
  OrthogonalAmalgam out;
  for (int i = 0; i < t; ++i) {
    std::vector<Vec> room = orthogonal_complement(space, used);
    Scalar target = space.norm2(b_comp[i]);
    auto d = vector_with_norm(space, room, target);
    if (!d)
      throw UnsupportedInstanceError(
          "no exact vector of norm " + target.str() +
          " found orthogonal to the amalgamation base");
    out.d.basis.push_back(*d);
    used.push_back(*d);
  }
  out.b_complement = b_comp;
  out.witness.domain.basis = c.basis;
  out.witness.domain.basis.insert(out.witness.domain.basis.end(),
                                  out.d.basis.begin(), out.d.basis.end());
  out.witness.codomain.basis = c.basis;
  out.witness.codomain.basis.insert(out.witness.codomain.basis.end(), b_comp.begin(),
                                    b_comp.end());
  if (!out.witness.domain.basis.empty())
    validate_partial_linear_isometry(space, out.witness);
  for (const Vec& d : out.d.basis)
    for (const Vec& av : a.basis)
      if (!space.inner(d, av).is_zero())
        throw InternalInvariantError("amalgam copy is not orthogonal to A");
  return out;
}

// ---------------------------------------------------------------------------
// Perpendicular independence

namespace {

// Random automorphism of the subspace spanned by `basis` mapping each
// common[i] to common_images[i]: a Witt extension inside the subspace plus a
// random reflection fixing the common part.
Mat subspace_automorphism(const QuadraticSpace& space, const std::vector<Vec>& basis,
                          const std::vector<Vec>& common,
                          const std::vector<Vec>& common_images, Rng* rng) {
  int k = static_cast<int>(basis.size());
  // Induced Gram over this basis.
  Mat g(k, Vec(k, Scalar(0)));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) g[i][j] = space.inner(basis[i], basis[j]);
  QuadraticSpace local(k, g);

  PartialLinearIsometry phi;
  for (std::size_t i = 0; i < common.size(); ++i) {
    auto dom = coordinates_in(space, basis, common[i]);
    auto cod = coordinates_in(space, basis, common_images[i]);
    if (!dom || !cod)
      throw InternalInvariantError("common part leaves the subspace");
    phi.domain.basis.push_back(*dom);
    phi.codomain.basis.push_back(*cod);
  }
  Mat m = phi.domain.basis.empty() ? mat_identity(k)
                                   : witt_extend(local, phi).matrix;

  // One random reflection orthogonal to the common part keeps the agreement
  // while varying the extension.
  std::vector<Vec> room = orthogonal_complement(local, phi.domain.basis);
  if (!room.empty()) {
    Vec w(k, Scalar(0));
    bool nonzero = false;
    for (const Vec& r : room) {
      long coef = rng->range(-2, 2);
      if (coef != 0) nonzero = true;
      w = vec_add(w, vec_scale(r, Scalar(coef)));
    }
    if (nonzero) m = mat_mul(reflection_matrix(local, w), m);
  }
  return m;  // over the subspace basis coordinates
}

}  // namespace

PerpIndependenceReport check_perp_independence(const QuadraticSpace& space,
                                               const Subspace& a, const Subspace& b,
                                               const Subspace& c, int samples,
                                               std::uint64_t seed) {
  PerpIndependenceReport report;
  validate_subspace(space, a);
  validate_subspace(space, b);
  if (!c.basis.empty()) validate_subspace(space, c);
  for (const Vec& v : c.basis)
    if (!coordinates_in(space, a.basis, v) || !coordinates_in(space, b.basis, v))
      throw InputError("common part must lie inside both subspaces");

  std::vector<Vec> a_comp = orthogonal_complement(space, c.basis, a.basis);
  std::vector<Vec> b_comp = orthogonal_complement(space, c.basis, b.basis);
  for (const Vec& u : a_comp)
    for (const Vec& v : b_comp)
      if (!space.inner(u, v).is_zero()) {
        report.detail = "complements are not orthogonal";
        return report;
      }
  report.perpendicular = true;

  // Constructive confirmation: sampled pairs agreeing on C extend to an
  // automorphism of A + B.
  Rng rng(seed ^ 0x5851f42d4c957f2dULL);
  report.ok = true;
  for (int s = 0; s < samples; ++s) {
    // Random isometry of C: a couple of reflections in C coordinates.
    std::vector<Vec> sigma_images;
    if (!c.basis.empty()) {
      int k = c.dim();
      Mat gc(k, Vec(k, Scalar(0)));
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) gc[i][j] = space.inner(c.basis[i], c.basis[j]);
      QuadraticSpace local(k, gc);
      Mat sigma = mat_identity(k);
      for (int r = 0; r < 2; ++r) {
        Vec w(k, Scalar(0));
        bool nonzero = false;
        for (int i = 0; i < k; ++i) {
          long coef = rng.range(-2, 2);
          if (coef != 0) nonzero = true;
          w[i] = Scalar(coef);
        }
        if (nonzero) sigma = mat_mul(reflection_matrix(local, w), sigma);
      }
      for (int i = 0; i < k; ++i) {
        Vec e(k, Scalar(0));
        e[i] = Scalar(1);
        Vec img_local = mat_vec(sigma, e);
        Vec img(space.dim(), Scalar(0));
        for (int j = 0; j < k; ++j) img = vec_add(img, vec_scale(c.basis[j], img_local[j]));
        sigma_images.push_back(img);
      }
    }

    Mat ma = subspace_automorphism(space, a.basis, c.basis, sigma_images, &rng);
    Mat mb = subspace_automorphism(space, b.basis, c.basis, sigma_images, &rng);
    auto to_ambient = [&](const std::vector<Vec>& basis, const Mat& m, const Vec& v) {
      auto coords = coordinates_in(space, basis, v);
      if (!coords) throw InternalInvariantError("vector leaves its subspace");
      Vec local = mat_vec(m, *coords);
      Vec out(space.dim(), Scalar(0));
      for (std::size_t j = 0; j < basis.size(); ++j)
        out = vec_add(out, vec_scale(basis[j], local[j]));
      return out;
    };

    // Union map on a basis of A + B: A's basis plus B ominus C.
    PartialLinearIsometry uni;
    for (const Vec& v : a.basis) {
      uni.domain.basis.push_back(v);
      uni.codomain.basis.push_back(to_ambient(a.basis, ma, v));
    }
    for (const Vec& v : b_comp) {
      uni.domain.basis.push_back(v);
      uni.codomain.basis.push_back(to_ambient(b.basis, mb, v));
    }
    ++report.samples;
    if (uni.domain.basis.empty()) continue;
    try {
      witt_extend(space, uni);
    } catch (const Error& e) {
      report.ok = false;
      report.detail = std::string("sampled pair fails to extend: ") + e.what();
      return report;
    }
  }
  return report;
}

}  // namespace finext
