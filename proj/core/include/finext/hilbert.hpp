#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "finext/scalar.hpp"

namespace finext {

using Vec = std::vector<Scalar>;
using Mat = std::vector<std::vector<Scalar>>;

Mat mat_identity(int n);
Mat mat_mul(const Mat& a, const Mat& b);
Vec mat_vec(const Mat& m, const Vec& v);
Mat mat_transpose(const Mat& m);

/// Finite-dimensional inner-product space over the scalar field; the Gram
/// matrix must be symmetric and positive definite (exact leading minors).
class QuadraticSpace {
public:
  QuadraticSpace(int dim, Mat gram);

  int dim() const { return dim_; }
  const Mat& gram() const { return gram_; }
  Scalar inner(const Vec& u, const Vec& v) const;
  Scalar norm2(const Vec& v) const { return inner(v, v); }

private:
  int dim_;
  Mat gram_;
};

/// Subspace as a linearly independent list of coordinate vectors; the empty
/// list is the zero subspace.
struct Subspace {
  std::vector<Vec> basis;

  int dim() const { return static_cast<int>(basis.size()); }
};

/// Throws unless the list is linearly independent.
void validate_subspace(const QuadraticSpace& space, const Subspace& s);

/// Coordinates of v over the given independent list, when v lies in its span.
std::optional<Vec> coordinates_in(const QuadraticSpace& space,
                                  const std::vector<Vec>& basis, const Vec& v);

/// Classical Gram-Schmidt without normalization: same span, pairwise
/// orthogonal, exact.  Dependent input raises a rank error.
std::vector<Vec> gram_schmidt(const QuadraticSpace& space,
                              const std::vector<Vec>& vectors);

/// Gram-Schmidt that drops dependent vectors instead of failing; returns the
/// orthogonal spanning list.
std::vector<Vec> gram_schmidt_filter(const QuadraticSpace& space,
                                     const std::vector<Vec>& vectors);

/// Orthogonal basis of the complement of `within` inside the whole space or,
/// when `of` is nonempty, of span(of) ominus span(within).
std::vector<Vec> orthogonal_complement(const QuadraticSpace& space,
                                       const std::vector<Vec>& within,
                                       const std::vector<Vec>& of = {});

/// Basis-to-basis linear isometry between two subspaces: domain.basis[i]
/// maps to codomain.basis[i]; the two Gram matrices must agree exactly.
struct PartialLinearIsometry {
  Subspace domain;
  Subspace codomain;
};

void validate_partial_linear_isometry(const QuadraticSpace& space,
                                      const PartialLinearIsometry& phi);

/// Reflection through the hyperplane orthogonal to w.
Mat reflection_matrix(const QuadraticSpace& space, const Vec& w);

struct WittResult {
  Mat matrix;
  std::vector<Vec> reflection_vectors;
};

/// Extends the partial isometry to a full automorphism as a product of at
/// most dim(domain) reflections; M^T G M = G and M u_i = v_i hold exactly.
WittResult witt_extend(const QuadraticSpace& space, const PartialLinearIsometry& phi);

struct OrthogonalAmalgam {
  Subspace d;                      // copy of B ominus C, orthogonal to A
  PartialLinearIsometry witness;   // C + D onto B, fixing C
  std::vector<Vec> b_complement;   // orthogonal basis of B ominus C
};

/// Finds a copy D of B ominus C orthogonal to A, so that C + D has the same
/// quantifier-free type as B over C.  Raises UnsupportedInstanceError when
/// the ambient dimension is too small or no exact-norm construction is found.
OrthogonalAmalgam orthogonal_amalgam(const QuadraticSpace& space, const Subspace& a,
                                     const Subspace& b, const Subspace& c);

struct PerpIndependenceReport {
  bool perpendicular = false;
  bool ok = false;  // sampled automorphism pairs all extend
  long samples = 0;
  std::string detail;
};

/// Checks (A ominus C) perp (B ominus C) and, when true, confirms the
/// independence conclusion on sampled pairs of automorphisms agreeing on C.
PerpIndependenceReport check_perp_independence(const QuadraticSpace& space,
                                               const Subspace& a, const Subspace& b,
                                               const Subspace& c, int samples = 5,
                                               std::uint64_t seed = 0);

/// Exact vector of prescribed norm inside the span of an orthogonal list;
/// deterministic search (square ratios, two-term combinations, sums of
/// rational squares over equal-norm vectors).
std::optional<Vec> vector_with_norm(const QuadraticSpace& space,
                                    const std::vector<Vec>& orthogonal_basis,
                                    const Scalar& target);

}  // namespace finext
