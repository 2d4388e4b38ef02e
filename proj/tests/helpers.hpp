#pragma once

// Deterministic generators shared by the unit and acceptance suites.

#include <string>
#include <vector>

#include "finext/extension.hpp"
#include "finext/hilbert.hpp"
#include "finext/malg.hpp"
#include "finext/metric.hpp"
#include "finext/rng.hpp"
#include "finext/scalar.hpp"

namespace testgen {

using namespace finext;

inline Scalar random_rational(Rng& rng, long max_num = 8, long max_den = 6) {
  long den = rng.range(1, max_den);
  long num = rng.range(-max_num, max_num);
  return Scalar(num, den);
}

inline Scalar random_positive_rational(Rng& rng, long max_num = 8, long max_den = 6) {
  long den = rng.range(1, max_den);
  long num = rng.range(1, max_num);
  return Scalar(num, den);
}

/// Random metric space with |X| in [2, max_points] and distances from
/// {1, 3/2, 2}; any symmetric choice satisfies the triangle inequality.
inline FiniteMetricSpace random_corpus_space(Rng& rng, int max_points = 4) {
  int n = static_cast<int>(rng.range(2, max_points));
  const Scalar choices[3] = {Scalar(1), Scalar(3, 2), Scalar(2)};
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i + 1));
  std::vector<std::vector<Scalar>> d(n, std::vector<Scalar>(n, Scalar(0)));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d[i][j] = d[j][i] = choices[rng.below(3)];
  return FiniteMetricSpace(labels, d);
}

/// Random partial isometry with domain size at most max_domain; retries make
/// the distance-preservation constraint hold by construction.
inline PartialIsometry random_partial_isometry(const FiniteMetricSpace& space,
                                               Rng& rng, int max_domain = 2) {
  int n = space.size();
  PartialIsometry phi;
  phi.map.assign(n, -1);
  int want = static_cast<int>(rng.range(1, max_domain));
  std::vector<char> used(n, 0);
  for (int attempt = 0; attempt < 6 * want; ++attempt) {
    int have = phi.domain_size();
    if (have >= want) break;
    int x = static_cast<int>(rng.below(n));
    int y = static_cast<int>(rng.below(n));
    if (phi.map[x] != -1 || used[y]) continue;
    bool ok = true;
    for (int z = 0; z < n && ok; ++z)
      if (phi.map[z] != -1) ok = space.d(x, z) == space.d(y, phi.map[z]);
    if (!ok) continue;
    phi.map[x] = y;
    used[y] = 1;
  }
  if (phi.domain_size() == 0) {
    phi.map[0] = 0;  // identity on one point is always an isometry
  }
  return phi;
}

struct MetricCorpusInstance {
  FiniteMetricSpace space;
  std::vector<PartialIsometry> isometries;
};

inline MetricCorpusInstance random_corpus_instance(Rng& rng) {
  FiniteMetricSpace space = random_corpus_space(rng);
  std::vector<PartialIsometry> isos;
  int count = static_cast<int>(rng.range(1, 2));
  for (int i = 0; i < count; ++i) isos.push_back(random_partial_isometry(space, rng));
  return MetricCorpusInstance{space, isos};
}

/// Cell space with repeated rational measures plus an optional conjugate
/// quadratic pair, so measure-preserving permutations are plentiful.
inline CellSpace random_cellspace(Rng& rng, bool quadratic) {
  long parts = rng.range(4, 8);
  std::vector<std::string> names;
  std::vector<Scalar> measures;
  Scalar unit(1, parts);
  for (long i = 0; i < parts; ++i) {
    names.push_back("u" + std::to_string(i + 1));
    measures.push_back(unit);
  }
  if (quadratic) {
    // Replace two unit cells by a conjugate pair of equal total measure.
    Scalar eps = Scalar::quadratic(0, mpq_class(1, 8 * parts), 2);
    measures[0] = unit + eps;
    measures[1] = unit - eps;
    names[0] = "q1";
    names[1] = "q2";
  }
  return CellSpace(names, measures);
}

/// Measure-preserving cell permutation: shuffles within equal-measure groups.
inline std::vector<int> random_measure_permutation(const CellSpace& cells, Rng& rng) {
  int n = cells.size();
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = 0; i < n; ++i) {
    std::vector<int> mates;
    for (int j = i; j < n; ++j)
      if (cells.measure(perm[j]) == cells.measure(perm[i])) mates.push_back(j);
    int pick = mates[rng.below(mates.size())];
    std::swap(perm[i], perm[pick]);
  }
  return perm;
}

/// Random partition of the cells into k atoms (every atom nonempty).
inline AlgebraPartition random_partition(const CellSpace& cells, Rng& rng, int k) {
  int n = cells.size();
  std::vector<std::vector<int>> atoms(k);
  for (int i = 0; i < k; ++i) atoms[i].push_back(i);
  for (int c = k; c < n; ++c) atoms[rng.below(k)].push_back(c);
  return AlgebraPartition(cells, atoms);
}

/// Positive definite rational Gram matrix B^T B with unit-triangular B.
inline Mat random_gram(Rng& rng, int dim, bool quadratic) {
  Mat b = mat_identity(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) b[i][j] = Scalar(rng.range(-2, 2));
  Mat g = mat_mul(mat_transpose(b), b);
  if (quadratic) {
    Scalar bump = Scalar::quadratic(1, mpq_class(1, 2), 2);  // 1 + sqrt(2)/2 > 0
    for (int i = 0; i < dim; ++i) g[i][i] = g[i][i] * bump;
  }
  return g;
}

inline Vec random_vector(Rng& rng, int dim, long lo = -3, long hi = 3) {
  Vec v(dim, Scalar(0));
  bool nonzero = false;
  for (int i = 0; i < dim; ++i) {
    long c = rng.range(lo, hi);
    if (c != 0) nonzero = true;
    v[i] = Scalar(c);
  }
  if (!nonzero) v[static_cast<int>(rng.below(dim))] = Scalar(1);
  return v;
}

/// Product of `count` random reflections: an exact isometry of the space.
inline Mat random_isometry(const QuadraticSpace& space, Rng& rng, int count = 2) {
  Mat m = mat_identity(space.dim());
  for (int i = 0; i < count; ++i) {
    Vec w = random_vector(rng, space.dim());
    m = mat_mul(reflection_matrix(space, w), m);
  }
  return m;
}

/// Random independent vectors spanning a subspace of the given rank.
inline Subspace random_subspace(const QuadraticSpace& space, Rng& rng, int rank) {
  Subspace s;
  int guard = 0;
  while (s.dim() < rank && guard < 100) {
    ++guard;
    Vec v = random_vector(rng, space.dim());
    std::vector<Vec> trial = s.basis;
    trial.push_back(v);
    if (static_cast<int>(gram_schmidt_filter(space, trial).size()) == s.dim() + 1)
      s.basis.push_back(v);
  }
  return s;
}

/// Random Gram-preserving partial map: a random subspace and its image under
/// a random exact isometry.
inline PartialLinearIsometry random_partial_map(const QuadraticSpace& space,
                                                Rng& rng) {
  int rank = static_cast<int>(rng.range(1, std::max(1, space.dim() - 1)));
  Subspace u = random_subspace(space, rng, rank);
  Mat iso = random_isometry(space, rng, 1 + static_cast<int>(rng.below(3)));
  Subspace v;
  for (const Vec& x : u.basis) v.basis.push_back(mat_vec(iso, x));
  return PartialLinearIsometry{u, v};
}

}  // namespace testgen
