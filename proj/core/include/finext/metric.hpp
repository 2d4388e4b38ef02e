#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "finext/freegroup.hpp"
#include "finext/scalar.hpp"

namespace finext {

/// Finite metric space with exact scalar distances.  Construction validates
/// every metric axiom and caches the minimum nonzero distance, the diameter,
/// and the least M with M * delta > Delta.
class FiniteMetricSpace {
public:
  FiniteMetricSpace(std::vector<std::string> labels,
                    std::vector<std::vector<Scalar>> distances);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int i) const { return labels_.at(i); }
  int index_of(const std::string& label) const;
  const Scalar& d(int i, int j) const { return d_[i][j]; }
  const std::vector<std::vector<Scalar>>& matrix() const { return d_; }

  /// Minimum nonzero distance; nullopt for single-point spaces.
  const std::optional<Scalar>& min_distance() const { return delta_; }
  const Scalar& diameter() const { return diameter_; }
  /// Least M with M * delta > Delta (1 when delta is undefined).
  int chain_bound() const { return chain_bound_; }

private:
  std::vector<std::string> labels_;
  std::vector<std::vector<Scalar>> d_;
  std::optional<Scalar> delta_;
  Scalar diameter_;
  int chain_bound_;
};

/// Injective distance-preserving partial map, stored as point images with -1
/// for points outside the domain.
struct PartialIsometry {
  std::vector<int> map;

  int domain_size() const;
};

/// Checks injectivity and exact distance preservation.
void validate_partial_isometry(const FiniteMetricSpace& space,
                               const PartialIsometry& phi);

/// Letter graph of the partial isometries acting on the space.
OrbitAutomaton make_automaton(const FiniteMetricSpace& space,
                              const std::vector<PartialIsometry>& isometries);

/// Chain start z_0 plus pairs (z_k, z_k'); a chain from x to y has z_0 = x
/// and final pair source z_m = y.  A word realization sends each z_k to z_k'.
struct Chain {
  int start = 0;
  ChainPairs pairs;

  int end() const { return pairs.back().first; }
  bool operator==(const Chain& o) const { return start == o.start && pairs == o.pairs; }
};

void validate_chain(const FiniteMetricSpace& space, const OrbitAutomaton& aut,
                    const Chain& chain);

/// Sum over legs d(z_i, z_{i+1}') for i = 0..m-1, exact.
Scalar chain_distance(const FiniteMetricSpace& space, const Chain& chain);

/// All chains from `from` to `to` with 1 <= m <= max_links and every pair
/// orbit-reachable, ordered by m then lexicographically by pair indices.
std::vector<Chain> enumerate_chains(const FiniteMetricSpace& space,
                                    const OrbitAutomaton& aut, int from, int to,
                                    int max_links);

/// All pair sequences of length 1..max_links over reachable pairs, in the
/// same order; start points are irrelevant to triviality and separation.
std::vector<ChainPairs> enumerate_signatures(const OrbitAutomaton& aut,
                                             int max_links);

/// Shortest-path amalgam of B and C over the common part identified by the
/// labels in `common`: cross distances are min over a of d(b,a) + d(a,c).
FiniteMetricSpace amalgamate(const FiniteMetricSpace& b_space,
                             const FiniteMetricSpace& c_space,
                             const std::vector<std::string>& common);

struct IndependenceReport {
  bool independent = true;
  /// Failing pair of self-isometries and the offending points, when any.
  std::string detail;
};

/// Exhaustive check that B and C are independent over A inside D: every pair
/// of self-isometries of B and C preserving A setwise and agreeing on A must
/// union to an isometry of B union C.
IndependenceReport check_independence(const FiniteMetricSpace& d_space,
                                      const std::vector<int>& b_set,
                                      const std::vector<int>& c_set,
                                      const std::vector<int>& a_set);

/// All self-isometries of the subspace induced on `points`, as permutations
/// of that index list, enumerated lexicographically.
std::vector<std::vector<int>> subspace_isometries(const FiniteMetricSpace& space,
                                                  const std::vector<int>& points);

}  // namespace finext
