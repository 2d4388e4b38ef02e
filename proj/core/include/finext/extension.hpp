#pragma once

#include <optional>
#include <string>
#include <vector>

#include "finext/freegroup.hpp"
#include "finext/metric.hpp"
#include "finext/scalar.hpp"

namespace finext {

struct ExtensionBudget {
  long order = 10000;
  int max_degree = 6;
};

/// Per pair-sequence record: triviality with its witness, or the canonical
/// separation found for it, plus whether that factor survived redundancy
/// elimination before combining.
struct SignatureRecord {
  ChainPairs pairs;
  bool trivial = false;
  std::vector<Word> witness;
  std::optional<SeparationResult> separation;
  bool kept = false;
  QuotientSubset image_in_combined;
};

struct ExtensionCertificate {
  std::optional<Scalar> delta;
  Scalar diameter;
  int chain_bound = 1;
  long chains_considered = 0;
  std::vector<SignatureRecord> signatures;
  std::vector<int> tried_degrees;
};

/// The finite extension: classes of X x Q under the orbit equivalence, the
/// quotient metric, the extending isometries (one class permutation per
/// generator) and the isometric embedding of X.
struct ExtensionResult {
  FiniteQuotient quotient = FiniteQuotient::trivial(0);
  long quotient_order = 1;
  /// classes[c] lists members (point, element index), sorted; classes are
  /// ordered by their lexicographically minimal representative.
  std::vector<std::vector<std::pair<int, int>>> classes;
  /// Flattened (point, element) -> class lookup, point-major.
  std::vector<int> class_index_;
  std::vector<std::vector<Scalar>> d_Y;
  std::vector<std::vector<int>> generator_perms;
  std::vector<int> embedding;
  ExtensionCertificate certificate;

  int class_of(int point, int element) const;
};

/// Builds a finite metric extension of the space in which every partial
/// isometry extends to a total isometry.  All postconditions are verified
/// exactly before returning.
ExtensionResult extend_isometries(const FiniteMetricSpace& space,
                                  const std::vector<PartialIsometry>& isometries,
                                  const ExtensionBudget& budget = {});

struct VerifyOptions {
  int oracle_depth = 8;
  std::uint64_t seed = 0;
  int group_samples = 6;
};

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> failures;
  long triples_checked = 0;
  long inconclusive = 0;  // depth-limited comparisons that stayed upper bounds
};

/// Independent re-computation of sampled quotient distances by direct chain
/// enumeration, plus the shortening checks on the optimal chains.
VerifyReport verify_extension(const FiniteMetricSpace& space,
                              const std::vector<PartialIsometry>& isometries,
                              const ExtensionResult& result,
                              const VerifyOptions& options = {});

/// Minimum of the diameter and the best chain value for the triple, with the
/// chain realization product required to land on `element` in the quotient.
/// Returns the optimal chain alongside when one attains the value.
std::pair<Scalar, std::optional<Chain>> chain_oracle_distance(
    const FiniteMetricSpace& space, const std::vector<PartialIsometry>& isometries,
    const FiniteQuotient& quotient, int from, int to, int element, int depth,
    long order_budget);

}  // namespace finext
