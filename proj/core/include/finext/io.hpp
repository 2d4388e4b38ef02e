#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "finext/extension.hpp"
#include "finext/hilbert.hpp"
#include "finext/malg.hpp"
#include "finext/metric.hpp"

namespace finext {
namespace io {

using Json = nlohmann::ordered_json;

struct Options {
  long budget_order = 10000;
  int max_degree = 6;
  int oracle_depth = 8;
  std::uint64_t seed = 0;
};

struct Envelope {
  std::string kind;  // "metric" | "malg" | "hilbert"
  Json payload;
  Options options;
};

Envelope parse_envelope(const Json& j);

struct MetricInstance {
  FiniteMetricSpace space;
  std::vector<PartialIsometry> isometries;
};

struct MalgInstance {
  AlgebraPartition algebra;
};

struct HilbertInstance {
  QuadraticSpace space;
  PartialLinearIsometry map;
  std::string domain_name;
  std::string codomain_name;
};

MetricInstance parse_metric(const Json& payload);
MalgInstance parse_malg(const Json& payload);
HilbertInstance parse_hilbert(const Json& payload);

Json scalar_matrix(const std::vector<std::vector<Scalar>>& m);
std::vector<std::vector<Scalar>> parse_scalar_matrix(const Json& j);

Json serialize_metric_result(const FiniteMetricSpace& space,
                             const ExtensionResult& result);
/// Rebuilds the result (quotient, classes, metric, permutations) from a
/// result document, re-deriving the class index; shapes are validated,
/// values are checked by the caller.
ExtensionResult parse_metric_result(const FiniteMetricSpace& space, const Json& j,
                                    long order_budget);

Json serialize_malg_result(const Refinement& refinement,
                           const MalgExtendCertificate& certificate);
Refinement parse_malg_result(const AlgebraPartition& base, const Json& j);

Json serialize_hilbert_result(const QuadraticSpace& space,
                              const PartialLinearIsometry& map, const WittResult& w);

Json word_tokens(const Word& w);
Word parse_word_tokens(const Json& j, int n_generators);

}  // namespace io
}  // namespace finext
