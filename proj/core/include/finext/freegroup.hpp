#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace finext {

/// Freely reduced word over a_1..a_n.  Letters are nonzero signed generator
/// indices: +i stands for a_i, -i for its inverse; the empty word is e.
class Word {
public:
  Word() = default;

  /// Reduces an arbitrary letter sequence; indices must satisfy 1 <= |l| <= n.
  static Word reduce(const std::vector<int>& letters, int n_generators);

  const std::vector<int>& letters() const { return letters_; }
  bool empty() const { return letters_.empty(); }
  std::size_t size() const { return letters_.size(); }

  Word inverse() const;
  /// Concatenation followed by free reduction.
  Word operator*(const Word& o) const;
  bool operator==(const Word& o) const { return letters_ == o.letters_; }
  bool operator!=(const Word& o) const { return !(*this == o); }

  /// "e" or space-separated tokens like "a1 a2^-1".
  std::string str() const;
  static std::string letter_token(int letter);

private:
  std::vector<int> letters_;
};

/// Points of a finite space with one partial injection per generator,
/// viewed as a labeled graph.  Edges x -> phi_i(x) carry label a_i and are
/// traversed backwards for a_i^-1.
class OrbitAutomaton {
public:
  /// forward[g][p] is phi_g(p), or -1 where undefined; each map must be
  /// injective.
  OrbitAutomaton(int n_points, std::vector<std::vector<int>> forward);

  int n_points() const { return n_points_; }
  int n_generators() const { return static_cast<int>(forward_.size()); }

  /// One letter action; -1 when the point leaves the domain.
  int step(int point, int letter) const;

  /// Word action, rightmost letter applied first; nullopt when undefined.
  std::optional<int> apply(const Word& w, int point) const;
  std::optional<int> apply_letters(const std::vector<int>& letters, int point) const;

  /// Whether some word maps `from` to `to` (nonempty T_from^to).
  bool reachable(int from, int to) const;
  /// All reachable ordered pairs, lexicographically sorted.
  std::vector<std::pair<int, int>> reachable_pairs() const;

private:
  int n_points_;
  std::vector<std::vector<int>> forward_;
  std::vector<std::vector<int>> backward_;
};

/// Finite quotient of F_n presented by generator images in a direct product
/// of symmetric groups.  Elements are concatenated one-line permutations,
/// one block per factor; the group is materialized on demand by closing the
/// generator images under left multiplication.
class FiniteQuotient {
public:
  using Element = std::vector<int>;

  /// gen_images[g][f] is the one-line image of a_g in the f-th factor.
  FiniteQuotient(std::vector<int> degrees,
                 std::vector<std::vector<std::vector<int>>> gen_images);

  static FiniteQuotient trivial(int n_generators);

  int n_generators() const { return static_cast<int>(gen_fwd_.size()); }
  const std::vector<int>& degrees() const { return degrees_; }
  const std::vector<std::vector<std::vector<int>>>& generator_images() const {
    return gen_images_;
  }

  Element identity() const;
  Element generator(int g, bool inverse) const;
  Element mul(const Element& a, const Element& b) const;
  Element inv(const Element& a) const;
  Element image(const Word& w) const;

  /// Materializes the generated subgroup; BudgetError past order_budget.
  void materialize(long order_budget) const;
  long order(long order_budget) const;
  const std::vector<Element>& elements(long order_budget) const;
  /// Index in materialization order (identity is 0).
  int index_of(const Element& e, long order_budget) const;

private:
  std::vector<int> degrees_;
  std::vector<std::vector<std::vector<int>>> gen_images_;
  std::vector<Element> gen_fwd_;
  std::vector<Element> gen_bwd_;
  mutable std::vector<Element> elements_;
  mutable std::map<Element, int> index_;
};

/// Subset of a materialized quotient, stored as sorted element indices.
struct QuotientSubset {
  std::vector<int> indices;

  bool contains_identity() const;
  bool operator==(const QuotientSubset& o) const { return indices == o.indices; }
};

QuotientSubset subset_product(const FiniteQuotient& q, const QuotientSubset& a,
                              const QuotientSubset& b, long order_budget);

/// Image in q of { w : w(x) = y }, by BFS over (point, element) pairs.
QuotientSubset orbit_image(const OrbitAutomaton& aut, const FiniteQuotient& q,
                           int x, int y, long order_budget);

/// Ordered (z_k, z_k') pairs of a chain; the shared key for triviality and
/// separation since neither depends on the start point.
using ChainPairs = std::vector<std::pair<int, int>>;

struct TrivialityResult {
  bool trivial = false;
  /// When trivial: words w_k (possibly unreduced) with w_k(z_k) = z_k' and
  /// freely reduced product e, extracted from the saturation certificate.
  std::vector<Word> witness;
};

/// Decides e in T_{z_1}^{z_1'} ... T_{z_m}^{z_m'} by epsilon-saturation of
/// the concatenated orbit automata.
TrivialityResult benois_trivial(const OrbitAutomaton& aut, const ChainPairs& pairs);

struct FactorizationOracle {
  bool conclusive = false;  // a witness was found within the depth
  std::vector<Word> witness;
};

/// Brute-force search for a word realization whose product reduces to e,
/// bounded by the total letter count; independent of the saturation route.
FactorizationOracle bounded_factorization(const OrbitAutomaton& aut,
                                          const ChainPairs& pairs, int depth);

struct SeparationBudget {
  long order = 10000;
  int max_degree = 6;
};

struct SeparationResult {
  FiniteQuotient quotient;
  QuotientSubset product_image;
  std::vector<int> tried_degrees;
};

/// Canonical search for a quotient whose product image misses the identity:
/// degrees ascending, generator-image tuples in lexicographic order.
/// Precondition: the chain is nontrivial.
SeparationResult separate_chain(const OrbitAutomaton& aut, const ChainPairs& pairs,
                                const SeparationBudget& budget);

/// Same search over several chains at once; nullopt when the budget runs out.
std::optional<FiniteQuotient> find_common_separator(
    const OrbitAutomaton& aut, const std::vector<ChainPairs>& chains,
    const SeparationBudget& budget, std::vector<int>* tried_degrees);

/// Whether q separates the chain (identity misses the product image).
bool separates(const OrbitAutomaton& aut, const FiniteQuotient& q,
               const ChainPairs& pairs, long order_budget);

/// Direct product realizing the intersection of the factor kernels.
FiniteQuotient combine_quotients(const std::vector<FiniteQuotient>& factors,
                                 int n_generators, long order_budget);

}  // namespace finext
