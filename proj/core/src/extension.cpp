#include "finext/extension.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "finext/errors.hpp"
#include "finext/rng.hpp"

namespace finext {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);  // keep the smaller id as root
    parent[b] = a;
  }
};

QuotientSubset signature_image(const OrbitAutomaton& aut, const FiniteQuotient& q,
                               const ChainPairs& pairs, long order_budget) {
  QuotientSubset acc;
  bool first = true;
  for (auto [z, zp] : pairs) {
    QuotientSubset img = orbit_image(aut, q, z, zp, order_budget);
    acc = first ? img : subset_product(q, acc, img, order_budget);
    first = false;
  }
  return acc;
}

using QuotientKey = std::pair<std::vector<int>, std::vector<std::vector<std::vector<int>>>>;

QuotientKey key_of(const FiniteQuotient& q) {
  return {q.degrees(), q.generator_images()};
}

// All-pairs shortest paths over the class graph, capped at the diameter.
std::vector<std::vector<Scalar>> capped_shortest_paths(
    int n_classes, const std::map<std::pair<int, int>, Scalar>& edges,
    const Scalar& cap) {
  std::vector<std::vector<std::pair<int, Scalar>>> adj(n_classes);
  for (const auto& [key, w] : edges) adj[key.first].emplace_back(key.second, w);

  std::vector<std::vector<Scalar>> dist(n_classes,
                                        std::vector<Scalar>(n_classes, cap));
  for (int src = 0; src < n_classes; ++src) {
    std::vector<std::optional<Scalar>> best(n_classes);
    std::set<std::pair<Scalar, int>> queue;
    best[src] = Scalar(0);
    queue.insert({Scalar(0), src});
    while (!queue.empty()) {
      auto [d, u] = *queue.begin();
      queue.erase(queue.begin());
      if (best[u] && d > *best[u]) continue;
      for (const auto& [v, w] : adj[u]) {
        Scalar cand = d + w;
        if (!best[v] || cand < *best[v]) {
          if (best[v]) queue.erase({*best[v], v});
          best[v] = cand;
          queue.insert({cand, v});
        }
      }
    }
    for (int t = 0; t < n_classes; ++t)
      if (best[t]) dist[src][t] = min(cap, *best[t]);
    dist[src][src] = Scalar(0);
  }
  return dist;
}

}  // namespace

int ExtensionResult::class_of(int point, int element) const {
  long order = quotient_order;
  return class_index_.at(static_cast<std::size_t>(point) * order + element);
}

ExtensionResult extend_isometries(const FiniteMetricSpace& space,
                                  const std::vector<PartialIsometry>& isometries,
                                  const ExtensionBudget& budget) {
  OrbitAutomaton aut = make_automaton(space, isometries);
  int n_gens = aut.n_generators();
  int n_points = space.size();

  ExtensionResult result;
  ExtensionCertificate& cert = result.certificate;
  cert.delta = space.min_distance();
  cert.diameter = space.diameter();
  cert.chain_bound = space.chain_bound();

  SeparationBudget sep_budget{budget.order, budget.max_degree};

  // Classify every pair sequence of length <= M; triviality and separation
  // depend only on the pairs, so each distinct sequence is handled once.
  std::vector<ChainPairs> signatures = enumerate_signatures(aut, space.chain_bound());
  cert.chains_considered = static_cast<long>(signatures.size()) * n_points;

  std::vector<ChainPairs> nontrivial;
  std::vector<FiniteQuotient> factors;
  std::vector<QuotientKey> factor_keys;
  std::set<int> degrees_tried;
  for (const ChainPairs& sig : signatures) {
    TrivialityResult triv = benois_trivial(aut, sig);
    SignatureRecord rec;
    rec.pairs = sig;
    rec.trivial = triv.trivial;
    rec.witness = triv.witness;
    if (!triv.trivial) {
      SeparationResult sep = separate_chain(aut, sig, sep_budget);
      degrees_tried.insert(sep.tried_degrees.begin(), sep.tried_degrees.end());
      QuotientKey key = key_of(sep.quotient);
      if (std::find(factor_keys.begin(), factor_keys.end(), key) ==
          factor_keys.end()) {
        factor_keys.push_back(key);
        factors.push_back(sep.quotient);
      }
      rec.separation = std::move(sep);
      nontrivial.push_back(sig);
    }
    cert.signatures.push_back(std::move(rec));
  }
  cert.tried_degrees.assign(degrees_tried.begin(), degrees_tried.end());

  // Drop factors whose chains the remaining factors already separate; the
  // greedy pass keeps the result deterministic and the combined order small.
  std::vector<std::vector<char>> separated(
      factors.size(), std::vector<char>(nontrivial.size(), 0));
  for (std::size_t f = 0; f < factors.size(); ++f)
    for (std::size_t s = 0; s < nontrivial.size(); ++s)
      separated[f][s] = separates(aut, factors[f], nontrivial[s], budget.order);
  std::vector<char> active(factors.size(), 1);
  for (std::size_t f = 0; f < factors.size(); ++f) {
    active[f] = 0;
    bool all_covered = true;
    for (std::size_t s = 0; s < nontrivial.size() && all_covered; ++s) {
      bool covered = false;
      for (std::size_t g = 0; g < factors.size() && !covered; ++g)
        covered = active[g] && separated[g][s];
      all_covered = covered;
    }
    if (!all_covered) active[f] = 1;
  }
  std::vector<FiniteQuotient> kept;
  std::set<QuotientKey> kept_keys;
  for (std::size_t f = 0; f < factors.size(); ++f)
    if (active[f]) {
      kept.push_back(factors[f]);
      kept_keys.insert(factor_keys[f]);
    }
  for (SignatureRecord& rec : cert.signatures)
    if (rec.separation)
      rec.kept = kept_keys.count(key_of(rec.separation->quotient)) > 0;

  result.quotient = combine_quotients(kept, n_gens, budget.order);
  result.quotient_order = result.quotient.order(budget.order);
  long order = result.quotient_order;
  const auto& elems = result.quotient.elements(budget.order);

  for (SignatureRecord& rec : cert.signatures) {
    if (rec.trivial) continue;
    rec.image_in_combined =
        signature_image(aut, result.quotient, rec.pairs, budget.order);
    if (rec.image_in_combined.contains_identity())
      throw InternalInvariantError("combined quotient fails to separate a chain");
  }

  // Orbit equivalence on X x Q: one letter moves (x, q) to (a(x), q * img(a)^-1).
  UnionFind uf(n_points * static_cast<int>(order));
  auto id_of = [order](int point, int element) {
    return point * static_cast<int>(order) + element;
  };
  for (int x = 0; x < n_points; ++x) {
    for (int e = 0; e < order; ++e) {
      for (int g = 0; g < n_gens; ++g) {
        for (int letter : {g + 1, -(g + 1)}) {
          int y = aut.step(x, letter);
          if (y < 0) continue;
          FiniteQuotient::Element moved = result.quotient.mul(
              elems[e], result.quotient.generator(g, letter > 0));
          int e2 = result.quotient.index_of(moved, budget.order);
          uf.unite(id_of(x, e), id_of(y, e2));
        }
      }
    }
  }

  std::map<int, int> root_to_class;
  result.class_index_.assign(n_points * order, -1);
  for (int x = 0; x < n_points; ++x)
    for (int e = 0; e < order; ++e) {
      int root = uf.find(id_of(x, e));
      auto [it, fresh] = root_to_class.emplace(root, static_cast<int>(result.classes.size()));
      if (fresh) result.classes.emplace_back();
      result.class_index_[id_of(x, e)] = it->second;
      result.classes[it->second].emplace_back(x, e);
    }
  int n_classes = static_cast<int>(result.classes.size());

  // Edge weights between classes sharing a fiber.
  std::map<std::pair<int, int>, Scalar> edges;
  for (int e = 0; e < order; ++e)
    for (int x = 0; x < n_points; ++x)
      for (int y = 0; y < n_points; ++y) {
        if (x == y) continue;
        int cx = result.class_of(x, e);
        int cy = result.class_of(y, e);
        if (cx == cy) continue;
        auto key = std::make_pair(cx, cy);
        auto it = edges.find(key);
        if (it == edges.end() || space.d(x, y) < it->second)
          edges.insert_or_assign(key, space.d(x, y));
      }
  result.d_Y = capped_shortest_paths(n_classes, edges, space.diameter());

  // Extending isometries and the embedding.
  result.generator_perms.assign(n_gens, std::vector<int>(n_classes, -1));
  for (int g = 0; g < n_gens; ++g) {
    for (int c = 0; c < n_classes; ++c) {
      int image = -1;
      for (auto [x, e] : result.classes[c]) {
        FiniteQuotient::Element moved = result.quotient.mul(
            result.quotient.generator(g, false), elems[e]);
        int cl = result.class_of(x, result.quotient.index_of(moved, budget.order));
        if (image == -1)
          image = cl;
        else if (image != cl)
          throw InternalInvariantError("generator action is not class-invariant");
      }
      result.generator_perms[g][c] = image;
    }
    std::vector<char> hit(n_classes, 0);
    for (int c = 0; c < n_classes; ++c) {
      int t = result.generator_perms[g][c];
      if (t < 0 || hit[t])
        throw InternalInvariantError("generator action is not a permutation");
      hit[t] = 1;
    }
  }
  result.embedding.resize(n_points);
  for (int x = 0; x < n_points; ++x) result.embedding[x] = result.class_of(x, 0);

  // Exact postcondition checks.
  for (int x = 0; x < n_points; ++x)
    for (int y = 0; y < n_points; ++y) {
      const Scalar& dy = result.d_Y[result.embedding[x]][result.embedding[y]];
      if (dy != space.d(x, y))
        throw InternalInvariantError("embedding is not isometric at (" +
                                     space.label(x) + ", " + space.label(y) + ")");
    }
  for (int c = 0; c < n_classes; ++c)
    for (int cc = 0; cc < n_classes; ++cc) {
      if ((c == cc) != result.d_Y[c][cc].is_zero())
        throw InternalInvariantError("quotient metric separation failure");
      if (result.d_Y[c][cc] != result.d_Y[cc][c])
        throw InternalInvariantError("quotient metric asymmetry");
      for (int mid = 0; mid < n_classes; ++mid)
        if (result.d_Y[c][cc] > result.d_Y[c][mid] + result.d_Y[mid][cc])
          throw InternalInvariantError("quotient metric triangle failure");
    }
  for (int g = 0; g < n_gens; ++g) {
    const auto& perm = result.generator_perms[g];
    for (int c = 0; c < n_classes; ++c)
      for (int cc = 0; cc < n_classes; ++cc)
        if (result.d_Y[perm[c]][perm[cc]] != result.d_Y[c][cc])
          throw InternalInvariantError("extending map is not an isometry");
    for (int x = 0; x < n_points; ++x) {
      int image = isometries[g].map[x];
      if (image < 0) continue;
      if (perm[result.embedding[x]] != result.embedding[image])
        throw InternalInvariantError("extension does not restrict to the partial map");
    }
  }
  return result;
}

std::pair<Scalar, std::optional<Chain>> chain_oracle_distance(
    const FiniteMetricSpace& space, const std::vector<PartialIsometry>& isometries,
    const FiniteQuotient& quotient, int from, int to, int element, int depth,
    long order_budget) {
  OrbitAutomaton aut = make_automaton(space, isometries);
  std::map<ChainPairs, QuotientSubset> image_memo;
  auto image_of = [&](const ChainPairs& sig) -> const QuotientSubset& {
    auto it = image_memo.find(sig);
    if (it == image_memo.end())
      it = image_memo.emplace(sig, signature_image(aut, quotient, sig, order_budget))
               .first;
    return it->second;
  };

  Scalar best = space.diameter();
  std::optional<Chain> best_chain;
  std::optional<Scalar> best_raw;
  for (const Chain& chain : enumerate_chains(space, aut, from, to, depth)) {
    const QuotientSubset& img = image_of(chain.pairs);
    if (!std::binary_search(img.indices.begin(), img.indices.end(), element))
      continue;
    Scalar value = chain_distance(space, chain);
    if (!best_raw || value < *best_raw) {
      best_raw = value;
      best_chain = chain;
    }
  }
  if (best_raw && *best_raw < best) best = *best_raw;
  if (!best_raw || *best_raw > space.diameter()) best_chain.reset();
  return {best, best_chain};
}

VerifyReport verify_extension(const FiniteMetricSpace& space,
                              const std::vector<PartialIsometry>& isometries,
                              const ExtensionResult& result,
                              const VerifyOptions& options) {
  VerifyReport report;
  long order = result.quotient_order;
  // A relevant class path has at most M-1 weighted edges, and one extra
  // zero-cost link can absorb the switch from the stated representative, so
  // the enumeration is exact from depth M on.
  int exact_depth = space.chain_bound();
  int depth = std::min(options.oracle_depth, exact_depth);
  bool depth_limited = options.oracle_depth < exact_depth;
  std::set<int> sample_set{0};
  Rng rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  while (static_cast<int>(sample_set.size()) < options.group_samples &&
         static_cast<long>(sample_set.size()) < order)
    sample_set.insert(static_cast<int>(rng.below(static_cast<std::uint64_t>(order))));

  for (int x = 0; x < space.size(); ++x) {
    for (int y = 0; y < space.size(); ++y) {
      for (int w : sample_set) {
        auto [oracle_value, optimal] = chain_oracle_distance(
            space, isometries, result.quotient, x, y, w, depth, order + 1);
        const Scalar& engine_value =
            result.d_Y[result.class_of(x, 0)][result.class_of(y, w)];
        ++report.triples_checked;
        if (oracle_value != engine_value) {
          if (depth_limited && oracle_value > engine_value) {
            ++report.inconclusive;
            continue;
          }
          report.ok = false;
          report.failures.push_back(
              "distance mismatch at (" + space.label(x) + ", " + space.label(y) +
              ", element " + std::to_string(w) + "): chains give " +
              oracle_value.str() + ", shortest paths give " + engine_value.str());
          continue;
        }
        if (!optimal) continue;
        if (depth_limited) continue;
        int m = static_cast<int>(optimal->pairs.size());
        for (int i = 1; i < m; ++i) {
          if (optimal->pairs[i - 1].first == optimal->pairs[i].second) {
            report.ok = false;
            report.failures.push_back(
                "optimal chain at (" + space.label(x) + ", " + space.label(y) +
                ", element " + std::to_string(w) +
                ") admits an interior shortening");
          }
        }
        if (w == 0) {
          bool reduced = m == 1 && optimal->pairs[0].first == optimal->pairs[0].second;
          if (!reduced) {
            report.ok = false;
            report.failures.push_back("optimal trivial chain at (" + space.label(x) +
                                      ", " + space.label(y) +
                                      ") does not reduce to a fixed single pair");
          }
        }
      }
    }
  }
  return report;
}

}  // namespace finext
