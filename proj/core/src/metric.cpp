#include "finext/metric.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "finext/errors.hpp"

namespace finext {

FiniteMetricSpace::FiniteMetricSpace(std::vector<std::string> labels,
                                     std::vector<std::vector<Scalar>> distances)
    : labels_(std::move(labels)), d_(std::move(distances)) {
  int n = static_cast<int>(labels_.size());
  if (n == 0) throw InputError("metric space needs at least one point");
  {
    std::set<std::string> uniq(labels_.begin(), labels_.end());
    if (static_cast<int>(uniq.size()) != n)
      throw InputError("point labels must be distinct");
  }
  if (static_cast<int>(d_.size()) != n)
    throw InputError("distance matrix is not square");
  for (const auto& row : d_)
    if (static_cast<int>(row.size()) != n)
      throw InputError("distance matrix is not square");

  for (int i = 0; i < n; ++i) {
    if (!d_[i][i].is_zero())
      throw InputError("nonzero self-distance at " + labels_[i]);
    for (int j = 0; j < n; ++j) {
      if (i != j && d_[i][j].sign() <= 0)
        throw InputError("nonpositive distance between " + labels_[i] + " and " +
                         labels_[j]);
      if (d_[i][j] != d_[j][i])
        throw InputError("asymmetric distance between " + labels_[i] + " and " +
                         labels_[j]);
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (d_[i][k] > d_[i][j] + d_[j][k])
          throw InputError("triangle violation at (" + labels_[i] + ", " +
                           labels_[j] + ", " + labels_[k] + ")");

  diameter_ = Scalar(0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (!delta_ || d_[i][j] < *delta_) delta_ = d_[i][j];
      diameter_ = max(diameter_, d_[i][j]);
    }
  if (delta_) {
    chain_bound_ = static_cast<int>((diameter_ / *delta_).floor_long()) + 1;
  } else {
    chain_bound_ = 1;
  }
}

int FiniteMetricSpace::index_of(const std::string& label) const {
  for (int i = 0; i < size(); ++i)
    if (labels_[i] == label) return i;
  throw InputError("unknown point label: " + label);
}

int PartialIsometry::domain_size() const {
  int k = 0;
  for (int v : map)
    if (v >= 0) ++k;
  return k;
}

void validate_partial_isometry(const FiniteMetricSpace& space,
                               const PartialIsometry& phi) {
  int n = space.size();
  if (static_cast<int>(phi.map.size()) != n)
    throw InputError("partial isometry size mismatch");
  std::vector<char> hit(n, 0);
  for (int x = 0; x < n; ++x) {
    int y = phi.map[x];
    if (y == -1) continue;
    if (y < 0 || y >= n) throw InputError("partial isometry image out of range");
    if (hit[y]) throw InputError("partial isometry not injective");
    hit[y] = 1;
  }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (phi.map[x] >= 0 && phi.map[y] >= 0 &&
          space.d(phi.map[x], phi.map[y]) != space.d(x, y))
        throw InputError("map does not preserve distance between " +
                         space.label(x) + " and " + space.label(y));
}

OrbitAutomaton make_automaton(const FiniteMetricSpace& space,
                              const std::vector<PartialIsometry>& isometries) {
  std::vector<std::vector<int>> forward;
  forward.reserve(isometries.size());
  for (const PartialIsometry& phi : isometries) {
    validate_partial_isometry(space, phi);
    forward.push_back(phi.map);
  }
  return OrbitAutomaton(space.size(), forward);
}

void validate_chain(const FiniteMetricSpace& space, const OrbitAutomaton& aut,
                    const Chain& chain) {
  if (chain.pairs.empty()) throw InputError("chain needs at least one pair");
  if (chain.start < 0 || chain.start >= space.size())
    throw InputError("chain start out of range");
  for (auto [z, zp] : chain.pairs) {
    if (z < 0 || z >= space.size() || zp < 0 || zp >= space.size())
      throw InputError("chain pair out of range");
    if (!aut.reachable(z, zp))
      throw InputError("chain pair (" + space.label(z) + ", " + space.label(zp) +
                       ") is not orbit-reachable");
  }
}

Scalar chain_distance(const FiniteMetricSpace& space, const Chain& chain) {
  // Legs run from z_i to z_{i+1}'; z_m enters only as the endpoint.
  Scalar total;
  int m = static_cast<int>(chain.pairs.size());
  for (int i = 0; i < m; ++i) {
    int z_i = i == 0 ? chain.start : chain.pairs[i - 1].first;
    int z_next_prime = chain.pairs[i].second;
    total += space.d(z_i, z_next_prime);
  }
  return total;
}

std::vector<ChainPairs> enumerate_signatures(const OrbitAutomaton& aut,
                                             int max_links) {
  std::vector<std::pair<int, int>> pairs = aut.reachable_pairs();
  std::vector<ChainPairs> out;
  ChainPairs current;
  auto rec = [&](auto&& self, int remaining) -> void {
    if (!current.empty()) out.push_back(current);
    if (remaining == 0) return;
    for (const auto& p : pairs) {
      current.push_back(p);
      self(self, remaining - 1);
      current.pop_back();
    }
  };
  rec(rec, max_links);
  std::stable_sort(out.begin(), out.end(),
                   [](const ChainPairs& a, const ChainPairs& b) {
                     return a.size() < b.size();
                   });
  return out;
}

std::vector<Chain> enumerate_chains(const FiniteMetricSpace& space,
                                    const OrbitAutomaton& aut, int from, int to,
                                    int max_links) {
  if (from < 0 || from >= space.size() || to < 0 || to >= space.size())
    throw InputError("chain endpoint out of range");
  std::vector<Chain> out;
  for (const ChainPairs& sig : enumerate_signatures(aut, max_links))
    if (sig.back().first == to) out.push_back(Chain{from, sig});
  return out;
}

FiniteMetricSpace amalgamate(const FiniteMetricSpace& b_space,
                             const FiniteMetricSpace& c_space,
                             const std::vector<std::string>& common) {
  if (common.empty())
    throw UnsupportedInstanceError(
        "amalgamation over an empty common part is not defined");
  std::vector<int> a_in_b, a_in_c;
  for (const std::string& label : common) {
    a_in_b.push_back(b_space.index_of(label));
    a_in_c.push_back(c_space.index_of(label));
  }
  int k = static_cast<int>(common.size());
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (b_space.d(a_in_b[i], a_in_b[j]) != c_space.d(a_in_c[i], a_in_c[j]))
        throw InputError("common part carries different metrics in B and C");

  std::set<std::string> common_set(common.begin(), common.end());
  for (const std::string& label : c_space.labels()) {
    if (common_set.count(label)) continue;
    for (const std::string& other : b_space.labels())
      if (other == label)
        throw InputError("label " + label + " appears outside the common part");
  }

  std::vector<std::string> labels = b_space.labels();
  std::vector<int> c_only;
  for (int i = 0; i < c_space.size(); ++i)
    if (!common_set.count(c_space.label(i))) {
      c_only.push_back(i);
      labels.push_back(c_space.label(i));
    }

  int nb = b_space.size();
  int n = nb + static_cast<int>(c_only.size());
  auto c_index = [&](const std::string& label) { return c_space.index_of(label); };
  std::vector<std::vector<Scalar>> d(n, std::vector<Scalar>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i < nb && j < nb) {
        d[i][j] = b_space.d(i, j);
      } else if (i >= nb && j >= nb) {
        d[i][j] = c_space.d(c_only[i - nb], c_only[j - nb]);
      } else {
        int b = i < nb ? i : j;
        int c = i < nb ? c_only[j - nb] : c_only[i - nb];
        std::optional<Scalar> best;
        for (const std::string& label : common) {
          Scalar via = b_space.d(b, b_space.index_of(label)) +
                       c_space.d(c_index(label), c);
          if (!best || via < *best) best = via;
        }
        d[i][j] = *best;
      }
    }
  }
  return FiniteMetricSpace(labels, d);
}

std::vector<std::vector<int>> subspace_isometries(const FiniteMetricSpace& space,
                                                  const std::vector<int>& points) {
  int k = static_cast<int>(points.size());
  std::vector<std::vector<int>> out;
  std::vector<int> image(k, -1);
  std::vector<char> used(k, 0);
  auto rec = [&](auto&& self, int pos) -> void {
    if (pos == k) {
      out.push_back(image);
      return;
    }
    for (int cand = 0; cand < k; ++cand) {
      if (used[cand]) continue;
      bool ok = true;
      for (int prev = 0; prev < pos && ok; ++prev)
        ok = space.d(points[pos], points[prev]) ==
             space.d(points[cand], points[image[prev]]);
      if (!ok) continue;
      used[cand] = 1;
      image[pos] = cand;
      self(self, pos + 1);
      used[cand] = 0;
    }
  };
  rec(rec, 0);
  return out;
}

IndependenceReport check_independence(const FiniteMetricSpace& d_space,
                                      const std::vector<int>& b_set,
                                      const std::vector<int>& c_set,
                                      const std::vector<int>& a_set) {
  std::set<int> b_points(b_set.begin(), b_set.end());
  std::set<int> c_points(c_set.begin(), c_set.end());
  for (int a : a_set)
    if (!b_points.count(a) || !c_points.count(a))
      throw InputError("common part must lie inside both subsets");

  std::set<int> a_points(a_set.begin(), a_set.end());
  auto preserves_a = [&](const std::vector<int>& points,
                         const std::vector<int>& perm) {
    std::set<int> image;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (a_points.count(points[i])) image.insert(points[perm[i]]);
    return image == a_points;
  };

  std::vector<std::vector<int>> b_isos = subspace_isometries(d_space, b_set);
  std::vector<std::vector<int>> c_isos = subspace_isometries(d_space, c_set);

  std::vector<int> union_points(b_set);
  for (int c : c_set)
    if (!b_points.count(c)) union_points.push_back(c);

  auto describe = [&](const std::vector<int>& points, const std::vector<int>& perm) {
    std::string s = "{";
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i) s += ", ";
      s += d_space.label(points[i]) + "->" + d_space.label(points[perm[i]]);
    }
    return s + "}";
  };

  for (const auto& phi : b_isos) {
    if (!preserves_a(b_set, phi)) continue;
    for (const auto& psi : c_isos) {
      if (!preserves_a(c_set, psi)) continue;
      std::map<int, int> uni;
      bool agree = true;
      int conflict_point = -1;
      for (std::size_t i = 0; i < b_set.size(); ++i) uni[b_set[i]] = b_set[phi[i]];
      for (std::size_t i = 0; i < c_set.size(); ++i) {
        int p = c_set[i];
        int image = c_set[psi[i]];
        auto it = uni.find(p);
        if (it != uni.end() && it->second != image) {
          agree = false;
          conflict_point = p;
          break;
        }
        uni[p] = image;
      }
      bool agree_on_a = true;
      for (int a : a_set) {
        std::size_t bi =
            std::find(b_set.begin(), b_set.end(), a) - b_set.begin();
        std::size_t ci =
            std::find(c_set.begin(), c_set.end(), a) - c_set.begin();
        if (b_set[phi[bi]] != c_set[psi[ci]]) {
          agree_on_a = false;
          break;
        }
      }
      if (!agree_on_a) continue;
      if (!agree)
        return IndependenceReport{
            false, "maps disagree at " + d_space.label(conflict_point) +
                       " for phi=" + describe(b_set, phi) +
                       " psi=" + describe(c_set, psi)};
      for (std::size_t i = 0; i < union_points.size(); ++i)
        for (std::size_t j = i + 1; j < union_points.size(); ++j) {
          int p = union_points[i], q = union_points[j];
          if (d_space.d(uni[p], uni[q]) != d_space.d(p, q))
            return IndependenceReport{
                false, "distance clash at (" + d_space.label(p) + ", " +
                           d_space.label(q) + ") for phi=" + describe(b_set, phi) +
                           " psi=" + describe(c_set, psi)};
        }
    }
  }
  return IndependenceReport{};
}

}  // namespace finext
