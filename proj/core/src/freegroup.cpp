#include "finext/freegroup.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <set>

#include "finext/errors.hpp"

namespace finext {

// ---------------------------------------------------------------------------
// Word

Word Word::reduce(const std::vector<int>& letters, int n_generators) {
  Word w;
  for (int l : letters) {
    if (l == 0 || l > n_generators || l < -n_generators)
      throw InputError("word letter out of range: " + std::to_string(l));
    if (!w.letters_.empty() && w.letters_.back() == -l)
      w.letters_.pop_back();
    else
      w.letters_.push_back(l);
  }
  return w;
}

Word Word::inverse() const {
  Word w;
  w.letters_.reserve(letters_.size());
  for (auto it = letters_.rbegin(); it != letters_.rend(); ++it)
    w.letters_.push_back(-*it);
  return w;
}

Word Word::operator*(const Word& o) const {
  Word w = *this;
  for (int l : o.letters_) {
    if (!w.letters_.empty() && w.letters_.back() == -l)
      w.letters_.pop_back();
    else
      w.letters_.push_back(l);
  }
  return w;
}

std::string Word::letter_token(int letter) {
  if (letter > 0) return "a" + std::to_string(letter);
  return "a" + std::to_string(-letter) + "^-1";
}

std::string Word::str() const {
  if (letters_.empty()) return "e";
  std::string out;
  for (std::size_t i = 0; i < letters_.size(); ++i) {
    if (i) out += ' ';
    out += letter_token(letters_[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// OrbitAutomaton

OrbitAutomaton::OrbitAutomaton(int n_points, std::vector<std::vector<int>> forward)
    : n_points_(n_points), forward_(std::move(forward)) {
  backward_.assign(forward_.size(), std::vector<int>(n_points_, -1));
  for (std::size_t g = 0; g < forward_.size(); ++g) {
    if (static_cast<int>(forward_[g].size()) != n_points_)
      throw InputError("partial map size mismatch");
    for (int x = 0; x < n_points_; ++x) {
      int y = forward_[g][x];
      if (y == -1) continue;
      if (y < 0 || y >= n_points_) throw InputError("partial map image out of range");
      if (backward_[g][y] != -1) throw InputError("partial map not injective");
      backward_[g][y] = x;
    }
  }
}

int OrbitAutomaton::step(int point, int letter) const {
  if (point < 0 || point >= n_points_) return -1;
  if (letter > 0) return forward_[letter - 1][point];
  return backward_[-letter - 1][point];
}

std::optional<int> OrbitAutomaton::apply_letters(const std::vector<int>& letters,
                                                 int point) const {
  int x = point;
  for (auto it = letters.rbegin(); it != letters.rend(); ++it) {
    x = step(x, *it);
    if (x < 0) return std::nullopt;
  }
  return x;
}

std::optional<int> OrbitAutomaton::apply(const Word& w, int point) const {
  return apply_letters(w.letters(), point);
}

bool OrbitAutomaton::reachable(int from, int to) const {
  std::vector<char> seen(n_points_, 0);
  std::deque<int> queue{from};
  seen[from] = 1;
  while (!queue.empty()) {
    int p = queue.front();
    queue.pop_front();
    if (p == to) return true;
    for (int g = 1; g <= n_generators(); ++g) {
      for (int letter : {g, -g}) {
        int q = step(p, letter);
        if (q >= 0 && !seen[q]) {
          seen[q] = 1;
          queue.push_back(q);
        }
      }
    }
  }
  return false;
}

std::vector<std::pair<int, int>> OrbitAutomaton::reachable_pairs() const {
  std::vector<std::pair<int, int>> out;
  for (int x = 0; x < n_points_; ++x)
    for (int y = 0; y < n_points_; ++y)
      if (reachable(x, y)) out.emplace_back(x, y);
  return out;
}

// ---------------------------------------------------------------------------
// FiniteQuotient

namespace {

void validate_perm(const std::vector<int>& p, int degree) {
  if (static_cast<int>(p.size()) != degree)
    throw InputError("permutation degree mismatch");
  std::vector<char> seen(degree, 0);
  for (int v : p) {
    if (v < 0 || v >= degree || seen[v]) throw InputError("not a permutation");
    seen[v] = 1;
  }
}

}  // namespace

FiniteQuotient::FiniteQuotient(std::vector<int> degrees,
                               std::vector<std::vector<std::vector<int>>> gen_images)
    : degrees_(std::move(degrees)), gen_images_(std::move(gen_images)) {
  for (const auto& per_gen : gen_images_) {
    if (per_gen.size() != degrees_.size())
      throw InputError("generator image factor count mismatch");
    for (std::size_t f = 0; f < degrees_.size(); ++f)
      validate_perm(per_gen[f], degrees_[f]);
  }
  gen_fwd_.reserve(gen_images_.size());
  gen_bwd_.reserve(gen_images_.size());
  for (const auto& per_gen : gen_images_) {
    Element e;
    for (const auto& block : per_gen) e.insert(e.end(), block.begin(), block.end());
    gen_fwd_.push_back(e);
    gen_bwd_.push_back(inv(e));
  }
}

FiniteQuotient FiniteQuotient::trivial(int n_generators) {
  return FiniteQuotient({}, std::vector<std::vector<std::vector<int>>>(n_generators));
}

FiniteQuotient::Element FiniteQuotient::identity() const {
  Element e;
  for (int d : degrees_)
    for (int i = 0; i < d; ++i) e.push_back(i);
  return e;
}

FiniteQuotient::Element FiniteQuotient::generator(int g, bool inverse) const {
  return inverse ? gen_bwd_.at(g) : gen_fwd_.at(g);
}

FiniteQuotient::Element FiniteQuotient::mul(const Element& a, const Element& b) const {
  Element out(a.size());
  std::size_t off = 0;
  for (int d : degrees_) {
    for (int p = 0; p < d; ++p) out[off + p] = a[off + b[off + p]];
    off += d;
  }
  return out;
}

FiniteQuotient::Element FiniteQuotient::inv(const Element& a) const {
  Element out(a.size());
  std::size_t off = 0;
  for (int d : degrees_) {
    for (int p = 0; p < d; ++p) out[off + a[off + p]] = p;
    off += d;
  }
  return out;
}

FiniteQuotient::Element FiniteQuotient::image(const Word& w) const {
  Element acc = identity();
  for (int l : w.letters()) acc = mul(acc, generator(std::abs(l) - 1, l < 0));
  return acc;
}

void FiniteQuotient::materialize(long order_budget) const {
  if (!elements_.empty()) {
    if (static_cast<long>(elements_.size()) > order_budget)
      throw BudgetError("quotient order exceeds budget", order_budget);
    return;
  }
  std::deque<Element> queue;
  Element id = identity();
  elements_.push_back(id);
  index_[id] = 0;
  queue.push_back(id);
  while (!queue.empty()) {
    Element e = queue.front();
    queue.pop_front();
    for (std::size_t g = 0; g < gen_fwd_.size(); ++g) {
      for (bool inverse : {false, true}) {
        Element ne = mul(generator(static_cast<int>(g), inverse), e);
        if (index_.count(ne)) continue;
        if (static_cast<long>(elements_.size()) + 1 > order_budget) {
          elements_.clear();
          index_.clear();
          throw BudgetError("quotient order exceeds budget", order_budget);
        }
        index_[ne] = static_cast<int>(elements_.size());
        elements_.push_back(ne);
        queue.push_back(ne);
      }
    }
  }
}

long FiniteQuotient::order(long order_budget) const {
  materialize(order_budget);
  return static_cast<long>(elements_.size());
}

const std::vector<FiniteQuotient::Element>& FiniteQuotient::elements(
    long order_budget) const {
  materialize(order_budget);
  return elements_;
}

int FiniteQuotient::index_of(const Element& e, long order_budget) const {
  materialize(order_budget);
  auto it = index_.find(e);
  if (it == index_.end())
    throw InternalInvariantError("element outside materialized quotient");
  return it->second;
}

// ---------------------------------------------------------------------------
// Subsets and orbit images

bool QuotientSubset::contains_identity() const {
  return std::binary_search(indices.begin(), indices.end(), 0);
}

QuotientSubset subset_product(const FiniteQuotient& q, const QuotientSubset& a,
                              const QuotientSubset& b, long order_budget) {
  const auto& elems = q.elements(order_budget);
  std::set<int> out;
  for (int i : a.indices)
    for (int j : b.indices)
      out.insert(q.index_of(q.mul(elems[i], elems[j]), order_budget));
  return QuotientSubset{std::vector<int>(out.begin(), out.end())};
}

QuotientSubset orbit_image(const OrbitAutomaton& aut, const FiniteQuotient& q,
                           int x, int y, long order_budget) {
  q.materialize(order_budget);
  const auto& elems = q.elements(order_budget);
  long n_elems = static_cast<long>(elems.size());
  int P = aut.n_points();
  std::vector<char> seen(static_cast<std::size_t>(P) * n_elems, 0);
  std::deque<std::pair<int, int>> queue;
  auto push = [&](int p, int e) {
    std::size_t id = static_cast<std::size_t>(p) * n_elems + e;
    if (!seen[id]) {
      seen[id] = 1;
      queue.emplace_back(p, e);
    }
  };
  push(x, 0);
  std::set<int> hits;
  while (!queue.empty()) {
    auto [p, e] = queue.front();
    queue.pop_front();
    if (p == y) hits.insert(e);
    for (int g = 0; g < aut.n_generators(); ++g) {
      for (int letter : {g + 1, -(g + 1)}) {
        int np = aut.step(p, letter);
        if (np < 0) continue;
        // Prepending letter a to a word w gives image sigma_a * image(w).
        int ne = q.index_of(q.mul(q.generator(g, letter < 0), elems[e]), order_budget);
        push(np, ne);
      }
    }
  }
  return QuotientSubset{std::vector<int>(hits.begin(), hits.end())};
}

// ---------------------------------------------------------------------------
// Benois saturation

namespace {

struct Derivation {
  enum Kind : char { kRefl, kBase, kStep, kTrans } kind = kRefl;
  int letter = 0;  // kStep
  int r = -1;      // kStep inner endpoints, or kTrans midpoint
  int s = -1;
};

struct Saturation {
  int n_states;
  std::vector<char> has;
  std::vector<Derivation> deriv;
  std::deque<std::pair<int, int>> worklist;

  explicit Saturation(int n) : n_states(n), has(n * n, 0), deriv(n * n) {}

  bool get(int p, int q) const { return has[p * n_states + q]; }

  bool add(int p, int q, const Derivation& d) {
    if (has[p * n_states + q]) return false;
    has[p * n_states + q] = 1;
    deriv[p * n_states + q] = d;
    worklist.emplace_back(p, q);
    return true;
  }

  // Keeps the relation transitively closed as pairs arrive.
  void drain() {
    while (!worklist.empty()) {
      auto [p, q] = worklist.front();
      worklist.pop_front();
      for (int u = 0; u < n_states; ++u)
        if (get(u, p) && !get(u, q))
          add(u, q, Derivation{Derivation::kTrans, 0, p, -1});
      for (int v = 0; v < n_states; ++v)
        if (get(q, v) && !get(p, v))
          add(p, v, Derivation{Derivation::kTrans, 0, q, -1});
    }
  }
};

struct PrimitiveStep {
  bool is_letter;
  int letter;
  int from;
  int to;
};

void expand_derivation(const Saturation& sat, int p, int q,
                       std::vector<PrimitiveStep>* out) {
  const Derivation& d = sat.deriv[p * sat.n_states + q];
  switch (d.kind) {
    case Derivation::kRefl:
      break;
    case Derivation::kBase:
      out->push_back({false, 0, p, q});
      break;
    case Derivation::kStep:
      out->push_back({true, d.letter, p, d.r});
      expand_derivation(sat, d.r, d.s, out);
      out->push_back({true, -d.letter, d.s, q});
      break;
    case Derivation::kTrans:
      expand_derivation(sat, p, d.r, out);
      expand_derivation(sat, d.r, q, out);
      break;
  }
}

}  // namespace

TrivialityResult benois_trivial(const OrbitAutomaton& aut, const ChainPairs& pairs) {
  int m = static_cast<int>(pairs.size());
  if (m == 0) return TrivialityResult{true, {}};
  int P = aut.n_points();
  int N = m * P;
  int n_gens = aut.n_generators();
  for (auto [z, zp] : pairs)
    if (z < 0 || z >= P || zp < 0 || zp >= P)
      throw InputError("chain pair point out of range");

  // Reading a word left to right walks edges backwards: consuming letter a
  // moves p to a^-1(p).
  auto delta = [&](int state, int letter) -> int {
    int copy = state / P;
    int t = aut.step(state % P, -letter);
    return t < 0 ? -1 : copy * P + t;
  };

  Saturation sat(N);
  for (int st = 0; st < N; ++st)
    sat.add(st, st, Derivation{Derivation::kRefl, 0, -1, -1});
  for (int k = 0; k + 1 < m; ++k)
    sat.add(k * P + pairs[k].first, (k + 1) * P + pairs[k + 1].second,
            Derivation{Derivation::kBase, 0, -1, -1});
  sat.drain();

  bool changed = true;
  while (changed) {
    changed = false;
    for (int p = 0; p < N; ++p) {
      for (int g = 1; g <= n_gens; ++g) {
        for (int letter : {g, -g}) {
          int r = delta(p, letter);
          if (r < 0) continue;
          for (int s = 0; s < N; ++s) {
            if (!sat.get(r, s)) continue;
            int q = delta(s, -letter);
            if (q < 0) continue;
            if (sat.add(p, q, Derivation{Derivation::kStep, letter, r, s})) {
              changed = true;
              sat.drain();
            }
          }
        }
      }
    }
  }

  int start = pairs[0].second;
  int accept = (m - 1) * P + pairs[m - 1].first;
  if (!sat.get(start, accept)) return TrivialityResult{false, {}};

  std::vector<PrimitiveStep> steps;
  expand_derivation(sat, start, accept, &steps);
  std::vector<std::vector<int>> raw(m);
  for (const PrimitiveStep& st : steps)
    if (st.is_letter) raw[st.from / P].push_back(st.letter);

  TrivialityResult result;
  result.trivial = true;
  Word product;
  for (int k = 0; k < m; ++k) {
    Word w = Word::reduce(raw[k], n_gens);
    auto end = aut.apply(w, pairs[k].first);
    if (!end || *end != pairs[k].second)
      throw InternalInvariantError("saturation witness fails to realize its pair");
    product = product * w;
    result.witness.push_back(std::move(w));
  }
  if (!product.empty())
    throw InternalInvariantError("saturation witness product does not reduce to e");
  return result;
}

// ---------------------------------------------------------------------------
// Bounded factorization oracle

namespace {

struct FactorizationSearch {
  const OrbitAutomaton& aut;
  const ChainPairs& pairs;
  int depth;
  std::vector<std::vector<int>> letters;  // per pair, in word order
  std::vector<int> product;               // freely reduced as a stack

  bool found = false;

  // Reads the pair's word left to right: consuming letter a moves a point p
  // to a^-1(p), starting at z' and accepting at z.
  bool run(std::size_t pair_index, int pos, int used) {
    if (pos == pairs[pair_index].first) {
      if (pair_index + 1 == pairs.size()) {
        if (product.empty()) return true;
      } else if (run_pair(pair_index + 1, used)) {
        return true;
      }
    }
    if (used >= depth) return false;
    if (static_cast<int>(product.size()) > depth - used) return false;
    for (int g = 1; g <= aut.n_generators(); ++g) {
      for (int letter : {g, -g}) {
        int next = aut.step(pos, -letter);
        if (next < 0) continue;
        letters[pair_index].push_back(letter);
        bool popped = !product.empty() && product.back() == -letter;
        if (popped)
          product.pop_back();
        else
          product.push_back(letter);
        if (run(pair_index, next, used + 1)) return true;
        if (popped)
          product.push_back(-letter);
        else
          product.pop_back();
        letters[pair_index].pop_back();
      }
    }
    return false;
  }

  bool run_pair(std::size_t pair_index, int used) {
    return run(pair_index, pairs[pair_index].second, used);
  }
};

}  // namespace

FactorizationOracle bounded_factorization(const OrbitAutomaton& aut,
                                          const ChainPairs& pairs, int depth) {
  FactorizationOracle out;
  if (pairs.empty()) {
    out.conclusive = true;
    return out;
  }
  FactorizationSearch search{aut, pairs, depth,
                             std::vector<std::vector<int>>(pairs.size()), {}};
  if (search.run_pair(0, 0)) {
    out.conclusive = true;
    for (const auto& ls : search.letters)
      out.witness.push_back(Word::reduce(ls, aut.n_generators()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Separation search

namespace {

std::vector<std::vector<int>> all_perms(int degree) {
  std::vector<int> p(degree);
  for (int i = 0; i < degree; ++i) p[i] = i;
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

QuotientSubset product_image(const OrbitAutomaton& aut, const FiniteQuotient& q,
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

}  // namespace

bool separates(const OrbitAutomaton& aut, const FiniteQuotient& q,
               const ChainPairs& pairs, long order_budget) {
  return !product_image(aut, q, pairs, order_budget).contains_identity();
}

std::optional<FiniteQuotient> find_common_separator(
    const OrbitAutomaton& aut, const std::vector<ChainPairs>& chains,
    const SeparationBudget& budget, std::vector<int>* tried_degrees) {
  int n = aut.n_generators();
  for (int degree = 1; degree <= budget.max_degree; ++degree) {
    if (tried_degrees) tried_degrees->push_back(degree);
    std::vector<std::vector<int>> perms = all_perms(degree);
    std::vector<std::size_t> pick(n, 0);
    while (true) {
      std::vector<std::vector<std::vector<int>>> images(n);
      for (int g = 0; g < n; ++g) images[g] = {perms[pick[g]]};
      FiniteQuotient candidate({degree}, images);
      bool ok = true;
      for (const ChainPairs& chain : chains) {
        if (!separates(aut, candidate, chain, budget.order)) {
          ok = false;
          break;
        }
      }
      if (ok) return candidate;
      // Advance the generator-image tuple in lexicographic order.
      int g = n - 1;
      for (; g >= 0; --g) {
        if (++pick[g] < perms.size()) break;
        pick[g] = 0;
      }
      if (g < 0) break;
    }
    if (n == 0) break;  // no generators: only the empty tuple exists
  }
  return std::nullopt;
}

SeparationResult separate_chain(const OrbitAutomaton& aut, const ChainPairs& pairs,
                                const SeparationBudget& budget) {
  TrivialityResult t = benois_trivial(aut, pairs);
  if (t.trivial)
    throw InputError("cannot separate: identity lies in product");
  std::vector<int> tried;
  auto q = find_common_separator(aut, {pairs}, budget, &tried);
  if (!q)
    throw BudgetError("separation budget exhausted", tried.empty() ? 0 : tried.back());
  SeparationResult result{*q, product_image(aut, *q, pairs, budget.order), tried};
  if (result.product_image.contains_identity())
    throw InternalInvariantError("separator re-verification failed");
  return result;
}

FiniteQuotient combine_quotients(const std::vector<FiniteQuotient>& factors,
                                 int n_generators, long order_budget) {
  std::vector<int> degrees;
  std::vector<std::vector<std::vector<int>>> images(n_generators);
  for (const FiniteQuotient& f : factors) {
    if (f.n_generators() != n_generators)
      throw InputError("combine: generator count mismatch");
    degrees.insert(degrees.end(), f.degrees().begin(), f.degrees().end());
    for (int g = 0; g < n_generators; ++g)
      for (const auto& block : f.generator_images()[g]) images[g].push_back(block);
  }
  FiniteQuotient combined(degrees, images);
  combined.materialize(order_budget);
  return combined;
}

}  // namespace finext
