#include "finext/malg.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "finext/errors.hpp"

namespace finext {

// ---------------------------------------------------------------------------
// CellSpace / AlgebraPartition

CellSpace::CellSpace(std::vector<std::string> names, std::vector<Scalar> measures)
    : names_(std::move(names)), measures_(std::move(measures)) {
  if (names_.empty() || names_.size() != measures_.size())
    throw InputError("cell space needs matching nonempty names and measures");
  std::set<std::string> uniq(names_.begin(), names_.end());
  if (uniq.size() != names_.size()) throw InputError("cell names must be distinct");
  Scalar total;
  for (const Scalar& m : measures_) {
    if (m.sign() <= 0) throw InputError("cell measures must be positive");
    total += m;
  }
  if (total != Scalar(1)) throw InputError("cell measures must sum to 1");
}

int CellSpace::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (names_[i] == name) return i;
  throw InputError("unknown cell: " + name);
}

Scalar CellSpace::measure_of(const std::vector<int>& cells) const {
  Scalar total;
  for (int c : cells) total += measure(c);
  return total;
}

AlgebraPartition::AlgebraPartition(CellSpace cells, std::vector<std::vector<int>> atoms,
                                   std::vector<std::string> atom_names)
    : cells_(std::move(cells)), atoms_(std::move(atoms)),
      atom_names_(std::move(atom_names)) {
  if (atoms_.empty()) throw InputError("partition needs at least one atom");
  if (atom_names_.empty())
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      atom_names_.push_back("A" + std::to_string(i + 1));
  if (atom_names_.size() != atoms_.size())
    throw InputError("atom name count mismatch");
  cell_to_atom_.assign(cells_.size(), -1);
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i].empty()) throw InputError("empty atom " + atom_names_[i]);
    auto& atom = atoms_[i];
    std::sort(atom.begin(), atom.end());
    for (int c : atom) {
      if (c < 0 || c >= cells_.size() || cell_to_atom_[c] != -1)
        throw InputError("atoms must partition the cells");
      cell_to_atom_[c] = static_cast<int>(i);
    }
  }
  for (int assigned : cell_to_atom_)
    if (assigned == -1) throw InputError("atoms must cover all cells");
}

bool AlgebraPartition::refines(const AlgebraPartition& coarser) const {
  if (!(cells_ == coarser.cells())) return false;
  for (const auto& atom : atoms_) {
    int target = coarser.atom_of_cell(atom[0]);
    for (int c : atom)
      if (coarser.atom_of_cell(c) != target) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Refinements

std::vector<Scalar> Refinement::piece_profile(int base_atom) const {
  std::vector<Scalar> out;
  for (int i = 0; i < refined.n_atoms(); ++i)
    if (atom_origin[i] == base_atom) out.push_back(refined.atom_measure(i));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<Scalar, long>> Refinement::piece_profile_rle(int base_atom) const {
  std::vector<Scalar> plain = piece_profile(base_atom);
  std::vector<std::pair<Scalar, long>> out;
  for (const Scalar& v : plain) {
    if (!out.empty() && out.back().first == v)
      ++out.back().second;
    else
      out.emplace_back(v, 1);
  }
  return out;
}

void validate_refinement(const Refinement& r) {
  if (static_cast<int>(r.cell_origin.size()) != r.refined.cells().size())
    throw InputError("refinement cell origin size mismatch");
  if (static_cast<int>(r.atom_origin.size()) != r.refined.n_atoms())
    throw InputError("refinement atom origin size mismatch");
  // Each base cell's pieces carry its exact measure.
  std::vector<Scalar> totals(r.base.cells().size());
  for (int c = 0; c < r.refined.cells().size(); ++c) {
    int o = r.cell_origin[c];
    if (o < 0 || o >= r.base.cells().size())
      throw InputError("refinement cell origin out of range");
    totals[o] += r.refined.cells().measure(c);
  }
  for (int c = 0; c < r.base.cells().size(); ++c)
    if (totals[c] != r.base.cells().measure(c))
      throw InputError("refined pieces do not add up over cell " +
                       r.base.cells().name(c));
  // Refined atoms sit inside their base atoms.
  for (int i = 0; i < r.refined.n_atoms(); ++i) {
    int target = r.atom_origin[i];
    for (int c : r.refined.atom(i))
      if (r.base.atom_of_cell(r.cell_origin[c]) != target)
        throw InputError("refined atom crosses its base atom");
  }
}

Refinement identity_refinement(const AlgebraPartition& a) {
  Refinement r{a, a, {}, {}};
  for (int c = 0; c < a.cells().size(); ++c) r.cell_origin.push_back(c);
  for (int i = 0; i < a.n_atoms(); ++i) r.atom_origin.push_back(i);
  return r;
}

GoodCheckReport good_check(const Refinement& r) {
  validate_refinement(r);
  int k = r.base.n_atoms();
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      if (r.base.atom_measure(i) != r.base.atom_measure(j)) continue;
      std::vector<Scalar> pi = r.piece_profile(i);
      std::vector<Scalar> pj = r.piece_profile(j);
      if (pi != pj) return GoodCheckReport{false, i, j, pi, pj};
    }
  return GoodCheckReport{};
}

bool identically_partitioned(const Refinement& r, const std::vector<int>& elem_a,
                             const std::vector<int>& elem_b) {
  std::vector<Scalar> pa, pb;
  for (int a : elem_a) {
    auto p = r.piece_profile(a);
    pa.insert(pa.end(), p.begin(), p.end());
  }
  for (int b : elem_b) {
    auto p = r.piece_profile(b);
    pb.insert(pb.end(), p.begin(), p.end());
  }
  std::sort(pa.begin(), pa.end());
  std::sort(pb.begin(), pb.end());
  return pa == pb;
}

// ---------------------------------------------------------------------------
// Progressive refinement with stable cell ids and hierarchical names.

namespace {

struct Builder {
  struct Cell {
    std::string name;
    Scalar measure;
    int origin;
    int next_suffix = 1;
  };
  struct Atom {
    std::string name;
    std::vector<int> cell_ids;
    int origin;
  };

  std::map<int, Cell> cells;
  std::vector<int> order;
  int next_id = 0;
  std::vector<Atom> atoms;
  std::vector<std::pair<int, int>> split_log;  // (parent id, piece id)

  explicit Builder(const AlgebraPartition& base) {
    for (int c = 0; c < base.cells().size(); ++c) {
      cells[next_id] = Cell{base.cells().name(c), base.cells().measure(c), c, 1};
      order.push_back(next_id);
      ++next_id;
    }
    for (int i = 0; i < base.n_atoms(); ++i) {
      std::vector<int> ids(base.atom(i).begin(), base.atom(i).end());
      atoms.push_back(Atom{base.atom_name(i), ids, i});
    }
  }

  // Carves a piece of the given size off a cell; the remainder keeps the
  // cell's id and name.  Returns the new piece's id.
  int take_from_cell(int id, const Scalar& amount) {
    Cell& parent = cells.at(id);
    if (amount.sign() <= 0 || amount >= parent.measure)
      throw InternalInvariantError("bad cell split request");
    Cell piece{parent.name + "." + std::to_string(parent.next_suffix++), amount,
               parent.origin, 1};
    parent.measure -= amount;
    int pid = next_id++;
    cells[pid] = piece;
    auto it = std::find(order.begin(), order.end(), id);
    order.insert(it, pid);  // piece sits right before its remainder
    split_log.emplace_back(id, pid);
    return pid;
  }

  // Removes cells totalling `target` from the front of `pool`, splitting the
  // boundary cell when needed.
  std::vector<int> carve(std::vector<int>* pool, const Scalar& target) {
    std::vector<int> out;
    Scalar remaining = target;
    while (remaining.sign() > 0) {
      if (pool->empty())
        throw InternalInvariantError("carve target exceeds available measure");
      int id = pool->front();
      const Scalar& m = cells.at(id).measure;
      if (m <= remaining) {
        out.push_back(id);
        remaining -= m;
        pool->erase(pool->begin());
      } else {
        out.push_back(take_from_cell(id, remaining));
        remaining = Scalar(0);
      }
    }
    return out;
  }

  // Splits atom `ai` in place into parts of the given measures.
  void split_atom(std::size_t ai, const std::vector<Scalar>& parts) {
    Atom atom = atoms[ai];
    if (parts.size() <= 1) return;
    Scalar total;
    for (const Scalar& p : parts) total += p;
    if (total != cell_measure(atom.cell_ids))
      throw InternalInvariantError("atom split measures do not add up");
    std::vector<int> pool = atom.cell_ids;
    std::vector<Atom> pieces;
    for (std::size_t k = 0; k < parts.size(); ++k)
      pieces.push_back(Atom{atom.name + "." + std::to_string(k + 1),
                            carve(&pool, parts[k]), atom.origin});
    atoms.erase(atoms.begin() + ai);
    atoms.insert(atoms.begin() + ai, pieces.begin(), pieces.end());
  }

  Scalar cell_measure(const std::vector<int>& ids) const {
    Scalar total;
    for (int id : ids) total += cells.at(id).measure;
    return total;
  }

  Refinement finish(const AlgebraPartition& base) const {
    std::vector<std::string> names;
    std::vector<Scalar> measures;
    std::vector<int> origin;
    std::map<int, int> position;
    for (int id : order) {
      position[id] = static_cast<int>(names.size());
      const Cell& c = cells.at(id);
      names.push_back(c.name);
      measures.push_back(c.measure);
      origin.push_back(c.origin);
    }
    std::vector<std::vector<int>> atom_cells;
    std::vector<std::string> atom_names;
    std::vector<int> atom_origin;
    for (const Atom& a : atoms) {
      std::vector<int> ix;
      for (int id : a.cell_ids) ix.push_back(position.at(id));
      std::sort(ix.begin(), ix.end());
      atom_cells.push_back(ix);
      atom_names.push_back(a.name);
      atom_origin.push_back(a.origin);
    }
    Refinement r{base,
                 AlgebraPartition(CellSpace(names, measures), atom_cells, atom_names),
                 origin, atom_origin};
    validate_refinement(r);
    return r;
  }
};

// Value sets and profiles for one induction step on the current state.
struct StepData {
  std::vector<Scalar> r_values, s_values;      // distinct measures
  std::vector<Scalar> r_profile, s_profile;    // with repetitions, sorted
  Scalar a;                                     // common element measure
};

std::optional<Scalar> collision(const StepData& d) {
  for (const Scalar& r : d.r_values)
    for (const Scalar& s : d.s_values)
      if (r == s) return r;
  return std::nullopt;
}

StepData collect_step_data(const Builder& b, const std::set<int>& origins_a,
                           const std::set<int>& origins_b) {
  StepData d;
  for (const Builder::Atom& atom : b.atoms) {
    Scalar m = b.cell_measure(atom.cell_ids);
    if (origins_a.count(atom.origin)) d.r_profile.push_back(m);
    if (origins_b.count(atom.origin)) d.s_profile.push_back(m);
  }
  std::sort(d.r_profile.begin(), d.r_profile.end());
  std::sort(d.s_profile.begin(), d.s_profile.end());
  for (const Scalar& v : d.r_profile)
    if (d.r_values.empty() || d.r_values.back() != v) d.r_values.push_back(v);
  for (const Scalar& v : d.s_profile)
    if (d.s_values.empty() || d.s_values.back() != v) d.s_values.push_back(v);
  d.a = sum(d.r_profile);
  return d;
}

// Applies the product split and the matching-measure repartitions.
void apply_step(Builder* b, const StepData& d) {
  for (std::size_t ai = b->atoms.size(); ai-- > 0;) {
    Scalar m = b->cell_measure(b->atoms[ai].cell_ids);
    bool in_r = std::binary_search(d.r_values.begin(), d.r_values.end(), m);
    bool in_s = std::binary_search(d.s_values.begin(), d.s_values.end(), m);
    const std::vector<Scalar>* profile = nullptr;
    if (in_r)
      profile = &d.s_profile;
    else if (in_s)
      profile = &d.r_profile;
    if (!profile) continue;
    std::vector<Scalar> parts;
    for (const Scalar& p : *profile) parts.push_back(m * p / d.a);
    b->split_atom(ai, parts);
  }
}

bool builder_identically_partitioned(const Builder& b, const std::set<int>& oa,
                                     const std::set<int>& ob) {
  std::vector<Scalar> pa, pb;
  for (const Builder::Atom& atom : b.atoms) {
    Scalar m = b.cell_measure(atom.cell_ids);
    if (oa.count(atom.origin)) pa.push_back(m);
    if (ob.count(atom.origin)) pb.push_back(m);
  }
  std::sort(pa.begin(), pa.end());
  std::sort(pb.begin(), pb.end());
  return pa == pb;
}

}  // namespace

Refinement independence_step(const AlgebraPartition& a, const std::vector<int>& elem_a,
                             const std::vector<int>& elem_b) {
  if (elem_a.empty() || elem_b.empty())
    throw InputError("independence step needs nonempty elements");
  std::set<int> oa(elem_a.begin(), elem_a.end());
  std::set<int> ob(elem_b.begin(), elem_b.end());
  for (int i : oa)
    if (ob.count(i)) throw InputError("elements must be disjoint");
  Scalar ma, mb;
  for (int i : oa) ma += a.atom_measure(i);
  for (int i : ob) mb += a.atom_measure(i);
  if (ma != mb) throw InputError("elements must have equal measure");

  Builder b(a);
  StepData d = collect_step_data(b, oa, ob);
  if (auto c = collision(d))
    throw InputError("independence step: atom measure " + c->str() +
                     " appears on both sides");
  apply_step(&b, d);
  if (!builder_identically_partitioned(b, oa, ob))
    throw InternalInvariantError("independence step left the pair unbalanced");
  return b.finish(a);
}

Refinement extend_partial_automorphisms(const AlgebraPartition& a,
                                        MalgExtendCertificate* certificate) {
  int k = a.n_atoms();
  if (k > 20) throw UnsupportedInstanceError("too many atoms for pair enumeration");

  bool all_rational = true;
  for (int c = 0; c < a.cells().size(); ++c)
    if (!a.cells().measure(c).is_rational()) all_rational = false;

  if (all_rational) {
    // Uniform refinement into cells of measure 1/N trivially balances every
    // equal-measure pair; built directly, the pair induction is not needed.
    // N comes from the cells so that every cell splits into whole pieces.
    mpz_class lcm = 1;
    for (int c = 0; c < a.cells().size(); ++c) {
      mpz_class den = a.cells().measure(c).rational_part().get_den();
      mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), den.get_mpz_t());
    }
    if (!lcm.fits_slong_p() || lcm.get_si() > 1000000)
      throw UnsupportedInstanceError("uniform denominator too large");
    long n = lcm.get_si();
    Scalar piece = Scalar(1, n);
    std::vector<std::string> names;
    std::vector<Scalar> measures;
    std::vector<int> cell_origin;
    std::vector<std::vector<int>> atoms;
    std::vector<std::string> atom_names;
    std::vector<int> atom_origin;
    for (int i = 0; i < k; ++i) {
      for (int c : a.atom(i)) {
        const Scalar& cm = a.cells().measure(c);
        mpq_class count_q = (cm / piece).rational_part();
        if (count_q.get_den() != 1)
          throw UnsupportedInstanceError(
              "cell measure is not a multiple of the uniform piece");
        long count = count_q.get_num().get_si();
        for (long t = 1; t <= count; ++t) {
          int cell = static_cast<int>(names.size());
          names.push_back(count == 1 ? a.cells().name(c)
                                     : a.cells().name(c) + "." + std::to_string(t));
          measures.push_back(piece);
          cell_origin.push_back(c);
          atoms.push_back({cell});
          atom_names.push_back(a.atom_name(i) + "." + std::to_string(atoms.size()));
          atom_origin.push_back(i);
        }
      }
    }
    if (certificate) {
      certificate->strategy = "uniform";
      certificate->uniform_denominator = n;
    }
    Refinement r{a,
                 AlgebraPartition(CellSpace(names, measures), atoms, atom_names),
                 cell_origin, atom_origin};
    validate_refinement(r);
    return r;
  }

  if (certificate) certificate->strategy = "pairwise";
  Builder b(a);
  std::vector<Scalar> atom_measures;
  for (int i = 0; i < k; ++i) atom_measures.push_back(a.atom_measure(i));
  for (unsigned long mask_a = 1; mask_a < (1UL << k); ++mask_a) {
    for (unsigned long mask_b = mask_a + 1; mask_b < (1UL << k); ++mask_b) {
      if (mask_a & mask_b) continue;
      Scalar ma, mb;
      std::set<int> oa, ob;
      for (int i = 0; i < k; ++i) {
        if (mask_a & (1UL << i)) {
          ma += atom_measures[i];
          oa.insert(i);
        }
        if (mask_b & (1UL << i)) {
          mb += atom_measures[i];
          ob.insert(i);
        }
      }
      if (ma != mb) continue;
      MalgExtendStep step;
      step.elem_a.assign(oa.begin(), oa.end());
      step.elem_b.assign(ob.begin(), ob.end());
      if (builder_identically_partitioned(b, oa, ob)) {
        step.skipped = true;
        if (certificate) certificate->steps.push_back(step);
        continue;
      }
      StepData d = collect_step_data(b, oa, ob);
      if (auto c = collision(d))
        throw UnsupportedInstanceError(
            "pair induction hit a measure collision at " + c->str() +
            "; the splitting of colliding pairs is not supported");
      apply_step(&b, d);
      if (!builder_identically_partitioned(b, oa, ob))
        throw InternalInvariantError("pair induction left a pair unbalanced");
      if (certificate) certificate->steps.push_back(step);
    }
  }
  return b.finish(a);
}

// ---------------------------------------------------------------------------
// Partial automorphisms of the base and their extensions

namespace {

// Set partitions of {0..k-1} as restricted growth strings, lexicographic.
std::vector<std::vector<std::vector<int>>> set_partitions(int k) {
  std::vector<std::vector<std::vector<int>>> out;
  std::vector<int> rgs(k, 0);
  auto emit = [&]() {
    int blocks = *std::max_element(rgs.begin(), rgs.end()) + 1;
    std::vector<std::vector<int>> groups(blocks);
    for (int i = 0; i < k; ++i) groups[rgs[i]].push_back(i);
    out.push_back(groups);
  };
  auto rec = [&](auto&& self, int i, int max_label) -> void {
    if (i == k) {
      emit();
      return;
    }
    for (int label = 0; label <= max_label + 1; ++label) {
      rgs[i] = label;
      self(self, i + 1, std::max(max_label, label));
    }
  };
  if (k == 0) return out;
  rgs[0] = 0;
  rec(rec, 1, 0);
  return out;
}

}  // namespace

MalgVerifyReport verify_extension_malg(const Refinement& r) {
  validate_refinement(r);
  int k = r.base.n_atoms();
  if (k > 8)
    throw UnsupportedInstanceError("partial automorphism enumeration supports <= 8 atoms");
  std::vector<Scalar> atom_measure;
  std::vector<std::vector<std::pair<Scalar, long>>> atom_profile;
  for (int i = 0; i < k; ++i) {
    atom_measure.push_back(r.base.atom_measure(i));
    atom_profile.push_back(r.piece_profile_rle(i));
  }
  auto group_measure = [&](const std::vector<int>& g) {
    Scalar m;
    for (int i : g) m += atom_measure[i];
    return m;
  };
  auto group_profile = [&](const std::vector<int>& g) {
    std::map<Scalar, long> acc;
    for (int i : g)
      for (const auto& [value, count] : atom_profile[i]) acc[value] += count;
    return std::vector<std::pair<Scalar, long>>(acc.begin(), acc.end());
  };

  MalgVerifyReport report;
  std::vector<std::vector<std::vector<int>>> partitions = set_partitions(k);
  for (const auto& dom : partitions) {
    for (const auto& rng : partitions) {
      if (dom.size() != rng.size()) continue;
      int blocks = static_cast<int>(dom.size());
      std::vector<int> corr(blocks, -1);
      std::vector<char> used(blocks, 0);
      auto rec = [&](auto&& self, int i) -> bool {  // returns false on failure found
        if (i == blocks) {
          ++report.partial_automorphisms;
          for (int g = 0; g < blocks; ++g)
            if (group_profile(dom[g]) != group_profile(rng[corr[g]])) {
              report.ok = false;
              report.failure = "partial automorphism has no extension: group {" +
                               std::to_string(g) + "} piece profiles differ";
              report.failing = PartialAut{dom, rng, corr};
              return false;
            }
          return true;
        }
        for (int c = 0; c < blocks; ++c) {
          if (used[c]) continue;
          if (group_measure(dom[i]) != group_measure(rng[c])) continue;
          used[c] = 1;
          corr[i] = c;
          if (!self(self, i + 1)) return false;
          used[c] = 0;
          corr[i] = -1;
        }
        return true;
      };
      if (!rec(rec, 0)) return report;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// P-additive matrices

Scalar DistanceMatrix::epsilon(const AlgebraPartition& p, int i, int j) const {
  return (p.atom_measure(i) + p.atom_measure(j) - e[i][j]) / Scalar(2);
}

DistanceMatrix matrix_of_automorphism(const AlgebraPartition& p,
                                      const std::vector<int>& g) {
  int n = p.cells().size();
  if (static_cast<int>(g.size()) != n)
    throw InputError("automorphism size mismatch");
  std::vector<char> hit(n, 0);
  for (int c = 0; c < n; ++c) {
    if (g[c] < 0 || g[c] >= n || hit[g[c]]) throw InputError("not a permutation");
    hit[g[c]] = 1;
    if (p.cells().measure(c) != p.cells().measure(g[c]))
      throw InputError("cell permutation is not measure-preserving at " +
                       p.cells().name(c));
  }
  int k = p.n_atoms();
  DistanceMatrix out;
  out.e.assign(k, std::vector<Scalar>(k));
  for (int i = 0; i < k; ++i) {
    std::set<int> ai(p.atom(i).begin(), p.atom(i).end());
    for (int j = 0; j < k; ++j) {
      std::set<int> gj;
      for (int c : p.atom(j)) gj.insert(g[c]);
      Scalar m;
      for (int c : ai)
        if (!gj.count(c)) m += p.cells().measure(c);
      for (int c : gj)
        if (!ai.count(c)) m += p.cells().measure(c);
      out.e[i][j] = m;
    }
  }
  return out;
}

bool p_additive(const DistanceMatrix& e, const AlgebraPartition& p) {
  int k = p.n_atoms();
  if (e.size() != k) throw InputError("matrix dimension mismatch");
  for (int i = 0; i < k; ++i)
    if (static_cast<int>(e.e[i].size()) != k)
      throw InputError("matrix dimension mismatch");
  for (int i = 0; i < k; ++i) {
    if (e.e[i][i].sign() < 0) return false;
    for (int j = 0; j < k; ++j) {
      if (e.e[i][j].sign() < 0) return false;
      if (e.e[i][j] > p.atom_measure(i) + p.atom_measure(j)) return false;
    }
  }
  for (int i = 0; i < k; ++i) {
    Scalar row, col;
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      row += p.atom_measure(i) + p.atom_measure(j) - e.e[i][j];
      col += p.atom_measure(i) + p.atom_measure(j) - e.e[j][i];
    }
    if (e.e[i][i] != row || e.e[i][i] != col) return false;
  }
  return true;
}

RealizeResult realize_matrix(const AlgebraPartition& p,
                             const std::vector<std::vector<int>>& c_sets,
                             const DistanceMatrix& e) {
  int k = p.n_atoms();
  if (static_cast<int>(c_sets.size()) != k)
    throw InputError("need one C set per atom");
  if (!p_additive(e, p)) throw InputError("matrix is not P-additive");

  std::optional<Scalar> mu_c;
  for (int i = 0; i < k; ++i) {
    for (int c : c_sets[i])
      if (p.atom_of_cell(c) != i)
        throw InputError("C set " + std::to_string(i + 1) +
                         " leaves its atom");
    Scalar m = p.cells().measure_of(c_sets[i]);
    if (m.sign() <= 0) throw InputError("C sets must have positive measure");
    if (!mu_c)
      mu_c = m;
    else if (*mu_c != m)
      throw InputError("C sets must share one measure");
  }
  for (int i = 0; i < k; ++i)
    if (e.e[i][i] >= Scalar(2) * *mu_c)
      throw InputError("relative saturation needs e_ii < 2 mu(C) at atom " +
                       std::to_string(i + 1));

  Builder b(p);
  // Stable-id views of the atoms and C sets.
  std::vector<std::vector<int>> atom_ids(k), c_ids(k), pool(k);
  for (int i = 0; i < k; ++i) {
    atom_ids[i].assign(p.atom(i).begin(), p.atom(i).end());
    c_ids[i] = c_sets[i];
    pool[i] = c_sets[i];
  }
  std::size_t log_mark = 0;
  auto absorb_splits = [&]() {
    for (; log_mark < b.split_log.size(); ++log_mark) {
      auto [parent, piece] = b.split_log[log_mark];
      for (int i = 0; i < k; ++i) {
        if (std::find(atom_ids[i].begin(), atom_ids[i].end(), parent) !=
            atom_ids[i].end())
          atom_ids[i].push_back(piece);
        if (std::find(c_ids[i].begin(), c_ids[i].end(), parent) != c_ids[i].end())
          c_ids[i].push_back(piece);
      }
    }
  };

  // D[j][i] lives inside C_i and carries eps_ji mass bound for B_j.
  std::vector<std::vector<std::vector<int>>> d(
      k, std::vector<std::vector<int>>(k));
  for (int i = 0; i < k; ++i) {
    Scalar need;
    for (int j = 0; j < k; ++j)
      if (j != i) need += e.epsilon(p, j, i);
    if (need > *mu_c)
      throw InputError("saturation bound exceeded: eps mass " + need.str() +
                       " does not fit in C" + std::to_string(i + 1));
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      Scalar eps = e.epsilon(p, j, i);
      if (eps.sign() < 0)
        throw InputError("negative eps entry");
      if (eps.sign() > 0) d[j][i] = b.carve(&pool[i], eps);
      absorb_splits();
    }
  }

  std::vector<std::string> names;
  std::vector<Scalar> measures;
  std::vector<int> origin;
  std::map<int, int> position;
  for (int id : b.order) {
    position[id] = static_cast<int>(names.size());
    names.push_back(b.cells.at(id).name);
    measures.push_back(b.cells.at(id).measure);
    origin.push_back(b.cells.at(id).origin);
  }
  RealizeResult out{CellSpace(names, measures), origin, {}, {}, {}};
  auto to_positions = [&](const std::vector<int>& ids) {
    std::vector<int> ix;
    for (int id : ids) ix.push_back(position.at(id));
    std::sort(ix.begin(), ix.end());
    return ix;
  };
  for (int i = 0; i < k; ++i) {
    out.a_sets.push_back(to_positions(atom_ids[i]));
    out.c_sets.push_back(to_positions(c_ids[i]));
  }
  for (int i = 0; i < k; ++i) {
    std::set<int> bs(atom_ids[i].begin(), atom_ids[i].end());
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      for (int id : d[j][i]) bs.erase(id);   // mass leaving A_i
      for (int id : d[i][j]) bs.insert(id);  // mass arriving from C_j
    }
    out.b_sets.push_back(to_positions(std::vector<int>(bs.begin(), bs.end())));
  }

  // Exact postconditions.
  auto measure_of = [&](const std::vector<int>& cells) {
    return out.cells.measure_of(cells);
  };
  auto sym_diff = [&](const std::vector<int>& x, const std::vector<int>& y) {
    std::set<int> sx(x.begin(), x.end()), sy(y.begin(), y.end());
    Scalar m;
    for (int c : sx)
      if (!sy.count(c)) m += out.cells.measure(c);
    for (int c : sy)
      if (!sx.count(c)) m += out.cells.measure(c);
    return m;
  };
  for (int i = 0; i < k; ++i) {
    if (measure_of(out.b_sets[i]) != measure_of(out.a_sets[i]))
      throw InternalInvariantError("realized set changes the atom measure");
    for (int j = 0; j < k; ++j)
      if (sym_diff(out.b_sets[i], out.a_sets[j]) != e.e[i][j])
        throw InternalInvariantError("realized set misses its target distance");
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      std::set<int> bi(out.b_sets[i].begin(), out.b_sets[i].end());
      std::set<int> cj(out.c_sets[j].begin(), out.c_sets[j].end());
      for (int c : out.a_sets[j])
        if (bi.count(c) && !cj.count(c))
          throw InternalInvariantError("realized set leaks outside C");
    }
  for (int i = 0; i < k; ++i) {
    std::set<int> bi(out.b_sets[i].begin(), out.b_sets[i].end());
    std::set<int> ci(out.c_sets[i].begin(), out.c_sets[i].end());
    for (int c : out.a_sets[i])
      if (!bi.count(c) && !ci.count(c))
        throw InternalInvariantError("removed mass leaks outside C");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Independent amalgam

MalgAmalgam independent_amalgam(const AlgebraPartition& a, const AlgebraPartition& b,
                                const AlgebraPartition& c) {
  if (!b.refines(a) || !c.refines(a))
    throw InputError("amalgam needs B and C refining A over one cell space");

  auto atom_parent = [&](const AlgebraPartition& fine, int atom) {
    return a.atom_of_cell(fine.atom(atom)[0]);
  };

  std::vector<std::string> names;
  std::vector<Scalar> measures;
  std::vector<std::vector<int>> a_atoms(a.n_atoms()), b_atoms(b.n_atoms()),
      c_atoms(c.n_atoms());
  for (int ai = 0; ai < a.n_atoms(); ++ai) {
    Scalar ma = a.atom_measure(ai);
    for (int bi = 0; bi < b.n_atoms(); ++bi) {
      if (atom_parent(b, bi) != ai) continue;
      for (int ci = 0; ci < c.n_atoms(); ++ci) {
        if (atom_parent(c, ci) != ai) continue;
        int cell = static_cast<int>(names.size());
        names.push_back(b.atom_name(bi) + "&" + c.atom_name(ci));
        measures.push_back(b.atom_measure(bi) * c.atom_measure(ci) / ma);
        a_atoms[ai].push_back(cell);
        b_atoms[bi].push_back(cell);
        c_atoms[ci].push_back(cell);
      }
    }
  }
  MalgAmalgam out{CellSpace(names, measures), a.atom_names(), b.atom_names(),
                  c.atom_names(), a_atoms, b_atoms, c_atoms};

  // Product identity within each A atom; exact.
  for (int ai = 0; ai < a.n_atoms(); ++ai) {
    Scalar ma = a.atom_measure(ai);
    for (int bi = 0; bi < b.n_atoms(); ++bi) {
      if (atom_parent(b, bi) != ai) continue;
      for (int ci = 0; ci < c.n_atoms(); ++ci) {
        if (atom_parent(c, ci) != ai) continue;
        std::set<int> bs(out.b_atoms[bi].begin(), out.b_atoms[bi].end());
        Scalar inter;
        for (int cell : out.c_atoms[ci])
          if (bs.count(cell)) inter += out.cells.measure(cell);
        if (inter * ma != b.atom_measure(bi) * c.atom_measure(ci))
          throw InternalInvariantError("amalgam breaks the product identity");
      }
    }
  }
  return out;
}

MalgIndependenceReport check_amalgam_independence(const MalgAmalgam& am) {
  int na = static_cast<int>(am.a_atoms.size());
  int nb = static_cast<int>(am.b_atoms.size());
  int nc = static_cast<int>(am.c_atoms.size());
  auto atom_measure = [&](const std::vector<int>& cells) {
    return am.cells.measure_of(cells);
  };
  std::vector<int> cell_to_b(am.cells.size(), -1), cell_to_c(am.cells.size(), -1),
      cell_to_a(am.cells.size(), -1);
  for (int i = 0; i < nb; ++i)
    for (int c : am.b_atoms[i]) cell_to_b[c] = i;
  for (int i = 0; i < nc; ++i)
    for (int c : am.c_atoms[i]) cell_to_c[c] = i;
  for (int i = 0; i < na; ++i)
    for (int c : am.a_atoms[i]) cell_to_a[c] = i;
  std::map<std::pair<int, int>, int> piece;
  for (int c = 0; c < am.cells.size(); ++c)
    piece[{cell_to_b[c], cell_to_c[c]}] = c;
  auto parent_of_b = [&](int bi) { return cell_to_a[am.b_atoms[bi][0]]; };
  auto parent_of_c = [&](int ci) { return cell_to_a[am.c_atoms[ci][0]]; };

  // Measure-preserving atom permutations inducing a permutation of A's atoms.
  auto enumerate = [&](int n, const std::vector<std::vector<int>>& atoms,
                       auto&& parent) {
    std::vector<std::vector<int>> perms;
    std::vector<int> img(n, -1);
    std::vector<char> used(n, 0);
    auto rec = [&](auto&& self, int i) -> void {
      if (i == n) {
        std::map<int, int> induced;
        for (int x = 0; x < n; ++x) {
          int pa = parent(x), pb = parent(img[x]);
          auto it = induced.find(pa);
          if (it == induced.end())
            induced[pa] = pb;
          else if (it->second != pb)
            return;
        }
        perms.push_back(img);
        return;
      }
      for (int cand = 0; cand < n; ++cand) {
        if (used[cand]) continue;
        if (atom_measure(atoms[i]) != atom_measure(atoms[cand])) continue;
        used[cand] = 1;
        img[i] = cand;
        self(self, i + 1);
        used[cand] = 0;
      }
    };
    rec(rec, 0);
    return perms;
  };

  auto induced_a = [&](const std::vector<int>& perm, auto&& parent, int n) {
    std::vector<int> ind(na, -1);
    for (int x = 0; x < n; ++x) ind[parent(x)] = parent(perm[x]);
    return ind;
  };

  std::vector<std::vector<int>> b_perms = enumerate(nb, am.b_atoms, parent_of_b);
  std::vector<std::vector<int>> c_perms = enumerate(nc, am.c_atoms, parent_of_c);
  for (const auto& beta : b_perms) {
    std::vector<int> a_from_b = induced_a(beta, parent_of_b, nb);
    for (const auto& gamma : c_perms) {
      if (induced_a(gamma, parent_of_c, nc) != a_from_b) continue;
      for (int cell = 0; cell < am.cells.size(); ++cell) {
        auto it = piece.find({beta[cell_to_b[cell]], gamma[cell_to_c[cell]]});
        if (it == piece.end() ||
            am.cells.measure(it->second) != am.cells.measure(cell))
          return MalgIndependenceReport{
              false, "pair fails at piece " + am.cells.name(cell)};
      }
    }
  }
  return MalgIndependenceReport{};
}

}  // namespace finext
