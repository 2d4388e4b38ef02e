#pragma once

#include <optional>
#include <string>
#include <vector>

#include "finext/scalar.hpp"

namespace finext {

/// Finite measure space: named cells with positive exact measures summing
/// to 1.  Cells are the finest granularity every other structure refines.
class CellSpace {
public:
  CellSpace(std::vector<std::string> names, std::vector<Scalar> measures);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_.at(i); }
  const Scalar& measure(int i) const { return measures_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Scalar>& measures() const { return measures_; }
  int index_of(const std::string& name) const;
  Scalar measure_of(const std::vector<int>& cells) const;

  bool operator==(const CellSpace& o) const {
    return names_ == o.names_ && measures_ == o.measures_;
  }

private:
  std::vector<std::string> names_;
  std::vector<Scalar> measures_;
};

/// Partition of the cells into named atoms; stands for the finite subalgebra
/// whose atoms these are.
class AlgebraPartition {
public:
  AlgebraPartition(CellSpace cells, std::vector<std::vector<int>> atoms,
                   std::vector<std::string> atom_names = {});

  const CellSpace& cells() const { return cells_; }
  int n_atoms() const { return static_cast<int>(atoms_.size()); }
  const std::vector<int>& atom(int i) const { return atoms_.at(i); }
  const std::vector<std::vector<int>>& atoms() const { return atoms_; }
  const std::string& atom_name(int i) const { return atom_names_.at(i); }
  const std::vector<std::string>& atom_names() const { return atom_names_; }
  Scalar atom_measure(int i) const { return cells_.measure_of(atoms_[i]); }
  int atom_of_cell(int cell) const { return cell_to_atom_.at(cell); }

  /// Whether every atom of this partition sits inside one atom of `coarser`;
  /// both must live on the same cell space.
  bool refines(const AlgebraPartition& coarser) const;

private:
  CellSpace cells_;
  std::vector<std::vector<int>> atoms_;
  std::vector<std::string> atom_names_;
  std::vector<int> cell_to_atom_;
};

/// A refinement of a base partition: finer cells (each tracking the base cell
/// it came from) and finer atoms (each inside one base atom).
struct Refinement {
  AlgebraPartition base;
  AlgebraPartition refined;
  std::vector<int> cell_origin;  // refined cell -> base cell
  std::vector<int> atom_origin;  // refined atom -> base atom

  /// Measures of refined atoms inside the given base atom, sorted.
  std::vector<Scalar> piece_profile(int base_atom) const;
  /// Same multiset, run-length encoded (value, count), sorted by value.
  std::vector<std::pair<Scalar, long>> piece_profile_rle(int base_atom) const;
};

void validate_refinement(const Refinement& r);

/// Identity refinement (base == refined).
Refinement identity_refinement(const AlgebraPartition& a);

struct GoodCheckReport {
  bool good = true;
  int atom_a = -1;
  int atom_b = -1;
  std::vector<Scalar> pieces_a;
  std::vector<Scalar> pieces_b;
};

/// Every two equal-measure base atoms must carry equal multisets of refined
/// piece measures; the report names the first offending pair otherwise.
GoodCheckReport good_check(const Refinement& r);

/// Equal piece-measure multisets over two base-atom sets.
bool identically_partitioned(const Refinement& r, const std::vector<int>& elem_a,
                             const std::vector<int>& elem_b);

/// One step of the pair induction on the base partition: makes the two
/// disjoint equal-measure elements identically partitioned by realizing the
/// product algebra on them and repartitioning every other atom whose measure
/// collides with the involved profiles.
/// Precondition: the value sets R (atom measures under elem_a) and S (under
/// elem_b) are disjoint.
Refinement independence_step(const AlgebraPartition& a, const std::vector<int>& elem_a,
                             const std::vector<int>& elem_b);

struct MalgExtendStep {
  std::vector<int> elem_a;
  std::vector<int> elem_b;
  bool skipped = false;  // already identically partitioned
};

struct MalgExtendCertificate {
  std::string strategy;  // "uniform" or "pairwise"
  long uniform_denominator = 0;
  std::vector<MalgExtendStep> steps;
};

/// Refinement under which every partial automorphism of the base extends to
/// an automorphism: the uniform 1/N split when all measures are rational,
/// otherwise the pair-by-pair induction over disjoint equal-measure element
/// pairs.  Raises UnsupportedInstanceError on an R/S value collision.
Refinement extend_partial_automorphisms(const AlgebraPartition& a,
                                        MalgExtendCertificate* certificate = nullptr);

/// Partial automorphism of a partition: two subalgebras given by their atom
/// groupings plus the measure-preserving correspondence of their atoms.
struct PartialAut {
  std::vector<std::vector<int>> dom_groups;
  std::vector<std::vector<int>> rng_groups;
  std::vector<int> correspondence;  // dom group i maps to rng group corr[i]
};

struct MalgVerifyReport {
  bool ok = true;
  long partial_automorphisms = 0;
  std::string failure;
  std::optional<PartialAut> failing;
};

/// Enumerates every partial automorphism of the base algebra and checks each
/// extends to an automorphism of the refined algebra (an equal-measure atom
/// matching within every matched group pair).
MalgVerifyReport verify_extension_malg(const Refinement& r);

/// Symmetric-difference distance matrix e_ij = mu(A_i delta g(A_j)).
struct DistanceMatrix {
  std::vector<std::vector<Scalar>> e;

  int size() const { return static_cast<int>(e.size()); }
  /// eps_ij = (mu(A_i) + mu(A_j) - e_ij) / 2.
  Scalar epsilon(const AlgebraPartition& p, int i, int j) const;
};

/// g maps cell i to cell g[i]; must be a measure-preserving permutation.
DistanceMatrix matrix_of_automorphism(const AlgebraPartition& p,
                                      const std::vector<int>& g);

/// Exact check of the range constraints and both balance equation families.
bool p_additive(const DistanceMatrix& e, const AlgebraPartition& p);

struct RealizeResult {
  CellSpace cells;                        // refined space the sets live on
  std::vector<int> cell_origin;           // refined cell -> input cell
  std::vector<std::vector<int>> a_sets;   // input atoms, re-expressed
  std::vector<std::vector<int>> c_sets;   // input C_i, re-expressed
  std::vector<std::vector<int>> b_sets;   // realized tuple
};

/// Realizes a P-additive matrix: returns (B_1..B_k) with mu(B_i) = mu(A_i),
/// mu(B_i delta A_j) = e_ij exactly, B_i cap A_j inside C_j and A_i minus B_i
/// inside C_i.  Requires e_ii < 2 mu(C_1) for all i.
RealizeResult realize_matrix(const AlgebraPartition& p,
                             const std::vector<std::vector<int>>& c_sets,
                             const DistanceMatrix& e);

struct MalgAmalgam {
  CellSpace cells;
  std::vector<std::string> a_names, b_names, c_names;
  std::vector<std::vector<int>> a_atoms, b_atoms, c_atoms;  // cell index lists
};

/// Replaces C's trace inside every A-atom by a stochastically independent
/// copy relative to B's trace; the returned C' has the same atom-measure data
/// over A as C and satisfies the product-measure identity within each A-atom.
MalgAmalgam independent_amalgam(const AlgebraPartition& a, const AlgebraPartition& b,
                                const AlgebraPartition& c);

struct MalgIndependenceReport {
  bool independent = true;
  std::string detail;
};

/// Exhaustive independence check over the amalgam: every pair of
/// measure-preserving atom permutations of B and C' that preserve A setwise
/// and agree on A extends to an automorphism of the generated algebra.
MalgIndependenceReport check_amalgam_independence(const MalgAmalgam& am);

}  // namespace finext
