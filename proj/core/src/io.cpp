#include "finext/io.hpp"

#include <set>

#include "finext/errors.hpp"

namespace finext {
namespace io {

namespace {

Scalar parse_scalar(const Json& j) {
  if (j.is_number_integer()) return Scalar(j.get<long>());
  if (!j.is_string()) throw InputError("expected a scalar string");
  return Scalar::parse(j.get<std::string>());
}

const Json& require(const Json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) throw InputError("missing field '" + key + "'");
  return *it;
}

}  // namespace

Envelope parse_envelope(const Json& j) {
  if (!j.is_object()) throw InputError("instance must be a JSON object");
  Envelope env;
  env.kind = require(j, "kind").get<std::string>();
  if (env.kind != "metric" && env.kind != "malg" && env.kind != "hilbert")
    throw InputError("unknown kind '" + env.kind + "'");
  env.payload = require(j, "payload");
  if (j.contains("options")) {
    const Json& o = j["options"];
    if (o.contains("budget_order")) env.options.budget_order = o["budget_order"].get<long>();
    if (o.contains("max_degree")) env.options.max_degree = o["max_degree"].get<int>();
    if (o.contains("oracle_depth")) env.options.oracle_depth = o["oracle_depth"].get<int>();
    if (o.contains("seed")) env.options.seed = o["seed"].get<std::uint64_t>();
    if (env.options.budget_order <= 0 || env.options.max_degree <= 0 ||
        env.options.oracle_depth < 0)
      throw InputError("options out of range");
  }
  return env;
}

Json scalar_matrix(const std::vector<std::vector<Scalar>>& m) {
  Json rows = Json::array();
  for (const auto& row : m) {
    Json r = Json::array();
    for (const Scalar& v : row) r.push_back(v.str());
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::vector<Scalar>> parse_scalar_matrix(const Json& j) {
  if (!j.is_array()) throw InputError("expected a matrix");
  std::vector<std::vector<Scalar>> out;
  for (const Json& row : j) {
    if (!row.is_array()) throw InputError("expected a matrix row");
    std::vector<Scalar> r;
    for (const Json& v : row) r.push_back(parse_scalar(v));
    out.push_back(r);
  }
  return out;
}

MetricInstance parse_metric(const Json& payload) {
  std::vector<std::string> points;
  for (const Json& p : require(payload, "points"))
    points.push_back(p.get<std::string>());
  FiniteMetricSpace space(points, parse_scalar_matrix(require(payload, "d")));
  std::vector<PartialIsometry> isometries;
  if (payload.contains("partial_isometries")) {
    for (const Json& pj : payload["partial_isometries"]) {
      PartialIsometry phi;
      phi.map.assign(points.size(), -1);
      for (auto it = require(pj, "map").begin(); it != require(pj, "map").end(); ++it)
        phi.map[space.index_of(it.key())] =
            space.index_of(it.value().get<std::string>());
      validate_partial_isometry(space, phi);
      isometries.push_back(phi);
    }
  }
  return MetricInstance{space, isometries};
}

MalgInstance parse_malg(const Json& payload) {
  std::vector<std::string> names;
  std::vector<Scalar> measures;
  for (auto it = require(payload, "cells").begin();
       it != require(payload, "cells").end(); ++it) {
    names.push_back(it.key());
    measures.push_back(parse_scalar(it.value()));
  }
  CellSpace cells(names, measures);
  std::vector<std::vector<int>> atoms;
  for (const Json& aj : require(payload, "atoms")) {
    std::vector<int> atom;
    for (const Json& cj : aj) atom.push_back(cells.index_of(cj.get<std::string>()));
    atoms.push_back(atom);
  }
  std::vector<std::string> atom_names;
  if (payload.contains("atom_names"))
    for (const Json& nj : payload["atom_names"])
      atom_names.push_back(nj.get<std::string>());
  return MalgInstance{AlgebraPartition(cells, atoms, atom_names)};
}

HilbertInstance parse_hilbert(const Json& payload) {
  int dim = require(payload, "dim").get<int>();
  QuadraticSpace space(dim, parse_scalar_matrix(require(payload, "gram")));
  const Json& subspaces = require(payload, "subspaces");
  const Json& map = require(payload, "map");
  std::string dom = require(map, "domain").get<std::string>();
  std::string cod = require(map, "codomain").get<std::string>();
  auto parse_sub = [&](const std::string& name) {
    if (!subspaces.contains(name))
      throw InputError("unknown subspace '" + name + "'");
    Subspace s;
    for (const Json& vj : subspaces[name]) {
      Vec v;
      for (const Json& x : vj) v.push_back(parse_scalar(x));
      if (static_cast<int>(v.size()) != dim)
        throw InputError("vector dimension mismatch in subspace " + name);
      s.basis.push_back(v);
    }
    return s;
  };
  HilbertInstance inst{space, PartialLinearIsometry{parse_sub(dom), parse_sub(cod)},
                       dom, cod};
  validate_partial_linear_isometry(space, inst.map);
  return inst;
}

Json word_tokens(const Word& w) {
  Json out = Json::array();
  for (int l : w.letters()) out.push_back(Word::letter_token(l));
  return out;
}

Word parse_word_tokens(const Json& j, int n_generators) {
  std::vector<int> letters;
  for (const Json& t : j) {
    std::string s = t.get<std::string>();
    bool inverse = false;
    if (s.size() > 3 && s.substr(s.size() - 3) == "^-1") {
      inverse = true;
      s = s.substr(0, s.size() - 3);
    }
    if (s.empty() || s[0] != 'a')
      throw InputError("bad word token");
    int idx = std::stoi(s.substr(1));
    letters.push_back(inverse ? -idx : idx);
  }
  return Word::reduce(letters, n_generators);
}

namespace {

Json serialize_quotient(const FiniteQuotient& q) {
  Json out;
  out["degrees"] = q.degrees();
  Json gens = Json::array();
  for (const auto& per_gen : q.generator_images()) {
    Json blocks = Json::array();
    for (const auto& block : per_gen) blocks.push_back(block);
    gens.push_back(blocks);
  }
  out["generator_images"] = gens;
  return out;
}

FiniteQuotient parse_quotient(const Json& j) {
  std::vector<int> degrees;
  for (const Json& d : require(j, "degrees")) degrees.push_back(d.get<int>());
  std::vector<std::vector<std::vector<int>>> images;
  for (const Json& per_gen : require(j, "generator_images")) {
    std::vector<std::vector<int>> blocks;
    for (const Json& block : per_gen) blocks.push_back(block.get<std::vector<int>>());
    images.push_back(blocks);
  }
  return FiniteQuotient(degrees, images);
}

}  // namespace

Json serialize_metric_result(const FiniteMetricSpace& space,
                             const ExtensionResult& result) {
  Json out;
  out["quotient"] = serialize_quotient(result.quotient);
  out["order"] = result.quotient_order;
  Json classes = Json::array();
  for (const auto& cls : result.classes) {
    Json members = Json::array();
    for (auto [p, e] : cls) members.push_back(Json::array({space.label(p), e}));
    classes.push_back(members);
  }
  out["classes"] = classes;
  out["d_Y"] = scalar_matrix(result.d_Y);
  out["generator_permutations"] = result.generator_perms;
  Json embedding;
  for (int p = 0; p < space.size(); ++p)
    embedding[space.label(p)] = result.embedding[p];
  out["embedding"] = embedding;

  const ExtensionCertificate& cert = result.certificate;
  Json jcert;
  jcert["delta"] = cert.delta ? Json(cert.delta->str()) : Json(nullptr);
  jcert["Delta"] = cert.diameter.str();
  jcert["M"] = cert.chain_bound;
  jcert["chains_considered"] = cert.chains_considered;
  jcert["tried_degrees"] = cert.tried_degrees;
  Json sigs = Json::array();
  for (const SignatureRecord& rec : cert.signatures) {
    Json srec;
    Json pairs = Json::array();
    for (auto [z, zp] : rec.pairs)
      pairs.push_back(Json::array({space.label(z), space.label(zp)}));
    srec["pairs"] = pairs;
    srec["trivial"] = rec.trivial;
    if (rec.trivial) {
      Json witness = Json::array();
      for (const Word& w : rec.witness) witness.push_back(word_tokens(w));
      srec["witness"] = witness;
    } else {
      srec["quotient"] = serialize_quotient(rec.separation->quotient);
      srec["tried_degrees"] = rec.separation->tried_degrees;
      srec["kept"] = rec.kept;
      srec["image"] = rec.image_in_combined.indices;
    }
    sigs.push_back(srec);
  }
  jcert["signatures"] = sigs;
  out["certificate"] = jcert;
  return out;
}

ExtensionResult parse_metric_result(const FiniteMetricSpace& space, const Json& j,
                                    long order_budget) {
  ExtensionResult result;
  result.quotient = parse_quotient(require(j, "quotient"));
  result.quotient_order = result.quotient.order(order_budget);
  if (require(j, "order").get<long>() != result.quotient_order)
    throw InputError("stated quotient order disagrees with the materialization");
  long order = result.quotient_order;
  result.class_index_.assign(space.size() * order, -1);
  for (const Json& cls : require(j, "classes")) {
    std::vector<std::pair<int, int>> members;
    for (const Json& m : cls) {
      int p = space.index_of(m.at(0).get<std::string>());
      int e = m.at(1).get<int>();
      if (e < 0 || e >= order) throw InputError("class member element out of range");
      if (result.class_index_[p * order + e] != -1)
        throw InputError("classes overlap");
      result.class_index_[p * order + e] = static_cast<int>(result.classes.size());
      members.emplace_back(p, e);
    }
    result.classes.push_back(members);
  }
  for (int v : result.class_index_)
    if (v == -1) throw InputError("classes do not cover the product");
  result.d_Y = parse_scalar_matrix(require(j, "d_Y"));
  if (result.d_Y.size() != result.classes.size())
    throw InputError("metric matrix size disagrees with the classes");
  for (const auto& row : result.d_Y)
    if (row.size() != result.classes.size())
      throw InputError("metric matrix size disagrees with the classes");
  for (const Json& perm : require(j, "generator_permutations"))
    result.generator_perms.push_back(perm.get<std::vector<int>>());
  result.embedding.assign(space.size(), -1);
  const Json& emb = require(j, "embedding");
  for (auto it = emb.begin(); it != emb.end(); ++it)
    result.embedding[space.index_of(it.key())] = it.value().get<int>();
  return result;
}

Json serialize_malg_result(const Refinement& refinement,
                           const MalgExtendCertificate& certificate) {
  Json out;
  const AlgebraPartition& fine = refinement.refined;
  Json cells;
  for (int c = 0; c < fine.cells().size(); ++c)
    cells[fine.cells().name(c)] = fine.cells().measure(c).str();
  out["cells"] = cells;
  Json origin;
  for (int c = 0; c < fine.cells().size(); ++c)
    origin[fine.cells().name(c)] =
        refinement.base.cells().name(refinement.cell_origin[c]);
  out["cell_origin"] = origin;
  Json atoms = Json::array();
  for (int i = 0; i < fine.n_atoms(); ++i) {
    Json atom = Json::array();
    for (int c : fine.atom(i)) atom.push_back(fine.cells().name(c));
    atoms.push_back(atom);
  }
  out["atoms"] = atoms;
  out["atom_names"] = fine.atom_names();
  Json atom_origin = Json::array();
  for (int i = 0; i < fine.n_atoms(); ++i)
    atom_origin.push_back(refinement.base.atom_name(refinement.atom_origin[i]));
  out["atom_origin"] = atom_origin;

  Json jcert;
  jcert["strategy"] = certificate.strategy;
  if (certificate.strategy == "uniform")
    jcert["uniform_denominator"] = certificate.uniform_denominator;
  Json steps = Json::array();
  for (const MalgExtendStep& s : certificate.steps) {
    Json step;
    step["element_a"] = Json::array();
    step["element_b"] = Json::array();
    for (int i : s.elem_a) step["element_a"].push_back(refinement.base.atom_name(i));
    for (int i : s.elem_b) step["element_b"].push_back(refinement.base.atom_name(i));
    step["skipped"] = s.skipped;
    steps.push_back(step);
  }
  jcert["steps"] = steps;
  out["certificate"] = jcert;
  return out;
}

Refinement parse_malg_result(const AlgebraPartition& base, const Json& j) {
  std::vector<std::string> names;
  std::vector<Scalar> measures;
  for (auto it = require(j, "cells").begin(); it != require(j, "cells").end(); ++it) {
    names.push_back(it.key());
    measures.push_back(parse_scalar(it.value()));
  }
  CellSpace cells(names, measures);
  std::vector<std::vector<int>> atoms;
  for (const Json& aj : require(j, "atoms")) {
    std::vector<int> atom;
    for (const Json& cj : aj) atom.push_back(cells.index_of(cj.get<std::string>()));
    atoms.push_back(atom);
  }
  std::vector<std::string> atom_names;
  for (const Json& nj : require(j, "atom_names"))
    atom_names.push_back(nj.get<std::string>());
  AlgebraPartition fine(cells, atoms, atom_names);

  std::vector<int> cell_origin(cells.size(), -1);
  const Json& origin = require(j, "cell_origin");
  for (auto it = origin.begin(); it != origin.end(); ++it)
    cell_origin[cells.index_of(it.key())] =
        base.cells().index_of(it.value().get<std::string>());
  std::vector<int> atom_origin;
  for (const Json& nj : require(j, "atom_origin")) {
    std::string name = nj.get<std::string>();
    int found = -1;
    for (int i = 0; i < base.n_atoms(); ++i)
      if (base.atom_name(i) == name) found = i;
    if (found < 0) throw InputError("unknown base atom " + name);
    atom_origin.push_back(found);
  }
  for (int v : cell_origin)
    if (v < 0) throw InputError("cell origin missing for some cell");
  return Refinement{base, fine, cell_origin, atom_origin};
}

Json serialize_hilbert_result(const QuadraticSpace& space,
                              const PartialLinearIsometry& map, const WittResult& w) {
  Json out;
  out["matrix"] = scalar_matrix(w.matrix);
  Json refl = Json::array();
  for (const Vec& v : w.reflection_vectors) {
    Json vv = Json::array();
    for (const Scalar& x : v) vv.push_back(x.str());
    refl.push_back(vv);
  }
  out["reflections"] = refl;
  Json dom = Json::array(), cod = Json::array();
  for (const Vec& v : map.domain.basis) {
    Json vv = Json::array();
    for (const Scalar& x : v) vv.push_back(x.str());
    dom.push_back(vv);
  }
  for (const Vec& v : map.codomain.basis) {
    Json vv = Json::array();
    for (const Scalar& x : v) vv.push_back(x.str());
    cod.push_back(vv);
  }
  out["domain"] = dom;
  out["codomain"] = cod;
  return out;
}

}  // namespace io
}  // namespace finext
