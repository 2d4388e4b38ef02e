// Command-line front end: reads instance envelopes, runs the extension
// engines, writes results with embedded certificates, and re-verifies
// results independently of their construction.
//
// Exit codes: 0 ok, 2 invalid input, 3 budget exhausted, 4 unsupported
// instance, 5 verification mismatch.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "finext/errors.hpp"
#include "finext/extension.hpp"
#include "finext/hilbert.hpp"
#include "finext/io.hpp"
#include "finext/malg.hpp"
#include "finext/metric.hpp"

namespace {

using finext::io::Json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInvalidInput = 2;
constexpr int kExitBudget = 3;
constexpr int kExitUnsupported = 4;
constexpr int kExitMismatch = 5;

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw finext::InputError("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const std::exception& e) {
    throw finext::InputError("bad JSON in " + path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw finext::InputError("cannot write " + path);
  out << doc.dump(2) << "\n";
}

struct CommonFlags {
  std::string out;
  long budget_order = -1;
  int max_degree = -1;
  int oracle_depth = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

finext::io::Options merge_options(const finext::io::Envelope& env,
                                  const CommonFlags& flags) {
  finext::io::Options o = env.options;
  if (flags.budget_order > 0) o.budget_order = flags.budget_order;
  if (flags.max_degree > 0) o.max_degree = flags.max_degree;
  if (flags.oracle_depth >= 0) o.oracle_depth = flags.oracle_depth;
  if (flags.seed_set) o.seed = flags.seed;
  return o;
}

std::string default_out(const std::string& instance_path) {
  std::filesystem::path p(instance_path);
  p.replace_extension();
  return p.string() + ".out.json";
}

int run_extend(const std::string& instance_path, const CommonFlags& flags,
               bool with_oracle) {
  Json doc = read_json(instance_path);
  finext::io::Envelope env = finext::io::parse_envelope(doc);
  finext::io::Options opts = merge_options(env, flags);
  auto started = std::chrono::steady_clock::now();

  Json out;
  out["kind"] = env.kind;
  Json verification;
  if (env.kind == "metric") {
    finext::io::MetricInstance inst = finext::io::parse_metric(env.payload);
    finext::ExtensionBudget budget{opts.budget_order, opts.max_degree};
    finext::ExtensionResult result =
        finext::extend_isometries(inst.space, inst.isometries, budget);
    Json body = finext::io::serialize_metric_result(inst.space, result);
    Json cert = body["certificate"];
    body.erase("certificate");
    out["result"] = body;
    out["certificate"] = cert;
    verification["construction_checks"] = true;  // enforced before returning
    if (with_oracle) {
      finext::VerifyOptions vo;
      vo.oracle_depth = opts.oracle_depth;
      vo.seed = opts.seed;
      finext::VerifyReport rep =
          finext::verify_extension(inst.space, inst.isometries, result, vo);
      verification["oracle_triples"] = rep.triples_checked;
      verification["oracle_inconclusive"] = rep.inconclusive;
      verification["oracle_ok"] = rep.ok;
      if (!rep.ok) {
        out["status"] = "verification-failed";
        out["verification"] = verification;
        write_json(flags.out.empty() ? default_out(instance_path) : flags.out, out);
        for (const auto& f : rep.failures) std::cerr << "mismatch: " << f << "\n";
        return kExitMismatch;
      }
    }
  } else if (env.kind == "malg") {
    finext::io::MalgInstance inst = finext::io::parse_malg(env.payload);
    finext::MalgExtendCertificate cert;
    finext::Refinement r = finext::extend_partial_automorphisms(inst.algebra, &cert);
    Json body = finext::io::serialize_malg_result(r, cert);
    Json jcert = body["certificate"];
    body.erase("certificate");
    out["result"] = body;
    out["certificate"] = jcert;
    finext::GoodCheckReport good = finext::good_check(r);
    finext::MalgVerifyReport rep = finext::verify_extension_malg(r);
    verification["good"] = good.good;
    verification["partial_automorphisms"] = rep.partial_automorphisms;
    verification["all_extend"] = rep.ok;
    if (!good.good || !rep.ok) {
      out["status"] = "verification-failed";
      out["verification"] = verification;
      write_json(flags.out.empty() ? default_out(instance_path) : flags.out, out);
      std::cerr << "mismatch: " << (good.good ? rep.failure : "good check failed")
                << "\n";
      return kExitMismatch;
    }
  } else {
    finext::io::HilbertInstance inst = finext::io::parse_hilbert(env.payload);
    finext::WittResult w = finext::witt_extend(inst.space, inst.map);
    out["result"] = finext::io::serialize_hilbert_result(inst.space, inst.map, w);
    out["certificate"] =
        Json{{"reflections", static_cast<long>(w.reflection_vectors.size())}};
    verification["gram_identity"] = true;  // enforced before returning
    verification["extends_map"] = true;
  }
  out["status"] = "ok";
  out["verification"] = verification;

  std::string out_path = flags.out.empty() ? default_out(instance_path) : flags.out;
  write_json(out_path, out);
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - started)
                     .count();
  std::cout << "ok " << env.kind << " -> " << out_path << " (" << elapsed
            << " ms)\n";
  return kExitOk;
}

int verify_metric(const finext::io::MetricInstance& inst, const Json& result_doc,
                  const finext::io::Options& opts) {
  finext::ExtensionResult result = finext::io::parse_metric_result(
      inst.space, result_doc.at("result"), opts.budget_order);
  const finext::FiniteMetricSpace& space = inst.space;
  long order = result.quotient_order;
  auto fail = [](const std::string& msg) {
    std::cerr << "mismatch: " << msg << "\n";
    return kExitMismatch;
  };

  // Classes must be exactly the orbit equivalence classes of the quotient.
  {
    finext::OrbitAutomaton aut = finext::make_automaton(space, inst.isometries);
    const auto& elems = result.quotient.elements(opts.budget_order);
    for (int x = 0; x < space.size(); ++x)
      for (int e = 0; e < order; ++e)
        for (int g = 0; g < aut.n_generators(); ++g)
          for (int letter : {g + 1, -(g + 1)}) {
            int y = aut.step(x, letter);
            if (y < 0) continue;
            int e2 = result.quotient.index_of(
                result.quotient.mul(elems[e],
                                    result.quotient.generator(g, letter > 0)),
                opts.budget_order);
            if (result.class_of(x, e) != result.class_of(y, e2))
              return fail("classes are not closed under the orbit moves");
          }
  }
  int n_classes = static_cast<int>(result.classes.size());
  // Quotient metric axioms and values.
  for (int c = 0; c < n_classes; ++c)
    for (int d = 0; d < n_classes; ++d) {
      if ((c == d) != result.d_Y[c][d].is_zero())
        return fail("metric zero pattern broken at classes " + std::to_string(c) +
                    ", " + std::to_string(d));
      if (result.d_Y[c][d] != result.d_Y[d][c])
        return fail("metric asymmetry at classes " + std::to_string(c) + ", " +
                    std::to_string(d));
      if (result.d_Y[c][d] > space.diameter())
        return fail("metric exceeds the diameter cap");
      for (int m = 0; m < n_classes; ++m)
        if (result.d_Y[c][d] > result.d_Y[c][m] + result.d_Y[m][d])
          return fail("triangle inequality fails at classes " + std::to_string(c) +
                      ", " + std::to_string(m) + ", " + std::to_string(d));
    }
  // Shortest-path consistency over the class graph.
  {
    std::vector<std::vector<finext::Scalar>> best = result.d_Y;
    bool changed = false;
    for (int e = 0; e < order; ++e)
      for (int x = 0; x < space.size(); ++x)
        for (int y = 0; y < space.size(); ++y) {
          if (x == y) continue;
          int cx = result.class_of(x, e), cy = result.class_of(y, e);
          if (cx == cy) continue;
          if (space.d(x, y) < best[cx][cy]) changed = true;
        }
    if (changed) return fail("a class-graph edge undercuts the stated metric");
    for (int c = 0; c < n_classes; ++c)
      for (int m = 0; m < n_classes; ++m)
        for (int d = 0; d < n_classes; ++d)
          if (best[c][m] + best[m][d] < best[c][d])
            return fail("stated metric is not path-closed");
  }
  // Embedding and extensions.
  for (int x = 0; x < space.size(); ++x) {
    if (result.embedding[x] != result.class_of(x, 0))
      return fail("embedding does not send " + space.label(x) +
                  " to its identity class");
    for (int y = 0; y < space.size(); ++y)
      if (result.d_Y[result.embedding[x]][result.embedding[y]] != space.d(x, y))
        return fail("embedding is not isometric at (" + space.label(x) + ", " +
                    space.label(y) + ")");
  }
  for (std::size_t g = 0; g < inst.isometries.size(); ++g) {
    const auto& perm = result.generator_perms.at(g);
    if (static_cast<int>(perm.size()) != n_classes)
      return fail("permutation size mismatch");
    for (int c = 0; c < n_classes; ++c)
      for (int d = 0; d < n_classes; ++d)
        if (result.d_Y[perm[c]][perm[d]] != result.d_Y[c][d])
          return fail("generator " + std::to_string(g + 1) +
                      " is not an isometry of the extension");
    for (int x = 0; x < space.size(); ++x) {
      int image = inst.isometries[g].map[x];
      if (image >= 0 && perm[result.embedding[x]] != result.embedding[image])
        return fail("generator " + std::to_string(g + 1) +
                    " does not extend its partial map at " + space.label(x));
    }
  }
  // Chain oracle on sampled triples.
  finext::VerifyOptions vo;
  vo.oracle_depth = opts.oracle_depth;
  vo.seed = opts.seed;
  finext::VerifyReport rep =
      finext::verify_extension(inst.space, inst.isometries, result, vo);
  if (!rep.ok) {
    for (const auto& f : rep.failures) std::cerr << "mismatch: " << f << "\n";
    return kExitMismatch;
  }
  std::cout << "ok metric verification (" << rep.triples_checked
            << " oracle triples, " << rep.inconclusive << " inconclusive)\n";
  return kExitOk;
}

int verify_malg(const finext::io::MalgInstance& inst, const Json& result_doc) {
  finext::Refinement r =
      finext::io::parse_malg_result(inst.algebra, result_doc.at("result"));
  try {
    finext::validate_refinement(r);
  } catch (const finext::Error& e) {
    std::cerr << "mismatch: " << e.what() << "\n";
    return kExitMismatch;
  }
  finext::GoodCheckReport good = finext::good_check(r);
  if (!good.good) {
    std::cerr << "mismatch: atoms " << inst.algebra.atom_name(good.atom_a) << " and "
              << inst.algebra.atom_name(good.atom_b)
              << " are not identically partitioned\n";
    return kExitMismatch;
  }
  finext::MalgVerifyReport rep = finext::verify_extension_malg(r);
  if (!rep.ok) {
    std::cerr << "mismatch: " << rep.failure << "\n";
    return kExitMismatch;
  }
  std::cout << "ok malg verification (" << rep.partial_automorphisms
            << " partial automorphisms)\n";
  return kExitOk;
}

int verify_hilbert(const finext::io::HilbertInstance& inst, const Json& result_doc) {
  const Json& body = result_doc.at("result");
  finext::Mat m = finext::io::parse_scalar_matrix(body.at("matrix"));
  auto fail = [](const std::string& msg) {
    std::cerr << "mismatch: " << msg << "\n";
    return kExitMismatch;
  };
  if (static_cast<int>(m.size()) != inst.space.dim())
    return fail("matrix dimension mismatch");
  finext::Mat check = finext::mat_mul(finext::mat_transpose(m),
                                      finext::mat_mul(inst.space.gram(), m));
  if (check != inst.space.gram()) return fail("Gram identity fails");
  for (std::size_t i = 0; i < inst.map.domain.basis.size(); ++i)
    if (finext::mat_vec(m, inst.map.domain.basis[i]) != inst.map.codomain.basis[i])
      return fail("matrix does not extend the partial map at vector " +
                  std::to_string(i + 1));
  finext::Mat product = finext::mat_identity(inst.space.dim());
  for (const Json& vj : body.at("reflections")) {
    finext::Vec w;
    for (const Json& x : vj) w.push_back(finext::Scalar::parse(x.get<std::string>()));
    finext::Mat r = finext::reflection_matrix(inst.space, w);
    if (finext::mat_mul(r, r) != finext::mat_identity(inst.space.dim()))
      return fail("a reflection is not an involution");
    product = finext::mat_mul(r, product);
  }
  if (product != m) return fail("reflection product disagrees with the matrix");
  std::cout << "ok hilbert verification (" << body.at("reflections").size()
            << " reflections)\n";
  return kExitOk;
}

int run_verify(const std::string& instance_path, const std::string& result_path,
               const CommonFlags& flags) {
  Json doc = read_json(instance_path);
  finext::io::Envelope env = finext::io::parse_envelope(doc);
  finext::io::Options opts = merge_options(env, flags);
  Json result_doc = read_json(result_path);
  if (!result_doc.contains("kind") || result_doc["kind"] != env.kind)
    throw finext::InputError("result file does not pair with the instance kind");
  if (!result_doc.contains("result"))
    throw finext::InputError("result file carries no result body");
  if (env.kind == "metric")
    return verify_metric(finext::io::parse_metric(env.payload), result_doc, opts);
  if (env.kind == "malg")
    return verify_malg(finext::io::parse_malg(env.payload), result_doc);
  return verify_hilbert(finext::io::parse_hilbert(env.payload), result_doc);
}

int run_oracle(const std::string& instance_path, const CommonFlags& flags) {
  Json doc = read_json(instance_path);
  finext::io::Envelope env = finext::io::parse_envelope(doc);
  if (env.kind != "metric")
    throw finext::InputError("the oracle command handles metric instances only");
  finext::io::Options opts = merge_options(env, flags);
  finext::io::MetricInstance inst = finext::io::parse_metric(env.payload);
  finext::ExtensionBudget budget{opts.budget_order, opts.max_degree};
  finext::ExtensionResult result =
      finext::extend_isometries(inst.space, inst.isometries, budget);
  finext::OrbitAutomaton aut = finext::make_automaton(inst.space, inst.isometries);

  Json report;
  report["kind"] = "oracle";
  long agree = 0, disagree = 0, inconclusive = 0;
  Json entries = Json::array();
  for (const finext::SignatureRecord& rec : result.certificate.signatures) {
    finext::FactorizationOracle oracle =
        finext::bounded_factorization(aut, rec.pairs, opts.oracle_depth);
    std::string status;
    if (oracle.conclusive && rec.trivial)
      status = "agree";
    else if (oracle.conclusive && !rec.trivial)
      status = "disagree";
    else if (!oracle.conclusive && rec.trivial)
      status = "inconclusive";
    else
      status = "agree";
    (status == "agree" ? agree : status == "disagree" ? disagree : inconclusive)++;
    Json entry;
    Json pairs = Json::array();
    for (auto [z, zp] : rec.pairs)
      pairs.push_back(Json::array({inst.space.label(z), inst.space.label(zp)}));
    entry["pairs"] = pairs;
    entry["engine_trivial"] = rec.trivial;
    entry["oracle_found_witness"] = oracle.conclusive;
    entry["status"] = status;
    entries.push_back(entry);
  }
  report["factorization"] = entries;

  finext::VerifyOptions vo;
  vo.oracle_depth = opts.oracle_depth;
  vo.seed = opts.seed;
  finext::VerifyReport rep =
      finext::verify_extension(inst.space, inst.isometries, result, vo);
  report["distance_triples"] = rep.triples_checked;
  report["distance_inconclusive"] = rep.inconclusive;
  report["distance_ok"] = rep.ok;
  report["summary"] =
      Json{{"agree", agree}, {"disagree", disagree}, {"inconclusive", inconclusive}};

  std::string out_path = flags.out.empty() ? "" : flags.out;
  if (!out_path.empty()) write_json(out_path, report);
  std::cout << report.dump(2) << "\n";
  if (disagree > 0 || !rep.ok) {
    std::cerr << "mismatch: oracle disagreement\n";
    return kExitMismatch;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite extensions of partial automorphisms"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string instance_path, result_path;
  bool with_oracle = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", flags.out, "output path");
    cmd->add_option("--budget-order", flags.budget_order,
                    "quotient order budget (default 10000)");
    cmd->add_option("--max-degree", flags.max_degree,
                    "largest symmetric-group degree tried (default 6)");
    cmd->add_option("--oracle-depth", flags.oracle_depth,
                    "brute-force oracle depth (default 8)");
    cmd->add_option("--seed", flags.seed, "sampling seed")
        ->each([&](const std::string&) { flags.seed_set = true; });
  };

  CLI::App* extend = app.add_subcommand("extend", "build a finite extension");
  extend->add_option("instance", instance_path, "instance JSON")->required();
  extend->add_flag("--verify", with_oracle, "run the chain oracle before reporting ok");
  add_common(extend);

  CLI::App* verify = app.add_subcommand("verify", "re-check a result file");
  verify->add_option("instance", instance_path, "instance JSON")->required();
  verify->add_option("result", result_path, "result JSON")->required();
  add_common(verify);

  CLI::App* oracle = app.add_subcommand("oracle", "diff engine against brute force");
  oracle->add_option("instance", instance_path, "instance JSON")->required();
  add_common(oracle);

  CLI11_PARSE(app, argc, argv);

  try {
    if (extend->parsed()) return run_extend(instance_path, flags, with_oracle);
    if (verify->parsed()) return run_verify(instance_path, result_path, flags);
    return run_oracle(instance_path, flags);
  } catch (const finext::BudgetError& e) {
    std::cerr << "budget: " << e.what() << " (last tried " << e.last_tried << ")\n";
    return kExitBudget;
  } catch (const finext::UnsupportedInstanceError& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return kExitUnsupported;
  } catch (const finext::InputError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const finext::Error& e) {
    std::cerr << "internal: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalidInput;
  }
}
