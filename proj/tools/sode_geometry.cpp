// sode-geometry: evaluate and verify the geometry of SODEs, constrained
// SODEs and nonholonomic problems given as JSON system files.
//
// Exit codes: 0 success, 1 verification failure, 2 usage/input/evaluation error.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sodegeo/constrained.hpp"
#include "sodegeo/nonholonomic.hpp"
#include "sodegeo/report.hpp"
#include "sodegeo/sode.hpp"
#include "sodegeo/system_file.hpp"

using nlohmann::json;
using namespace sodegeo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitError = 2;
constexpr int kMaxResampleAttempts = 100;

struct Options {
  std::string file;
  std::string tensors = "phi,K,curvature";
  int order = 3;
  int npoints = 50;
  bool npoints_given = false;
  double tol = 1e-8;
  std::string out;
  std::string csv;
  std::optional<std::uint64_t> seed;
  double perturb = 0.0;
  bool timing = false;
};

class PointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

unsigned thread_cap() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SODE_GEOMETRY_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(std::string("SODE_GEOMETRY_THREADS must be a positive integer, got \"") + env + "\"");
  }
  return hw;
}

/// Evaluation of one point; receives the point and an RNG for random fields.
using PointTask = std::function<json(const std::vector<double>&, std::mt19937_64&)>;

struct PointSpec {
  std::vector<double> point;  // empty: sample
  std::size_t index = 0;
};

struct PointOutcome {
  json result;
  std::string error;
};

std::mt19937_64 stream(std::uint64_t seed, std::size_t index, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

PointOutcome evaluate_point(const SystemDefinition& sys, const PointSpec& spec, std::uint64_t seed, const PointTask& task,
                            bool timing) {
  PointOutcome out;
  auto start = std::chrono::steady_clock::now();
  auto fields = stream(seed, spec.index, 1);
  try {
    json r;
    std::vector<double> p = spec.point;
    if (!p.empty()) {
      r = task(p, fields);
      r["source"] = "file";
    } else {
      auto sampler = stream(seed, spec.index, 0);
      std::string last;
      int attempt = 0;
      for (; attempt < kMaxResampleAttempts; ++attempt) {
        p = sys.sample_point(sampler);
        try {
          r = task(p, fields);
          break;
        } catch (const DomainError& e) {
          last = e.what();
          fields = stream(seed, spec.index, 2 + static_cast<std::uint64_t>(attempt));
        }
      }
      if (attempt == kMaxResampleAttempts) {
        throw PointError("no in-domain point found after " + std::to_string(kMaxResampleAttempts) +
                         " attempts; last error: " + last);
      }
      r["source"] = "random";
      r["attempts"] = attempt + 1;
    }
    json ordered;
    ordered["index"] = spec.index;
    ordered["point"] = report::vector_json(p);
    for (auto& [k, v] : r.items()) ordered[k] = v;
    if (timing) {
      ordered["timing_ms"] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    out.result = ordered;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

/// File points first, then random ones; results keep that order.
std::vector<PointSpec> point_plan(const SystemDefinition& sys, const Options& opt, bool always_random) {
  std::vector<PointSpec> plan;
  for (const auto& p : sys.points) plan.push_back({p, plan.size()});
  const bool random = always_random || opt.npoints_given || sys.points.empty();
  if (random) {
    for (int i = 0; i < opt.npoints; ++i) plan.push_back({{}, plan.size()});
  }
  return plan;
}

std::vector<PointOutcome> run_points(const SystemDefinition& sys, const std::vector<PointSpec>& plan,
                                     std::uint64_t seed, const PointTask& task, bool timing) {
  std::vector<PointOutcome> results(plan.size());
  const unsigned workers = std::min<unsigned>(thread_cap(), static_cast<unsigned>(std::max<std::size_t>(1, plan.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < plan.size(); i = next++) results[i] = evaluate_point(sys, plan[i], seed, task, timing);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return results;
}

report::TensorSelection parse_tensors(const std::string& list) {
  report::TensorSelection sel;
  std::stringstream ss(list);
  std::string item;
  const auto& known = report::known_tensors();
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "all") {
      sel.names.insert(known.begin(), known.end());
      continue;
    }
    if (std::find(known.begin(), known.end(), item) == known.end()) {
      std::string all;
      for (const auto& k : known) all += (all.empty() ? "" : ", ") + k;
      throw std::invalid_argument("unknown tensor \"" + item + "\" (known: " + all + ", all)");
    }
    sel.names.insert(item);
  }
  return sel;
}

json system_json(const SystemDefinition& sys) {
  json o = {{"kind", kind_name(sys.kind)}, {"coords", sys.coords}, {"point_coordinates", sys.point_names()}};
  if (!sys.name.empty()) o["name"] = sys.name;
  if (sys.kind != SystemKind::kSode) o["split"] = sys.split;
  return o;
}

void emit(const json& doc, const Options& opt, const std::string& command) {
  const std::string text = doc.dump(2) + "\n";
  if (opt.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(opt.out);
    if (!f) throw std::runtime_error("cannot write " + opt.out);
    f << text;
  }
  if (!opt.csv.empty()) {
    std::filesystem::create_directories(opt.csv);
    const auto path = std::filesystem::path(opt.csv) / (command + ".csv");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    report::write_csv(f, doc["points"]);
  }
}

/// Collects per-point results; the first failing point aborts with its message.
json collect(const std::vector<PointOutcome>& results) {
  json points = json::array();
  for (const auto& r : results) {
    if (!r.error.empty()) {
      throw PointError("point " + std::to_string(points.size()) + ": " + r.error);
    }
    points.push_back(r.result);
  }
  return points;
}

json header(const SystemDefinition& sys, const Options& opt, const std::string& command, std::uint64_t seed) {
  json settings = {{"order", opt.order}, {"seed", seed}};
  if (command == "inspect") settings["tensors"] = opt.tensors;
  if (command == "verify") {
    settings["npoints"] = opt.npoints;
    settings["tol"] = opt.tol;
    settings["perturb"] = opt.perturb;
  }
  return {{"tool", "sode-geometry"}, {"command", command}, {"system", system_json(sys)}, {"settings", settings}};
}

int cmd_inspect(const SystemDefinition& sys, const Options& opt, std::uint64_t seed) {
  if (opt.order != 2 && opt.order != 3) throw std::invalid_argument("--order must be 2 or 3");
  auto sel = parse_tensors(opt.tensors);
  PointTask task;
  if (sys.kind == SystemKind::kSode) {
    task = [&](const std::vector<double>& p, std::mt19937_64&) {
      return json{{"tensors", report::unconstrained_tensors(build_frame(*sys.sode, p, opt.order), sel)}};
    };
  } else {
    ConstrainedSystem cs = sys.as_constrained();
    task = [&, cs](const std::vector<double>& p, std::mt19937_64&) {
      return json{{"tensors", report::constrained_tensors(build_constrained_frame(cs, p, opt.order), sel)}};
    };
  }
  json doc = header(sys, opt, "inspect", seed);
  doc["points"] = collect(run_points(sys, point_plan(sys, opt, false), seed, task, opt.timing));
  emit(doc, opt, "inspect");
  return kExitOk;
}

int cmd_verify(const SystemDefinition& sys, const Options& opt, std::uint64_t seed) {
  PointTask task;
  if (sys.kind == SystemKind::kSode) {
    task = [&](const std::vector<double>& p, std::mt19937_64& rng) {
      return json{{"residuals", report::residuals_json(verify_unconstrained(*sys.sode, p, rng, 3, opt.perturb))}};
    };
  } else {
    ConstrainedSystem cs = sys.as_constrained();
    task = [&, cs](const std::vector<double>& p, std::mt19937_64& rng) {
      ResidualMap m = verify_constrained(cs, p, rng, 3, opt.perturb);
      if (sys.nonholonomic) {
        Reduction r = reduce(*sys.nonholonomic, p);
        record(m, "reduction.linear_part", r.linear_part_residual);
        record(m, "reduction.equations", r.equation_residual);
      }
      return json{{"residuals", report::residuals_json(m)}};
    };
  }
  json points = collect(run_points(sys, point_plan(sys, opt, true), seed, task, opt.timing));

  // Max over points per key; null (non-finite) counts as failure.
  std::map<std::string, double> worst;
  bool finite = true;
  for (auto& p : points) {
    double pmax = 0.0;
    for (const auto& [k, v] : p["residuals"].items()) {
      double x = v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
      if (!std::isfinite(x)) finite = false;
      worst[k] = std::max(worst.count(k) ? worst[k] : 0.0, x);
      pmax = std::max(pmax, x);
    }
    p["max_residual"] = report::number(pmax);
    p["pass"] = std::isfinite(pmax) && pmax <= opt.tol;
  }
  double overall = 0.0;
  std::string worst_key;
  json table = json::object();
  for (const auto& [k, v] : worst) {
    table[k] = {{"max", report::number(v)}, {"pass", std::isfinite(v) && v <= opt.tol}};
    if (worst_key.empty() || v > overall) {
      overall = v;
      worst_key = k;
    }
  }
  const bool pass = finite && overall <= opt.tol;

  json doc = header(sys, opt, "verify", seed);
  doc["points"] = points;
  doc["summary"] = {{"points", points.size()},
                    {"max_residual", report::number(overall)},
                    {"worst", worst_key},
                    {"tol", opt.tol},
                    {"pass", pass},
                    {"residuals", table}};
  emit(doc, opt, "verify");

  std::ostream& human = opt.out.empty() ? std::cerr : std::cout;
  human << std::left << std::setw(40) << "residual" << std::setw(14) << "max" << "status\n";
  for (const auto& [k, v] : worst) {
    human << std::left << std::setw(40) << k << std::setw(14) << std::setprecision(3) << std::scientific << v
          << (std::isfinite(v) && v <= opt.tol ? "ok" : "FAIL") << "\n";
  }
  human << (pass ? "PASS" : "FAIL") << ": " << points.size() << " points, max residual " << std::setprecision(3)
        << std::scientific << overall << " (" << worst_key << "), tol " << opt.tol << "\n";
  return pass ? kExitOk : kExitVerifyFailed;
}

int cmd_reduce(const SystemDefinition& sys, const Options& opt, std::uint64_t seed) {
  if (!sys.nonholonomic) throw std::invalid_argument("reduce needs a system of kind \"nonholonomic\"");
  PointTask task = [&](const std::vector<double>& p, std::mt19937_64&) {
    return json{{"reduction", report::reduction_json(reduce(*sys.nonholonomic, p))}};
  };
  json doc = header(sys, opt, "reduce", seed);
  doc["points"] = collect(run_points(sys, point_plan(sys, opt, false), seed, task, opt.timing));
  emit(doc, opt, "reduce");
  return kExitOk;
}

int cmd_roots(const SystemDefinition& sys, const Options& opt, std::uint64_t seed) {
  ConstrainedSystem cs = sys.as_constrained();
  PointTask task = [&, cs](const std::vector<double>& p, std::mt19937_64&) {
    return json{{"roots", report::roots_json(constrained_shape(build_constrained_frame(cs, p, 3)))}};
  };
  json doc = header(sys, opt, "roots", seed);
  doc["points"] = collect(run_points(sys, point_plan(sys, opt, false), seed, task, opt.timing));
  emit(doc, opt, "roots");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometry of second-order ODE systems, with and without nonholonomic constraints"};
  app.require_subcommand(1, 1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", opt.file, "system definition (JSON)")->required();
    sub->add_option("--order", opt.order, "jet order used to build frames (2 or 3)")->check(CLI::IsMember({2, 3}));
    sub->add_option("--npoints", opt.npoints, "number of random points")->check(CLI::Range(0, 1000000));
    sub->add_option("--out", opt.out, "write the JSON report to this file");
    sub->add_option("--csv", opt.csv, "write a CSV table into this directory");
    sub->add_option("--seed", opt.seed, "seed for random points (overrides the file)");
    sub->add_flag("--timing", opt.timing, "add wall-clock timings (makes output non-deterministic)");
  };
  auto* inspect = app.add_subcommand("inspect", "evaluate tensors at the file's points");
  add_common(inspect);
  inspect->add_option("--tensors", opt.tensors, "comma list of phi,K,curvature,torsion,shape,connection or all");
  auto* verify = app.add_subcommand("verify", "run the identity suites; exit 1 if any residual exceeds --tol");
  add_common(verify);
  verify->add_option("--tol", opt.tol, "residual tolerance");
  verify->add_option("--perturb", opt.perturb, "shift Gamma by this amount (sensitivity check)");
  auto* reduce_cmd = app.add_subcommand("reduce", "solve a nonholonomic problem for F, C, G and multipliers");
  add_common(reduce_cmd);
  auto* roots = app.add_subcommand("roots", "determinant polynomial and real roots of the shape-map eigenproblem");
  add_common(roots);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  for (auto* sub : {inspect, verify, reduce_cmd, roots}) {
    if (sub->parsed() && sub->count("--npoints") > 0) opt.npoints_given = true;
  }

  try {
    SystemDefinition sys = load_system_file(opt.file);
    const std::uint64_t seed = opt.seed.value_or(sys.seed);
    if (inspect->parsed()) return cmd_inspect(sys, opt, seed);
    if (verify->parsed()) return cmd_verify(sys, opt, seed);
    if (reduce_cmd->parsed()) return cmd_reduce(sys, opt, seed);
    return cmd_roots(sys, opt, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
