// spcared: instance generation, planted-clique-to-sparse-PCA reductions,
// baseline detectors, statistical verification suites and parameter sweeps.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spca/detectors.hpp"
#include "spca/errors.hpp"
#include "spca/instances.hpp"
#include "spca/pipelines.hpp"
#include "spca/sampling.hpp"
#include "spca/verify.hpp"

namespace {

using namespace spca;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitCheckFailure = 3;
constexpr int kExitBudget = 4;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  f << text << "\n";
}

std::vector<std::size_t> read_support_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::stringstream buffer;
  buffer << f.rdbuf();
  nlohmann::json j = nlohmann::json::parse(buffer.str());
  // accept either a bare spike/instrumentation object or a stage list
  if (j.contains("support")) {
    std::vector<std::size_t> support;
    for (const auto& v : j["support"]) support.push_back(v.get<std::size_t>() - 1);
    return support;
  }
  if (j.contains("stages") && !j["stages"].empty()) {
    std::vector<std::size_t> support;
    for (const auto& v : j["stages"][0]["support"])
      support.push_back(v.get<std::size_t>() - 1);
    return support;
  }
  throw IoError("no support found in " + path);
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string kind;
  std::size_t n = 0, k = 0, d = 0, samples = 0;
  double p = 1.0, q = 0.5, theta = 0.0, gamma = 1.0;
  std::string variant = "ubspca";
  std::string hypothesis = "h1";
  std::uint64_t seed = 0;
  std::string out, instrument, sigma_path;
};

int cmd_generate(const GenerateArgs& a) {
  RngStream rng(a.seed);
  if (a.kind == "er") {
    write_graph(a.out, gen_er_graph(a.n, a.q, rng));
  } else if (a.kind == "pds") {
    PdsParams prm{a.n, a.k, a.p, a.q};
    auto [g, support] = gen_pds(prm, rng);
    write_graph(a.out, g);
    if (!a.instrument.empty()) {
      nlohmann::json j;
      j["support"] = nlohmann::json::array();
      for (std::size_t v : support) j["support"].push_back(v + 1);
      write_text(a.instrument, j.dump(2));
    }
  } else if (a.kind == "spca") {
    SpcaParams prm;
    prm.n = a.samples ? a.samples : a.n;
    prm.k = a.k;
    prm.d = a.d;
    prm.theta = a.theta;
    prm.gamma = a.gamma;
    prm.variant = spca_variant_from_string(a.variant);
    const Hypothesis hyp = a.hypothesis == "h0" ? Hypothesis::h0 : Hypothesis::h1;
    auto [x, spike] = gen_spca(prm, hyp, rng);
    write_matrix(a.out, x);
    if (!a.instrument.empty() && spike) write_text(a.instrument, spike_to_json(*spike));
  } else if (a.kind == "goe") {
    write_matrix(a.out, gen_goe(a.d, rng).to_dense());
  } else if (a.kind == "wishart") {
    SymmetricMatrix sigma = a.sigma_path.empty()
                                ? SymmetricMatrix::identity(a.d)
                                : SymmetricMatrix::from_dense(read_matrix(a.sigma_path));
    write_matrix(a.out, gen_wishart(sigma, a.samples, rng).to_dense());
  } else {
    throw InvalidParameter("unknown generate kind: " + a.kind);
  }
  return kExitOk;
}

// ------------------------------------------------------------------ reduce

struct ReduceArgs {
  std::string pipeline;
  std::string config, in, out, instrument, support;
  bool strict = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ell;
};

int cmd_reduce(const ReduceArgs& a) {
  std::map<std::string, std::string> kv;
  if (!a.config.empty()) kv = parse_kv_file(a.config);
  std::uint64_t seed = 0;
  if (auto it = kv.find("seed"); it != kv.end()) seed = std::stoull(it->second);
  if (a.seed) seed = *a.seed;
  bool strict = a.strict;
  if (auto it = kv.find("strict"); it != kv.end()) strict = strict || it->second == "true";
  const ValidationMode mode = strict ? ValidationMode::strict : ValidationMode::permissive;

  std::optional<std::vector<std::size_t>> support;
  if (!a.support.empty()) support = read_support_file(a.support);
  RngStream rng(seed);

  SampleSet out;
  Instrumentation instr;
  if (a.pipeline == "ctw") {
    const CtwConfig cfg = ctw_config_from_kv(kv);
    const Graph g = read_graph(a.in);
    auto result = clique_to_wishart(g, cfg, rng, support ? &*support : nullptr, mode);
    out = std::move(result.first);
    instr = std::move(result.second);
  } else if (a.pipeline == "srr") {
    const SrrConfig cfg = srr_config_from_kv(kv);
    const Graph g = read_graph(a.in);
    auto result = subsampling_random_rotations(g, cfg, rng, support ? &*support : nullptr, mode);
    out = std::move(result.first);
    instr = std::move(result.second);
  } else if (a.pipeline == "sparsify") {
    std::size_t ell = 1;
    if (auto it = kv.find("ell"); it != kv.end()) ell = std::stoull(it->second);
    if (a.ell) ell = *a.ell;  // flag beats config
    const SampleSet x = read_matrix(a.in);
    auto result = sparsity_cloning(x, ell, rng, support ? &*support : nullptr);
    out = std::move(result.first);
    instr = std::move(result.second);
  } else {
    throw InvalidParameter("unknown pipeline: " + a.pipeline);
  }
  print_warnings(instr.warnings);
  write_matrix(a.out, out);
  if (!a.instrument.empty()) write_text(a.instrument, instr.to_json());
  return kExitOk;
}

// ------------------------------------------------------------------ detect

struct DetectArgs {
  std::string test;
  std::string in;
  double level = 0.05;
  std::size_t calibrate_trials = 200;
  std::optional<double> threshold;
  std::size_t k = 0;
  std::size_t budget = 1000000;
  double q = 0.5;
  bool two_sided = false;
  std::uint64_t seed = 0;
};

double spca_statistic(const std::string& test, const SampleSet& x, std::size_t k,
                      std::size_t budget) {
  if (test == "spectral") return lambda_max(empirical_covariance(x));
  if (test == "sum") return spca_sum_test(x);
  if (test == "ksparse") return spca_k_sparse_eigenvalue(x, k, budget);
  throw InvalidParameter("unknown detector: " + test);
}

double calibrate_spca_threshold(const std::string& test, std::size_t d, std::size_t n,
                                std::size_t k, std::size_t budget, std::size_t trials,
                                double level, RngStream& rng) {
  std::vector<double> stats(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream r = rng.split(t);
    SampleSet x(d, n);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t i = 0; i < n; ++i) x(a, i) = r.gaussian();
    stats[t] = spca_statistic(test, x, k, budget);
  }
  std::sort(stats.begin(), stats.end());
  const std::size_t idx = std::min(
      trials - 1, static_cast<std::size_t>(std::ceil((1.0 - level) * trials)) - 1);
  return stats[idx];
}

int cmd_detect(const DetectArgs& a) {
  DetectionResult result;
  if (a.test == "edge" || a.test == "degree") {
    const Graph g = read_graph(a.in);
    result = a.test == "edge"
                 ? clique_edge_test(g, a.q, a.level, a.k, a.two_sided)
                 : clique_max_degree_test(g, a.q, a.level);
    if (a.threshold) {
      result.threshold = *a.threshold;
      result.decide_h1 = result.statistic > result.threshold;
    }
  } else {
    const SampleSet x = read_matrix(a.in);
    if (a.test == "ksparse" && a.k == 0)
      throw InvalidParameter("detect ksparse requires --k");
    const std::size_t k = a.k ? a.k : 1;
    double threshold;
    if (a.threshold) {
      threshold = *a.threshold;
    } else {
      RngStream rng(a.seed);
      threshold = calibrate_spca_threshold(a.test, x.rows(), x.cols(), k, a.budget,
                                           a.calibrate_trials, a.level, rng);
    }
    result.statistic = spca_statistic(a.test, x, k, a.budget);
    result.threshold = threshold;
    result.decide_h1 = result.statistic > threshold;
  }
  std::cout << "statistic=" << result.statistic << " threshold=" << result.threshold
            << " decision=" << (result.decide_h1 ? "H1" : "H0") << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ verify

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& out_path) {
  std::vector<CheckReport> reports;
  if (suite == "all") {
    for (const auto& name : suite_names()) {
      auto r = run_suite(name, seed);
      reports.insert(reports.end(), r.begin(), r.end());
    }
  } else {
    reports = run_suite(suite, seed);
  }
  if (out_path.empty()) {
    write_reports_csv(std::cout, reports);
  } else {
    std::ofstream f(out_path);
    if (!f) throw IoError("cannot open " + out_path);
    write_reports_csv(f, reports);
  }
  return all_passed(reports) ? kExitOk : kExitCheckFailure;
}

// ------------------------------------------------------------------- sweep

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct SweepSpec {
  std::string pipeline = "ctw";
  std::string detector = "spectral";
  std::size_t trials = 20;
  std::size_t calibrate = 0;  // defaults to trials
  double level = 0.05;
  std::size_t budget = 1000000;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> base;
  std::vector<SweepAxis> axes;
};

SweepSpec parse_sweep_spec(const std::string& path) {
  SweepSpec spec;
  for (const auto& [key, value] : parse_kv_file(path)) {
    if (key == "pipeline") spec.pipeline = value;
    else if (key == "detector") spec.detector = value;
    else if (key == "trials") spec.trials = std::stoull(value);
    else if (key == "calibrate") spec.calibrate = std::stoull(value);
    else if (key == "level") spec.level = std::stod(value);
    else if (key == "budget") spec.budget = std::stoull(value);
    else if (key == "seed") spec.seed = std::stoull(value);
    else if (key.rfind("axis.", 0) == 0) {
      SweepAxis axis;
      axis.name = key.substr(5);
      std::istringstream vs(value);
      std::string cell;
      while (std::getline(vs, cell, ',')) axis.values.push_back(std::stod(cell));
      if (axis.values.empty()) throw InvalidParameter("sweep axis with no values");
      spec.axes.push_back(std::move(axis));
    } else {
      spec.base[key] = value;
    }
  }
  if (spec.calibrate == 0) spec.calibrate = spec.trials;
  if (spec.trials == 0) throw InvalidParameter("sweep: trials must be positive");
  return spec;
}

// One H0 or H1 run of the configured pipeline; returns the sample set fed
// to the detector.
SampleSet sweep_run(const SweepSpec& spec, const std::map<std::string, std::string>& kv,
                    Hypothesis hyp, RngStream& rng) {
  auto count = [&kv](const std::string& key, std::size_t fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : std::stoull(it->second);
  };
  auto real = [&kv](const std::string& key, double fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : std::stod(it->second);
  };
  if (spec.pipeline == "ctw") {
    const CtwConfig cfg = ctw_config_from_kv(kv);
    Graph g = hyp == Hypothesis::h0
                  ? gen_er_graph(cfg.N, cfg.q, rng)
                  : gen_pds(PdsParams{cfg.N, cfg.k, cfg.p, cfg.q}, rng).first;
    return clique_to_wishart(g, cfg, rng).first;
  }
  if (spec.pipeline == "srr") {
    const SrrConfig cfg = srr_config_from_kv(kv);
    Graph g = hyp == Hypothesis::h0
                  ? gen_er_graph(cfg.N, cfg.q, rng)
                  : gen_pds(PdsParams{cfg.N, cfg.K, cfg.p, cfg.q}, rng).first;
    return subsampling_random_rotations(g, cfg, rng).first;
  }
  SpcaParams prm;
  prm.n = count("n", 1000);
  prm.k = count("k", 2);
  prm.d = count("d", 16);
  prm.theta = real("theta", 0.5);
  prm.gamma = real("gamma", 1.0);
  auto sample = gen_spca(prm, hyp, rng).first;
  if (spec.pipeline == "sparsify")
    return sparsity_cloning(sample, count("ell", 1), rng).first;
  if (spec.pipeline == "spca") return sample;
  throw InvalidParameter("unknown sweep pipeline: " + spec.pipeline);
}

int cmd_sweep(const std::string& spec_path, const std::string& out_path) {
  const SweepSpec spec = parse_sweep_spec(spec_path);
  std::size_t cells = 1;
  for (const auto& axis : spec.axes) cells *= axis.values.size();
  const std::size_t total_runs = cells * (2 * spec.trials + spec.calibrate);
  if (total_runs > spec.budget)
    throw BudgetExceeded("sweep: cells*(2*trials+calibrate) exceeds budget");

  std::ofstream out(out_path);
  if (!out) throw IoError("cannot open " + out_path);
  for (const auto& axis : spec.axes) out << axis.name << ",";
  out << "threshold,type1,type2,type1plus2,trials\n";

  RngStream root(spec.seed);
  std::vector<std::size_t> index(spec.axes.size(), 0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::map<std::string, std::string> kv = spec.base;
    {
      std::size_t rest = cell;
      for (std::size_t ax = 0; ax < spec.axes.size(); ++ax) {
        index[ax] = rest % spec.axes[ax].values.size();
        rest /= spec.axes[ax].values.size();
        std::ostringstream v;
        v.precision(17);
        v << spec.axes[ax].values[index[ax]];
        kv[spec.axes[ax].name] = v.str();
      }
    }
    const std::size_t det_k = kv.count("k") ? std::stoull(kv["k"]) : 2;

    RngStream cell_rng = root.split(cell);
    RngStream calib_rng = cell_rng.split(0);
    std::vector<double> h0_stats(spec.calibrate);
    for (std::size_t t = 0; t < spec.calibrate; ++t) {
      RngStream r = calib_rng.split(t);
      h0_stats[t] = spca_statistic(spec.detector, sweep_run(spec, kv, Hypothesis::h0, r),
                                   det_k, spec.budget);
    }
    std::sort(h0_stats.begin(), h0_stats.end());
    const std::size_t idx = std::min(
        spec.calibrate - 1,
        static_cast<std::size_t>(std::ceil((1.0 - spec.level) * spec.calibrate)) - 1);
    const double threshold = h0_stats[idx];

    std::size_t false_pos = 0, misses = 0;
    RngStream trial_rng = cell_rng.split(1);
    for (std::size_t t = 0; t < spec.trials; ++t) {
      RngStream r0 = trial_rng.split(2 * t);
      RngStream r1 = trial_rng.split(2 * t + 1);
      const double s0 = spca_statistic(
          spec.detector, sweep_run(spec, kv, Hypothesis::h0, r0), det_k, spec.budget);
      const double s1 = spca_statistic(
          spec.detector, sweep_run(spec, kv, Hypothesis::h1, r1), det_k, spec.budget);
      if (s0 > threshold) ++false_pos;
      if (s1 <= threshold) ++misses;
    }
    const double t1 = static_cast<double>(false_pos) / static_cast<double>(spec.trials);
    const double t2 = static_cast<double>(misses) / static_cast<double>(spec.trials);
    for (std::size_t ax = 0; ax < spec.axes.size(); ++ax)
      out << spec.axes[ax].values[index[ax]] << ",";
    out << threshold << "," << t1 << "," << t2 << "," << (t1 + t2) << "," << spec.trials
        << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planted-subgraph to sparse-PCA reduction toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "sample a problem instance");
  generate->add_option("kind", gen.kind, "er|pds|spca|goe|wishart")->required();
  generate->add_option("--n", gen.n, "vertex count / sample count");
  generate->add_option("--k", gen.k, "planted size / sparsity");
  generate->add_option("--d", gen.d, "dimension");
  generate->add_option("--samples", gen.samples, "sample count (spca, wishart)");
  generate->add_option("--p", gen.p, "planted density");
  generate->add_option("--q", gen.q, "ambient density");
  generate->add_option("--theta", gen.theta, "signal strength");
  generate->add_option("--gamma", gen.gamma, "composite slack");
  generate->add_option("--variant", gen.variant, "ubspca|cbspca|fcspca");
  generate->add_option("--hypothesis", gen.hypothesis, "h0|h1");
  generate->add_option("--seed", gen.seed, "rng seed");
  generate->add_option("--out", gen.out, "output path")->required();
  generate->add_option("--instrument", gen.instrument, "planted-structure JSON path");
  generate->add_option("--sigma", gen.sigma_path, "covariance matrix file (wishart)");

  ReduceArgs red;
  auto* reduce = app.add_subcommand("reduce", "run a reduction pipeline");
  reduce->add_option("pipeline", red.pipeline, "ctw|srr|sparsify")->required();
  reduce->add_option("--config", red.config, "key=value config file");
  reduce->add_option("--in", red.in, "input instance")->required();
  reduce->add_option("--out", red.out, "output sample set")->required();
  reduce->add_option("--instrument", red.instrument, "instrumentation JSON output");
  reduce->add_option("--support", red.support, "planted support JSON input");
  std::size_t reduce_ell = 1;
  auto* ell_opt = reduce->add_option("--ell", reduce_ell, "cloning steps (sparsify)");
  std::uint64_t reduce_seed = 0;
  auto* seed_opt = reduce->add_option("--seed", reduce_seed, "rng seed (overrides config)");
  reduce->add_flag("--strict", red.strict, "promote asymptotic-hypothesis warnings to errors");

  DetectArgs det;
  auto* detect = app.add_subcommand("detect", "run a baseline detector");
  detect->add_option("test", det.test, "spectral|sum|ksparse|edge|degree")->required();
  detect->add_option("--in", det.in, "input instance")->required();
  detect->add_option("--level", det.level, "test level");
  detect->add_option("--calibrate-trials", det.calibrate_trials, "H0 calibration trials");
  double det_threshold = 0.0;
  auto* thr_opt = detect->add_option("--threshold", det_threshold, "explicit threshold");
  detect->add_option("--k", det.k, "sparsity / clique-size hint");
  detect->add_option("--budget", det.budget, "minor enumeration budget");
  detect->add_option("--q", det.q, "ambient edge density (graph tests)");
  detect->add_flag("--two-sided", det.two_sided, "two-sided edge test");
  detect->add_option("--seed", det.seed, "rng seed for calibration");

  std::string verify_suite = "all", verify_out;
  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "run a statistical verification suite");
  verify->add_option("--suite", verify_suite,
                     "cloning|rejection|rotation|wishart|pipeline|subsample|sparsify|all");
  verify->add_option("--seed", verify_seed, "rng seed");
  verify->add_option("--out", verify_out, "report CSV path (default stdout)");

  std::string sweep_spec, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "empirical Type I+II error over a grid");
  sweep->add_option("--spec", sweep_spec, "sweep spec file")->required();
  sweep->add_option("--out", sweep_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen);
    if (reduce->parsed()) {
      if (!seed_opt->empty()) red.seed = reduce_seed;
      if (!ell_opt->empty()) red.ell = reduce_ell;
      return cmd_reduce(red);
    }
    if (detect->parsed()) {
      if (!thr_opt->empty()) det.threshold = det_threshold;
      return cmd_detect(det);
    }
    if (verify->parsed()) return cmd_verify(verify_suite, verify_seed, verify_out);
    if (sweep->parsed()) return cmd_sweep(sweep_spec, sweep_out);
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NotPositiveSemidefinite& e) {
    std::cerr << "error: " << e.what() << " (eigenvalue " << e.eigenvalue() << ")\n";
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
