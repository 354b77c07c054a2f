#include "spca/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spca/errors.hpp"
#include "spca/sampling.hpp"

namespace spca {

namespace {

std::size_t smallest_multiple_above(std::size_t unit, double x) {
  // strictly greater: unit * floor(x/unit) + unit
  const double fl = std::floor(x / static_cast<double>(unit));
  return unit * (static_cast<std::size_t>(fl) + 1);
}

void accumulate(Instrumentation& instr, const PrimitiveDiagnostics& diag) {
  instr.rk_exhaustions += diag.rk_exhaustions;
  instr.mu_cap_violations += diag.mu_cap_violations;
  instr.r_truncations += diag.r_truncations;
}

std::vector<std::size_t> map_support(const std::vector<std::size_t>& support,
                                     const std::vector<std::size_t>& image) {
  std::vector<std::size_t> out;
  out.reserve(support.size());
  for (std::size_t v : support) out.push_back(image[v]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::size_t CtwConfig::m() const {
  return smallest_multiple_above(k, (p / q_prime() + epsilon) * static_cast<double>(N));
}

double CtwConfig::tau() const {
  return 2.0 * std::sqrt(3.0 * static_cast<double>(m()) * theta) / static_cast<double>(k);
}

double CtwConfig::g_cap() const { return 4.0 * std::sqrt(std::log(static_cast<double>(m()))); }

std::vector<std::string> CtwConfig::validate(ValidationMode mode) const {
  if (!(q > 0.0 && q < p && p <= 1.0))
    throw InvalidParameter("CtwConfig: need 0 < q < p <= 1");
  if (N < 2 || k < 1 || k > N) throw InvalidParameter("CtwConfig: need 1 <= k <= N");
  if (theta < 0.0) throw InvalidParameter("CtwConfig: theta must be >= 0");
  if (epsilon <= 0.0) throw InvalidParameter("CtwConfig: epsilon must be > 0");
  const double lower_d = (p / q_prime() + epsilon) * static_cast<double>(N) +
                         static_cast<double>(k);
  if (static_cast<double>(d) < lower_d)
    throw InvalidParameter("CtwConfig: d < (p/Q' + eps) N + k");
  if (n < m()) throw InvalidParameter("CtwConfig: need n >= m for inverse Wishart sampling");
  // the latent mean (theta sqrt3/k)(sqrt(n/2) + g) must stay nonnegative
  // for every capped g, i.e. sqrt(n/2) >= 4 sqrt(log m)
  if (theta > 0.0 && std::sqrt(static_cast<double>(n) / 2.0) < g_cap())
    throw InvalidParameter("CtwConfig: n too small, sqrt(n/2) < 4 sqrt(log m)");

  std::vector<std::string> warnings;
  const double n_floor = std::pow(static_cast<double>(N), 3.0);
  if (static_cast<double>(n) < n_floor) {
    std::ostringstream msg;
    msg << "n = " << n << " is below N^3 = " << n_floor
        << "; the Wishart comparison hypothesis n = omega(N^3) is not met";
    warnings.push_back(msg.str());
  }
  const double theta_cap = theta_slack_c *
      std::sqrt(static_cast<double>(k) * static_cast<double>(k) /
                (static_cast<double>(n) * std::log(static_cast<double>(N))));
  if (theta > theta_cap * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "theta = " << theta << " exceeds c*sqrt(k^2/(n log N)) = " << theta_cap;
    warnings.push_back(msg.str());
  }
  if (mode == ValidationMode::strict && !warnings.empty())
    throw InvalidParameter("CtwConfig (strict): " + warnings.front());
  return warnings;
}

std::size_t SrrConfig::n() const {
  return smallest_multiple_above(
      K, (p / q_target() + epsilon) * static_cast<double>(N) + static_cast<double>(K));
}

double SrrConfig::tau() const {
  return 2.0 * std::sqrt(static_cast<double>(n()) * theta /
                         (static_cast<double>(K) * static_cast<double>(k)));
}

std::vector<std::string> SrrConfig::validate(ValidationMode mode) const {
  if (!(q > 0.0 && q < p && p <= 1.0))
    throw InvalidParameter("SrrConfig: need 0 < q < p <= 1");
  if (N < 2 || K < 1 || K > N) throw InvalidParameter("SrrConfig: need 1 <= K <= N");
  if (k < 1 || 2 * k > K) throw InvalidParameter("SrrConfig: need 1 <= k <= K/2");
  if (theta < 0.0) throw InvalidParameter("SrrConfig: theta must be >= 0");
  if (epsilon <= 0.0) throw InvalidParameter("SrrConfig: epsilon must be > 0");
  if (d < n()) throw InvalidParameter("SrrConfig: need d >= n");

  std::vector<std::string> warnings;
  const RkParams rk = RkParams::for_dimension(p, q_target(), n());
  if (tau() > rk.mu_cap) {
    std::ostringstream msg;
    msg << "tau = " << tau() << " exceeds the rejection-kernel cap " << rk.mu_cap;
    warnings.push_back(msg.str());
  }
  const double theta_cap = theta_slack_c * static_cast<double>(K) * static_cast<double>(k) /
      (static_cast<double>(n()) * std::sqrt(std::log(static_cast<double>(N))));
  if (theta > theta_cap * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "theta = " << theta << " exceeds c*Kk/(n sqrt(log N)) = " << theta_cap;
    warnings.push_back(msg.str());
  }
  if (mode == ValidationMode::strict && !warnings.empty())
    throw InvalidParameter("SrrConfig (strict): " + warnings.front());
  return warnings;
}

const std::vector<std::size_t>* Instrumentation::stage_support(const std::string& stage) const {
  for (const auto& s : supports)
    if (s.stage == stage) return &s.support;
  return nullptr;
}

std::string Instrumentation::to_json() const {
  nlohmann::json j;
  j["stages"] = nlohmann::json::array();
  for (const auto& s : supports) {
    nlohmann::json stage;
    stage["stage"] = s.stage;
    stage["support"] = nlohmann::json::array();
    for (std::size_t v : s.support) stage["support"].push_back(v + 1);
    j["stages"].push_back(stage);
  }
  j["latent_g"] = latent_g;
  j["embedded_rows"] = nlohmann::json::array();
  for (std::size_t v : embedded_rows) j["embedded_rows"].push_back(v + 1);
  j["rk_exhaustions"] = rk_exhaustions;
  j["psd_clip_count"] = psd_clip_count;
  j["sigma_not_psd"] = sigma_not_psd;
  j["mu_cap_violations"] = mu_cap_violations;
  j["r_truncations"] = r_truncations;
  j["warnings"] = warnings;
  return j.dump(2);
}

SampleSet inverse_wishart_sample(const SymmetricMatrix& sigma_e, std::size_t n,
                                 RngStream& rng, Instrumentation* instr) {
  const std::size_t m = sigma_e.dim();
  if (n < m) throw InvalidParameter("inverse_wishart_sample: need n >= m");
  const PsdSqrtResult res = try_psd_sqrt(sigma_e, default_psd_tol(sigma_e));
  if (!res.psd) {
    if (instr) instr->sigma_not_psd = true;
    return SampleSet(m, n);  // Y = 0 when Sigma_e is not PSD
  }
  if (instr) instr->psd_clip_count += res.clipped;
  const RealMatrix frame = haar_frame(m, n, rng);
  return matmul(res.root, frame);
}

std::pair<SampleSet, Instrumentation> clique_to_wishart(
    const Graph& g, const CtwConfig& cfg, RngStream& rng,
    const std::vector<std::size_t>* planted_support, ValidationMode mode) {
  Instrumentation instr;
  instr.warnings = cfg.validate(mode);
  if (g.n() != cfg.N) throw InvalidParameter("clique_to_wishart: graph size != N");
  const std::size_t m = cfg.m();
  if (m * cfg.n > 200000000 || cfg.d * cfg.n > 200000000)
    throw InvalidParameter("clique_to_wishart: output exceeds the in-memory budget");

  RngStream s_embed = rng.split(0);
  RngStream s_clone = rng.split(1);
  RngStream s_latent = rng.split(2);
  RngStream s_mean = rng.split(3);
  RngStream s_rot_left = rng.split(4);
  RngStream s_rot_right = rng.split(5);
  RngStream s_wishart = rng.split(6);
  RngStream s_pad = rng.split(7);

  PrimitiveDiagnostics diag;
  if (planted_support)
    instr.supports.push_back({"input", *planted_support});

  // 1. plant diagonals
  auto [x, emb] = to_bernoulli_submatrix(g, cfg.p, cfg.q, m, s_embed);
  std::vector<std::size_t> support_m;
  if (planted_support) {
    support_m = map_support(*planted_support, emb.image);
    instr.supports.push_back({"submatrix", support_m});
  }

  // 2. clone to three independent copies
  CloneParams cp;
  cp.t = 3;
  cp.p = cfg.p;
  cp.q = cfg.q_prime();
  cp.P = cfg.p;
  cp.Q = cfg.q_clone();
  std::vector<BernoulliMatrix> clones = bernoulli_matrix_clone(x, cp, s_clone);

  // 3. mean matrix with latent capped scalar g
  double latent = s_latent.gaussian();
  if (std::abs(latent) >= cfg.g_cap()) latent = 0.0;
  instr.latent_g = latent;
  const RkParams rk = RkParams::for_dimension(cfg.p, cfg.q_clone(), m);
  const double mu = (cfg.theta * std::sqrt(3.0) / static_cast<double>(cfg.k)) *
                    (std::sqrt(static_cast<double>(cfg.n) / 2.0) + latent);
  const RealMatrix mean_matrix = gaussianize_const(clones[0], mu, rk, s_mean, mode, &diag);

  // 4. cross-term matrices
  const RealMatrix c_left =
      chi2_random_rotation(clones[1], cfg.k, cfg.tau(), rk, s_rot_left, mode, &diag)
          .transposed();
  const RealMatrix c_right =
      chi2_random_rotation(clones[2], cfg.k, cfg.tau(), rk, s_rot_right, mode, &diag);

  // 5. scaled empirical covariance matrix
  const double scale = std::sqrt(static_cast<double>(cfg.n) / 6.0);
  SymmetricMatrix sigma_e(m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      const double sym = mean_matrix(a, b) + mean_matrix(b, a) + c_left(a, b) +
                         c_left(b, a) + c_right(a, b) + c_right(b, a);
      sigma_e.set(a, b, (a == b ? static_cast<double>(cfg.n) : 0.0) + scale * sym);
    }

  // 6. inverse Wishart sampling
  const SampleSet y = inverse_wishart_sample(sigma_e, cfg.n, s_wishart, &instr);

  // 7. pad: embed the m rows at uniform positions among d rows
  const std::vector<std::size_t> perm = uniform_permutation(cfg.d, s_pad);
  SampleSet z(cfg.d, cfg.n);
  std::vector<char> filled(cfg.d, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t target = perm[i];
    std::copy(y.row(i), y.row(i) + cfg.n, z.row(target));
    filled[target] = 1;
  }
  for (std::size_t r = 0; r < cfg.d; ++r) {
    if (filled[r]) continue;
    for (std::size_t i = 0; i < cfg.n; ++i) z(r, i) = s_pad.gaussian();
  }
  instr.embedded_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
  if (planted_support) {
    std::vector<std::size_t> out_support;
    for (std::size_t v : support_m) out_support.push_back(perm[v]);
    std::sort(out_support.begin(), out_support.end());
    instr.supports.push_back({"output", std::move(out_support)});
  }
  accumulate(instr, diag);
  return {std::move(z), std::move(instr)};
}

std::pair<SampleSet, Instrumentation> subsampling_random_rotations(
    const Graph& g, const SrrConfig& cfg, RngStream& rng,
    const std::vector<std::size_t>* planted_support, ValidationMode mode) {
  Instrumentation instr;
  instr.warnings = cfg.validate(mode);
  if (g.n() != cfg.N) throw InvalidParameter("subsampling_random_rotations: graph size != N");
  const std::size_t n = cfg.n();
  if (cfg.d * n > 200000000)
    throw InvalidParameter("subsampling_random_rotations: output exceeds the in-memory budget");

  RngStream s_embed = rng.split(0);
  RngStream s_rot = rng.split(1);
  RngStream s_sub = rng.split(2);
  RngStream s_pad = rng.split(3);

  PrimitiveDiagnostics diag;
  if (planted_support) instr.supports.push_back({"input", *planted_support});

  auto [m, emb] = to_bernoulli_submatrix(g, cfg.p, cfg.q, n, s_embed);
  std::vector<std::size_t> support_n;
  if (planted_support) {
    support_n = map_support(*planted_support, emb.image);
    instr.supports.push_back({"submatrix", support_n});
  }

  const RkParams rk = RkParams::for_dimension(cfg.p, cfg.q_target(), n);
  const RealMatrix x = chi2_random_rotation(m, cfg.K, cfg.tau(), rk, s_rot, mode, &diag);

  // subsample rows with probability k/K, embed into random distinct rows
  const double keep_prob = static_cast<double>(cfg.k) / static_cast<double>(cfg.K);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i)
    if (s_sub.bernoulli(keep_prob)) kept.push_back(i);
  const std::vector<std::size_t> rows = uniform_subset(cfg.d, kept.size(), s_sub);
  const std::vector<std::size_t> order = uniform_permutation(kept.size(), s_sub);

  SampleSet y(cfg.d, n);
  std::vector<char> filled(cfg.d, 0);
  std::vector<std::size_t> row_of(n, cfg.d);  // source row -> output row
  for (std::size_t a = 0; a < kept.size(); ++a) {
    const std::size_t src = kept[a];
    const std::size_t dst = rows[order[a]];
    std::copy(x.row(src), x.row(src) + n, y.row(dst));
    filled[dst] = 1;
    row_of[src] = dst;
  }
  for (std::size_t r = 0; r < cfg.d; ++r) {
    if (filled[r]) continue;
    for (std::size_t i = 0; i < n; ++i) y(r, i) = s_pad.gaussian();
  }
  if (planted_support) {
    std::vector<std::size_t> t_set;
    for (std::size_t v : support_n)
      if (row_of[v] < cfg.d) t_set.push_back(row_of[v]);
    std::sort(t_set.begin(), t_set.end());
    instr.supports.push_back({"output", std::move(t_set)});
  }
  accumulate(instr, diag);
  return {std::move(y), std::move(instr)};
}

SampleSet sparsity_clone_step(const SampleSet& samples, RngStream& rng) {
  const std::size_t d = samples.rows(), n = samples.cols();
  SampleSet out(2 * d, n);
  const double inv_root2 = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double g = rng.gaussian();
      const double x = samples(a, i);
      out(a, i) = (x + g) * inv_root2;
      out(d + a, i) = (x - g) * inv_root2;
    }
  }
  return out;
}

std::pair<SampleSet, Instrumentation> sparsity_cloning(
    const SampleSet& samples, std::size_t ell, RngStream& rng,
    const std::vector<std::size_t>* support, std::size_t max_entries) {
  Instrumentation instr;
  const std::size_t final_d = samples.rows() << ell;
  if (final_d * samples.cols() > max_entries)
    throw InvalidParameter("sparsity_cloning: 2^ell * d exceeds the memory budget");

  std::vector<std::size_t> cur_support;
  if (support) {
    cur_support = *support;
    instr.supports.push_back({"input", cur_support});
  }
  SampleSet cur = samples;
  std::size_t d = samples.rows();
  for (std::size_t j = 0; j < ell; ++j) {
    RngStream step = rng.split(j);
    cur = sparsity_clone_step(cur, step);
    if (support) {
      // support duplicates: T = S union {d + i : i in S}
      std::vector<std::size_t> doubled = cur_support;
      for (std::size_t v : cur_support) doubled.push_back(d + v);
      cur_support = std::move(doubled);
      instr.supports.push_back({"clone-step", cur_support});
    }
    d *= 2;
  }
  RngStream s_perm = rng.split(ell);
  const std::vector<std::size_t> perm = uniform_permutation(d, s_perm);
  SampleSet out(d, samples.cols());
  for (std::size_t a = 0; a < d; ++a)
    std::copy(cur.row(a), cur.row(a) + cur.cols(), out.row(perm[a]));
  if (support) {
    std::vector<std::size_t> mapped;
    for (std::size_t v : cur_support) mapped.push_back(perm[v]);
    std::sort(mapped.begin(), mapped.end());
    instr.supports.push_back({"output", std::move(mapped)});
  }
  return {std::move(out), std::move(instr)};
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("parse_kv_file: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(f, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](const std::string& s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

namespace {

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key,
                 bool required, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (required) throw InvalidParameter("config: missing key " + key);
    return fallback;
  }
  return std::stod(it->second);
}

std::size_t kv_count(const std::map<std::string, std::string>& kv, const std::string& key,
                     bool required, std::size_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (required) throw InvalidParameter("config: missing key " + key);
    return fallback;
  }
  return static_cast<std::size_t>(std::stoull(it->second));
}

}  // namespace

CtwConfig ctw_config_from_kv(const std::map<std::string, std::string>& kv) {
  CtwConfig cfg;
  cfg.N = kv_count(kv, "N", true, 0);
  cfg.k = kv_count(kv, "k", true, 0);
  cfg.p = kv_double(kv, "p", true, 0.0);
  cfg.q = kv_double(kv, "q", true, 0.0);
  cfg.n = kv_count(kv, "n", true, 0);
  cfg.d = kv_count(kv, "d", true, 0);
  cfg.theta = kv_double(kv, "theta", true, 0.0);
  cfg.epsilon = kv_double(kv, "epsilon", false, 0.1);
  cfg.theta_slack_c = kv_double(kv, "c", false, 1.0);
  return cfg;
}

SrrConfig srr_config_from_kv(const std::map<std::string, std::string>& kv) {
  SrrConfig cfg;
  cfg.N = kv_count(kv, "N", true, 0);
  cfg.K = kv_count(kv, "K", true, 0);
  cfg.p = kv_double(kv, "p", true, 0.0);
  cfg.q = kv_double(kv, "q", true, 0.0);
  cfg.d = kv_count(kv, "d", true, 0);
  cfg.k = kv_count(kv, "k", true, 0);
  cfg.theta = kv_double(kv, "theta", true, 0.0);
  cfg.epsilon = kv_double(kv, "epsilon", false, 0.1);
  cfg.theta_slack_c = kv_double(kv, "c", false, 1.0);
  return cfg;
}

}  // namespace spca
