#include "spca/instances.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spca/errors.hpp"
#include "spca/sampling.hpp"

namespace spca {

void Graph::set_edge(std::size_t u, std::size_t v, bool present) {
  if (u == v) throw InvalidParameter("Graph: self-loops not allowed");
  adj_[u * n_ + v] = adj_[v * n_ + u] = present ? 1 : 0;
}

std::size_t Graph::edge_count() const {
  std::size_t m = 0;
  for (std::size_t u = 0; u < n_; ++u)
    for (std::size_t v = u + 1; v < n_; ++v) m += edge(u, v) ? 1 : 0;
  return m;
}

std::size_t Graph::degree(std::size_t u) const {
  std::size_t deg = 0;
  for (std::size_t v = 0; v < n_; ++v) deg += adj_[u * n_ + v];
  return deg;
}

void write_graph(const std::string& path, const Graph& g) {
  std::ofstream f(path);
  if (!f) throw IoError("write_graph: cannot open " + path);
  f << g.n() << " " << g.edge_count() << "\n";
  for (std::size_t u = 0; u < g.n(); ++u)
    for (std::size_t v = u + 1; v < g.n(); ++v)
      if (g.edge(u, v)) f << (u + 1) << " " << (v + 1) << "\n";
  if (!f) throw IoError("write_graph: write failed");
}

Graph read_graph(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_graph: cannot open " + path);
  std::size_t n = 0, m = 0;
  if (!(f >> n >> m)) throw IoError("read_graph: bad header");
  Graph g(n);
  for (std::size_t e = 0; e < m; ++e) {
    std::size_t u = 0, v = 0;
    if (!(f >> u >> v)) throw IoError("read_graph: truncated edge list");
    if (u < 1 || v < 1 || u > n || v > n)
      throw IoError("read_graph: vertex index out of range");
    g.set_edge(u - 1, v - 1, true);
  }
  return g;
}

void PdsParams::validate() const {
  if (!(q > 0.0 && q < p && p <= 1.0))
    throw InvalidParameter("PdsParams: need 0 < q < p <= 1");
  if (k < 1 || k > n) throw InvalidParameter("PdsParams: need 1 <= k <= n");
}

SpcaVariant spca_variant_from_string(const std::string& name) {
  if (name == "ubspca") return SpcaVariant::ubspca;
  if (name == "cbspca") return SpcaVariant::cbspca;
  if (name == "fcspca") return SpcaVariant::fcspca;
  throw InvalidParameter("unknown sparse PCA variant: " + name);
}

std::string to_string(SpcaVariant v) {
  switch (v) {
    case SpcaVariant::ubspca: return "ubspca";
    case SpcaVariant::cbspca: return "cbspca";
    case SpcaVariant::fcspca: return "fcspca";
  }
  return "?";
}

void SpcaParams::validate() const {
  if (k < 1 || k > d) throw InvalidParameter("SpcaParams: need 1 <= k <= d");
  if (n < 1) throw InvalidParameter("SpcaParams: need n >= 1");
  if (theta <= -1.0) throw InvalidParameter("SpcaParams: need theta > -1");
  if (variant != SpcaVariant::ubspca && gamma <= 0.0)
    throw InvalidParameter("SpcaParams: composite variants need gamma > 0");
}

std::string spike_to_json(const Spike& s) {
  nlohmann::json j;
  j["support"] = nlohmann::json::array();
  for (std::size_t i : s.support) j["support"].push_back(i + 1);
  j["values"] = s.values;
  j["theta"] = s.theta_actual;
  return j.dump();
}

Spike spike_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Spike s;
  for (const auto& v : j.at("support")) {
    const std::size_t idx = v.get<std::size_t>();
    if (idx < 1) throw IoError("spike_from_json: support indices are 1-based");
    s.support.push_back(idx - 1);
  }
  if (j.contains("values")) s.values = j["values"].get<std::vector<double>>();
  if (j.contains("theta")) s.theta_actual = j["theta"].get<double>();
  return s;
}

Graph gen_er_graph(std::size_t n, double q, RngStream& rng) {
  if (q < 0.0 || q > 1.0) throw InvalidParameter("gen_er_graph: q outside [0, 1]");
  Graph g(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.bernoulli(q)) g.set_edge(u, v, true);
  return g;
}

std::pair<Graph, std::vector<std::size_t>> gen_pds(const PdsParams& params, RngStream& rng) {
  params.validate();
  Graph g = gen_er_graph(params.n, params.q, rng);
  std::vector<std::size_t> support = uniform_subset(params.n, params.k, rng);
  // replace the induced subgraph on the support with a G(k, p) sample
  for (std::size_t a = 0; a < support.size(); ++a)
    for (std::size_t b = a + 1; b < support.size(); ++b)
      g.set_edge(support[a], support[b], rng.bernoulli(params.p));
  return {std::move(g), std::move(support)};
}

BernoulliMatrix gen_bernoulli_submatrix(std::size_t n, const std::vector<std::size_t>& s,
                                        double p, double q, RngStream& rng) {
  if (!(q > 0.0 && q < p && p <= 1.0))
    throw InvalidParameter("gen_bernoulli_submatrix: need 0 < q < p <= 1");
  std::vector<char> in_s(n, 0);
  for (std::size_t i : s) {
    if (i >= n) throw InvalidParameter("gen_bernoulli_submatrix: index out of range");
    in_s[i] = 1;
  }
  BernoulliMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m.set(i, j, rng.bernoulli(in_s[i] && in_s[j] ? p : q));
  return m;
}

namespace {

Spike draw_spike(const SpcaParams& params, RngStream& rng) {
  Spike spike;
  const double root_k = std::sqrt(static_cast<double>(params.k));
  switch (params.variant) {
    case SpcaVariant::ubspca: {
      spike.support = uniform_subset(params.d, params.k, rng);
      spike.values.assign(params.k, 1.0 / root_k);
      spike.theta_actual = params.theta;
      break;
    }
    case SpcaVariant::cbspca:
    case SpcaVariant::fcspca: {
      // theta' uniform on [theta(1 - gamma/sqrt(k)), theta(1 + gamma/sqrt(k))],
      // support size uniform on {k - ceil(gamma sqrt(k)), ..., k}
      const double half_width = params.theta * params.gamma / root_k;
      spike.theta_actual = params.theta - half_width + 2.0 * half_width * rng.uniform();
      const std::size_t shrink = static_cast<std::size_t>(
          std::min<double>(std::ceil(params.gamma * root_k), static_cast<double>(params.k - 1)));
      const std::size_t k_min = params.k - shrink;
      const std::size_t k_actual = k_min + static_cast<std::size_t>(rng.below(params.k - k_min + 1));
      spike.support = uniform_subset(params.d, k_actual, rng);
      const double value = 1.0 / std::sqrt(static_cast<double>(k_actual));
      if (params.variant == SpcaVariant::cbspca) {
        spike.values.assign(k_actual, value);
      } else {
        // unbiased: uniform signs; |v_i| = 1/sqrt(k') >= 1/sqrt(k)
        spike.values.resize(k_actual);
        for (std::size_t i = 0; i < k_actual; ++i)
          spike.values[i] = rng.bernoulli(0.5) ? value : -value;
      }
      break;
    }
  }
  return spike;
}

}  // namespace

std::pair<SampleSet, std::optional<Spike>> gen_spca(const SpcaParams& params,
                                                    Hypothesis hyp, RngStream& rng) {
  params.validate();
  SampleSet x(params.d, params.n);
  if (hyp == Hypothesis::h0) {
    for (std::size_t a = 0; a < params.d; ++a)
      for (std::size_t i = 0; i < params.n; ++i) x(a, i) = rng.gaussian();
    return {std::move(x), std::nullopt};
  }
  Spike spike = draw_spike(params, rng);
  const double root_theta = std::sqrt(std::max(spike.theta_actual, 0.0));
  for (std::size_t i = 0; i < params.n; ++i) {
    const double g = rng.gaussian();
    for (std::size_t a = 0; a < params.d; ++a) x(a, i) = rng.gaussian();
    for (std::size_t s = 0; s < spike.support.size(); ++s)
      x(spike.support[s], i) += root_theta * g * spike.values[s];
  }
  return {std::move(x), std::move(spike)};
}

SymmetricMatrix gen_goe(std::size_t d, RngStream& rng) {
  if (d < 1) throw InvalidParameter("gen_goe: d >= 1 required");
  SymmetricMatrix m(d);
  const double root2 = std::sqrt(2.0);
  for (std::size_t a = 0; a < d; ++a) {
    m.set(a, a, root2 * rng.gaussian());
    for (std::size_t b = a + 1; b < d; ++b) m.set(a, b, rng.gaussian());
  }
  return m;
}

SymmetricMatrix gen_wishart(const SymmetricMatrix& sigma, std::size_t n, RngStream& rng) {
  if (n < 1) throw InvalidParameter("gen_wishart: n >= 1 required");
  const std::size_t d = sigma.dim();
  const SymmetricMatrix root = psd_sqrt(sigma);  // throws if not PSD
  SymmetricMatrix w(d);
  std::vector<double> g(d), x(d);
  // accumulate outer products column by column; never materializes d x n
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) g[a] = rng.gaussian();
    for (std::size_t a = 0; a < d; ++a) {
      double sum = 0.0;
      for (std::size_t b = 0; b < d; ++b) sum += root(a, b) * g[b];
      x[a] = sum;
    }
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b) w.add(a, b, x[a] * x[b]);
  }
  return w;
}

double gw_covariance(std::size_t a, std::size_t b, std::size_t c, std::size_t e,
                     const std::vector<std::size_t>& s, std::size_t k, double theta,
                     double n) {
  const auto in_s = [&s](std::size_t i) {
    return std::find(s.begin(), s.end(), i) != s.end();
  };
  const double tk = theta / static_cast<double>(k);
  const double row = (a == c ? 1.0 : 0.0) + (in_s(a) && in_s(c) ? tk : 0.0);
  const double col = (b == e ? 1.0 : 0.0) + (in_s(b) && in_s(e) ? tk : 0.0);
  return n * row * col;
}

RealMatrix gw_sample_indrep(double n, std::size_t d, const std::vector<std::size_t>& s,
                            double theta, RngStream& rng) {
  if (theta < 0.0) throw InvalidParameter("gw_sample_indrep: theta >= 0 required");
  for (std::size_t i : s)
    if (i >= d) throw InvalidParameter("gw_sample_indrep: support index out of range");
  const double root_n = std::sqrt(n);
  const double root_theta = std::sqrt(theta);
  const double vs = s.empty() ? 0.0 : 1.0 / std::sqrt(static_cast<double>(s.size()));

  RealMatrix x(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) x(a, b) = rng.gaussian();
  std::vector<double> w1(d), w2(d);
  for (std::size_t a = 0; a < d; ++a) w1[a] = rng.gaussian();
  for (std::size_t a = 0; a < d; ++a) w2[a] = rng.gaussian();
  const double g = rng.gaussian();

  for (std::size_t a : s)
    for (std::size_t b = 0; b < d; ++b) x(a, b) += root_theta * vs * w1[b];
  for (std::size_t b : s)
    for (std::size_t a = 0; a < d; ++a) x(a, b) += root_theta * w2[a] * vs;
  for (std::size_t a : s)
    for (std::size_t b : s) x(a, b) += theta * g * vs * vs;

  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) x(a, b) *= root_n;
  return x;
}

}  // namespace spca
