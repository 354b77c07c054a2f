#include "spca/primitives.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "spca/errors.hpp"
#include "spca/sampling.hpp"

namespace spca {

namespace {

constexpr std::size_t kMaxCloneT = 16;
// Relative slack for the CloneParams inequalities; the pipeline
// parameterizations meet them with equality, which pow() reproduces only
// to rounding (a few ulps, far below this).
constexpr double kIneqSlack = 1e-12;
// Masses at a binding boundary can round below zero by at most
// kIneqSlack / (p - q); anything beyond that is a parameter error.
constexpr double kPmfNegTol = 1e-10;

}  // namespace

void CloneParams::validate() const {
  if (t < 1 || t > kMaxCloneT)
    throw InvalidParameter("CloneParams: need 1 <= t <= 16");
  if (!(q > 0.0 && q < p && p <= 1.0))
    throw InvalidParameter("CloneParams: need 0 < q < p <= 1");
  if (!(Q > 0.0 && Q < P && P <= 1.0))
    throw InvalidParameter("CloneParams: need 0 < Q < P <= 1");
  // (1-p)/(1-q) <= ((1-P)/(1-Q))^t, with 0 <= 0 at p = P = 1
  const double lhs1 = (1.0 - p) / (1.0 - q);
  const double rhs1 = std::pow((1.0 - P) / (1.0 - Q), static_cast<double>(t));
  if (lhs1 > rhs1 * (1.0 + kIneqSlack) + std::numeric_limits<double>::min())
    throw InvalidParameter("CloneParams: (1-p)/(1-q) <= ((1-P)/(1-Q))^t violated");
  const double lhs2 = std::pow(P / Q, static_cast<double>(t));
  const double rhs2 = p / q;
  if (lhs2 > rhs2 * (1.0 + kIneqSlack))
    throw InvalidParameter("CloneParams: (P/Q)^t <= p/q violated");
}

double clone_pmf_index(int source_bit, std::size_t outcome, const CloneParams& cp) {
  cp.validate();
  if (outcome >= (std::size_t{1} << cp.t))
    throw InvalidParameter("clone_pmf: outcome index out of range");
  const int ones = std::popcount(outcome);
  const double td = static_cast<double>(cp.t);
  const double a = std::pow(cp.P, ones) * std::pow(1.0 - cp.P, td - ones);
  const double b = std::pow(cp.Q, ones) * std::pow(1.0 - cp.Q, td - ones);
  double mass;
  if (source_bit)
    mass = ((1.0 - cp.q) * a - (1.0 - cp.p) * b) / (cp.p - cp.q);
  else
    mass = (cp.p * b - cp.q * a) / (cp.p - cp.q);
  if (mass < 0.0) {
    if (mass < -kPmfNegTol)
      throw InvalidParameter("clone_pmf: negative mass; parameters inconsistent");
    mass = 0.0;  // rounding at a boundary case
  }
  return mass;
}

double clone_pmf(int source_bit, const std::vector<int>& v, const CloneParams& cp) {
  if (v.size() != cp.t) throw InvalidParameter("clone_pmf: vector length != t");
  std::size_t outcome = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    outcome = (outcome << 1) | (v[i] ? 1u : 0u);  // v_1 is the most significant bit
  return clone_pmf_index(source_bit, outcome, cp);
}

namespace {

// Inverse-CDF tables over the 2^t outcomes in lexicographic order.
struct CloneTables {
  std::size_t t;
  std::vector<double> cum_present;
  std::vector<double> cum_absent;

  explicit CloneTables(const CloneParams& cp) : t(cp.t) {
    const std::size_t count = std::size_t{1} << cp.t;
    cum_present.resize(count);
    cum_absent.resize(count);
    double sp = 0.0, sa = 0.0;
    for (std::size_t v = 0; v < count; ++v) {
      sp += clone_pmf_index(1, v, cp);
      sa += clone_pmf_index(0, v, cp);
      cum_present[v] = sp;
      cum_absent[v] = sa;
    }
    if (std::abs(sp - 1.0) > 1e-9 || std::abs(sa - 1.0) > 1e-9)
      throw InvalidParameter("clone kernel: pmf does not normalize");
  }

  std::size_t sample(int source_bit, RngStream& rng) const {
    const auto& cum = source_bit ? cum_present : cum_absent;
    const double u = rng.uniform();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const std::size_t idx = static_cast<std::size_t>(it - cum.begin());
    return std::min(idx, cum.size() - 1);  // last bucket absorbs rounding
  }

  static int bit(std::size_t outcome, std::size_t clone, std::size_t t) {
    return static_cast<int>((outcome >> (t - 1 - clone)) & 1u);
  }
};

}  // namespace

std::vector<Graph> graph_clone(const Graph& g, const CloneParams& cp, RngStream& rng) {
  cp.validate();
  const CloneTables tables(cp);
  const std::size_t n = g.n();
  std::vector<Graph> clones(cp.t, Graph(n));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      const std::size_t outcome = tables.sample(g.edge(u, v) ? 1 : 0, rng);
      for (std::size_t c = 0; c < cp.t; ++c)
        if (CloneTables::bit(outcome, c, cp.t)) clones[c].set_edge(u, v, true);
    }
  return clones;
}

std::vector<BernoulliMatrix> bernoulli_matrix_clone(const BernoulliMatrix& m,
                                                    const CloneParams& cp, RngStream& rng) {
  cp.validate();
  const CloneTables tables(cp);
  const std::size_t n = m.n();
  std::vector<BernoulliMatrix> clones(cp.t, BernoulliMatrix(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t outcome = tables.sample(m(i, j), rng);
      for (std::size_t c = 0; c < cp.t; ++c)
        clones[c].set(i, j, CloneTables::bit(outcome, c, cp.t));
    }
  return clones;
}

double submatrix_target_density(double p, double q) {
  double dens = 1.0 - std::sqrt((1.0 - p) * (1.0 - q));
  if (p == 1.0) dens += std::sqrt(q) - 1.0;
  return dens;
}

double wishart_clone_density(double p, double q) {
  double dens = 1.0 - std::pow(1.0 - p, 5.0 / 6.0) * std::pow(1.0 - q, 1.0 / 6.0);
  if (p == 1.0) dens += std::pow(q, 1.0 / 6.0) - 1.0;
  return dens;
}

std::pair<BernoulliMatrix, SubmatrixEmbedding> to_bernoulli_submatrix(
    const Graph& g, double p, double q, std::size_t n_target, RngStream& rng) {
  const std::size_t n = g.n();
  if (!(q > 0.0 && q < p && p <= 1.0))
    throw InvalidParameter("to_bernoulli_submatrix: need 0 < q < p <= 1");
  const double q_prime = submatrix_target_density(p, q);
  // need N >= (p/Q' + eps) n for some eps > 0
  if (static_cast<double>(n_target) * q_prime <= p * static_cast<double>(n))
    throw InvalidParameter("to_bernoulli_submatrix: target dimension too small");

  CloneParams cp;
  cp.t = 2;
  cp.p = p;
  cp.q = q;
  cp.P = p;
  cp.Q = q_prime;
  std::vector<Graph> clones = graph_clone(g, cp, rng);

  const std::size_t s1 = binomial(n, p, rng);
  const std::size_t s2 = binomial(n_target, q_prime, rng);
  const std::vector<std::size_t> s = uniform_subset(n_target, n, rng);
  const std::vector<std::size_t> t1_ranks = uniform_subset(n, s1, rng);
  // |T2| = max{s2 - s1, 0}, clamped to the available off-block diagonal
  // slots; at p < 1 the excess event has positive probability at desk scale
  const std::size_t t2_size = std::min(s2 > s1 ? s2 - s1 : 0, n_target - n);

  std::vector<std::size_t> complement;
  complement.reserve(n_target - n);
  {
    std::vector<char> in_s(n_target, 0);
    for (std::size_t i : s) in_s[i] = 1;
    for (std::size_t i = 0; i < n_target; ++i)
      if (!in_s[i]) complement.push_back(i);
  }
  const std::vector<std::size_t> t2_ranks = uniform_subset(complement.size(), t2_size, rng);
  const std::vector<std::size_t> pi = uniform_permutation(n, rng);  // pi[a]: vertex at S[a]

  BernoulliMatrix m(n_target);
  std::vector<std::size_t> rank_in_s(n_target, n_target);
  for (std::size_t a = 0; a < s.size(); ++a) rank_in_s[s[a]] = a;

  // Bern(Q') fill outside the embedded block (off-diagonal)
  for (std::size_t i = 0; i < n_target; ++i)
    for (std::size_t j = 0; j < n_target; ++j) {
      if (i == j) continue;
      if (rank_in_s[i] < n && rank_in_s[j] < n) continue;
      m.set(i, j, rng.bernoulli(q_prime) ? 1 : 0);
    }
  // embedded block: upper triangle from clone 1, lower from clone 2
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const std::size_t i = s[a], j = s[b];
      const Graph& layer = i < j ? clones[0] : clones[1];
      m.set(i, j, layer.edge(pi[a], pi[b]) ? 1 : 0);
    }
  // planted diagonals
  for (std::size_t r : t1_ranks) m.set(s[r], s[r], 1);
  for (std::size_t r : t2_ranks) m.set(complement[r], complement[r], 1);

  SubmatrixEmbedding emb;
  emb.embedded_rows = s;
  emb.image.resize(n);
  for (std::size_t a = 0; a < n; ++a) emb.image[pi[a]] = s[a];
  return {std::move(m), std::move(emb)};
}

RkParams RkParams::for_dimension(double P, double Q, std::size_t n) {
  if (!(Q > 0.0 && Q < P && P <= 1.0))
    throw InvalidParameter("RkParams: need 0 < Q < P <= 1");
  if (n < 2) throw InvalidParameter("RkParams: ambient dimension >= 2 required");
  RkParams rk;
  rk.P = P;
  rk.Q = Q;
  rk.ambient_dim = n;
  // at P = 1 the second term is +inf, so delta = log(P/Q)
  const double d1 = std::log(P / Q);
  rk.delta = P == 1.0 ? d1 : std::min(d1, std::log((1.0 - Q) / (1.0 - P)));
  const double log_n = std::log(static_cast<double>(n));
  rk.iters = static_cast<std::size_t>(std::ceil(6.0 / rk.delta * log_n));
  if (rk.iters < 1) rk.iters = 1;
  rk.mu_cap = rk.delta / (2.0 * std::sqrt(6.0 * log_n + 2.0 * std::log(1.0 / (P - Q))));
  return rk;
}

double rk_gaussian(int b, double mu, const RkParams& rk, RngStream& rng,
                   PrimitiveDiagnostics* diag) {
  if (mu < 0.0) throw InvalidParameter("rk_gaussian: mu must be >= 0");
  const double log_pq = std::log(rk.P / rk.Q);
  const double log_1q1p = rk.P == 1.0 ? std::numeric_limits<double>::infinity()
                                      : std::log((1.0 - rk.Q) / (1.0 - rk.P));
  const double half_mu2 = 0.5 * mu * mu;
  for (std::size_t iter = 0; iter < rk.iters; ++iter) {
    const double z = rng.gaussian();
    if (b == 0) {
      // log(phi_mu / phi_0) at z
      const double w = mu * z - half_mu2;
      if (w <= log_pq) {
        const double accept = 1.0 - (rk.Q / rk.P) * std::exp(w);
        if (rng.uniform() < accept) return z;
      }
    } else {
      // log(phi_0 / phi_mu) at z + mu
      const double w = -mu * z - half_mu2;
      if (w <= log_1q1p) {
        const double accept =
            rk.P == 1.0 ? 1.0 : 1.0 - ((1.0 - rk.P) / (1.0 - rk.Q)) * std::exp(w);
        if (rng.uniform() < accept) return z + mu;
      }
    }
  }
  if (diag) ++diag->rk_exhaustions;
  return 0.0;  // exhaustion: keep the initialization value
}

RealMatrix gaussianize(const BernoulliMatrix& m, const RealMatrix& mu, const RkParams& rk,
                       RngStream& rng, ValidationMode mode, PrimitiveDiagnostics* diag) {
  const std::size_t n = m.n();
  if (mu.rows() != n || mu.cols() != n)
    throw InvalidParameter("gaussianize: mean matrix dimension mismatch");
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const double v = mu(a, b);
      if (v < 0.0) throw InvalidParameter("gaussianize: negative mean entry");
      if (v > rk.mu_cap) {
        if (mode == ValidationMode::strict)
          throw InvalidParameter("gaussianize: mean entry exceeds rejection-kernel cap");
        if (diag) ++diag->mu_cap_violations;
      }
    }
  RngStream base = rng.derive_child();
  RealMatrix x(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      RngStream entry = base.split(a * n + b);
      x(a, b) = rk_gaussian(m(a, b), mu(a, b), rk, entry, diag);
    }
  return x;
}

RealMatrix gaussianize_const(const BernoulliMatrix& m, double mu, const RkParams& rk,
                             RngStream& rng, ValidationMode mode,
                             PrimitiveDiagnostics* diag) {
  RealMatrix means(m.n(), m.n());
  for (std::size_t a = 0; a < m.n(); ++a)
    for (std::size_t b = 0; b < m.n(); ++b) means(a, b) = mu;
  return gaussianize(m, means, rk, rng, mode, diag);
}

RealMatrix chi2_random_rotation(const BernoulliMatrix& m, std::size_t k, double tau,
                                const RkParams& rk, RngStream& rng, ValidationMode mode,
                                PrimitiveDiagnostics* diag) {
  const std::size_t n = m.n();
  if (k == 0 || n % k != 0)
    throw InvalidParameter("chi2_random_rotation: k must divide the matrix dimension");
  if (tau < 0.0) throw InvalidParameter("chi2_random_rotation: tau must be >= 0");

  const std::size_t dof = n / k;
  const double r_cap = 2.0 * std::sqrt(static_cast<double>(dof));
  std::vector<double> r(n);
  for (std::size_t j = 0; j < n; ++j) {
    r[j] = std::sqrt(chi_squared(dof, rng));
    if (diag) ++diag->r_draws;
    if (r[j] > r_cap) {
      r[j] = r_cap;
      if (diag) ++diag->r_truncations;
    }
  }
  const double scale = 0.5 * tau * std::sqrt(static_cast<double>(k) / static_cast<double>(n));
  RealMatrix mu(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) mu(a, b) = scale * r[b];
  RealMatrix x = gaussianize(m, mu, rk, rng, mode, diag);
  RealMatrix rot = haar_frame(n, n, rng);
  return matmul(x, rot);
}

}  // namespace spca
