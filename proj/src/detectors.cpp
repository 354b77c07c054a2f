#include "spca/detectors.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "spca/errors.hpp"

namespace spca {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd dense_eigen(const SymmetricMatrix& s) {
  const RealMatrix d = s.to_dense();
  return Eigen::Map<const EigenRowMajor>(d.data(), static_cast<Eigen::Index>(d.rows()),
                                         static_cast<Eigen::Index>(d.cols()));
}

// Covariance with per-entry sorted-product accumulation: the addend
// multiset per entry does not depend on sample order, so detector
// statistics are bit-identical under column permutations.
SymmetricMatrix canonical_covariance(const SampleSet& samples) {
  if (samples.cols() < 1) throw InvalidParameter("canonical_covariance: need n >= 1");
  const std::size_t d = samples.rows(), n = samples.cols();
  SymmetricMatrix sigma(d);
  std::vector<double> products(n);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      for (std::size_t i = 0; i < n; ++i) products[i] = samples(a, i) * samples(b, i);
      std::sort(products.begin(), products.end());
      double sum = 0.0;
      for (double p : products) sum += p;
      sigma.set(a, b, sum / static_cast<double>(n));
    }
  return sigma;
}

}  // namespace

SymmetricMatrix empirical_covariance(const SampleSet& samples) {
  if (samples.cols() < 1) throw InvalidParameter("empirical_covariance: need n >= 1");
  const auto x = Eigen::Map<const EigenRowMajor>(
      samples.data(), static_cast<Eigen::Index>(samples.rows()),
      static_cast<Eigen::Index>(samples.cols()));
  Eigen::MatrixXd prod = (x * x.transpose()) / static_cast<double>(samples.cols());
  SymmetricMatrix sigma(samples.rows());
  for (std::size_t a = 0; a < samples.rows(); ++a)
    for (std::size_t b = a; b < samples.rows(); ++b)
      sigma.set(a, b, 0.5 * (prod(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +
                             prod(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a))));
  return sigma;
}

double lambda_max(const SymmetricMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_eigen(s), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

DetectionResult spca_spectral_test(const SampleSet& samples, double threshold) {
  DetectionResult r;
  r.statistic = lambda_max(canonical_covariance(samples));
  r.threshold = threshold;
  r.decide_h1 = r.statistic > r.threshold;
  return r;
}

double spca_sum_test(const SampleSet& samples) {
  const SymmetricMatrix sigma = canonical_covariance(samples);
  const std::size_t d = sigma.dim();
  // sorted accumulation over entries keeps the statistic exactly invariant
  // under coordinate permutations as well
  std::vector<double> addends;
  addends.reserve(d * (d + 1) / 2);
  for (std::size_t a = 0; a < d; ++a) {
    addends.push_back(sigma(a, a) - 1.0);
    for (std::size_t b = a + 1; b < d; ++b) addends.push_back(2.0 * sigma(a, b));
  }
  std::sort(addends.begin(), addends.end());
  double sum = 0.0;
  for (double v : addends) sum += v;
  return sum / static_cast<double>(d);
}

DetectionResult spca_sum_test(const SampleSet& samples, double threshold) {
  DetectionResult r;
  r.statistic = spca_sum_test(samples);
  r.threshold = threshold;
  r.decide_h1 = r.statistic > r.threshold;
  return r;
}

namespace {

std::size_t binomial_coefficient_capped(std::size_t n, std::size_t k, std::size_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    if (c > cap) return cap + 1;  // avoid overflow; caller only compares to cap
    c = c * (n - k + i) / i;
  }
  return c;
}

}  // namespace

double spca_k_sparse_eigenvalue(const SampleSet& samples, std::size_t k,
                                std::size_t budget) {
  const std::size_t d = samples.rows();
  if (k < 1 || k > d) throw InvalidParameter("spca_k_sparse_eigenvalue: need 1 <= k <= d");
  if (binomial_coefficient_capped(d, k, budget) > budget)
    throw BudgetExceeded("spca_k_sparse_eigenvalue: C(d, k) exceeds the budget");
  const Eigen::MatrixXd sigma = dense_eigen(canonical_covariance(samples));

  std::vector<std::size_t> comb(k);
  for (std::size_t i = 0; i < k; ++i) comb[i] = i;
  double best = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd minor(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (;;) {
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        minor(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            sigma(static_cast<Eigen::Index>(comb[a]), static_cast<Eigen::Index>(comb[b]));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(minor, Eigen::EigenvaluesOnly);
    best = std::max(best, es.eigenvalues()(static_cast<Eigen::Index>(k) - 1));
    // next combination in lexicographic order
    std::size_t i = k;
    while (i > 0 && comb[i - 1] == d - k + i - 1) --i;
    if (i == 0) break;
    ++comb[i - 1];
    for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
  return best;
}

DetectionResult clique_edge_test(const Graph& g, double q, double level,
                                 std::size_t clique_hint, bool two_sided) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("clique_edge_test: need 0 < q < 1");
  const double n = static_cast<double>(g.n());
  const double pairs = n * (n - 1.0) / 2.0;
  const double mean = pairs * q;
  const double sd = std::sqrt(pairs * q * (1.0 - q));
  const double z = (static_cast<double>(g.edge_count()) - mean) / sd;

  DetectionResult r;
  if (two_sided) {
    r.statistic = std::abs(z);
    r.threshold = normal_quantile(1.0 - level / 2.0);
  } else {
    r.statistic = z;
    if (clique_hint > 1) {
      const double kh = static_cast<double>(clique_hint);
      const double excess = kh * (kh - 1.0) / 2.0 * (1.0 - q);
      r.threshold = 0.5 * excess / sd;
    } else {
      r.threshold = normal_quantile(1.0 - level);
    }
  }
  r.decide_h1 = r.statistic > r.threshold;
  return r;
}

DetectionResult clique_max_degree_test(const Graph& g, double q, double level) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("clique_max_degree_test: need 0 < q < 1");
  const double n = static_cast<double>(g.n());
  const double mean = (n - 1.0) * q;
  const double sd = std::sqrt((n - 1.0) * q * (1.0 - q));
  double max_z = -std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < g.n(); ++u)
    max_z = std::max(max_z, (static_cast<double>(g.degree(u)) - mean) / sd);
  DetectionResult r;
  r.statistic = max_z;
  r.threshold = normal_quantile(1.0 - level / n);  // union bound over vertices
  r.decide_h1 = r.statistic > r.threshold;
  return r;
}

double normal_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<>(), x); }

double normal_quantile(double prob) {
  return boost::math::quantile(boost::math::normal_distribution<>(), prob);
}

double chi_squared_quantile(double prob, std::size_t dof) {
  if (dof == 0) return 0.0;
  return boost::math::quantile(boost::math::chi_squared_distribution<>(
                                   static_cast<double>(dof)),
                               prob);
}

}  // namespace spca
