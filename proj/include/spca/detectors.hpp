#ifndef SPCA_DETECTORS_HPP
#define SPCA_DETECTORS_HPP

#include <cstddef>

#include "spca/instances.hpp"
#include "spca/matrix.hpp"

namespace spca {

// (1/n) sum_i X_i X_i^T, symmetrized exactly.
SymmetricMatrix empirical_covariance(const SampleSet& samples);

double lambda_max(const SymmetricMatrix& s);

struct DetectionResult {
  double statistic = 0.0;
  double threshold = 0.0;
  bool decide_h1 = false;  // decision = H1 iff statistic > threshold
};

// statistic = lambda_max(empirical covariance)
DetectionResult spca_spectral_test(const SampleSet& samples, double threshold);

// statistic = 1^T (Sigma_hat - I) 1 / d; sensitive to the biased spike
double spca_sum_test(const SampleSet& samples);
DetectionResult spca_sum_test(const SampleSet& samples, double threshold);

// max over all size-k index sets of lambda_max of the covariance minor;
// exhaustive enumeration, throws BudgetExceeded if C(d, k) > budget.
double spca_k_sparse_eigenvalue(const SampleSet& samples, std::size_t k,
                                std::size_t budget);

// Edge-count z-score against Bin(C(n,2), q). With clique_hint > 0 the
// threshold is placed midway between the null mean and the planted-clique
// alternative mean (the sum-of-errors-minimizing point for the count
// statistic); otherwise it is the one-sided normal quantile at `level`.
// two_sided tests |z| against the level/2 quantile.
DetectionResult clique_edge_test(const Graph& g, double q, double level,
                                 std::size_t clique_hint = 0, bool two_sided = false);

// Max-degree z-score against Bin(n-1, q); threshold is the normal
// quantile at level/n (union bound over vertices).
DetectionResult clique_max_degree_test(const Graph& g, double q, double level);

double normal_cdf(double x);
double normal_quantile(double prob);
double chi_squared_quantile(double prob, std::size_t dof);

}  // namespace spca

#endif  // SPCA_DETECTORS_HPP
