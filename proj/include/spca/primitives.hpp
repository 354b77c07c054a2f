#ifndef SPCA_PRIMITIVES_HPP
#define SPCA_PRIMITIVES_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "spca/instances.hpp"
#include "spca/matrix.hpp"
#include "spca/rng.hpp"

namespace spca {

enum class ValidationMode { permissive, strict };

// Parameters of the per-entry cloning kernel mapping one Bern(p)/Bern(q)
// bit to t independent Bern(P)/Bern(Q) bits.
struct CloneParams {
  std::size_t t = 2;
  double p = 1.0, q = 0.5;  // source probabilities
  double P = 1.0, Q = 0.5;  // target probabilities
  // Throws unless 0 < q < p <= 1, 0 < Q < P <= 1,
  // (1-p)/(1-q) <= ((1-P)/(1-Q))^t and (P/Q)^t <= p/q (with a small
  // relative slack: the pipeline parameterizations satisfy these with
  // exact equality, which floating point only reproduces to rounding).
  void validate() const;
};

// Exact mass of the clone kernel at output vector v given the source bit.
double clone_pmf(int source_bit, const std::vector<int>& v, const CloneParams& cp);

// Internal index-coded version; outcomes ordered lexicographically with
// v_1 as the most significant bit. t <= 16 enforced.
double clone_pmf_index(int source_bit, std::size_t outcome, const CloneParams& cp);

std::vector<Graph> graph_clone(const Graph& g, const CloneParams& cp, RngStream& rng);

std::vector<BernoulliMatrix> bernoulli_matrix_clone(const BernoulliMatrix& m,
                                                    const CloneParams& cp, RngStream& rng);

// Target density of the submatrix embedding (two-way clone):
// Q' = 1 - sqrt((1-p)(1-q)) + 1_{p=1} (sqrt(q) - 1).
double submatrix_target_density(double p, double q);
// Target density of the three-way clone feeding the Wishart construction:
// Q = 1 - (1-p)^{5/6} (1-q)^{1/6} + 1_{p=1}(q^{1/6} - 1).
double wishart_clone_density(double p, double q);

struct SubmatrixEmbedding {
  // image[v] = output row hosting input vertex v
  std::vector<std::size_t> image;
  std::vector<std::size_t> embedded_rows;  // the set S, sorted
};

// Embeds the graph as a principal minor of an N x N Bernoulli matrix with
// planted diagonals: clone to (G1, G2) with targets (p, Q'), draw
// s1 ~ Bin(n, p), s2 ~ Bin(N, Q'), diagonal sets T1 (within the embedded
// block) and T2 (outside, size max{s2 - s1, 0}), fill the rest Bern(Q').
std::pair<BernoulliMatrix, SubmatrixEmbedding> to_bernoulli_submatrix(
    const Graph& g, double p, double q, std::size_t n_target, RngStream& rng);

// Rejection-kernel parameters bound to an ambient dimension N:
// delta = min{log(P/Q), log((1-Q)/(1-P))} (second term +inf at P = 1),
// iters = ceil(6 delta^-1 log N),
// mu_cap = delta / (2 sqrt(6 log N + 2 log (P-Q)^-1)).
struct RkParams {
  double P = 1.0, Q = 0.5;
  std::size_t ambient_dim = 2;
  double delta = 0.0;
  std::size_t iters = 1;
  double mu_cap = 0.0;

  static RkParams for_dimension(double P, double Q, std::size_t n);
};

struct PrimitiveDiagnostics {
  std::size_t rk_exhaustions = 0;
  std::size_t mu_cap_violations = 0;
  std::size_t r_truncations = 0;
  std::size_t r_draws = 0;
};

// Gaussian rejection kernel: accept/reject loop mapping a bit to a draw
// near N(mu*b, 1); returns 0 if all iterations are exhausted.
double rk_gaussian(int b, double mu, const RkParams& rk, RngStream& rng,
                   PrimitiveDiagnostics* diag = nullptr);

// Entrywise rejection kernel with inhomogeneous means: X_ab =
// rk_gaussian(M_ab, mu_ab). Entries mu_ab must lie in [0, mu_cap]; above
// the cap is a warning in permissive mode and an error in strict mode
// (negative means are always an error). Each entry draws from its own
// substream, so results do not depend on evaluation order.
RealMatrix gaussianize(const BernoulliMatrix& m, const RealMatrix& mu, const RkParams& rk,
                       RngStream& rng, ValidationMode mode = ValidationMode::permissive,
                       PrimitiveDiagnostics* diag = nullptr);

RealMatrix gaussianize_const(const BernoulliMatrix& m, double mu, const RkParams& rk,
                             RngStream& rng, ValidationMode mode = ValidationMode::permissive,
                             PrimitiveDiagnostics* diag = nullptr);

// chi^2 random rotation: draw r_j ~ sqrt(chi^2(N/k)) truncated at
// 2 sqrt(N/k), gaussianize with mu_ab = tau/2 * r_b * sqrt(k/N), then
// right-multiply by a Haar orthogonal matrix. Columns of the result are
// the samples. Requires k | N.
RealMatrix chi2_random_rotation(const BernoulliMatrix& m, std::size_t k, double tau,
                                const RkParams& rk, RngStream& rng,
                                ValidationMode mode = ValidationMode::permissive,
                                PrimitiveDiagnostics* diag = nullptr);

}  // namespace spca

#endif  // SPCA_PRIMITIVES_HPP
