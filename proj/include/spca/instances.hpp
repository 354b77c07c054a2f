#ifndef SPCA_INSTANCES_HPP
#define SPCA_INSTANCES_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spca/matrix.hpp"
#include "spca/rng.hpp"

namespace spca {

// Simple graph on n vertices: dense symmetric bit matrix, zero diagonal.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t n) : n_(n), adj_(n * n, 0) {}

  std::size_t n() const { return n_; }
  bool edge(std::size_t u, std::size_t v) const { return adj_[u * n_ + v] != 0; }
  void set_edge(std::size_t u, std::size_t v, bool present);
  std::size_t edge_count() const;
  std::size_t degree(std::size_t u) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> adj_;
};

// Graph text format: first line "n m", then m lines "u v" (1-indexed).
void write_graph(const std::string& path, const Graph& g);
Graph read_graph(const std::string& path);

// General n x n binary matrix (diagonal included, not symmetric).
class BernoulliMatrix {
 public:
  BernoulliMatrix() = default;
  explicit BernoulliMatrix(std::size_t n) : n_(n), bits_(n * n, 0) {}

  std::size_t n() const { return n_; }
  int operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, int bit) { bits_[i * n_ + j] = bit ? 1 : 0; }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct PdsParams {
  std::size_t n = 0;
  std::size_t k = 0;
  double p = 1.0;
  double q = 0.5;
  void validate() const;  // 0 < q < p <= 1, 1 <= k <= n
};

enum class SpcaVariant { ubspca, cbspca, fcspca };

SpcaVariant spca_variant_from_string(const std::string& name);
std::string to_string(SpcaVariant v);

struct SpcaParams {
  std::size_t n = 0;  // samples
  std::size_t k = 0;  // sparsity
  std::size_t d = 0;  // dimension
  double theta = 0.0;
  SpcaVariant variant = SpcaVariant::ubspca;
  double gamma = 1.0;  // slack parameter for the composite variants
  void validate() const;
};

// Planted spike: support indices (0-based), values on the support, and the
// signal strength actually drawn.
struct Spike {
  std::vector<std::size_t> support;
  std::vector<double> values;
  double theta_actual = 0.0;
};

// Spike serialized as {"support":[...],"values":[...],"theta":x}; support
// 1-indexed on disk.
std::string spike_to_json(const Spike& s);
Spike spike_from_json(const std::string& text);

enum class Hypothesis { h0, h1 };

Graph gen_er_graph(std::size_t n, double q, RngStream& rng);

// Planted dense subgraph G(n, k, p, q); also returns the planted support.
std::pair<Graph, std::vector<std::size_t>> gen_pds(const PdsParams& params, RngStream& rng);

// M_ij ~ Bern(p) if i, j in S, Bern(q) otherwise (diagonal included).
BernoulliMatrix gen_bernoulli_submatrix(std::size_t n, const std::vector<std::size_t>& s,
                                        double p, double q, RngStream& rng);

// Spiked covariance samples. H1 columns are sqrt(theta') * g_i * v plus an
// independent standard normal column, which matches N(0, I + theta' vv^T).
std::pair<SampleSet, std::optional<Spike>> gen_spca(const SpcaParams& params,
                                                    Hypothesis hyp, RngStream& rng);

// GOE(d): symmetric, diagonal N(0, 2), off-diagonal N(0, 1).
SymmetricMatrix gen_goe(std::size_t d, RngStream& rng);

// Wishart W_n(Sigma, d): sum of n outer products of N(0, Sigma) columns.
SymmetricMatrix gen_wishart(const SymmetricMatrix& sigma, std::size_t n, RngStream& rng);

// Exact covariance oracle for the jointly-Gaussian planted Wishart
// fluctuation model: E[X_ab X_ce] =
//   n * (1_{a=c} + (theta/k) 1_{a,c in S}) (1_{b=e} + (theta/k) 1_{b,e in S}).
double gw_covariance(std::size_t a, std::size_t b, std::size_t c, std::size_t e,
                     const std::vector<std::size_t>& s, std::size_t k, double theta,
                     double n);

// Independent-sum representation of the same law:
// X = sqrt(n) (W + sqrt(theta) v_S w1^T + sqrt(theta) w2 v_S^T + theta g v_S v_S^T).
RealMatrix gw_sample_indrep(double n, std::size_t d, const std::vector<std::size_t>& s,
                            double theta, RngStream& rng);

}  // namespace spca

#endif  // SPCA_INSTANCES_HPP
