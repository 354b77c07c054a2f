#ifndef SPCA_PIPELINES_HPP
#define SPCA_PIPELINES_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spca/instances.hpp"
#include "spca/matrix.hpp"
#include "spca/primitives.hpp"
#include "spca/rng.hpp"

namespace spca {

// Clique-to-Wishart configuration. Derived quantities follow the
// reduction's definitions: Q' and Q clone densities, m the smallest
// multiple of k strictly larger than (p/Q' + eps) N, tau = 2 sqrt(3 m
// theta)/k and the cap 4 sqrt(log m) on the latent scalar g.
struct CtwConfig {
  std::size_t N = 0, k = 0;
  double p = 1.0, q = 0.5;
  std::size_t n = 0, d = 0;
  double theta = 0.0;
  double epsilon = 0.1;
  double theta_slack_c = 1.0;  // c in theta <= c sqrt(k^2/(n log N))

  double q_prime() const { return submatrix_target_density(p, q); }
  double q_clone() const { return wishart_clone_density(p, q); }
  std::size_t m() const;
  double tau() const;
  double g_cap() const;

  // Structural violations always throw InvalidParameter; asymptotic
  // hypotheses (n >= N^3, theta cap) throw only in strict mode and are
  // returned as warning strings otherwise.
  std::vector<std::string> validate(ValidationMode mode) const;
};

// Subsampling-Random-Rotations configuration; n is derived as the
// smallest multiple of K strictly larger than (p/Q + eps) N + K.
struct SrrConfig {
  std::size_t N = 0, K = 0;
  double p = 1.0, q = 0.5;
  std::size_t d = 0, k = 0;
  double theta = 0.0;
  double epsilon = 0.1;
  double theta_slack_c = 1.0;

  double q_target() const { return submatrix_target_density(p, q); }
  std::size_t n() const;
  double tau() const;

  std::vector<std::string> validate(ValidationMode mode) const;
};

struct StageSupport {
  std::string stage;
  std::vector<std::size_t> support;
};

// Test-only side channel recording planted supports and latent variables
// through a pipeline run; populated only when the caller supplies the
// planted support of the input instance.
struct Instrumentation {
  std::vector<StageSupport> supports;
  double latent_g = 0.0;
  std::vector<std::size_t> embedded_rows;
  std::size_t rk_exhaustions = 0;
  std::size_t psd_clip_count = 0;
  bool sigma_not_psd = false;
  std::size_t mu_cap_violations = 0;
  std::size_t r_truncations = 0;
  std::vector<std::string> warnings;

  const std::vector<std::size_t>* stage_support(const std::string& stage) const;
  std::string to_json() const;
};

// Inverse Wishart sampling: psd_sqrt(Sigma_e) times an m x n Haar frame;
// a non-PSD Sigma_e yields the zero matrix and sets sigma_not_psd.
SampleSet inverse_wishart_sample(const SymmetricMatrix& sigma_e, std::size_t n,
                                 RngStream& rng, Instrumentation* instr = nullptr);

std::pair<SampleSet, Instrumentation> clique_to_wishart(
    const Graph& g, const CtwConfig& cfg, RngStream& rng,
    const std::vector<std::size_t>* planted_support = nullptr,
    ValidationMode mode = ValidationMode::permissive);

std::pair<SampleSet, Instrumentation> subsampling_random_rotations(
    const Graph& g, const SrrConfig& cfg, RngStream& rng,
    const std::vector<std::size_t>* planted_support = nullptr,
    ValidationMode mode = ValidationMode::permissive);

// One sparsity-cloning step: per sample, output ((X+G)/sqrt2, (X-G)/sqrt2)
// with fresh G ~ N(0, I_d); doubles the dimension.
SampleSet sparsity_clone_step(const SampleSet& samples, RngStream& rng);

// ell cloning steps followed by a uniform coordinate permutation.
std::pair<SampleSet, Instrumentation> sparsity_cloning(
    const SampleSet& samples, std::size_t ell, RngStream& rng,
    const std::vector<std::size_t>* support = nullptr,
    std::size_t max_entries = 200000000);

// Flat key=value config text (lines "key=value", '#' comments).
std::map<std::string, std::string> parse_kv_file(const std::string& path);
CtwConfig ctw_config_from_kv(const std::map<std::string, std::string>& kv);
SrrConfig srr_config_from_kv(const std::map<std::string, std::string>& kv);

}  // namespace spca

#endif  // SPCA_PIPELINES_HPP
