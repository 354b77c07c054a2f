#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "spca/detectors.hpp"
#include "spca/errors.hpp"
#include "spca/instances.hpp"
#include "spca/pipelines.hpp"
#include "spca/rng.hpp"
#include "spca/verify.hpp"

using namespace spca;

namespace {
CtwConfig small_ctw() {
  CtwConfig cfg;
  cfg.N = 16;
  cfg.k = 3;
  cfg.p = 1.0;
  cfg.q = 0.5;
  cfg.n = 4100;
  cfg.d = 32;
  cfg.epsilon = 0.1;
  cfg.theta = std::sqrt(9.0 / (4100.0 * std::log(16.0)));
  return cfg;
}
}  // namespace

TEST_CASE("ctw derived quantities") {
  CtwConfig cfg;
  cfg.N = 24;
  cfg.k = 3;
  cfg.p = 1.0;
  cfg.q = 0.5;
  cfg.n = 16000;
  cfg.d = 40;
  cfg.epsilon = 0.1;
  cfg.theta = 0.0133;
  CHECK(cfg.q_prime() == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-15));
  CHECK(cfg.q_clone() == doctest::Approx(std::pow(2.0, -1.0 / 6.0)).epsilon(1e-15));
  CHECK(cfg.m() == 39);
  CHECK(cfg.tau() == doctest::Approx(2.0 * std::sqrt(3.0 * 39 * 0.0133) / 3.0));
  CHECK(cfg.g_cap() == doctest::Approx(4.0 * std::sqrt(std::log(39.0))));
  CHECK(cfg.validate(ValidationMode::permissive).empty());
}

TEST_CASE("m is the smallest multiple of k strictly above the bound") {
  CtwConfig cfg = small_ctw();
  for (double eps : {0.05, 0.0857864376269049, 0.12, 0.2}) {
    cfg.epsilon = eps;
    const double x = (cfg.p / cfg.q_prime() + eps) * static_cast<double>(cfg.N);
    const std::size_t m = cfg.m();
    CHECK(m % cfg.k == 0);
    CHECK(static_cast<double>(m) > x);
    CHECK(static_cast<double>(m) <= x + static_cast<double>(cfg.k) + 1e-9);
  }
}

TEST_CASE("ctw validation") {
  CtwConfig cfg = small_ctw();
  SUBCASE("structural: d too small") {
    cfg.d = 20;
    CHECK_THROWS_AS(cfg.validate(ValidationMode::permissive), InvalidParameter);
  }
  SUBCASE("asymptotic hypotheses warn, strict promotes") {
    cfg.n = 4000;  // below N^3
    const auto warnings = cfg.validate(ValidationMode::permissive);
    CHECK(warnings.size() == 1);
    CHECK_THROWS_AS(cfg.validate(ValidationMode::strict), InvalidParameter);
  }
  SUBCASE("theta above the cap warns") {
    cfg.theta = 1.0;
    CHECK(cfg.validate(ValidationMode::permissive).size() == 1);
  }
  SUBCASE("n too small for a nonnegative latent mean") {
    cfg.n = 60;  // sqrt(30) < 4 sqrt(log 27)
    CHECK_THROWS_AS(cfg.validate(ValidationMode::permissive), InvalidParameter);
  }
}

TEST_CASE("srr validation") {
  SrrConfig cfg;
  cfg.N = 100;
  cfg.K = 10;
  cfg.k = 4;
  cfg.p = 1.0;
  cfg.q = 0.5;
  cfg.epsilon = 0.1;
  cfg.theta = 1e-5;
  cfg.d = cfg.n();
  CHECK(cfg.n() == 170);
  CHECK(cfg.n() % cfg.K == 0);
  SUBCASE("k <= K/2 is structural") {
    cfg.k = 6;
    CHECK_THROWS_AS(cfg.validate(ValidationMode::permissive), InvalidParameter);
  }
  SUBCASE("d >= n is structural") {
    cfg.d = 100;
    CHECK_THROWS_AS(cfg.validate(ValidationMode::permissive), InvalidParameter);
  }
  SUBCASE("tau above the kernel cap warns") {
    cfg.theta = 0.1;
    CHECK(!cfg.validate(ValidationMode::permissive).empty());
    CHECK_THROWS_AS(cfg.validate(ValidationMode::strict), InvalidParameter);
  }
}

TEST_CASE("inverse wishart sampling") {
  SUBCASE("n < m rejected") {
    RngStream rng(1);
    CHECK_THROWS_AS(inverse_wishart_sample(SymmetricMatrix::identity(4), 3, rng),
                    InvalidParameter);
  }
  SUBCASE("non-PSD input yields zeros and the flag") {
    RngStream rng(2);
    SymmetricMatrix bad(2);
    bad.set(0, 0, 1.0);
    bad.set(1, 1, -1.0);
    Instrumentation instr;
    const SampleSet y = inverse_wishart_sample(bad, 10, rng, &instr);
    CHECK(instr.sigma_not_psd);
    for (std::size_t e = 0; e < y.size(); ++e) CHECK(y.data()[e] == 0.0);
  }
  SUBCASE("m = 1 pooled coordinates are standard normal") {
    RngStream rng(3);
    std::vector<double> pooled;
    for (int rep = 0; rep < 400; ++rep) {
      RngStream r = rng.split(rep);
      const SymmetricMatrix se = gen_wishart(SymmetricMatrix::identity(1), 50, r);
      const SampleSet y = inverse_wishart_sample(se, 50, r);
      pooled.insert(pooled.end(), y.data(), y.data() + y.size());
    }
    const double ks =
        ks_statistic(std::move(pooled), [](double x) { return normal_cdf(x); });
    CHECK(ks < ks_critical(400 * 50, 0.01));
  }
  SUBCASE("exact gram identity Y Y^T = Sigma_e") {
    RngStream rng(4);
    const SymmetricMatrix se = gen_wishart(SymmetricMatrix::identity(3), 40, rng);
    const SampleSet y = inverse_wishart_sample(se, 40, rng);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = a; b < 3; ++b) {
        double dot = 0;
        for (std::size_t i = 0; i < 40; ++i) dot += y(a, i) * y(b, i);
        CHECK(dot == doctest::Approx(se(a, b)).epsilon(1e-9));
      }
  }
}

TEST_CASE("clique-to-wishart with theta = 0 matches the null") {
  CtwConfig cfg = small_ctw();
  cfg.theta = 0.0;
  RngStream rng(5);
  PdsParams pds{cfg.N, cfg.k, cfg.p, cfg.q};
  CovarianceAccumulator acc;
  for (int run = 0; run < 8; ++run) {
    RngStream r = rng.split(run);
    auto [g, support] = gen_pds(pds, r);
    auto [z, instr] = clique_to_wishart(g, cfg, r, &support);
    CHECK(instr.stage_support("output")->size() == cfg.k);
    acc.add(z);
  }
  const CovDeviation dev =
      covariance_deviation(acc.mean(), SymmetricMatrix::identity(cfg.d), acc.columns());
  CHECK(dev.max_z < 6.0);
}

TEST_CASE("ctw memory budget guard") {
  CtwConfig cfg = small_ctw();
  cfg.n = 10000000;
  cfg.d = 100;
  RngStream rng(6);
  const Graph g = gen_er_graph(cfg.N, cfg.q, rng);
  CHECK_THROWS_AS(clique_to_wishart(g, cfg, rng), InvalidParameter);
}

TEST_CASE("subsampling pipeline structure") {
  SrrConfig cfg;
  cfg.N = 40;
  cfg.K = 6;
  cfg.k = 3;
  cfg.p = 1.0;
  cfg.q = 0.5;
  cfg.epsilon = 0.1;
  cfg.d = cfg.n();
  const RkParams rk = RkParams::for_dimension(cfg.p, cfg.q_target(), cfg.n());
  cfg.theta = rk.mu_cap * rk.mu_cap * cfg.K * cfg.k / (4.0 * cfg.n());
  PdsParams pds{cfg.N, cfg.K, cfg.p, cfg.q};

  RngStream rng(7);
  double t_sum = 0, t_sq = 0;
  const int runs = 3000;
  for (int run = 0; run < runs; ++run) {
    RngStream r = rng.split(run);
    auto [g, support] = gen_pds(pds, r);
    auto [y, instr] = subsampling_random_rotations(g, cfg, r, &support);
    REQUIRE(instr.stage_support("output") != nullptr);
    const double t = static_cast<double>(instr.stage_support("output")->size());
    CHECK(t <= cfg.K);
    t_sum += t;
    t_sq += t * t;
  }
  // |T| ~ Bin(K, k/K): mean k, variance k(1 - k/K)
  const double mean = t_sum / runs;
  const double var = t_sq / runs - mean * mean;
  const double target_var = 3.0 * 0.5;
  CHECK(std::abs(mean - 3.0) < 4.0 * std::sqrt(target_var / runs));
  CHECK(std::abs(var - target_var) < 4.0 * target_var * std::sqrt(2.0 / runs));
}

TEST_CASE("srr determinism") {
  SrrConfig cfg;
  cfg.N = 40;
  cfg.K = 6;
  cfg.k = 3;
  cfg.p = 1.0;
  cfg.q = 0.5;
  cfg.epsilon = 0.1;
  cfg.d = cfg.n();
  cfg.theta = 1e-6;
  RngStream a(8), b(8);
  const Graph g1 = gen_er_graph(cfg.N, cfg.q, a);
  const Graph g2 = gen_er_graph(cfg.N, cfg.q, b);
  auto [y1, i1] = subsampling_random_rotations(g1, cfg, a);
  auto [y2, i2] = subsampling_random_rotations(g2, cfg, b);
  CHECK(y1.storage() == y2.storage());
}

TEST_CASE("one cloning step maps H0 to H0") {
  RngStream rng(14);
  SpcaParams prm;
  prm.n = 100000;
  prm.k = 1;
  prm.d = 3;
  prm.theta = 0.0;
  auto [x, none] = gen_spca(prm, Hypothesis::h0, rng);
  const SampleSet y = sparsity_clone_step(x, rng);
  const CovDeviation dev =
      covariance_deviation(y, SymmetricMatrix::identity(6));
  CHECK(dev.max_z < 5.0);
}

TEST_CASE("sparsity cloning") {
  SUBCASE("one step reconstructs the input") {
    RngStream rng(9);
    SampleSet x(3, 20);
    for (std::size_t e = 0; e < x.size(); ++e) x.data()[e] = rng.gaussian();
    RngStream step(10);
    const SampleSet y = sparsity_clone_step(x, step);
    REQUIRE(y.rows() == 6);
    const double inv_root2 = 1.0 / std::sqrt(2.0);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t i = 0; i < 20; ++i) {
        const double rebuilt = (y(a, i) + y(3 + a, i)) * inv_root2;
        CHECK(std::abs(rebuilt - x(a, i)) < 1e-12);
      }
  }
  SUBCASE("ell = 0 permutes coordinates only") {
    RngStream rng(11);
    SampleSet x(4, 10);
    for (std::size_t e = 0; e < x.size(); ++e) x.data()[e] = rng.gaussian();
    std::vector<std::size_t> support{1, 2};
    auto [y, instr] = sparsity_cloning(x, 0, rng, &support);
    REQUIRE(y.rows() == 4);
    const auto* out = instr.stage_support("output");
    REQUIRE(out != nullptr);
    CHECK(out->size() == 2);
    // every input row appears verbatim somewhere in the output
    for (std::size_t a = 0; a < 4; ++a) {
      bool found = false;
      for (std::size_t b = 0; b < 4 && !found; ++b) {
        bool same = true;
        for (std::size_t i = 0; i < 10; ++i) same = same && y(b, i) == x(a, i);
        found = same;
      }
      CHECK(found);
    }
  }
  SUBCASE("support doubles per step") {
    RngStream rng(12);
    SampleSet x(4, 5);
    std::vector<std::size_t> support{0, 3};
    auto [y, instr] = sparsity_cloning(x, 2, rng, &support);
    CHECK(y.rows() == 16);
    CHECK(instr.stage_support("output")->size() == 8);
  }
  SUBCASE("budget guard") {
    RngStream rng(13);
    SampleSet x(4, 5);
    CHECK_THROWS_AS(sparsity_cloning(x, 40, rng), InvalidParameter);
  }
}

TEST_CASE("config file parsing") {
  const std::string path = "/tmp/spca_test_cfg.txt";
  {
    std::ofstream f(path);
    f << "# ctw config\nN=24\nk=3\np=1.0\nq=0.5\nn=16000\nd=40\n"
      << "theta=0.0133\nepsilon=0.1\nseed=7\n";
  }
  const auto kv = parse_kv_file(path);
  CHECK(kv.at("seed") == "7");
  const CtwConfig cfg = ctw_config_from_kv(kv);
  CHECK(cfg.N == 24);
  CHECK(cfg.m() == 39);
  std::remove(path.c_str());
}

TEST_CASE("instrumentation json shape") {
  Instrumentation instr;
  instr.supports.push_back({"input", {0, 2}});
  instr.latent_g = 0.5;
  instr.embedded_rows = {1, 3};
  const std::string j = instr.to_json();
  CHECK(j.find("\"stages\"") != std::string::npos);
  CHECK(j.find("\"latent_g\"") != std::string::npos);
  // 1-indexed on disk
  CHECK(j.find("3") != std::string::npos);
}
