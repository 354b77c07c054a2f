#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "spca/detectors.hpp"
#include "spca/errors.hpp"
#include "spca/instances.hpp"
#include "spca/rng.hpp"

using namespace spca;

TEST_CASE("er graph degenerate densities") {
  RngStream rng(1);
  const Graph empty = gen_er_graph(10, 0.0, rng);
  CHECK(empty.edge_count() == 0);
  const Graph full = gen_er_graph(10, 1.0, rng);
  CHECK(full.edge_count() == 45);
}

TEST_CASE("er graph edge count mean") {
  RngStream rng(2);
  const std::size_t trials = 10000;
  double sum = 0;
  for (std::size_t t = 0; t < trials; ++t)
    sum += static_cast<double>(gen_er_graph(50, 0.5, rng).edge_count());
  // mean C(50,2)/2 = 612.5, SE = sqrt(1225*0.25/trials)
  const double se = std::sqrt(1225.0 * 0.25 / trials);
  CHECK(std::abs(sum / trials - 612.5) < 4.0 * se);
}

TEST_CASE("pds plants a clique at p = 1") {
  RngStream rng(3);
  PdsParams prm{60, 10, 1.0, 0.5};
  auto [g, support] = gen_pds(prm, rng);
  REQUIRE(support.size() == 10);
  std::size_t within = 0;
  for (std::size_t a = 0; a < support.size(); ++a)
    for (std::size_t b = a + 1; b < support.size(); ++b)
      within += g.edge(support[a], support[b]) ? 1 : 0;
  CHECK(within == 45);

  PdsParams all{12, 12, 1.0, 0.5};
  auto [complete, s2] = gen_pds(all, rng);
  CHECK(complete.edge_count() == 66);
}

TEST_CASE("pds outside density stays at q") {
  RngStream rng(4);
  PdsParams prm{60, 10, 1.0, 0.5};
  const std::size_t trials = 2000;
  double outside_edges = 0;
  const double outside_pairs = (60.0 * 59.0 / 2.0) - 45.0;
  for (std::size_t t = 0; t < trials; ++t) {
    auto [g, support] = gen_pds(prm, rng);
    outside_edges += static_cast<double>(g.edge_count()) - 45.0;
  }
  const double density = outside_edges / (outside_pairs * trials);
  const double se = std::sqrt(0.25 / (outside_pairs * trials));
  CHECK(std::abs(density - 0.5) < 4.0 * se);
}

TEST_CASE("bernoulli submatrix block and background densities") {
  RngStream rng(5);
  SUBCASE("p = 1 on the block") {
    const BernoulliMatrix m = gen_bernoulli_submatrix(4, {0, 1}, 1.0, 0.5, rng);
    CHECK(m(0, 0) == 1);
    CHECK(m(0, 1) == 1);
    CHECK(m(1, 0) == 1);
    CHECK(m(1, 1) == 1);
  }
  SUBCASE("empty support means all Bern(q)") {
    const std::size_t trials = 200, n = 40;
    double ones = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const BernoulliMatrix m = gen_bernoulli_submatrix(n, {}, 1.0, 0.3, rng);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) ones += m(i, j);
    }
    const double total = static_cast<double>(trials) * n * n;
    CHECK(std::abs(ones / total - 0.3) < 4.0 * std::sqrt(0.21 / total));
  }
  SUBCASE("block mean vs rest mean") {
    const std::size_t trials = 2000, n = 40;
    std::vector<std::size_t> s{0, 1, 2, 3, 4};
    double block = 0, rest = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const BernoulliMatrix m = gen_bernoulli_submatrix(n, s, 0.9, 0.3, rng);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          (i < 5 && j < 5 ? block : rest) += m(i, j);
    }
    const double block_cells = 25.0 * trials, rest_cells = (1600.0 - 25.0) * trials;
    CHECK(std::abs(block / block_cells - 0.9) < 4.0 * std::sqrt(0.09 / block_cells));
    CHECK(std::abs(rest / rest_cells - 0.3) < 4.0 * std::sqrt(0.21 / rest_cells));
  }
}

TEST_CASE("spca generator") {
  SUBCASE("ubspca spike values are exactly 1/sqrt(k)") {
    RngStream rng(6);
    SpcaParams prm;
    prm.n = 10;
    prm.k = 4;
    prm.d = 12;
    prm.theta = 0.5;
    auto [x, spike] = gen_spca(prm, Hypothesis::h1, rng);
    REQUIRE(spike.has_value());
    REQUIRE(spike->support.size() == 4);
    for (double v : spike->values) CHECK(v == 0.5);  // 1/sqrt(4)
    CHECK(spike->theta_actual == 0.5);
  }
  SUBCASE("theta = 0 spike contributes nothing") {
    RngStream a(7);
    SpcaParams prm;
    prm.n = 2000;
    prm.k = 2;
    prm.d = 4;
    prm.theta = 0.0;
    auto [x, spike] = gen_spca(prm, Hypothesis::h1, a);
    const SymmetricMatrix cov = empirical_covariance(x);
    double max_off = 0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j)
        max_off = std::max(max_off, std::abs(cov(i, j)));
    CHECK(max_off < 5.0 / std::sqrt(2000.0));
  }
  SUBCASE("h1 covariance entry matches theta/k") {
    RngStream rng(8);
    SpcaParams prm;
    prm.n = 100000;
    prm.k = 2;
    prm.d = 4;
    prm.theta = 0.5;
    auto [x, spike] = gen_spca(prm, Hypothesis::h1, rng);
    const SymmetricMatrix cov = empirical_covariance(x);
    const std::size_t a = spike->support[0], b = spike->support[1];
    // E[cov_ab] = theta/k = 0.25; SE from Gaussian fourth moments
    const double se = std::sqrt((1.25 * 1.25 + 0.25 * 0.25) / 100000.0);
    CHECK(std::abs(cov(a, b) - 0.25) < 4.0 * se);
  }
  SUBCASE("cbspca draws stay inside the allowed sets") {
    RngStream rng(9);
    SpcaParams prm;
    prm.n = 5;
    prm.k = 9;
    prm.d = 30;
    prm.theta = 1.0;
    prm.gamma = 1.0;
    prm.variant = SpcaVariant::cbspca;
    for (int rep = 0; rep < 200; ++rep) {
      auto [x, spike] = gen_spca(prm, Hypothesis::h1, rng);
      CHECK(spike->theta_actual >= prm.theta * (1.0 - prm.gamma / 3.0) - 1e-12);
      CHECK(spike->theta_actual <= prm.theta * (1.0 + prm.gamma / 3.0) + 1e-12);
      CHECK(spike->support.size() >= 6);  // k - ceil(gamma sqrt k) = 9 - 3
      CHECK(spike->support.size() <= 9);
      double norm2 = 0;
      for (double v : spike->values) norm2 += v * v;
      CHECK(std::abs(norm2 - 1.0) < 1e-12);
    }
  }
  SUBCASE("fcspca magnitudes respect the floor") {
    RngStream rng(10);
    SpcaParams prm;
    prm.n = 5;
    prm.k = 9;
    prm.d = 30;
    prm.theta = 1.0;
    prm.gamma = 1.0;
    prm.variant = SpcaVariant::fcspca;
    bool saw_negative = false;
    for (int rep = 0; rep < 100; ++rep) {
      auto [x, spike] = gen_spca(prm, Hypothesis::h1, rng);
      for (double v : spike->values) {
        CHECK(std::abs(v) >= 1.0 / 3.0 - 1e-12);  // 1/sqrt(k)
        saw_negative = saw_negative || v < 0;
      }
    }
    CHECK(saw_negative);
  }
}

TEST_CASE("h1 covariance converges to I + theta' v v^T entrywise") {
  RngStream rng(30);
  SpcaParams prm;
  prm.n = 100000;
  prm.k = 3;
  prm.d = 8;
  prm.theta = 0.7;
  auto [x, spike] = gen_spca(prm, Hypothesis::h1, rng);
  SymmetricMatrix target = SymmetricMatrix::identity(8);
  for (std::size_t a = 0; a < spike->support.size(); ++a)
    for (std::size_t b = a; b < spike->support.size(); ++b)
      target.add(spike->support[a], spike->support[b],
                 spike->theta_actual * spike->values[a] * spike->values[b]);
  const SymmetricMatrix cov = empirical_covariance(x);
  double max_z = 0;
  for (std::size_t a = 0; a < 8; ++a)
    for (std::size_t b = a; b < 8; ++b) {
      const double se = std::sqrt(
          (target(a, a) * target(b, b) + target(a, b) * target(a, b)) / 100000.0);
      max_z = std::max(max_z, std::abs(cov(a, b) - target(a, b)) / se);
    }
  CHECK(max_z < 5.0);
}

TEST_CASE("goe moments and symmetry") {
  RngStream rng(11);
  const std::size_t trials = 100000;
  double diag_sq = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const SymmetricMatrix g = gen_goe(1, rng);
    diag_sq += g(0, 0) * g(0, 0);
  }
  // Var = 2, SE of the sample variance of N(0,2): 2*sqrt(2/trials)
  CHECK(std::abs(diag_sq / trials - 2.0) < 4.0 * 2.0 * std::sqrt(2.0 / trials));

  const SymmetricMatrix g = gen_goe(6, rng);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b) CHECK(g(a, b) == g(b, a));

  // entrywise variances match (A + A^T)/sqrt(2) of iid normals
  double off_sq = 0;
  for (std::size_t t = 0; t < trials / 10; ++t) {
    const SymmetricMatrix m = gen_goe(2, rng);
    off_sq += m(0, 1) * m(0, 1);
  }
  CHECK(std::abs(off_sq / (trials / 10) - 1.0) < 4.0 * std::sqrt(2.0 / (trials / 10)));
}

TEST_CASE("wishart") {
  RngStream rng(12);
  SUBCASE("d = 1 mean is n") {
    const std::size_t trials = 100000, n = 10;
    double sum = 0;
    for (std::size_t t = 0; t < trials; ++t)
      sum += gen_wishart(SymmetricMatrix::identity(1), n, rng)(0, 0);
    // chi^2(n): var = 2n
    CHECK(std::abs(sum / trials - 10.0) < 4.0 * std::sqrt(20.0 / trials));
  }
  SUBCASE("n = 1 gives a rank-1 matrix") {
    const SymmetricMatrix w = gen_wishart(SymmetricMatrix::identity(3), 1, rng);
    // all 2x2 minors vanish for an outer product
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = a + 1; b < 3; ++b) {
        const double det = w(a, a) * w(b, b) - w(a, b) * w(b, a);
        CHECK(std::abs(det) < 1e-9 * std::max(1.0, w(a, a) * w(b, b)));
      }
  }
  SUBCASE("mean n*Sigma for Sigma = I2") {
    const std::size_t trials = 10000, n = 100;
    double d0 = 0, off = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const SymmetricMatrix w = gen_wishart(SymmetricMatrix::identity(2), n, rng);
      d0 += w(0, 0);
      off += w(0, 1);
    }
    CHECK(std::abs(d0 / trials - 100.0) < 4.0 * std::sqrt(200.0 / trials));
    CHECK(std::abs(off / trials) < 4.0 * std::sqrt(100.0 / trials));
  }
}

TEST_CASE("gw covariance oracle values") {
  const std::vector<std::size_t> s{0, 1, 2};
  // a=b=c=e outside the support
  CHECK(gw_covariance(4, 4, 4, 4, s, 3, 0.6, 7.0) == 7.0);
  // a=c in S, b != e both in S: n*(1+theta/k)*(theta/k)
  CHECK(gw_covariance(0, 1, 0, 2, s, 3, 0.6, 5.0) == doctest::Approx(5.0 * 1.2 * 0.2));
  // disjoint off-support pairs are independent
  CHECK(gw_covariance(3, 4, 5, 6, s, 3, 0.6, 5.0) == 0.0);
}

TEST_CASE("gw indrep theta = 0 gives iid N(0, n) entries") {
  RngStream rng(13);
  const std::size_t draws = 20000;
  double sum = 0, sumsq = 0, cross = 0;
  for (std::size_t t = 0; t < draws; ++t) {
    const RealMatrix x = gw_sample_indrep(4.0, 3, {0}, 0.0, rng);
    sum += x(0, 0);
    sumsq += x(0, 0) * x(0, 0);
    cross += x(0, 1) * x(1, 0);
  }
  CHECK(std::abs(sum / draws) < 4.0 * std::sqrt(4.0 / draws));
  CHECK(std::abs(sumsq / draws - 4.0) < 4.0 * 4.0 * std::sqrt(2.0 / draws));
  CHECK(std::abs(cross / draws) < 4.0 * 4.0 / std::sqrt(draws));
}

TEST_CASE("graph text format round trip") {
  RngStream rng(14);
  const Graph g = gen_er_graph(20, 0.4, rng);
  const std::string path = "/tmp/spca_test_graph.txt";
  write_graph(path, g);
  const Graph back = read_graph(path);
  REQUIRE(back.n() == g.n());
  for (std::size_t u = 0; u < 20; ++u)
    for (std::size_t v = 0; v < 20; ++v) CHECK(back.edge(u, v) == g.edge(u, v));
  std::remove(path.c_str());
}

TEST_CASE("graph reader rejects malformed files") {
  const std::string path = "/tmp/spca_test_badgraph.txt";
  {
    std::ofstream f(path);
    f << "5 1\n9 2\n";  // vertex out of range
  }
  CHECK_THROWS_AS(read_graph(path), IoError);
  {
    std::ofstream f(path);
    f << "5 3\n1 2\n";  // truncated edge list
  }
  CHECK_THROWS_AS(read_graph(path), IoError);
  std::remove(path.c_str());
}

TEST_CASE("spike json round trip") {
  Spike s;
  s.support = {2, 5, 7};
  s.values = {0.5, 0.5, -0.5};
  s.theta_actual = 0.75;
  const Spike back = spike_from_json(spike_to_json(s));
  CHECK(back.support == s.support);
  CHECK(back.values == s.values);
  CHECK(back.theta_actual == s.theta_actual);
}

TEST_CASE("parameter validation") {
  PdsParams bad{10, 11, 1.0, 0.5};
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  PdsParams bad2{10, 2, 0.5, 0.5};
  CHECK_THROWS_AS(bad2.validate(), InvalidParameter);
  SpcaParams sp;
  sp.n = 10;
  sp.k = 5;
  sp.d = 4;
  sp.theta = 1.0;
  CHECK_THROWS_AS(sp.validate(), InvalidParameter);
}
