#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <vector>

#include "spca/errors.hpp"
#include "spca/matrix.hpp"
#include "spca/rng.hpp"
#include "spca/sampling.hpp"

using namespace spca;

TEST_CASE("rng determinism and portability") {
  RngStream a(42), b(42);
  // integer path pinned across platforms and runs
  CHECK(a.next_u64() == UINT64_C(0x57e1faba65107204));
  CHECK(a.next_u64() == UINT64_C(0xf4abd143feb24055));
  b.next_u64();
  b.next_u64();
  CHECK(a.gaussian() == b.gaussian());
  CHECK(a.uniform() == b.uniform());

  RngStream c(42), d(43);
  CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("rng split streams reproduce and decorrelate") {
  RngStream root(7);
  RngStream s1 = root.split(3);
  RngStream s2 = root.split(3);
  CHECK(s1.next_u64() == s2.next_u64());

  // covariance of paired gaussian outputs from sibling streams
  RngStream x = root.split(1), y = root.split(2);
  const std::size_t pairs = 100000;
  double sx = 0, sy = 0, sxy = 0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double gx = x.gaussian(), gy = y.gaussian();
    sx += gx;
    sy += gy;
    sxy += gx * gy;
  }
  const double n = static_cast<double>(pairs);
  const double cov = sxy / n - (sx / n) * (sy / n);
  CHECK(std::abs(cov) < 4.0 / std::sqrt(n));  // 4 standard errors of 0
}

TEST_CASE("gaussian moments") {
  RngStream rng(11);
  const std::size_t n = 1000000;
  double sum = 0, sumsq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.004);       // 4*SE at 1e6 draws
  CHECK(std::abs(var - 1.0) < 0.006);  // 4*SE of the variance
}

TEST_CASE("chi_squared") {
  RngStream bad(1);
  CHECK_THROWS_AS(chi_squared(0, bad), InvalidParameter);

  // dof = 1 equals the square of a single gaussian from the same state
  RngStream a(5), b(5);
  const double g = b.gaussian();
  CHECK(chi_squared(1, a) == g * g);

  RngStream rng(12);
  const std::size_t n = 100000;
  double sum = 0, sumsq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = chi_squared(10, rng);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean - 10.0) < 0.06);  // 4*SE, var = 2*dof
  CHECK(std::abs(var - 20.0) < 1.2);
}

TEST_CASE("haar_frame orthonormality") {
  RngStream rng(3);
  SUBCASE("square 3x3") {
    const RealMatrix r = haar_frame(3, 3, rng);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        double dot = 0;
        for (std::size_t t = 0; t < 3; ++t) dot += r(i, t) * r(j, t);
        CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-10);
      }
  }
  SUBCASE("rows of a 2x5 frame have unit norm") {
    const RealMatrix r = haar_frame(2, 5, rng);
    for (std::size_t i = 0; i < 2; ++i) {
      double norm2 = 0;
      for (std::size_t t = 0; t < 5; ++t) norm2 += r(i, t) * r(i, t);
      CHECK(std::abs(norm2 - 1.0) < 1e-12);
    }
  }
  SUBCASE("m > n rejected") { CHECK_THROWS_AS(haar_frame(4, 3, rng), InvalidParameter); }
  SUBCASE("large frame stays orthonormal") {
    const std::size_t m = 40, n = 2000;
    const RealMatrix r = haar_frame(m, n, rng);
    double max_err = 0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) {
        double dot = 0;
        for (std::size_t t = 0; t < n; ++t) dot += r(i, t) * r(j, t);
        max_err = std::max(max_err, std::abs(dot - (i == j ? 1.0 : 0.0)));
      }
    CHECK(max_err < 1e-10);
  }
}

TEST_CASE("haar_frame coordinate variance on the sphere") {
  // single row of length n: per-coordinate variance 1/n
  RngStream rng(17);
  const std::size_t n = 10000, frames = 1000;
  double sumsq = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    const RealMatrix r = haar_frame(1, n, rng);
    sumsq += r(0, 0) * r(0, 0) + r(0, 1) * r(0, 1);
  }
  const double var = sumsq / (2.0 * frames);
  // Var(x_1^2) ~ 2/n^2, SE over 2*frames coordinates
  const double se = std::sqrt(2.0) / (static_cast<double>(n) * std::sqrt(2.0 * frames));
  CHECK(std::abs(var - 1.0 / n) < 4.0 * se);
}

TEST_CASE("psd_sqrt") {
  SUBCASE("identity") {
    const SymmetricMatrix r = psd_sqrt(SymmetricMatrix::identity(4));
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = a; b < 4; ++b)
        CHECK(r(a, b) == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
  }
  SUBCASE("diagonal") {
    SymmetricMatrix s(2);
    s.set(0, 0, 4.0);
    s.set(1, 1, 9.0);
    const SymmetricMatrix r = psd_sqrt(s);
    CHECK(r(0, 0) == doctest::Approx(2.0));
    CHECK(r(1, 1) == doctest::Approx(3.0));
    CHECK(std::abs(r(0, 1)) < 1e-12);
  }
  SUBCASE("round trip on a random PSD matrix") {
    RngStream rng(9);
    const std::size_t d = 8;
    RealMatrix a(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) a(i, j) = rng.gaussian();
    SymmetricMatrix s(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) {
        double dot = 0;
        for (std::size_t t = 0; t < d; ++t) dot += a(i, t) * a(j, t);
        s.set(i, j, dot);
      }
    const SymmetricMatrix root = psd_sqrt(s);
    double max_err = 0, norm = 0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double dot = 0;
        for (std::size_t t = 0; t < d; ++t) dot += root(i, t) * root(t, j);
        max_err = std::max(max_err, std::abs(dot - s(i, j)));
        norm = std::max(norm, std::abs(s(i, j)));
      }
    CHECK(max_err < 1e-9 * std::max(norm, 1.0));
  }
  SUBCASE("negative eigenvalue rejected with value attached") {
    SymmetricMatrix s(2);
    s.set(0, 0, 1.0);
    s.set(1, 1, -1.0);
    try {
      psd_sqrt(s, 1e-8);
      CHECK(false);
    } catch (const NotPositiveSemidefinite& e) {
      CHECK(e.eigenvalue() == doctest::Approx(-1.0));
    }
  }
  SUBCASE("tiny negative eigenvalues clamp") {
    SymmetricMatrix s(2);
    s.set(0, 0, 1.0);
    s.set(1, 1, -1e-12);
    const PsdSqrtResult r = try_psd_sqrt(s, 1e-8);
    CHECK(r.psd);
    CHECK(r.clipped == 1);
    CHECK(r.root(1, 1) == 0.0);
  }
}

TEST_CASE("discrete samplers") {
  RngStream rng(2);
  SUBCASE("uniform_subset full set") {
    const auto s = uniform_subset(5, 5, rng);
    for (std::size_t i = 0; i < 5; ++i) CHECK(s[i] == i);
    CHECK_THROWS_AS(uniform_subset(3, 4, rng), InvalidParameter);
  }
  SUBCASE("uniform_permutation is a permutation") {
    const auto p = uniform_permutation(50, rng);
    std::vector<char> seen(50, 0);
    for (std::size_t v : p) seen[v] = 1;
    CHECK(std::accumulate(seen.begin(), seen.end(), 0) == 50);
  }
  SUBCASE("binomial degenerate and moments") {
    CHECK(binomial(100, 0.0, rng) == 0);
    CHECK(binomial(100, 1.0, rng) == 100);
    const std::size_t trials = 100000;
    double sum = 0;
    for (std::size_t i = 0; i < trials; ++i)
      sum += static_cast<double>(binomial(100, 0.3, rng));
    // SE = sqrt(100*0.3*0.7/trials)
    CHECK(std::abs(sum / trials - 30.0) < 0.06);
  }
}

TEST_CASE("matrix construction validates finiteness") {
  CHECK_THROWS_AS(RealMatrix(1, 2, {1.0, std::nan("")}), InvalidParameter);
  CHECK_THROWS_AS(RealMatrix(1, 2, {1.0}), InvalidParameter);
  const RealMatrix ok(2, 2, {1, 2, 3, 4});
  CHECK(ok(1, 0) == 3.0);
}

TEST_CASE("symmetric matrix mirrors storage") {
  SymmetricMatrix s(3);
  s.set(0, 2, 5.0);
  CHECK(s(2, 0) == 5.0);
  RealMatrix asym(2, 2, {1, 2, 3, 4});
  CHECK_THROWS_AS(SymmetricMatrix::from_dense(asym), InvalidParameter);
  const SymmetricMatrix sym = SymmetricMatrix::symmetrized(asym);
  CHECK(sym(0, 1) == 2.5);
}

TEST_CASE("rmx1 round trip is bit exact") {
  RngStream rng(4);
  RealMatrix m(3, 5);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) m(i, j) = rng.gaussian();
  std::stringstream buf;
  write_rmx(buf, m);
  const RealMatrix back = read_rmx(buf);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 5);
  CHECK(back.storage() == m.storage());
}

TEST_CASE("csv round trip is value exact") {
  RngStream rng(21);
  RealMatrix m(4, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = rng.gaussian();
  const std::string path = "/tmp/spca_test_matrix.csv";
  write_csv(path, m);
  const RealMatrix back = read_csv(path);
  REQUIRE(back.rows() == 4);
  REQUIRE(back.cols() == 3);
  CHECK(back.storage() == m.storage());  // %.17g round-trips doubles
  std::remove(path.c_str());
}

TEST_CASE("psd_sqrt handles condition number 1e8") {
  RngStream rng(22);
  const std::size_t d = 6;
  const RealMatrix q = haar_frame(d, d, rng);
  // eigenvalues log-spaced from 1 to 1e8
  std::vector<double> eig(d);
  for (std::size_t i = 0; i < d; ++i)
    eig[i] = std::pow(10.0, 8.0 * static_cast<double>(i) / (d - 1));
  SymmetricMatrix s(d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      double sum = 0;
      for (std::size_t t = 0; t < d; ++t) sum += q(t, a) * eig[t] * q(t, b);
      s.set(a, b, sum);
    }
  const SymmetricMatrix root = psd_sqrt(s);
  double frob_err = 0, frob = 0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      double dot = 0;
      for (std::size_t t = 0; t < d; ++t) dot += root(a, t) * root(t, b);
      frob_err += (dot - s(a, b)) * (dot - s(a, b));
      frob += s(a, b) * s(a, b);
    }
  CHECK(std::sqrt(frob_err / frob) < 1e-9);
}

TEST_CASE("rmx1 rejects malformed input") {
  std::stringstream bad_magic("XXXX\x01\x00");
  CHECK_THROWS_AS(read_rmx(bad_magic), IoError);
  RealMatrix m(2, 2, {1, 2, 3, 4});
  std::stringstream buf;
  write_rmx(buf, m);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 8);  // truncate the payload
  std::stringstream truncated(bytes);
  CHECK_THROWS_AS(read_rmx(truncated), IoError);
}

TEST_CASE("rmx1 round trip property over random shapes") {
  RngStream rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t r = 1 + rng.below(12), c = 1 + rng.below(12);
    RealMatrix m(r, c);
    for (std::size_t e = 0; e < m.size(); ++e)
      m.data()[e] = rng.gaussian() * std::pow(10.0, static_cast<double>(rng.below(7)) - 3.0);
    std::stringstream buf;
    write_rmx(buf, m);
    const RealMatrix back = read_rmx(buf);
    CHECK(back.rows() == r);
    CHECK(back.cols() == c);
    CHECK(back.storage() == m.storage());
  }
}

TEST_CASE("matmul against hand-computed product") {
  const RealMatrix a(2, 3, {1, 2, 3, 4, 5, 6});
  const RealMatrix b(3, 2, {7, 8, 9, 10, 11, 12});
  const RealMatrix c = matmul(a, b);
  CHECK(c(0, 0) == 58.0);
  CHECK(c(0, 1) == 64.0);
  CHECK(c(1, 0) == 139.0);
  CHECK(c(1, 1) == 154.0);
}
