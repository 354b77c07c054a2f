#include "spca/sampling.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "spca/errors.hpp"

namespace spca {

double chi_squared(std::size_t dof, RngStream& rng) {
  if (dof < 1) throw InvalidParameter("chi_squared: dof must be >= 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < dof; ++i) {
    const double g = rng.gaussian();
    sum += g * g;
  }
  return sum;
}

RealMatrix haar_frame(std::size_t m, std::size_t n, RngStream& rng) {
  if (m > n) throw InvalidParameter("haar_frame: need m <= n");
  constexpr double kPivotTol = 1e-12;
  RealMatrix frame(m, n);
  using Vec = Eigen::Map<Eigen::VectorXd>;
  for (std::size_t i = 0; i < m; ++i) {
    Vec ri(frame.row(i), static_cast<Eigen::Index>(n));
    for (;;) {
      for (std::size_t j = 0; j < n; ++j) frame(i, j) = rng.gaussian();
      // two orthogonalization passes for stability at large n
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < i; ++j) {
          Vec rj(frame.row(j), static_cast<Eigen::Index>(n));
          ri -= ri.dot(rj) * rj;
        }
      }
      const double norm = ri.norm();
      if (norm >= kPivotTol) {
        ri /= norm;
        break;
      }
      // rank-deficient draw; resample this row
    }
  }
  return frame;
}

double default_psd_tol(const SymmetricMatrix& s) {
  Eigen::MatrixXd dense = Eigen::Map<const Eigen::Matrix<
      double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      s.to_dense().data(), static_cast<Eigen::Index>(s.dim()),
      static_cast<Eigen::Index>(s.dim()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double norm2 = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return 1e-8 * norm2;
}

PsdSqrtResult try_psd_sqrt(const SymmetricMatrix& s, double tol) {
  const std::size_t d = s.dim();
  RealMatrix dense = s.to_dense();
  Eigen::MatrixXd a = Eigen::Map<const Eigen::Matrix<
      double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      dense.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw InvalidParameter("psd_sqrt: eigendecomposition failed");

  PsdSqrtResult result;
  Eigen::VectorXd ev = es.eigenvalues();
  result.min_eigenvalue = ev(0);
  if (ev(0) < -tol) {
    result.psd = false;
    return result;
  }
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0) {
      ev(i) = 0.0;
      ++result.clipped;
    }
  }
  Eigen::MatrixXd root =
      es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  SymmetricMatrix out(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j)
      out.set(i, j, 0.5 * (root(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +
                           root(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i))));
  result.root = out;
  result.psd = true;
  return result;
}

SymmetricMatrix psd_sqrt(const SymmetricMatrix& s, double tol) {
  PsdSqrtResult r = try_psd_sqrt(s, tol);
  if (!r.psd)
    throw NotPositiveSemidefinite("psd_sqrt: eigenvalue below -tol", r.min_eigenvalue);
  return r.root;
}

SymmetricMatrix psd_sqrt(const SymmetricMatrix& s) {
  return psd_sqrt(s, default_psd_tol(s));
}

std::vector<std::size_t> uniform_subset(std::size_t n, std::size_t k, RngStream& rng) {
  if (k > n) throw InvalidParameter("uniform_subset: k > n");
  // partial Fisher-Yates on an index vector
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> uniform_permutation(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

std::size_t binomial(std::size_t n, double p, RngStream& rng) {
  if (p < 0.0 || p > 1.0) throw InvalidParameter("binomial: p outside [0, 1]");
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += rng.bernoulli(p) ? 1 : 0;
  return count;
}

}  // namespace spca
