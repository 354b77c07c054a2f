#ifndef SPCA_SAMPLING_HPP
#define SPCA_SAMPLING_HPP

#include <cstddef>
#include <vector>

#include "spca/matrix.hpp"
#include "spca/rng.hpp"

namespace spca {

// chi^2(dof) as the sum of dof squared standard normals, O(dof).
double chi_squared(std::size_t dof, RngStream& rng);

// m orthonormal rows distributed as the first m rows of a Haar orthogonal
// n x n matrix: Gram-Schmidt with one re-orthogonalization pass on an m x n
// matrix of independent standard normals. A row whose pivot norm falls
// below 1e-12 is resampled.
RealMatrix haar_frame(std::size_t m, std::size_t n, RngStream& rng);

struct PsdSqrtResult {
  SymmetricMatrix root;
  bool psd = false;
  double min_eigenvalue = 0.0;
  std::size_t clipped = 0;  // eigenvalues in [-tol, 0) clamped to 0
};

// Symmetric PSD square root via eigendecomposition. Eigenvalues in
// [-tol, 0) are clamped to 0; anything below -tol marks the input as not
// PSD (psd = false, root left empty).
PsdSqrtResult try_psd_sqrt(const SymmetricMatrix& s, double tol);

// Throwing variants; the tol-free overload uses tol = 1e-8 * ||S||_2.
SymmetricMatrix psd_sqrt(const SymmetricMatrix& s, double tol);
SymmetricMatrix psd_sqrt(const SymmetricMatrix& s);
double default_psd_tol(const SymmetricMatrix& s);

// Uniform k-subset of {0..n-1}, sorted ascending.
std::vector<std::size_t> uniform_subset(std::size_t n, std::size_t k, RngStream& rng);

// Uniform permutation of {0..n-1} (Fisher-Yates).
std::vector<std::size_t> uniform_permutation(std::size_t n, RngStream& rng);

// Bin(n, p) as the sum of n Bernoulli draws.
std::size_t binomial(std::size_t n, double p, RngStream& rng);

}  // namespace spca

#endif  // SPCA_SAMPLING_HPP
