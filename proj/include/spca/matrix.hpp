#ifndef SPCA_MATRIX_HPP
#define SPCA_MATRIX_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace spca {

// Dense real matrix, 64-bit floats, row-major. Entries must be finite on
// construction from data; zero-initialized otherwise.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static RealMatrix identity(std::size_t d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }
  const std::vector<double>& storage() const { return data_; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  RealMatrix transposed() const;

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// A SampleSet is a d x n matrix whose columns are the n samples.
using SampleSet = RealMatrix;

// Symmetric matrix stored as a packed upper triangle; (a, b) and (b, a)
// read the same storage slot, so symmetry holds exactly.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t dim)
      : dim_(dim), upper_(dim * (dim + 1) / 2, 0.0) {}

  static SymmetricMatrix identity(std::size_t d);
  // Exact-symmetry check; throws InvalidParameter on any mismatch.
  static SymmetricMatrix from_dense(const RealMatrix& m);
  // Stores (m + m^T) / 2.
  static SymmetricMatrix symmetrized(const RealMatrix& m);

  std::size_t dim() const { return dim_; }

  double operator()(std::size_t a, std::size_t b) const { return upper_[index(a, b)]; }
  void set(std::size_t a, std::size_t b, double v) { upper_[index(a, b)] = v; }
  void add(std::size_t a, std::size_t b, double v) { upper_[index(a, b)] += v; }

  RealMatrix to_dense() const;

 private:
  std::size_t index(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    return a * (2 * dim_ - a - 1) / 2 + b;
  }

  std::size_t dim_ = 0;
  std::vector<double> upper_;
};

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b);
RealMatrix matmul(const SymmetricMatrix& a, const RealMatrix& b);

// Binary matrix format "RMX1": 4-byte magic "RMX1", unsigned 64-bit rows,
// unsigned 64-bit cols, then rows*cols little-endian doubles row-major.
void write_rmx(std::ostream& out, const RealMatrix& m);
void write_rmx(const std::string& path, const RealMatrix& m);
RealMatrix read_rmx(std::istream& in);
RealMatrix read_rmx(const std::string& path);

// CSV alternative: first line "rows,cols", then one comma-separated line
// per row, full double precision.
void write_csv(const std::string& path, const RealMatrix& m);
RealMatrix read_csv(const std::string& path);

// Dispatches on extension: .csv -> CSV, anything else -> RMX1.
void write_matrix(const std::string& path, const RealMatrix& m);
RealMatrix read_matrix(const std::string& path);

}  // namespace spca

#endif  // SPCA_MATRIX_HPP
