#include "spca/matrix.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spca/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "RMX1 I/O assumes a little-endian host");

namespace spca {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;
using MutMap = Eigen::Map<EigenRowMajor>;

ConstMap map_of(const RealMatrix& m) {
  return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

}  // namespace

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw InvalidParameter("RealMatrix: data size does not match rows*cols");
  if (!all_finite())
    throw InvalidParameter("RealMatrix: non-finite entry on construction");
}

RealMatrix RealMatrix::identity(std::size_t d) {
  RealMatrix m(d, d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

RealMatrix RealMatrix::transposed() const {
  RealMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool RealMatrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

SymmetricMatrix SymmetricMatrix::identity(std::size_t d) {
  SymmetricMatrix s(d);
  for (std::size_t i = 0; i < d; ++i) s.set(i, i, 1.0);
  return s;
}

SymmetricMatrix SymmetricMatrix::from_dense(const RealMatrix& m) {
  if (m.rows() != m.cols())
    throw InvalidParameter("SymmetricMatrix::from_dense: matrix not square");
  SymmetricMatrix s(m.rows());
  for (std::size_t a = 0; a < m.rows(); ++a)
    for (std::size_t b = a; b < m.cols(); ++b) {
      if (m(a, b) != m(b, a))
        throw InvalidParameter("SymmetricMatrix::from_dense: matrix not symmetric");
      s.set(a, b, m(a, b));
    }
  return s;
}

SymmetricMatrix SymmetricMatrix::symmetrized(const RealMatrix& m) {
  if (m.rows() != m.cols())
    throw InvalidParameter("SymmetricMatrix::symmetrized: matrix not square");
  SymmetricMatrix s(m.rows());
  for (std::size_t a = 0; a < m.rows(); ++a)
    for (std::size_t b = a; b < m.cols(); ++b)
      s.set(a, b, 0.5 * (m(a, b) + m(b, a)));
  return s;
}

RealMatrix SymmetricMatrix::to_dense() const {
  RealMatrix m(dim_, dim_);
  for (std::size_t a = 0; a < dim_; ++a)
    for (std::size_t b = a; b < dim_; ++b) m(a, b) = m(b, a) = (*this)(a, b);
  return m;
}

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.rows()) throw InvalidParameter("matmul: inner dimensions differ");
  RealMatrix out(a.rows(), b.cols());
  MutMap(out.data(), static_cast<Eigen::Index>(out.rows()),
         static_cast<Eigen::Index>(out.cols())) = map_of(a) * map_of(b);
  return out;
}

RealMatrix matmul(const SymmetricMatrix& a, const RealMatrix& b) {
  return matmul(a.to_dense(), b);
}

namespace {
constexpr char kMagic[4] = {'R', 'M', 'X', '1'};
}

void write_rmx(std::ostream& out, const RealMatrix& m) {
  out.write(kMagic, 4);
  const std::uint64_t r = m.rows(), c = m.cols();
  out.write(reinterpret_cast<const char*>(&r), 8);
  out.write(reinterpret_cast<const char*>(&c), 8);
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!out) throw IoError("write_rmx: write failed");
}

void write_rmx(const std::string& path, const RealMatrix& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_rmx: cannot open " + path);
  write_rmx(f, m);
}

RealMatrix read_rmx(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("read_rmx: bad magic (expected RMX1)");
  std::uint64_t r = 0, c = 0;
  in.read(reinterpret_cast<char*>(&r), 8);
  in.read(reinterpret_cast<char*>(&c), 8);
  if (!in) throw IoError("read_rmx: truncated header");
  std::vector<double> data(r * c);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!in) throw IoError("read_rmx: truncated payload");
  return RealMatrix(r, c, std::move(data));
}

RealMatrix read_rmx(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_rmx: cannot open " + path);
  return read_rmx(f);
}

void write_csv(const std::string& path, const RealMatrix& m) {
  std::ofstream f(path);
  if (!f) throw IoError("write_csv: cannot open " + path);
  f << m.rows() << "," << m.cols() << "\n";
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      f << (j ? "," : "") << buf;
    }
    f << "\n";
  }
  if (!f) throw IoError("write_csv: write failed");
}

RealMatrix read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("read_csv: empty file");
  std::size_t rows = 0, cols = 0;
  {
    std::istringstream head(line);
    char comma;
    if (!(head >> rows >> comma >> cols) || comma != ',')
      throw IoError("read_csv: first line must be rows,cols");
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) data.push_back(std::stod(cell));
  }
  if (data.size() != rows * cols) throw IoError("read_csv: cell count mismatch");
  return RealMatrix(rows, cols, std::move(data));
}

namespace {
bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}
}  // namespace

void write_matrix(const std::string& path, const RealMatrix& m) {
  if (has_suffix(path, ".csv"))
    write_csv(path, m);
  else
    write_rmx(path, m);
}

RealMatrix read_matrix(const std::string& path) {
  if (has_suffix(path, ".csv")) return read_csv(path);
  return read_rmx(path);
}

}  // namespace spca
