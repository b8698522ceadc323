#include "wt/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wt/errors.hpp"

namespace wt {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    std::ostringstream msg;
    msg << "matrix " << rows << "x" << cols << " needs " << rows * cols << " values, got "
        << values_.size();
    throw ShapeError(msg.str());
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged initializer for Matrix");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(values));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

namespace {

constexpr std::size_t kColumnBlock = 256;

void check_product(const Matrix& out, std::size_t m, std::size_t n, const char* what) {
  if (out.rows() != m || out.cols() != n) {
    throw ShapeError(std::string(what) + ": output is " + out.shape_string() + ", expected " +
                     std::to_string(m) + "x" + std::to_string(n));
  }
}

[[noreturn]] void inner_mismatch(const char* what, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(what) + ": cannot multiply " + a.shape_string() + " by " +
                   b.shape_string());
}

}  // namespace

void add_matmul(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) inner_mismatch("matmul", a, b);
  check_product(out, a.rows(), b.cols(), "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  // Four output rows share each pass over b; every entry is still summed in
  // increasing k order, so results do not depend on the blocking.
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    for (std::size_t j0 = 0; j0 < n; j0 += kColumnBlock) {
      const std::size_t j1 = std::min(n, j0 + kColumnBlock);
      double* o0 = out.data() + i * n;
      double* o1 = o0 + n;
      double* o2 = o1 + n;
      double* o3 = o2 + n;
      for (std::size_t p = 0; p < k; ++p) {
        const double s0 = a(i, p), s1 = a(i + 1, p), s2 = a(i + 2, p), s3 = a(i + 3, p);
        const double* brow = b.data() + p * n;
        for (std::size_t j = j0; j < j1; ++j) {
          const double bv = brow[j];
          o0[j] += s0 * bv;
          o1[j] += s1 * bv;
          o2[j] += s2 * bv;
          o3[j] += s3 * bv;
        }
      }
    }
  }
  for (; i < m; ++i) {
    double* o = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = a(i, p);
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += s * brow[j];
    }
  }
}

void add_matmul_nt(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) inner_mismatch("matmul_nt", a, b.transposed());
  check_product(out, a.rows(), b.rows(), "matmul_nt");
  if (a.rows() >= 4) {
    add_matmul(out, a, b.transposed());
    return;
  }
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) += dot(a.row(i), b.row(j));
}

void add_matmul_tn(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) inner_mismatch("matmul_tn", a.transposed(), b);
  check_product(out, a.cols(), b.cols(), "matmul_tn");
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  // Four rows of the shared dimension per pass over the output, applied in
  // increasing order.
  std::size_t p = 0;
  for (; p + 4 <= k; p += 4) {
    const double* b0 = b.data() + p * n;
    const double* b1 = b0 + n;
    const double* b2 = b1 + n;
    const double* b3 = b2 + n;
    for (std::size_t i = 0; i < m; ++i) {
      const double s0 = a(p, i), s1 = a(p + 1, i), s2 = a(p + 2, i), s3 = a(p + 3, i);
      double* o = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        double v = o[j];
        v += s0 * b0[j];
        v += s1 * b1[j];
        v += s2 * b2[j];
        v += s3 * b3[j];
        o[j] = v;
      }
    }
  }
  for (; p < k; ++p) {
    const double* brow = b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double s = a(p, i);
      double* o = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += s * brow[j];
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) inner_mismatch("matmul", a, b);
  Matrix out(a.rows(), b.cols());
  add_matmul(out, a, b);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  add_matmul_nt(out, a, b);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  add_matmul_tn(out, a, b);
  return out;
}

void axpy(Matrix& y, double alpha, const Matrix& x) {
  require_same_shape(y, x, "axpy");
  axpy(y.values(), alpha, x.values());
}

void axpy(std::span<double> y, double alpha, std::span<const double> x) {
  if (y.size() != x.size()) throw ShapeError("axpy: length mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  // Four independent partial sums; fixed order keeps results reproducible.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  const std::size_t n = a.size();
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return std::sqrt(s);
}

double sum(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v;
  return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace wt
