#pragma once

#include <vector>

namespace vsum {

// Dense row-major double matrix. Deliberately minimal: everything the model
// needs is matmul, LU determinants, and inverses on matrices bounded by the
// segment length and the embedding dims.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int i, int j) {
    return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
                 static_cast<std::size_t>(j)];
  }
  double operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
                 static_cast<std::size_t>(j)];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

using Vec = std::vector<double>;

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Vec mat_vec(const Matrix& m, const Vec& x);

double dot(const Vec& a, const Vec& b);
double norm2_sq(const Matrix& m);

// acc += s * g (shapes must match)
void axpy(Matrix& acc, const Matrix& g, double s);
// acc += s * x * y^T
void add_outer(Matrix& acc, const Vec& x, const Vec& y, double s = 1.0);

// sign in {-1, 0, +1}; value = log|det|, -inf when exactly singular.
struct LogDet {
  int sign = 0;
  double value = 0.0;
};

struct Lu {
  Matrix lu;              // combined L (unit diag) and U factors
  std::vector<int> piv;   // row swaps applied at each step
  int perm_sign = 1;
  bool singular = false;
};

Lu lu_decompose(Matrix m);

// Partially pivoted LU. det of the empty (0x0) matrix is 1 by convention.
LogDet logdet(const Matrix& m);
double det(const Matrix& m);

Vec lu_solve(const Lu& f, Vec b);
// Throws Error on an exactly singular input.
Matrix inverse(const Matrix& m);

// log|det| of the principal minor m[idx, idx]; scratch is reused between
// calls so subset enumeration does not allocate.
LogDet logdet_minor(const Matrix& m, const std::vector<int>& idx, Matrix& scratch);

}  // namespace vsum
