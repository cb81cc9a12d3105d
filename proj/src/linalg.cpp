#include "vsum/linalg.hpp"

#include <cmath>
#include <limits>

#include "vsum/error.hpp"

namespace vsum {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) fail("linalg: matmul shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Vec mat_vec(const Matrix& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.cols()) fail("linalg: mat_vec shape mismatch");
  Vec out(static_cast<std::size_t>(m.rows()), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < m.cols(); ++j) s += m(i, j) * x[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2_sq(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.data()[i] * m.data()[i];
  return s;
}

void axpy(Matrix& acc, const Matrix& g, double s) {
  if (acc.rows() != g.rows() || acc.cols() != g.cols()) fail("linalg: axpy shape mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += s * g.data()[i];
}

void add_outer(Matrix& acc, const Vec& x, const Vec& y, double s) {
  if (acc.rows() != static_cast<int>(x.size()) || acc.cols() != static_cast<int>(y.size()))
    fail("linalg: add_outer shape mismatch");
  for (int i = 0; i < acc.rows(); ++i) {
    const double xi = s * x[static_cast<std::size_t>(i)];
    if (xi == 0.0) continue;
    for (int j = 0; j < acc.cols(); ++j) acc(i, j) += xi * y[static_cast<std::size_t>(j)];
  }
}

Lu lu_decompose(Matrix m) {
  if (m.rows() != m.cols()) fail("linalg: LU requires a square matrix");
  const int n = m.rows();
  Lu f;
  f.piv.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::fabs(m(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::fabs(m(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    f.piv[static_cast<std::size_t>(k)] = p;
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
      f.perm_sign = -f.perm_sign;
    }
    const double pivot = m(k, k);
    if (pivot == 0.0) {
      f.singular = true;
      continue;
    }
    for (int i = k + 1; i < n; ++i) {
      const double l = m(i, k) / pivot;
      m(i, k) = l;
      if (l == 0.0) continue;
      for (int j = k + 1; j < n; ++j) m(i, j) -= l * m(k, j);
    }
  }
  f.lu = std::move(m);
  return f;
}

static LogDet logdet_from_lu(const Lu& f) {
  if (f.singular) return {0, -std::numeric_limits<double>::infinity()};
  LogDet r{f.perm_sign, 0.0};
  for (int k = 0; k < f.lu.rows(); ++k) {
    const double d = f.lu(k, k);
    if (d < 0.0) r.sign = -r.sign;
    r.value += std::log(std::fabs(d));
  }
  return r;
}

// Destroys m. Allocation-free so subset enumeration can hammer it.
static LogDet logdet_inplace(Matrix& m) {
  const int n = m.rows();
  int sign = 1;
  double value = 0.0;
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::fabs(m(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::fabs(m(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (p != k) {
      for (int j = k; j < n; ++j) std::swap(m(k, j), m(p, j));
      sign = -sign;
    }
    const double pivot = m(k, k);
    if (pivot == 0.0) return {0, -std::numeric_limits<double>::infinity()};
    if (pivot < 0.0) sign = -sign;
    value += std::log(std::fabs(pivot));
    for (int i = k + 1; i < n; ++i) {
      const double l = m(i, k) / pivot;
      if (l == 0.0) continue;
      for (int j = k + 1; j < n; ++j) m(i, j) -= l * m(k, j);
    }
  }
  return {sign, value};
}

LogDet logdet(const Matrix& m) {
  if (m.rows() == 0) return {1, 0.0};
  return logdet_from_lu(lu_decompose(m));
}

double det(const Matrix& m) {
  if (m.rows() == 0) return 1.0;
  const Lu f = lu_decompose(m);
  if (f.singular) return 0.0;
  double d = static_cast<double>(f.perm_sign);
  for (int k = 0; k < m.rows(); ++k) d *= f.lu(k, k);
  return d;
}

Vec lu_solve(const Lu& f, Vec b) {
  const int n = f.lu.rows();
  if (f.singular) fail("linalg: solve on singular matrix");
  if (static_cast<int>(b.size()) != n) fail("linalg: solve shape mismatch");
  // The factorization swaps whole rows, multipliers included, so every
  // interchange must be applied before the triangular solves.
  for (int k = 0; k < n; ++k)
    std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(f.piv[static_cast<std::size_t>(k)])]);
  for (int k = 0; k < n; ++k)
    for (int i = k + 1; i < n; ++i)
      b[static_cast<std::size_t>(i)] -= f.lu(i, k) * b[static_cast<std::size_t>(k)];
  for (int i = n - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) s -= f.lu(i, j) * b[static_cast<std::size_t>(j)];
    b[static_cast<std::size_t>(i)] = s / f.lu(i, i);
  }
  return b;
}

Matrix inverse(const Matrix& m) {
  const int n = m.rows();
  const Lu f = lu_decompose(m);
  if (f.singular) fail("linalg: inverse of singular matrix");
  Matrix out(n, n);
  Vec e(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    e.assign(static_cast<std::size_t>(n), 0.0);
    e[static_cast<std::size_t>(j)] = 1.0;
    const Vec col = lu_solve(f, e);
    for (int i = 0; i < n; ++i) out(i, j) = col[static_cast<std::size_t>(i)];
  }
  return out;
}

LogDet logdet_minor(const Matrix& m, const std::vector<int>& idx, Matrix& scratch) {
  const int k = static_cast<int>(idx.size());
  if (k == 0) return {1, 0.0};
  if (scratch.rows() != k || scratch.cols() != k) scratch = Matrix(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      scratch(i, j) = m(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  return logdet_inplace(scratch);
}

}  // namespace vsum
