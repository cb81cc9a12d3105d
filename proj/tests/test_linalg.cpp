#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "vsum/error.hpp"
#include "vsum/linalg.hpp"
#include "vsum/rng.hpp"

using namespace vsum;

namespace {

Matrix random_matrix(Rng& rng, int n, double scale = 1.0) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = scale * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("matmul and transpose basics") {
  Matrix a(2, 3);
  Matrix b(3, 2);
  double av[] = {1, 2, 3, 4, 5, 6};
  double bv[] = {7, 8, 9, 10, 11, 12};
  for (int i = 0; i < 6; ++i) a.data()[i] = av[i];
  for (int i = 0; i < 6; ++i) b.data()[i] = bv[i];
  Matrix c = matmul(a, b);
  CHECK(c(0, 0) == 58);
  CHECK(c(0, 1) == 64);
  CHECK(c(1, 0) == 139);
  CHECK(c(1, 1) == 154);
  Matrix t = transpose(a);
  CHECK(t.rows() == 3);
  CHECK(t(0, 1) == 4);
  CHECK(t(2, 0) == 3);
  CHECK_THROWS_AS(matmul(a, a), Error);
}

TEST_CASE("mat_vec, dot, axpy, add_outer") {
  Matrix a(2, 3);
  double av[] = {1, 2, 3, 4, 5, 6};
  for (int i = 0; i < 6; ++i) a.data()[i] = av[i];
  Vec y = mat_vec(a, {1, 2, 3});
  CHECK(y == Vec{14, 32});
  CHECK(dot({1, 2}, {3, 4}) == 11);

  Matrix acc(2, 2);
  Matrix g(2, 2, 1.0);
  axpy(acc, g, 0.5);
  CHECK(acc(1, 1) == 0.5);
  add_outer(acc, {1, 2}, {3, 4});
  CHECK(acc(0, 0) == 3.5);
  CHECK(acc(1, 1) == 8.5);
  CHECK_THROWS_AS(axpy(acc, Matrix(3, 3), 1.0), Error);
}

TEST_CASE("determinant matches cofactor expansion") {
  Rng rng(11);
  for (int n = 1; n <= 7; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      Matrix m = random_matrix(rng, n);
      const double reference = testor::laplace_det(m);
      CHECK(det(m) == doctest::Approx(reference).epsilon(1e-9));
      const LogDet ld = logdet(m);
      if (std::fabs(reference) > 1e-12) {
        CHECK(ld.sign == (reference > 0 ? 1 : -1));
        CHECK(ld.value == doctest::Approx(std::log(std::fabs(reference))).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("empty matrix determinant is 1") {
  CHECK(det(Matrix()) == 1.0);
  const LogDet ld = logdet(Matrix());
  CHECK(ld.sign == 1);
  CHECK(ld.value == 0.0);
}

TEST_CASE("singular matrices report sign 0") {
  Matrix m(2, 2);
  m(0, 0) = 1;
  m(0, 1) = 2;
  m(1, 0) = 2;
  m(1, 1) = 4;
  CHECK(det(m) == 0.0);
  CHECK(logdet(m).sign == 0);
  CHECK_THROWS_AS(inverse(m), Error);
}

// Regression: the factorization swaps whole rows, so the solve must apply
// every interchange before eliminating. Interleaving swaps with elimination
// silently corrupts any system needing two interacting pivots (n >= 3).
TEST_CASE("inverse is a two-sided inverse under heavy pivoting") {
  Rng rng(5);
  for (int n = 1; n <= 8; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      Matrix m = random_matrix(rng, n);
      // force pivot churn: tiny diagonal
      for (int i = 0; i < n; ++i) m(i, i) *= 1e-6;
      Matrix inv = inverse(m);
      const Matrix left = matmul(inv, m);
      const Matrix right = matmul(m, inv);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double id = i == j ? 1.0 : 0.0;
          CHECK(left(i, j) == doctest::Approx(id).epsilon(1e-7));
          CHECK(right(i, j) == doctest::Approx(id).epsilon(1e-7));
        }
      }
    }
  }
}

TEST_CASE("lu_solve solves known systems") {
  Matrix a(3, 3);
  double av[] = {0, 2, 1, 1, 1, 1, 2, 0, 3};
  for (int i = 0; i < 9; ++i) a.data()[i] = av[i];
  const Lu f = lu_decompose(a);
  const Vec x = lu_solve(f, {0, 0, 1});
  CHECK(x[0] == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(x[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("logdet_minor equals logdet of the copied minor") {
  Rng rng(17);
  Matrix m = random_matrix(rng, 8);
  // symmetrize and lift so principal minors stay positive
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < i; ++j) m(i, j) = m(j, i);
  for (int i = 0; i < 8; ++i) m(i, i) += 10.0;

  Matrix scratch;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> idx = testor::random_subset(rng, 8, 0.5);
    Matrix sub(static_cast<int>(idx.size()), static_cast<int>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < idx.size(); ++j)
        sub(static_cast<int>(i), static_cast<int>(j)) = m(idx[i], idx[j]);
    const LogDet a = logdet_minor(m, idx, scratch);
    const LogDet b = logdet(sub);
    CHECK(a.sign == b.sign);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
  }
  // scratch reuse across different sizes
  const LogDet empty = logdet_minor(m, {}, scratch);
  CHECK(empty.sign == 1);
  CHECK(empty.value == 0.0);
}

TEST_CASE("norm2_sq sums squared entries") {
  Matrix m(2, 2);
  m(0, 0) = 3;
  m(1, 1) = 4;
  CHECK(norm2_sq(m) == 25.0);
}
