#include <cmath>
#include <random>

#include "doctest.h"
#include "oplab/ensembles.hpp"
#include "oplab/schatten.hpp"

using namespace oplab;

namespace {
ComplexMatrix diag(std::initializer_list<double> d) {
  Eigen::VectorXd v(d.size());
  int i = 0;
  for (double x : d) v(i++) = x;
  return v.cast<Complex>().asDiagonal();
}

// oracles independent of the SVD: entrywise Frobenius and power iteration
double frobenius(const ComplexMatrix& a) {
  double s = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

double power_top(const ComplexMatrix& a) {
  ComplexVector v = ComplexVector::Ones(a.cols());
  double s = 0;
  for (int it = 0; it < 2000; ++it) {
    ComplexVector w = a.adjoint() * (a * v);
    s = w.norm();
    if (s == 0) return 0;
    v = w / s;
  }
  return std::sqrt(s);
}
}  // namespace

TEST_CASE("singular values") {
  auto s = singular_values(diag({3, 4}));
  REQUIRE(s.size() == 2);
  CHECK(s[0] == doctest::Approx(4));
  CHECK(s[1] == doctest::Approx(3));
  s = singular_values(ComplexMatrix::Zero(2, 3));
  REQUIRE(s.size() == 2);
  CHECK(s[0] == 0);
  CHECK(s[1] == 0);
  ComplexMatrix j(2, 2);
  j << 0, 1, 0, 0;
  s = singular_values(j);
  CHECK(s[0] == doctest::Approx(1));
  CHECK(std::abs(s[1]) < 1e-15);
}

TEST_CASE("schatten norms of diag(3,4)") {
  const auto a = diag({3, 4});
  CHECK(schatten_norm(a, SchattenIndex(1)) == doctest::Approx(7));
  CHECK(schatten_norm(a, SchattenIndex(2)) == doctest::Approx(5));
  CHECK(schatten_norm(a, SchattenIndex::operator_norm()) == doctest::Approx(4));
  CHECK(schatten_norm_fast(a, SchattenIndex(1)) == doctest::Approx(7));
  CHECK(schatten_norm_fast(a, SchattenIndex(3)) == doctest::Approx(std::cbrt(27.0 + 64.0)));
}

TEST_CASE("index parsing") {
  CHECK(SchattenIndex::parse("inf").is_operator_norm());
  CHECK(SchattenIndex::parse("op").is_operator_norm());
  CHECK(SchattenIndex::parse("2").value() == 2);
  CHECK(SchattenIndex::parse(SchattenIndex(4).to_string()) == SchattenIndex(4));
  CHECK_THROWS(SchattenIndex(0.5));
  CHECK_THROWS(SchattenIndex::parse("banana"));
}

TEST_CASE("regularized determinant examples") {
  CHECK(std::abs(det_regularized(ComplexMatrix::Zero(3, 3), 2) - Complex(1)) < 1e-15);
  CHECK(std::abs(det_regularized(diag({1, 1}), 2) - Complex(4.0 * std::exp(-2.0))) < 1e-14);
  CHECK(std::abs(det_regularized(diag({-1}), 2)) < 1e-15);
  CHECK_FALSE(det_regularized_probe(diag({-1}), 2).invertible);
  CHECK(det_regularized_probe(ComplexMatrix::Zero(2, 2), 1).invertible);
  CHECK(default_det_order(SchattenIndex(1)) == 1);
  CHECK(default_det_order(SchattenIndex(2.5)) == 3);
}

TEST_CASE("random norm properties") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> ud(1, 7);
  const double ps[] = {1, 1.5, 2, 3, 4, 8};
  for (int it = 0; it < 200; ++it) {
    const int r = ud(rng), c = ud(rng);
    const ComplexMatrix a = gaussian_matrix(rng, r, c);
    const ComplexMatrix b = gaussian_matrix(rng, r, c);
    CHECK(schatten_norm(a, SchattenIndex(2)) == doctest::Approx(frobenius(a)).epsilon(1e-12));
    CHECK(schatten_norm(a, SchattenIndex::operator_norm()) == doctest::Approx(power_top(a)).epsilon(1e-8));
    double prev = INFINITY;
    for (double p : ps) {
      const SchattenIndex ip(p);
      const double v = schatten_norm(a, ip);
      CHECK(v <= prev * (1 + 1e-12));
      prev = v;
      CHECK(schatten_norm(a + b, ip) <= (v + schatten_norm(b, ip)) * (1 + 1e-12));
      CHECK(schatten_norm_fast(a, ip) == doctest::Approx(v).epsilon(1e-8));
      CHECK(schatten_norm_frobenius_bound(a, ip) >= v * (1 - 1e-12));
      const double sq = std::pow(schatten_norm(a, SchattenIndex(2 * p)), 2);
      CHECK(sq == doctest::Approx(schatten_norm(a.adjoint() * a, ip)).epsilon(1e-10));
    }
  }
}

TEST_CASE("det_1 is the determinant and zero test follows sigma_min") {
  std::mt19937_64 rng(6);
  for (int it = 0; it < 100; ++it) {
    const int n = 1 + it % 6;
    ComplexMatrix a = gaussian_matrix(rng, n, n);
    const Complex d = det_regularized(a, 1);
    const Complex ref = (ComplexMatrix::Identity(n, n) + a).determinant();
    CHECK(std::abs(d - ref) <= 1e-9 * (1 + std::abs(ref)));
    for (int q = 1; q <= 3; ++q) {
      const bool inv = det_regularized_probe(a, q).invertible;
      const auto s = singular_values(ComplexMatrix::Identity(n, n) + a);
      CHECK(inv == (s.back() > 1e-10));
    }
    // force eigenvalue -1
    Eigen::ComplexEigenSolver<ComplexMatrix> es(a);
    const Complex lam = es.eigenvalues()(0);
    const ComplexMatrix b = a - (lam + 1.0) * ComplexMatrix::Identity(n, n);
    for (int q = 1; q <= 3; ++q) CHECK_FALSE(det_regularized_probe(b, q).invertible);
  }
}
