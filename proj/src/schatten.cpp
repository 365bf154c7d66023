#include "oplab/schatten.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace oplab {

SchattenIndex::SchattenIndex(double p) : p_(p) {
  if (std::isnan(p) || p < 1.0)
    throw std::invalid_argument("Schatten index must satisfy p >= 1 (got " + std::to_string(p) + ")");
}

SchattenIndex SchattenIndex::parse(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "op" || t == "operator" || t == "inf" || t == "infinity")
    return operator_norm();
  if (!t.empty() && t.front() == 's') t.erase(t.begin());
  char* end = nullptr;
  const double p = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw std::invalid_argument("cannot parse Schatten index '" + text + "'");
  return SchattenIndex(p);
}

std::string SchattenIndex::to_string() const {
  if (is_operator_norm()) return "op";
  std::ostringstream os;
  os << 'S' << p_;
  return os.str();
}

bool all_finite(const ComplexMatrix& a) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const Complex v = a.data()[k];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

std::vector<double> singular_values(const ComplexMatrix& a) {
  if (!all_finite(a)) throw std::domain_error("singular_values: non-finite entries");
  const auto k = std::min(a.rows(), a.cols());
  std::vector<double> out(static_cast<std::size_t>(k), 0.0);
  if (k == 0) return out;
  Eigen::BDCSVD<ComplexMatrix> svd(a);
  const Eigen::VectorXd& s = svd.singularValues();
  for (Eigen::Index i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = s(i);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

namespace {

double power_sum_norm(const std::vector<double>& sigma, double p) {
  if (sigma.empty() || sigma.front() == 0.0) return 0.0;
  // scale by σ_1 so that σ^p cannot overflow
  const double top = sigma.front();
  double acc = 0.0;
  for (double s : sigma) acc += std::pow(s / top, p);
  return top * std::pow(acc, 1.0 / p);
}

}  // namespace

double schatten_norm(const ComplexMatrix& a, SchattenIndex p) {
  if (p.value() == 2.0) {
    if (!all_finite(a)) throw std::domain_error("schatten_norm: non-finite entries");
    return a.norm();
  }
  const auto sigma = singular_values(a);
  if (sigma.empty()) return 0.0;
  if (p.is_operator_norm()) return sigma.front();
  return power_sum_norm(sigma, p.value());
}

double schatten_norm_fast(const ComplexMatrix& a, SchattenIndex p) {
  if (a.size() == 0) return 0.0;
  if (p.value() == 2.0 || a.rows() == 1 || a.cols() == 1) return a.norm();
  // lower triangle of the smaller Gram matrix in real arithmetic; at these
  // sizes the GEMM path spends most of its time packing
  const bool wide = a.rows() <= a.cols();
  const Eigen::MatrixXd re = wide ? Eigen::MatrixXd(a.real().transpose()) : Eigen::MatrixXd(a.real());
  const Eigen::MatrixXd im = wide ? Eigen::MatrixXd(-a.imag().transpose()) : Eigen::MatrixXd(a.imag());
  const Eigen::Index n = re.cols(), m = re.rows();
  ComplexMatrix gram(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i) {
      double gr = 0.0, gi = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        gr += re(k, i) * re(k, j) + im(k, i) * im(k, j);
        gi += re(k, i) * im(k, j) - im(k, i) * re(k, j);
      }
      gram(i, j) = Complex(gr, gi);
    }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw std::domain_error("schatten_norm_fast: eigensolver failed");
  const Eigen::VectorXd& ev = eig.eigenvalues();  // ascending
  std::vector<double> sigma(static_cast<std::size_t>(ev.size()));
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    sigma[static_cast<std::size_t>(ev.size() - 1 - i)] = std::sqrt(std::max(0.0, ev(i)));
  if (p.is_operator_norm()) return sigma.front();
  return power_sum_norm(sigma, p.value());
}

double schatten_norm_frobenius_bound(const ComplexMatrix& a, SchattenIndex p) {
  const double f = a.norm();
  if (p.value() >= 2.0) return f;
  const double r = static_cast<double>(std::min(a.rows(), a.cols()));
  return std::pow(r, 1.0 / p.value() - 0.5) * f;
}

namespace {

Eigen::VectorXcd eigenvalues_via_schur(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("det_regularized: matrix must be square");
  if (!all_finite(a)) throw std::domain_error("det_regularized: non-finite entries");
  if (a.size() == 0) return {};
  Eigen::ComplexSchur<ComplexMatrix> schur(a, /*computeU=*/false);
  if (schur.info() != Eigen::Success) throw std::domain_error("det_regularized: Schur form failed");
  return schur.matrixT().diagonal();
}

}  // namespace

RegularizedDeterminant det_regularized_probe(const ComplexMatrix& a, int q) {
  if (q < 1) throw std::invalid_argument("det_regularized: order q must be >= 1");
  const Eigen::VectorXcd lambda = eigenvalues_via_schur(a);
  Complex product(1.0, 0.0);
  Complex exponent(0.0, 0.0);
  double relative = 1.0;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    const Complex l = lambda(k);
    product *= 1.0 + l;
    relative *= std::abs(1.0 + l) / (1.0 + std::abs(l));
    Complex power(1.0, 0.0);
    for (int j = 1; j < q; ++j) {
      power *= l;
      exponent += (j % 2 == 0 ? 1.0 : -1.0) * power / static_cast<double>(j);
    }
  }
  RegularizedDeterminant out;
  out.value = exponent == Complex(0.0, 0.0) ? product : product * std::exp(exponent);
  out.relative_modulus = relative;
  out.invertible = relative > kInvertibilityThreshold;
  return out;
}

Complex det_regularized(const ComplexMatrix& a, int q) { return det_regularized_probe(a, q).value; }

int default_det_order(SchattenIndex p) {
  if (p.is_operator_norm())
    throw std::invalid_argument("default_det_order: no finite order for the operator norm");
  return std::max(1, static_cast<int>(std::ceil(p.value())));
}

}  // namespace oplab
