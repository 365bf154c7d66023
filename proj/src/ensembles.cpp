#include "oplab/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oplab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

void MeasureSpec::validate() const {
  if (min_atoms < 1 || max_atoms < min_atoms) throw std::invalid_argument("bad atom count range");
  if ((rows > 0) != (cols > 0)) throw std::invalid_argument("rows and cols must be given together");
  if (rows <= 0 && max_dim < 1) throw std::invalid_argument("max_dim must be positive");
  if (!(support_lo < support_hi) || !std::isfinite(support_lo) || !std::isfinite(support_hi))
    throw std::invalid_argument("bad support");
}

ComplexMatrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  ComplexMatrix a(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = n(rng);
      const double im = n(rng);
      a(r, c) = {re, im};
    }
  return a;
}

SimpleOpMeasure random_simple_measure(std::mt19937_64& rng, const MeasureSpec& spec) {
  spec.validate();
  std::uniform_int_distribution<int> count(spec.min_atoms, spec.max_atoms);
  std::uniform_int_distribution<int> dim(1, std::max(1, spec.max_dim));
  const int atoms = count(rng);
  const int rows = spec.rows > 0 ? spec.rows : dim(rng);
  const int cols = spec.cols > 0 ? spec.cols : dim(rng);
  std::uniform_real_distribution<double> pos(spec.support_lo, spec.support_hi);
  std::uniform_real_distribution<double> logw(std::log(0.1), std::log(10.0));
  std::vector<Atom> out;
  out.reserve(atoms);
  const double scale = 1.0 / std::sqrt(double(rows) * cols);
  for (int i = 0; i < atoms; ++i) {
    const double x = pos(rng);
    const double w = std::exp(logw(rng));
    out.push_back({x, gaussian_matrix(rng, rows, cols) * (scale * w)});
  }
  return SimpleOpMeasure(rows, cols, std::move(out));
}

OpMeasure random_density_measure(std::mt19937_64& rng, const MeasureSpec& spec, int max_cells) {
  spec.validate();
  if (max_cells < 1) throw std::invalid_argument("max_cells must be positive");
  std::uniform_int_distribution<int> count(1, max_cells);
  std::uniform_int_distribution<int> dim(1, std::max(1, spec.max_dim));
  const int cells = count(rng);
  const int rows = spec.rows > 0 ? spec.rows : dim(rng);
  const int cols = spec.cols > 0 ? spec.cols : dim(rng);
  std::uniform_real_distribution<double> pos(spec.support_lo, spec.support_hi);
  std::uniform_real_distribution<double> logw(std::log(0.1), std::log(10.0));
  std::vector<double> edges(2 * cells);
  for (double& e : edges) e = pos(rng);
  std::sort(edges.begin(), edges.end());
  std::vector<DensityCell> out;
  const double scale = 1.0 / std::sqrt(double(rows) * cols);
  for (int i = 0; i < cells; ++i) {
    const double w = std::exp(logw(rng));
    ComplexMatrix d = gaussian_matrix(rng, rows, cols) * (scale * w);
    if (edges[2 * i] < edges[2 * i + 1]) out.push_back({edges[2 * i], edges[2 * i + 1], std::move(d)});
  }
  return OpMeasure(SimpleOpMeasure(rows, cols), DensityOpMeasure(rows, cols, std::move(out)));
}

SchattenIndex random_norm(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 2);
  switch (pick(rng)) {
    case 0: return SchattenIndex::trace();
    case 1: return SchattenIndex::hilbert_schmidt();
    default: return SchattenIndex::operator_norm();
  }
}

ScatteringModel random_model(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k) {
  if (n < 1 || k < 1) throw std::invalid_argument("model dimensions must be positive");
  const ComplexMatrix a = gaussian_matrix(rng, n, n);
  ComplexMatrix h0 = (a + a.adjoint()) * (0.5 / std::sqrt(double(n)));
  ComplexMatrix g = gaussian_matrix(rng, k, n) / std::sqrt(double(n));
  ComplexMatrix j = ComplexMatrix::Zero(k, k);
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index i = 0; i < k; ++i) j(i, i) = coin(rng) ? 1.0 : -1.0;
  if (k > 1) {
    j(0, 0) = 1.0;
    j(k - 1, k - 1) = -1.0;
  }
  return ScatteringModel(std::move(h0), std::move(g), std::move(j));
}

}  // namespace oplab
