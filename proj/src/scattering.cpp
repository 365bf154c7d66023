#include "oplab/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace oplab {

namespace {

double op_norm(const ComplexMatrix& a) {
  if (a.size() == 0) return 0.0;
  return schatten_norm(a, SchattenIndex::operator_norm());
}

bool is_diagonal(const ComplexMatrix& h) {
  for (Eigen::Index c = 0; c < h.cols(); ++c)
    for (Eigen::Index r = 0; r < h.rows(); ++r)
      if (r != c && h(r, c) != Complex(0.0, 0.0)) return false;
  return true;
}

void check_which(int which) {
  if (which != 0 && which != 1) throw std::invalid_argument("operator index must be 0 or 1");
}

// dyadic subdivisions of a bounded Δ, depth m gives 2^m equal pieces
std::vector<Interval> subdivide(const Interval& delta, int m) {
  const std::size_t pieces = std::size_t{1} << m;
  std::vector<Interval> out;
  out.reserve(pieces);
  const double w = delta.hi - delta.lo;
  double lo = delta.lo;
  for (std::size_t i = 0; i < pieces; ++i) {
    const double hi = i + 1 == pieces ? delta.hi : delta.lo + w * std::ldexp(double(i + 1), -m);
    out.push_back({lo, hi});
    lo = hi;
  }
  return out;
}

void check_bounded(const Interval& delta) {
  if (!delta.bounded() || delta.empty()) throw std::invalid_argument("Δ must be a bounded non-empty interval");
}

}  // namespace

bool is_hermitian(const ComplexMatrix& h, double rel_tol) {
  if (h.rows() != h.cols()) return false;
  if (!all_finite(h)) return false;
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const double defect = h.size() == 0 ? 0.0 : (h - h.adjoint()).cwiseAbs().maxCoeff();
  return defect <= rel_tol * scale;
}

SpectralData SpectralData::of(const ComplexMatrix& h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("operator must be square");
  if (!is_hermitian(h)) throw std::invalid_argument("operator is not Hermitian to 1e-12");
  SpectralData s;
  const Eigen::Index n = h.rows();
  if (is_diagonal(h)) {
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return h(a, a).real() < h(b, b).real(); });
    s.eigenvalues.resize(n);
    s.eigenvectors = ComplexMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      s.eigenvalues(i) = h(order[i], order[i]).real();
      s.eigenvectors(order[i], i) = 1.0;
    }
    return s;
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigen-decomposition failed");
  s.eigenvalues = es.eigenvalues();
  s.eigenvectors = es.eigenvectors();
  return s;
}

std::pair<Eigen::Index, Eigen::Index> SpectralData::range(const Interval& delta) const {
  const double* b = eigenvalues.data();
  const double* e = b + eigenvalues.size();
  // (lo, hi]: first eigenvalue > lo up to first > hi
  const Eigen::Index first = std::upper_bound(b, e, delta.lo) - b;
  const Eigen::Index last = std::upper_bound(b, e, delta.hi) - b;
  return {first, std::max(first, last)};
}

ComplexMatrix SpectralData::projection(const Interval& delta) const {
  const auto [first, last] = range(delta);
  const auto u = eigenvectors.middleCols(first, last - first);
  return u * u.adjoint();
}

double SpectralData::reconstruction_residual(const ComplexMatrix& h) const {
  const ComplexMatrix rebuilt = eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
  return op_norm(h - rebuilt) / std::max(op_norm(h), 1e-300);
}

std::vector<double> SpectralData::distinct() const {
  std::vector<double> out;
  if (eigenvalues.size() == 0) return out;
  const double scale = std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (out.empty() || eigenvalues(i) - out.back() > 1e-12 * scale) out.push_back(eigenvalues(i));
  return out;
}

ComplexMatrix spectral_projection(const ComplexMatrix& h, const Interval& delta) {
  return SpectralData::of(h).projection(delta);
}

ScatteringModel::ScatteringModel(ComplexMatrix h0, ComplexMatrix g, ComplexMatrix j)
    : h0_(std::move(h0)), g_(std::move(g)), j_(std::move(j)) {
  if (h0_.rows() != h0_.cols()) throw std::invalid_argument("H0 must be square");
  if (g_.cols() != h0_.rows()) throw std::invalid_argument("G must have as many columns as H0 has rows");
  if (j_.rows() != g_.rows() || j_.cols() != g_.rows()) throw std::invalid_argument("J must be k×k with G k×n");
  if (!all_finite(g_)) throw std::invalid_argument("G has non-finite entries");
  if (!is_hermitian(j_)) throw std::invalid_argument("J is not Hermitian to 1e-12");
  s0_ = SpectralData::of(h0_);
  h1_ = h0_ + g_.adjoint() * j_ * g_;
  s1_ = SpectralData::of(h1_);
  w0_ = g_ * s0_.eigenvectors;
  w1_ = g_ * s1_.eigenvectors;
}

const ComplexMatrix& ScatteringModel::H(int which) const {
  check_which(which);
  return which == 0 ? h0_ : h1_;
}

const SpectralData& ScatteringModel::spectrum(int which) const {
  check_which(which);
  return which == 0 ? s0_ : s1_;
}

const ComplexMatrix& ScatteringModel::visible(int which) const {
  check_which(which);
  return which == 0 ? w0_ : w1_;
}

ComplexMatrix sandwiched_measure(const ScatteringModel& model, const Interval& delta, int which) {
  const auto [first, last] = model.spectrum(which).range(delta);
  const auto w = model.visible(which).middleCols(first, last - first);
  return w * w.adjoint();
}

SimpleOpMeasure sandwiched_atoms(const ScatteringModel& model, int which) {
  const auto& s = model.spectrum(which);
  const auto& w = model.visible(which);
  std::vector<Atom> atoms;
  atoms.reserve(s.eigenvalues.size());
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
    atoms.push_back({s.eigenvalues(i), w.col(i) * w.col(i).adjoint()});
  return SimpleOpMeasure(model.k(), model.k(), std::move(atoms));
}

ComplexMatrix sandwiched_resolvent(const ScatteringModel& model, int which, Complex z) {
  if (z.imag() == 0.0) throw std::invalid_argument("resolvent probe needs Im z != 0");
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw std::invalid_argument("non-finite z");
  const auto& s = model.spectrum(which);
  const auto& w = model.visible(which);
  ComplexVector d(s.eigenvalues.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = 1.0 / (s.eigenvalues(i) - z);
  return w * d.asDiagonal() * w.adjoint();
}

ResolventResiduals resolvent_identity_residuals(const ScatteringModel& model, Complex z) {
  const ComplexMatrix b0 = sandwiched_resolvent(model, 0, z);
  const ComplexMatrix b1 = sandwiched_resolvent(model, 1, z);
  const Eigen::Index k = model.k();
  const ComplexMatrix id = ComplexMatrix::Identity(k, k);
  const ComplexMatrix a = id + b0 * model.J();
  const ComplexMatrix b = id - b1 * model.J();

  const auto sv = singular_values(a);
  if (!sv.empty() && sv.back() <= 1e-10 * std::max(sv.front(), 1.0))
    throw SingularSystem("I + B_0(z)J is numerically singular");

  ResolventResiduals r;
  r.norm_b0 = op_norm(b0);
  r.norm_b1 = op_norm(b1);
  r.r1 = std::max(op_norm(a * b - id), op_norm(b * a - id));
  r.r2 = op_norm(b1 - a.partialPivLu().solve(b0));
  r.tolerance = 1e-10 * (1.0 + r.norm_b0) * (1.0 + r.norm_b1);
  return r;
}

HypothesisReport hypothesis_check(const ScatteringModel& model, SchattenIndex p, const Interval& delta,
                                  const ScalarMeasure& nu0, int depth, int which, double tol) {
  check_bounded(delta);
  if (depth < 0 || depth > 24) throw std::invalid_argument("probe depth must be in [0, 24]");
  HypothesisReport rep;
  rep.tolerance = tol;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const double scale = schatten_norm(sandwiched_measure(model, Interval::real_line(), which), p);

  auto probe = [&](const Interval& d) {
    ++rep.probes;
    const auto [first, last] = model.spectrum(which).range(d);
    const double lhs = first == last ? 0.0 : schatten_norm(sandwiched_measure(model, d, which), p);
    const double rhs = nu0.mass(d);
    rep.worst_margin = std::min(rep.worst_margin, rhs - lhs);
    if (rhs > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, lhs / rhs);
    else if (lhs > 0.0) rep.worst_ratio = std::numeric_limits<double>::infinity();
    if (lhs > rhs + tol * (rhs + scale) && rep.pass) {
      rep.pass = false;
      rep.violation = d;
    }
  };

  for (int m = 0; m <= depth; ++m)
    for (const auto& d : subdivide(delta, m)) probe(d);
  const auto& ev = model.spectrum(which).eigenvalues;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (!delta.contains(ev(i))) continue;
    if (i > 0 && ev(i) == ev(i - 1)) continue;
    probe({std::nextafter(ev(i), -std::numeric_limits<double>::infinity()), ev(i)});
  }
  return rep;
}

SmoothnessReport kato_smoothness_constant(const ScatteringModel& model, int which, const Interval& delta,
                                          int depth) {
  check_bounded(delta);
  if (depth < 0 || depth > 24) throw std::invalid_argument("probe depth must be in [0, 24]");
  SmoothnessReport rep;
  for (int m = 0; m <= depth; ++m) {
    double best = 0.0;
    for (const auto& d : subdivide(delta, m)) {
      const auto [first, last] = model.spectrum(which).range(d);
      if (first == last) continue;
      best = std::max(best, op_norm(sandwiched_measure(model, d, which)) / d.length());
    }
    rep.per_depth.push_back(best);
    rep.constant = std::max(rep.constant, best);
  }
  return rep;
}

RegularizedDeterminant det_probe(const ScatteringModel& model, double lambda, double eps, int q) {
  const ComplexMatrix b0 = sandwiched_resolvent(model, 0, {lambda, eps});
  return det_regularized_probe(b0 * model.J(), q);
}

double ladder_floor(const ScatteringModel& model, int which, double lambda) {
  const auto d = model.spectrum(which).distinct();
  if (d.size() < 2) return 0.0;
  auto it = std::upper_bound(d.begin(), d.end(), lambda);
  std::size_t i = static_cast<std::size_t>(it - d.begin());
  i = std::clamp<std::size_t>(i, 1, d.size() - 1);
  return 4.0 * (d[i] - d[i - 1]);
}

EpsilonLadder boundary_ladder(const ScatteringModel& model, int which, double lambda,
                              const std::vector<double>& eps, SchattenIndex norm) {
  if (eps.empty()) throw std::invalid_argument("empty ε ladder");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !std::isfinite(eps[i])) throw std::invalid_argument("ε must be positive and finite");
    if (i > 0 && !(eps[i] < eps[i - 1])) throw std::invalid_argument("ε ladder must be strictly decreasing");
  }
  EpsilonLadder out;
  out.lambda = lambda;
  out.floor = ladder_floor(model, which, lambda);
  if (eps.back() < out.floor)
    throw std::invalid_argument("ε below the resolution floor of the discretised spectrum");
  out.epsilons = eps;
  for (double e : eps) out.values.push_back(sandwiched_resolvent(model, which, {lambda, e}));
  for (std::size_t i = 0; i + 1 < out.values.size(); ++i) {
    out.differences.push_back(schatten_norm(out.values[i + 1] - out.values[i], norm));
    out.max_difference = std::max(out.max_difference, out.differences.back());
  }
  if (eps.size() > 1) {
    const double a = schatten_norm(out.values.front(), norm);
    const double b = schatten_norm(out.values.back(), norm);
    if (a > 0.0 && b > 0.0) out.growth_slope = std::log(b / a) / std::log(eps.front() / eps.back());
  }
  return out;
}

std::size_t WaveProbe::decreasing_window() const {
  if (increments.empty()) return 0;
  std::size_t w = 1;
  while (w < increments.size() && increments[w] < increments[w - 1]) ++w;
  return w;
}

WaveProbe wave_probe(const ScatteringModel& model, const ComplexVector& psi, const std::vector<double>& times,
                     const std::optional<Interval>& delta) {
  if (psi.size() != model.n()) throw std::invalid_argument("ψ has the wrong dimension");
  const auto& s0 = model.spectrum(0);
  const auto& s1 = model.spectrum(1);
  const Eigen::Index n = model.n();

  ComplexVector a = s0.eigenvectors.adjoint() * psi;
  if (delta) {
    const auto [first, last] = s0.range(*delta);
    for (Eigen::Index i = 0; i < n; ++i)
      if (i < first || i >= last) a(i) = 0.0;
  }
  const double base = a.norm();
  const ComplexMatrix overlap = s1.eigenvectors.adjoint() * s0.eigenvectors;  // U_1* U_0

  WaveProbe out;
  out.times = times;
  for (double t : times) {
    ComplexVector a0(n), a0h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      a0(i) = std::polar(1.0, -t * s0.eigenvalues(i)) * a(i);
      a0h(i) = a0(i) * s0.eigenvalues(i);
    }
    ComplexVector b = overlap * a0;
    ComplexVector bh = overlap * a0h;
    ComplexVector lhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Complex ph = std::polar(1.0, t * s1.eigenvalues(i));
      b(i) *= ph;
      bh(i) *= ph;
      lhs(i) = s1.eigenvalues(i) * b(i);
    }
    out.states.push_back(s1.eigenvectors * b);
    out.isometry_defect.push_back(std::abs(b.norm() - base));
    out.intertwining.push_back((lhs - bh).norm());
  }
  for (std::size_t i = 0; i + 1 < out.states.size(); ++i)
    out.increments.push_back((out.states[i + 1] - out.states[i]).norm());
  return out;
}

std::vector<double> cell_midpoints(int grid_n) {
  if (grid_n < 1) throw std::invalid_argument("grid size must be positive");
  std::vector<double> x(grid_n);
  for (int m = 0; m < grid_n; ++m) x[m] = (m + 0.5) / grid_n;
  return x;
}

ScatteringModel build_example_e1(int grid_n, int channels, const std::vector<ComplexMatrix>& g_samples,
                                 const ComplexMatrix& j) {
  if (channels < 1) throw std::invalid_argument("channels must be positive");
  if (static_cast<int>(g_samples.size()) != grid_n) throw std::invalid_argument("need one G sample per cell");
  const auto x = cell_midpoints(grid_n);
  const Eigen::Index k = j.rows();
  const Eigen::Index n = Eigen::Index(grid_n) * channels;
  ComplexMatrix h0 = ComplexMatrix::Zero(n, n);
  ComplexMatrix g(k, n);
  const double w = std::sqrt(1.0 / grid_n);
  for (int m = 0; m < grid_n; ++m) {
    if (g_samples[m].rows() != k || g_samples[m].cols() != channels)
      throw std::invalid_argument("G sample has the wrong shape");
    for (int c = 0; c < channels; ++c) h0(m * channels + c, m * channels + c) = x[m];
    g.middleCols(Eigen::Index(m) * channels, channels) = g_samples[m] * w;
  }
  return ScatteringModel(std::move(h0), std::move(g), j);
}

ScalarMeasure example_nu0(const std::vector<ComplexMatrix>& g_samples, SchattenIndex p) {
  const int grid_n = static_cast<int>(g_samples.size());
  const auto x = cell_midpoints(grid_n);
  const SchattenIndex p2(2.0 * p.value());
  std::vector<ScalarAtom> atoms;
  for (int m = 0; m < grid_n; ++m) {
    const double s = schatten_norm(g_samples[m], p2);
    atoms.push_back({x[m], s * s / grid_n});
  }
  return ScalarMeasure(std::move(atoms), {});
}

CorollarySides corollary_inequality(const std::vector<ComplexMatrix>& g_samples, double cell_width, SchattenIndex p) {
  if (p.is_operator_norm()) throw std::invalid_argument("corollary needs finite p");
  if (!(cell_width > 0.0)) throw std::invalid_argument("cell width must be positive");
  if (g_samples.empty()) return {};
  const Eigen::Index k = g_samples.front().rows();
  const Eigen::Index ch = g_samples.front().cols();
  ComplexMatrix stacked(k, ch * Eigen::Index(g_samples.size()));
  const SchattenIndex p2(2.0 * p.value());
  const double w = std::sqrt(cell_width);
  CorollarySides out;
  for (std::size_t m = 0; m < g_samples.size(); ++m) {
    if (g_samples[m].rows() != k || g_samples[m].cols() != ch) throw std::invalid_argument("ragged G samples");
    stacked.middleCols(Eigen::Index(m) * ch, ch) = g_samples[m] * w;
    const double s = schatten_norm(g_samples[m], p2);
    out.rhs += s * s * cell_width;
  }
  const double l = schatten_norm(stacked, p2);
  out.lhs = l * l;
  return out;
}

ScatteringModel build_remark_model(const ComplexMatrix& v) {
  if (!is_hermitian(v)) throw std::invalid_argument("V is not Hermitian to 1e-12");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(v);
  const auto& lam = es.eigenvalues();
  const auto& u = es.eigenvectors();
  Eigen::VectorXcd root(lam.size()), sign(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    root(i) = std::sqrt(std::abs(lam(i)));
    sign(i) = lam(i) < 0.0 ? -1.0 : 1.0;
  }
  ComplexMatrix g = u * root.asDiagonal() * u.adjoint();
  ComplexMatrix j = u * sign.asDiagonal() * u.adjoint();
  g = 0.5 * (g + g.adjoint()).eval();
  j = 0.5 * (j + j.adjoint()).eval();
  const Eigen::Index n = v.rows();
  return ScatteringModel(ComplexMatrix::Zero(n, n), std::move(g), std::move(j));
}

}  // namespace oplab
