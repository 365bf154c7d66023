#include "oplab/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "oplab/parallel.hpp"

namespace oplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

void require_upper(Complex z, const char* who) {
  if (!(z.imag() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw std::invalid_argument(std::string(who) + ": need finite z with Im z > 0");
}

// Maximises f on [a, b] by golden section; f keeps its own record of the best value.
template <class F>
void golden_max(double a, double b, int steps, F&& f) {
  if (!(a < b) || steps <= 0) return;
  const double g = 0.6180339887498949;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < steps; ++k) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
}

}  // namespace

UndefinedAtAtom::UndefinedAtAtom(double x)
    : std::domain_error("Hilbert transform undefined at atom x = " + std::to_string(x)), x_(x) {}

ComplexMatrix cauchy(const SimpleOpMeasure& mu, Complex z) {
  require_upper(z, "cauchy");
  ComplexMatrix out = mu.zero();
  for (const Atom& a : mu.atoms()) out += a.value * (1.0 / (a.x - z));
  return out;
}

ComplexMatrix cauchy(const DensityOpMeasure& mu, Complex z) {
  require_upper(z, "cauchy");
  ComplexMatrix out = ComplexMatrix::Zero(mu.rows(), mu.cols());
  // t - z stays in the lower half-plane, so the principal log is continuous
  for (const DensityCell& c : mu.cells())
    out += c.density * (std::log(Complex(c.hi) - z) - std::log(Complex(c.lo) - z));
  return out;
}

ComplexMatrix cauchy(const OpMeasure& mu, Complex z) { return cauchy(mu.atoms, z) + cauchy(mu.density, z); }

ComplexMatrix hilbert_truncated(const SimpleOpMeasure& mu, double x, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("hilbert_truncated: r must be positive");
  ComplexMatrix out = mu.zero();
  for (const Atom& a : mu.atoms())
    if (std::abs(a.x - x) >= r) out += a.value * (1.0 / (x - a.x));
  return out;
}

ComplexMatrix hilbert(const SimpleOpMeasure& mu, double x) {
  if (mu.atom_at(x)) throw UndefinedAtAtom(x);
  ComplexMatrix out = mu.zero();
  for (const Atom& a : mu.atoms()) out += a.value * (1.0 / (a.x - x));
  return out;
}

double hilbert_maximal(const SimpleOpMeasure& mu, double x, SchattenIndex norm) {
  const auto atoms = mu.atoms();
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double d = std::abs(atoms[i].x - x);
    if (d > 0.0) order.push_back({d, i});
  }
  if (order.empty()) return 0.0;
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });

  // one plateau per distinct distance, largest distance first
  const Eigen::Index rows = mu.rows(), cols = mu.cols();
  Eigen::MatrixXcd plateaus(rows * cols, static_cast<Eigen::Index>(order.size()));
  std::vector<double> bounds;
  ComplexMatrix sum = mu.zero();
  for (std::size_t k = 0; k < order.size();) {
    const double d = order[k].first;
    for (; k < order.size() && order[k].first == d; ++k) {
      const Atom& a = atoms[order[k].second];
      sum += a.value * (1.0 / (x - a.x));
    }
    const auto col = static_cast<Eigen::Index>(bounds.size());
    plateaus.col(col) = Eigen::Map<const Eigen::VectorXcd>(sum.data(), sum.size());
    bounds.push_back(schatten_norm_frobenius_bound(sum, norm));
  }

  std::vector<std::size_t> idx(bounds.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return bounds[a] > bounds[b]; });
  double best = 0.0;
  for (std::size_t k : idx) {
    if (bounds[k] <= best) break;
    const ComplexMatrix s =
        Eigen::Map<const ComplexMatrix>(plateaus.col(static_cast<Eigen::Index>(k)).data(), rows, cols);
    best = std::max(best, schatten_norm_fast(s, norm));
  }
  return best;
}

double hl_maximal(const ScalarMeasure& nu, double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("hl_maximal: non-finite point");
  if (nu.atom_at(x)) return kInf;

  // F(r) = ν(B(x, r)) is affine between breakpoints, so F(r)/2r is monotone
  // there and the sup is a one-sided limit at a breakpoint or at r → 0.
  std::vector<std::pair<double, double>> events;  // (distance, atom weight)
  for (const ScalarAtom& a : nu.atoms())
    if (a.weight > 0.0) events.push_back({std::abs(a.x - x), a.weight});
  for (const ScalarCell& c : nu.cells()) {
    if (c.density == 0.0) continue;
    events.push_back({std::abs(c.lo - x), 0.0});
    events.push_back({std::abs(c.hi - x), 0.0});
  }
  std::sort(events.begin(), events.end());

  double best = 0.0;
  double g_left = 0.0, g_right = 0.0;
  for (const ScalarCell& c : nu.cells()) {
    if (c.lo < x && x <= c.hi) g_left = c.density;
    if (c.lo <= x && x < c.hi) g_right = c.density;
  }
  best = 0.5 * (g_left + g_right);

  double atoms_inside = 0.0;
  for (std::size_t k = 0; k < events.size();) {
    const double d = events[k].first;
    for (; k < events.size() && events[k].first == d; ++k) atoms_inside += events[k].second;
    if (d == 0.0) continue;
    const double dens = std::max(0.0, nu.density_integral(x + d) - nu.density_integral(x - d));
    best = std::max(best, (atoms_inside + dens) / (2.0 * d));
  }
  return best;
}

void GridFunction::validate() const {
  if (!std::isfinite(start) || !std::isfinite(step) || !(step > 0.0))
    throw std::invalid_argument("GridFunction: need finite start and step > 0");
  for (double v : values)
    if (std::isnan(v) || v < 0.0) throw std::invalid_argument("GridFunction: samples must be >= 0");
}

ScalarMeasure power_density(const GridFunction& g, double beta) {
  g.validate();
  std::vector<ScalarCell> cells;
  for (std::size_t k = 0; k < g.count(); ++k) {
    const double v = g.values[k];
    if (!std::isfinite(v)) throw std::invalid_argument("power_density: infinite sample");
    if (v == 0.0) continue;
    const double kd = static_cast<double>(k);
    cells.push_back({g.start + (kd - 0.5) * g.step, g.start + (kd + 0.5) * g.step, std::pow(v, beta)});
  }
  return ScalarMeasure({}, std::move(cells));
}

namespace {
void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("mbeta_maximal: beta must lie in (0, 1)");
}
}  // namespace

double mbeta_maximal(const GridFunction& g, double beta, double x) {
  check_beta(beta);
  return std::pow(hl_maximal(power_density(g, beta), x), 1.0 / beta);
}

std::vector<double> mbeta_maximal(const GridFunction& g, double beta, const std::vector<double>& xs) {
  check_beta(beta);
  const ScalarMeasure nu = power_density(g, beta);
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(std::pow(hl_maximal(nu, x), 1.0 / beta));
  return out;
}

void ConeSampling::validate() const {
  if (!(ratio > 1.0) || !std::isfinite(ratio)) throw std::invalid_argument("ConeSampling: ratio must exceed 1");
  if (x_samples < 2) throw std::invalid_argument("ConeSampling: need at least 2 x samples");
  if (refine_steps < 0) throw std::invalid_argument("ConeSampling: negative refine_steps");
  if (!(floor_rel > 0.0) || !(top_rel > 0.0))
    throw std::invalid_argument("ConeSampling: floor_rel and top_rel must be positive");
}

// ---------------------------------------------------------------------------
// CauchyField

CauchyField::CauchyField(const OpMeasure& mu, SchattenIndex norm)
    : rows_(mu.rows()), cols_(mu.cols()), norm_(norm) {
  const auto atoms = mu.atoms.atoms();
  const Eigen::Index size = rows_ * cols_;
  atom_stack_.resize(size, static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    xs_.push_back(atoms[i].x);
    atom_norms_.push_back(schatten_norm(atoms[i].value, norm));
    atom_stack_.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXcd>(atoms[i].value.data(), size);
    features_.push_back(atoms[i].x);
  }
  const auto cells = mu.density.cells();
  cell_stack_.resize(size, static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    lo_.push_back(cells[i].lo);
    hi_.push_back(cells[i].hi);
    cell_norms_.push_back(schatten_norm(cells[i].density, norm));
    cell_stack_.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXcd>(cells[i].density.data(), size);
    features_.push_back(cells[i].lo);
    features_.push_back(cells[i].hi);
  }
  std::sort(features_.begin(), features_.end());
  const Eigen::Index na = atom_stack_.cols(), nc = cell_stack_.cols();
  stacked_.resize(2 * size, na + nc);
  stacked_.topLeftCorner(size, na) = atom_stack_.real();
  stacked_.bottomLeftCorner(size, na) = atom_stack_.imag();
  stacked_.topRightCorner(size, nc) = cell_stack_.real();
  stacked_.bottomRightCorner(size, nc) = cell_stack_.imag();
}

ComplexMatrix CauchyField::value(Complex z) const {
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(rows_ * cols_);
  if (!xs_.empty()) {
    Eigen::VectorXcd w(static_cast<Eigen::Index>(xs_.size()));
    for (std::size_t i = 0; i < xs_.size(); ++i) w(static_cast<Eigen::Index>(i)) = 1.0 / (xs_[i] - z);
    acc.noalias() += atom_stack_ * w;
  }
  if (!lo_.empty()) {
    Eigen::VectorXcd w(static_cast<Eigen::Index>(lo_.size()));
    for (std::size_t i = 0; i < lo_.size(); ++i)
      w(static_cast<Eigen::Index>(i)) = std::log(Complex(hi_[i]) - z) - std::log(Complex(lo_[i]) - z);
    acc.noalias() += cell_stack_ * w;
  }
  return Eigen::Map<const ComplexMatrix>(acc.data(), rows_, cols_);
}

double CauchyField::norm_at(Complex z) const {
  if (rows_ == 1 && cols_ == 1) return std::abs(value(z)(0, 0));
  return schatten_norm_fast(value(z), norm_);
}

void CauchyField::norms_at(const std::vector<Complex>& zs, std::vector<double>& out) const {
  const auto m = static_cast<Eigen::Index>(zs.size());
  out.assign(zs.size(), 0.0);
  if (m == 0 || empty()) return;
  // complex product as one real GEMM: [Ar; Ai] [Wr Wi]
  const Eigen::Index size = rows_ * cols_;
  const auto na = static_cast<Eigen::Index>(xs_.size());
  Eigen::MatrixXd w(stacked_.cols(), 2 * m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double zr = zs[static_cast<std::size_t>(k)].real(), zi = zs[static_cast<std::size_t>(k)].imag();
    for (Eigen::Index i = 0; i < na; ++i) {
      const double dx = xs_[static_cast<std::size_t>(i)] - zr;
      const double inv = 1.0 / (dx * dx + zi * zi);
      w(i, k) = dx * inv;
      w(i, m + k) = zi * inv;
    }
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      const Complex z = zs[static_cast<std::size_t>(k)];
      const Complex l = std::log(Complex(hi_[i]) - z) - std::log(Complex(lo_[i]) - z);
      w(na + static_cast<Eigen::Index>(i), k) = l.real();
      w(na + static_cast<Eigen::Index>(i), m + k) = l.imag();
    }
  }
  const Eigen::MatrixXd prod = stacked_ * w;
  ComplexMatrix v(rows_, cols_);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::VectorXd re = prod.col(k).head(size) - prod.col(m + k).tail(size);
    const Eigen::VectorXd im = prod.col(m + k).head(size) + prod.col(k).tail(size);
    if (size == 1) {
      out[static_cast<std::size_t>(k)] = std::hypot(re(0), im(0));
      continue;
    }
    v.real() = Eigen::Map<const Eigen::MatrixXd>(re.data(), rows_, cols_);
    v.imag() = Eigen::Map<const Eigen::MatrixXd>(im.data(), rows_, cols_);
    out[static_cast<std::size_t>(k)] = schatten_norm_fast(v, norm_);
  }
}

double CauchyField::bound_at(Complex z) const {
  const double x = z.real(), y = z.imag();
  double b = 0.0;
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    const double dx = xs_[i] - x;
    b += atom_norms_[i] / std::sqrt(dx * dx + y * y);
  }
  for (std::size_t i = 0; i < lo_.size(); ++i)
    b += cell_norms_[i] * (std::asinh((hi_[i] - x) / y) - std::asinh((lo_[i] - x) / y));
  // headroom for rounding in the exact path
  return b * (1.0 + 1e-12);
}

bool CauchyField::is_atom(double x) const {
  auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
  return it != xs_.end() && *it == x && atom_norms_[static_cast<std::size_t>(it - xs_.begin())] > 0.0;
}

double CauchyField::nearest_feature(double x) const {
  if (features_.empty()) return kInf;
  auto it = std::lower_bound(features_.begin(), features_.end(), x);
  double d = kInf;
  if (it != features_.end()) d = std::min(d, *it - x);
  if (it != features_.begin()) d = std::min(d, x - *(it - 1));
  return d;
}

double CauchyField::extent(double x) const {
  if (features_.empty()) return 0.0;
  const double a = features_.front(), b = features_.back();
  return std::max({b - a, std::abs(x - a), std::abs(b - x)});
}

// ---------------------------------------------------------------------------
// Non-tangential maximal function

ConeEstimate nontangential_maximal(const CauchyField& field, double lambda, double r_min,
                                   const ConeSampling& s) {
  s.validate();
  if (!std::isfinite(lambda)) throw std::invalid_argument("nontangential_maximal: non-finite vertex");
  if (!(r_min >= 0.0) || !std::isfinite(r_min))
    throw std::invalid_argument("nontangential_maximal: r_min must be >= 0");
  ConeEstimate est;
  if (field.empty()) return est;
  if (r_min == 0.0 && field.is_atom(lambda)) {
    est.value = kInf;
    est.argmax = {lambda, 0.0};
    return est;
  }

  double span = field.extent(lambda);
  if (span == 0.0) span = std::max(r_min, 1.0);
  const double floor = std::min(s.floor_rel * span, field.nearest_feature(lambda) / 4.0);
  const double y_lo = std::max(r_min, floor);
  const double y_hi = std::max(s.top_rel * span, y_lo * s.ratio);

  std::vector<double> ys;
  for (double y = y_lo;; y *= s.ratio) {
    ys.push_back(y);
    if (y >= y_hi) break;
  }
  std::vector<double> us(static_cast<std::size_t>(s.x_samples));
  for (int j = 0; j < s.x_samples; ++j) us[static_cast<std::size_t>(j)] = -1.0 + 2.0 * j / (s.x_samples - 1);
  us.back() = 1.0;

  struct Sample {
    double u, y, bound;
  };
  std::vector<Sample> grid;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const bool full = !s.boundary_only || (k == 0 && r_min > 0.0);
    if (full) {
      for (double u : us) grid.push_back({u, ys[k], 0.0});
    } else {
      grid.push_back({-1.0, ys[k], 0.0});
      grid.push_back({1.0, ys[k], 0.0});
    }
  }
  for (Sample& p : grid) p.bound = field.bound_at({lambda + p.u * p.y, p.y});
  std::stable_sort(grid.begin(), grid.end(), [](const Sample& a, const Sample& b) { return a.bound > b.bound; });
  est.candidates = grid.size();

  double best = -1.0, best_u = 0.0, best_y = y_lo;
  auto eval = [&](double u, double y) {
    const Complex z(lambda + u * y, y);
    const double v = field.norm_at(z);
    ++est.samples;
    if (v > best) {
      best = v;
      best_u = u;
      best_y = y;
    }
    return v;
  };
  // chunks of candidates whose bound beats the running max, one product per
  // chunk; a later candidate in a chunk can only have value <= bound <= best,
  // so the max and its argmax match one-at-a-time evaluation
  constexpr std::size_t kChunk = 32;
  std::vector<Complex> zs;
  std::vector<double> vals;
  for (std::size_t i = 0; i < grid.size() && grid[i].bound > best;) {
    std::size_t end = i;
    zs.clear();
    while (end < grid.size() && end - i < kChunk && grid[end].bound > best) {
      zs.emplace_back(lambda + grid[end].u * grid[end].y, grid[end].y);
      ++end;
    }
    field.norms_at(zs, vals);
    for (std::size_t j = i; j < end; ++j) {
      ++est.samples;
      const double v = vals[j - i];
      if (v > best) {
        best = v;
        best_u = grid[j].u;
        best_y = grid[j].y;
      }
    }
    i = end;
  }
  if (best < 0.0) best = 0.0;

  if (s.refine_steps > 0 && best > 0.0) {
    const double u0 = best_u;
    const bool on_bottom = r_min > 0.0 && best_y == y_lo;
    const double t_lo = std::log(std::max(y_lo, best_y / s.ratio));
    const double t_hi = std::log(std::min(y_hi, best_y * s.ratio));
    golden_max(t_lo, t_hi, s.refine_steps, [&](double t) { return eval(u0, std::exp(t)); });
    if (!s.boundary_only || on_bottom) {
      const double du = 2.0 / (s.x_samples - 1);
      const double y0 = best_y;
      golden_max(std::max(-1.0, best_u - du), std::min(1.0, best_u + du), s.refine_steps,
                 [&](double u) { return eval(u, y0); });
    }
  }
  est.value = best;
  est.argmax = {lambda + best_u * best_y, best_y};
  return est;
}

ConeEstimate nontangential_maximal(const SimpleOpMeasure& mu, double lambda, double r_min, SchattenIndex norm,
                                   const ConeSampling& sampling) {
  return nontangential_maximal(CauchyField(OpMeasure(mu), norm), lambda, r_min, sampling);
}

ConeEstimate nontangential_maximal(const OpMeasure& mu, double lambda, double r_min, SchattenIndex norm,
                                   const ConeSampling& sampling) {
  return nontangential_maximal(CauchyField(mu, norm), lambda, r_min, sampling);
}

// ---------------------------------------------------------------------------

double poisson_average(const ScalarMeasure& nu, double x, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("poisson_average: r must be positive");
  double acc = 0.0;
  for (const ScalarAtom& a : nu.atoms()) {
    const double d = x - a.x;
    acc += a.weight * r / (d * d + r * r);
  }
  for (const ScalarCell& c : nu.cells())
    acc += c.density * (std::atan((c.hi - x) / r) - std::atan((c.lo - x) / r));
  return acc / kPi;
}

double weak_quasinorm(const GridFunction& f) {
  f.validate();
  if (f.values.empty()) throw std::invalid_argument("weak_quasinorm: empty grid");
  std::vector<double> v = f.values;
  std::sort(v.begin(), v.end(), std::greater<>());
  double best = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] == 0.0) break;
    best = std::max(best, v[k] * (static_cast<double>(k + 1) * f.step));
  }
  return best;
}

GridFunction sample_cells(double lo, double step, std::size_t cells, const std::function<double(double)>& f,
                          int threads) {
  if (!std::isfinite(lo) || !(step > 0.0) || !std::isfinite(step))
    throw std::invalid_argument("sample_cells: need finite lo and step > 0");
  if (cells == 0) throw std::invalid_argument("sample_cells: no cells");
  std::vector<double> edge(cells + 1);
  parallel_for(cells + 1, threads, [&](std::size_t k) { edge[k] = f(lo + static_cast<double>(k) * step); });
  GridFunction g;
  g.start = lo + 0.5 * step;
  g.step = step;
  g.values.resize(cells);
  for (std::size_t k = 0; k < cells; ++k) g.values[k] = std::min(edge[k], edge[k + 1]);
  return g;
}

CauchyHilbertDefect cauchy_hilbert_defect(const SimpleOpMeasure& mu, const ScalarMeasure& variation,
                                          double lambda, double r, double x, SchattenIndex norm) {
  if (!(r > 0.0)) throw std::invalid_argument("cauchy_hilbert_defect: r must be positive");
  if (!(std::abs(x) < r)) throw std::invalid_argument("cauchy_hilbert_defect: need |x| < r");
  ComplexMatrix far = mu.zero();
  for (const Atom& a : mu.atoms())
    if (std::abs(a.x - lambda) > 2.0 * r) far += a.value * (1.0 / (a.x - lambda));
  const ComplexMatrix c = cauchy(mu, Complex(lambda + x, r));
  CauchyHilbertDefect out;
  out.defect = schatten_norm(c - far, norm);
  out.bound = (2.0 + 4.0 * kPi) * hl_maximal(variation, lambda);
  return out;
}

}  // namespace oplab
