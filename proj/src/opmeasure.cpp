#include "oplab/opmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace oplab {

namespace {

void check_shape(const ComplexMatrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols)
    throw std::invalid_argument(std::string(what) + ": matrix shape mismatch");
  if (!all_finite(m)) throw std::invalid_argument(std::string(what) + ": non-finite matrix entry");
}

double overlap(double lo, double hi, const Interval& delta) {
  return std::max(0.0, std::min(hi, delta.hi) - std::max(lo, delta.lo));
}

}  // namespace

// ---------------------------------------------------------------------------
// SimpleOpMeasure

SimpleOpMeasure::SimpleOpMeasure(Eigen::Index rows, Eigen::Index cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("SimpleOpMeasure: empty matrix shape");
}

SimpleOpMeasure::SimpleOpMeasure(Eigen::Index rows, Eigen::Index cols, std::vector<Atom> atoms)
    : SimpleOpMeasure(rows, cols) {
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.x)) throw std::invalid_argument("SimpleOpMeasure: non-finite atom position");
    check_shape(a.value, rows, cols, "SimpleOpMeasure");
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& a, const Atom& b) { return a.x < b.x; });
  for (Atom& a : atoms) {
    if (!atoms_.empty() && atoms_.back().x == a.x)
      atoms_.back().value += a.value;
    else
      atoms_.push_back(std::move(a));
  }
}

std::pair<std::size_t, std::size_t> SimpleOpMeasure::range(const Interval& delta) const {
  if (delta.empty()) return {0, 0};
  auto by_x = [](double v, const Atom& a) { return v < a.x; };
  const auto first = std::upper_bound(atoms_.begin(), atoms_.end(), delta.lo, by_x);
  const auto last = std::upper_bound(first, atoms_.end(), delta.hi, by_x);
  return {static_cast<std::size_t>(first - atoms_.begin()),
          static_cast<std::size_t>(last - atoms_.begin())};
}

std::optional<std::size_t> SimpleOpMeasure::atom_at(double x) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                             [](const Atom& a, double v) { return a.x < v; });
  if (it != atoms_.end() && it->x == x) return static_cast<std::size_t>(it - atoms_.begin());
  return std::nullopt;
}

ComplexMatrix SimpleOpMeasure::mass(const Interval& delta) const {
  ComplexMatrix out = zero();
  const auto [first, last] = range(delta);
  for (std::size_t i = first; i < last; ++i) out += atoms_[i].value;
  return out;
}

// ---------------------------------------------------------------------------
// DensityOpMeasure

DensityOpMeasure::DensityOpMeasure(Eigen::Index rows, Eigen::Index cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("DensityOpMeasure: empty matrix shape");
}

DensityOpMeasure::DensityOpMeasure(Eigen::Index rows, Eigen::Index cols,
                                   std::vector<DensityCell> cells)
    : DensityOpMeasure(rows, cols) {
  for (const DensityCell& c : cells) {
    if (!std::isfinite(c.lo) || !std::isfinite(c.hi) || !(c.lo < c.hi))
      throw std::invalid_argument("DensityOpMeasure: cells must be bounded with lo < hi");
    check_shape(c.density, rows, cols, "DensityOpMeasure");
  }
  std::sort(cells.begin(), cells.end(),
            [](const DensityCell& a, const DensityCell& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < cells.size(); ++i)
    if (cells[i - 1].hi > cells[i].lo) throw std::invalid_argument("DensityOpMeasure: overlapping cells");
  cells_ = std::move(cells);
}

ComplexMatrix DensityOpMeasure::mass(const Interval& delta) const {
  ComplexMatrix out = ComplexMatrix::Zero(rows_, cols_);
  if (delta.empty()) return out;
  for (const DensityCell& c : cells_) {
    const double len = overlap(c.lo, c.hi, delta);
    if (len > 0.0) out += len * c.density;
  }
  return out;
}

ComplexMatrix DensityOpMeasure::at(double x) const {
  auto it = std::lower_bound(cells_.begin(), cells_.end(), x,
                             [](const DensityCell& c, double v) { return c.hi < v; });
  if (it != cells_.end() && it->lo < x && x <= it->hi) return it->density;
  return ComplexMatrix::Zero(rows_, cols_);
}

// ---------------------------------------------------------------------------
// OpMeasure

OpMeasure::OpMeasure(SimpleOpMeasure a, DensityOpMeasure d) : atoms(std::move(a)), density(std::move(d)) {
  if (atoms.rows() != density.rows() || atoms.cols() != density.cols())
    throw std::invalid_argument("OpMeasure: atomic and density parts differ in shape");
}

OpMeasure::OpMeasure(SimpleOpMeasure a)
    : atoms(std::move(a)), density(atoms.rows(), atoms.cols()) {}

OpMeasure::OpMeasure(DensityOpMeasure d)
    : atoms(d.rows(), d.cols()), density(std::move(d)) {}

ComplexMatrix OpMeasure::mass(const Interval& delta) const {
  return atoms.mass(delta) + density.mass(delta);
}

// ---------------------------------------------------------------------------
// ScalarMeasure

ScalarMeasure::ScalarMeasure(std::vector<ScalarAtom> atoms, std::vector<ScalarCell> cells) {
  for (const ScalarAtom& a : atoms)
    if (!std::isfinite(a.x) || !std::isfinite(a.weight) || a.weight < 0.0)
      throw std::invalid_argument("ScalarMeasure: atoms need finite position and weight >= 0");
  for (const ScalarCell& c : cells)
    if (!std::isfinite(c.lo) || !std::isfinite(c.hi) || !(c.lo < c.hi) ||
        !std::isfinite(c.density) || c.density < 0.0)
      throw std::invalid_argument("ScalarMeasure: cells need lo < hi and density >= 0");
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const ScalarAtom& a, const ScalarAtom& b) { return a.x < b.x; });
  for (const ScalarAtom& a : atoms) {
    if (!atoms_.empty() && atoms_.back().x == a.x)
      atoms_.back().weight += a.weight;
    else
      atoms_.push_back(a);
  }
  std::sort(cells.begin(), cells.end(),
            [](const ScalarCell& a, const ScalarCell& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < cells.size(); ++i)
    if (cells[i - 1].hi > cells[i].lo) throw std::invalid_argument("ScalarMeasure: overlapping cells");
  cells_ = std::move(cells);
  atom_prefix_.assign(atoms_.size() + 1, 0.0);
  for (std::size_t i = 0; i < atoms_.size(); ++i) atom_prefix_[i + 1] = atom_prefix_[i] + atoms_[i].weight;
  cell_prefix_.assign(cells_.size() + 1, 0.0);
  for (std::size_t i = 0; i < cells_.size(); ++i)
    cell_prefix_[i + 1] = cell_prefix_[i] + cells_[i].density * (cells_[i].hi - cells_[i].lo);
}

double ScalarMeasure::density_integral(double t) const {
  // first cell whose right end is >= t
  auto it = std::lower_bound(cells_.begin(), cells_.end(), t,
                             [](const ScalarCell& c, double v) { return c.hi < v; });
  const auto k = static_cast<std::size_t>(it - cells_.begin());
  if (it == cells_.end()) return cell_prefix_[k];
  return cell_prefix_[k] + it->density * std::max(0.0, t - it->lo);
}

double ScalarMeasure::mass_closed(double lo, double hi) const {
  if (lo > hi) return 0.0;
  auto first = std::lower_bound(atoms_.begin(), atoms_.end(), lo,
                                [](const ScalarAtom& a, double v) { return a.x < v; });
  auto last = std::upper_bound(atoms_.begin(), atoms_.end(), hi,
                               [](double v, const ScalarAtom& a) { return v < a.x; });
  double m = 0.0;
  if (last > first)
    m = atom_prefix_[static_cast<std::size_t>(last - atoms_.begin())] -
        atom_prefix_[static_cast<std::size_t>(first - atoms_.begin())];
  return m + std::max(0.0, density_integral(hi) - density_integral(lo));
}

double ScalarMeasure::mass(const Interval& delta) const {
  if (delta.empty()) return 0.0;
  auto by_x = [](double v, const ScalarAtom& a) { return v < a.x; };
  auto first = std::upper_bound(atoms_.begin(), atoms_.end(), delta.lo, by_x);
  auto last = std::upper_bound(first, atoms_.end(), delta.hi, by_x);
  double m = 0.0;
  for (auto it = first; it != last; ++it) m += it->weight;
  for (const ScalarCell& c : cells_) m += c.density * overlap(c.lo, c.hi, delta);
  return m;
}

double ScalarMeasure::mass_open(double lo, double hi) const {
  if (!(lo < hi)) return 0.0;
  auto first = std::upper_bound(atoms_.begin(), atoms_.end(), lo,
                                [](double v, const ScalarAtom& a) { return v < a.x; });
  auto last = std::lower_bound(first, atoms_.end(), hi,
                               [](const ScalarAtom& a, double v) { return a.x < v; });
  double m = 0.0;
  for (auto it = first; it != last; ++it) m += it->weight;
  for (const ScalarCell& c : cells_) m += c.density * overlap(c.lo, c.hi, Interval{lo, hi});
  return m;
}

double ScalarMeasure::density_at(double x) const {
  auto it = std::lower_bound(cells_.begin(), cells_.end(), x,
                             [](const ScalarCell& c, double v) { return c.hi < v; });
  if (it != cells_.end() && it->lo < x) return it->density;
  return 0.0;
}

std::optional<std::size_t> ScalarMeasure::atom_at(double x) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                             [](const ScalarAtom& a, double v) { return a.x < v; });
  if (it != atoms_.end() && it->x == x && it->weight > 0.0)
    return static_cast<std::size_t>(it - atoms_.begin());
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Operations

double total_variation(const SimpleOpMeasure& mu, const Interval& delta, SchattenIndex norm) {
  const auto [first, last] = mu.range(delta);
  double tv = 0.0;
  for (std::size_t i = first; i < last; ++i) tv += schatten_norm(mu.atoms()[i].value, norm);
  return tv;
}

double total_variation(const DensityOpMeasure& mu, const Interval& delta, SchattenIndex norm) {
  if (delta.empty()) return 0.0;
  double tv = 0.0;
  for (const DensityCell& c : mu.cells()) {
    const double len = overlap(c.lo, c.hi, delta);
    if (len > 0.0) tv += len * schatten_norm(c.density, norm);
  }
  return tv;
}

double total_variation(const OpMeasure& mu, const Interval& delta, SchattenIndex norm) {
  // atomic and absolutely continuous parts are mutually singular
  return total_variation(mu.atoms, delta, norm) + total_variation(mu.density, delta, norm);
}

ScalarMeasure variation_measure(const SimpleOpMeasure& mu, SchattenIndex norm) {
  std::vector<ScalarAtom> atoms;
  atoms.reserve(mu.size());
  for (const Atom& a : mu.atoms()) atoms.push_back({a.x, schatten_norm(a.value, norm)});
  return ScalarMeasure(std::move(atoms), {});
}

ScalarMeasure variation_measure(const DensityOpMeasure& mu, SchattenIndex norm) {
  std::vector<ScalarCell> cells;
  for (const DensityCell& c : mu.cells()) cells.push_back({c.lo, c.hi, schatten_norm(c.density, norm)});
  return ScalarMeasure({}, std::move(cells));
}

ScalarMeasure variation_measure(const OpMeasure& mu, SchattenIndex norm) {
  ScalarMeasure a = variation_measure(mu.atoms, norm);
  ScalarMeasure d = variation_measure(mu.density, norm);
  return ScalarMeasure({a.atoms().begin(), a.atoms().end()}, {d.cells().begin(), d.cells().end()});
}

SimpleOpMeasure discretize(const SimpleOpMeasure& mu, int n) {
  std::vector<Atom> out;
  std::optional<DyadicInterval> current;
  for (const Atom& a : mu.atoms()) {
    const DyadicInterval q = containing(a.x, n);
    if (current && *current == q) {
      out.back().value += a.value;
    } else {
      current = q;
      out.push_back({q.center(), a.value});
    }
  }
  return SimpleOpMeasure(mu.rows(), mu.cols(), std::move(out));
}

SimpleOpMeasure discretize(const OpMeasure& mu, int n) {
  std::map<std::int64_t, ComplexMatrix> mass;
  auto add = [&](std::int64_t j, const ComplexMatrix& v) {
    auto [it, fresh] = mass.try_emplace(j, v);
    if (!fresh) it->second += v;
  };
  for (const Atom& a : mu.atoms.atoms()) add(containing(a.x, n).index(), a.value);
  for (const DensityCell& c : mu.density.cells()) {
    if (!std::isfinite(c.lo) || !std::isfinite(c.hi)) throw std::invalid_argument("discretize: unbounded cell");
    const auto first = static_cast<std::int64_t>(std::floor(std::ldexp(c.lo, n)));
    const auto last = static_cast<std::int64_t>(std::ceil(std::ldexp(c.hi, n))) - 1;
    for (std::int64_t j = first; j <= last; ++j) {
      const DyadicInterval q(j, n);
      const double len = std::min(c.hi, q.right()) - std::max(c.lo, q.left());
      if (len > 0.0) add(j, c.density * len);
    }
  }
  std::vector<Atom> out;
  out.reserve(mass.size());
  for (auto& [j, v] : mass) out.push_back({DyadicInterval(j, n).center(), std::move(v)});
  return SimpleOpMeasure(mu.rows(), mu.cols(), std::move(out));
}

SimpleOpMeasure restrict(const SimpleOpMeasure& mu, const Interval& delta) {
  const auto [first, last] = mu.range(delta);
  std::vector<Atom> kept(mu.atoms().begin() + static_cast<std::ptrdiff_t>(first),
                         mu.atoms().begin() + static_cast<std::ptrdiff_t>(last));
  return SimpleOpMeasure(mu.rows(), mu.cols(), std::move(kept));
}

DensityOpMeasure restrict(const DensityOpMeasure& mu, const Interval& delta) {
  std::vector<DensityCell> kept;
  for (const DensityCell& c : mu.cells()) {
    const double lo = std::max(c.lo, delta.lo);
    const double hi = std::min(c.hi, delta.hi);
    if (lo < hi) kept.push_back({lo, hi, c.density});
  }
  return DensityOpMeasure(mu.rows(), mu.cols(), std::move(kept));
}

OpMeasure restrict(const OpMeasure& mu, const Interval& delta) {
  return OpMeasure(restrict(mu.atoms, delta), restrict(mu.density, delta));
}

ScalarMeasure restrict(const ScalarMeasure& nu, const Interval& delta) {
  std::vector<ScalarAtom> atoms;
  for (const ScalarAtom& a : nu.atoms())
    if (delta.contains(a.x)) atoms.push_back(a);
  std::vector<ScalarCell> cells;
  for (const ScalarCell& c : nu.cells()) {
    const double lo = std::max(c.lo, delta.lo);
    const double hi = std::min(c.hi, delta.hi);
    if (lo < hi) cells.push_back({lo, hi, c.density});
  }
  return ScalarMeasure(std::move(atoms), std::move(cells));
}

}  // namespace oplab
