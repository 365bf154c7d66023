#ifndef OPLAB_OPMEASURE_HPP
#define OPLAB_OPMEASURE_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "oplab/dyadic.hpp"
#include "oplab/schatten.hpp"

namespace oplab {

struct Atom {
  double x = 0.0;
  ComplexMatrix value;
};

// μ = Σ_i δ_{x_i} e_i with all e_i of one shape. Positions are strictly
// increasing; atoms at bitwise-equal positions are merged by summation,
// nearby-but-distinct positions stay distinct.
class SimpleOpMeasure {
 public:
  SimpleOpMeasure(Eigen::Index rows, Eigen::Index cols);
  SimpleOpMeasure(Eigen::Index rows, Eigen::Index cols, std::vector<Atom> atoms);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  // Index range [first, last) of atoms lying in the half-open interval.
  std::pair<std::size_t, std::size_t> range(const Interval& delta) const;
  std::optional<std::size_t> atom_at(double x) const;
  // μ(Δ)
  ComplexMatrix mass(const Interval& delta) const;
  ComplexMatrix zero() const { return ComplexMatrix::Zero(rows_, cols_); }

 private:
  Eigen::Index rows_;
  Eigen::Index cols_;
  std::vector<Atom> atoms_;
};

// Constant matrix density on (lo, hi].
struct DensityCell {
  double lo = 0.0;
  double hi = 0.0;
  ComplexMatrix density;

  Interval interval() const { return {lo, hi}; }
};

// Piecewise-constant density measure: density · dx on each cell, zero
// outside. Cells are pairwise disjoint and sorted; gaps are zero density.
class DensityOpMeasure {
 public:
  DensityOpMeasure(Eigen::Index rows, Eigen::Index cols);
  DensityOpMeasure(Eigen::Index rows, Eigen::Index cols, std::vector<DensityCell> cells);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  std::span<const DensityCell> cells() const { return cells_; }
  bool empty() const { return cells_.empty(); }

  ComplexMatrix mass(const Interval& delta) const;
  // Density at x (zero off the cells).
  ComplexMatrix at(double x) const;

 private:
  Eigen::Index rows_;
  Eigen::Index cols_;
  std::vector<DensityCell> cells_;
};

// General measure in pair form: atomic part plus piecewise-constant density.
struct OpMeasure {
  SimpleOpMeasure atoms;
  DensityOpMeasure density;

  OpMeasure(SimpleOpMeasure a, DensityOpMeasure d);
  explicit OpMeasure(SimpleOpMeasure a);
  explicit OpMeasure(DensityOpMeasure d);

  Eigen::Index rows() const { return atoms.rows(); }
  Eigen::Index cols() const { return atoms.cols(); }
  ComplexMatrix mass(const Interval& delta) const;
};

// Non-negative scalar measure: atoms plus a non-negative step density.
struct ScalarAtom {
  double x = 0.0;
  double weight = 0.0;
};
struct ScalarCell {
  double lo = 0.0;
  double hi = 0.0;
  double density = 0.0;
};

class ScalarMeasure {
 public:
  ScalarMeasure() = default;
  ScalarMeasure(std::vector<ScalarAtom> atoms, std::vector<ScalarCell> cells);

  std::span<const ScalarAtom> atoms() const { return atoms_; }
  std::span<const ScalarCell> cells() const { return cells_; }
  bool empty() const { return atoms_.empty() && cells_.empty(); }

  // ν((lo, hi])
  double mass(const Interval& delta) const;
  // ν of the open interval (lo, hi)
  double mass_open(double lo, double hi) const;
  // ν([lo, hi]) from prefix sums, O(log n); not bit-exact against mass().
  double mass_closed(double lo, double hi) const;
  // ∫_{-∞}^t density
  double density_integral(double t) const;
  double total() const { return mass(Interval::real_line()); }
  double density_at(double x) const;
  std::optional<std::size_t> atom_at(double x) const;

 private:
  std::vector<ScalarAtom> atoms_;
  std::vector<ScalarCell> cells_;
  std::vector<double> atom_prefix_;  // size atoms_ + 1
  std::vector<double> cell_prefix_;  // ∫ density up to cells_[k].lo
};

// ‖μ‖(Δ) = sup Σ ‖μ(δ_n)‖ over disjoint intervals δ_n ⊂ Δ. For atoms this is
// Σ_{x_i ∈ Δ} ‖e_i‖; for densities ∫_Δ ‖density‖ dx, exact on the cells.
double total_variation(const SimpleOpMeasure& mu, const Interval& delta, SchattenIndex norm);
double total_variation(const DensityOpMeasure& mu, const Interval& delta, SchattenIndex norm);
double total_variation(const OpMeasure& mu, const Interval& delta, SchattenIndex norm);

// ‖μ‖(·) as a scalar measure.
ScalarMeasure variation_measure(const SimpleOpMeasure& mu, SchattenIndex norm);
ScalarMeasure variation_measure(const DensityOpMeasure& mu, SchattenIndex norm);
ScalarMeasure variation_measure(const OpMeasure& mu, SchattenIndex norm);

// μ_n = Σ_ℓ δ_{c(Q_ℓ)} μ(Q_ℓ) over the scale-n dyadic cells that carry atoms.
SimpleOpMeasure discretize(const SimpleOpMeasure& mu, int n);
// Same for a general measure; density cells contribute their integral over
// each dyadic cell they meet. Throws std::invalid_argument for unbounded cells.
SimpleOpMeasure discretize(const OpMeasure& mu, int n);

SimpleOpMeasure restrict(const SimpleOpMeasure& mu, const Interval& delta);
DensityOpMeasure restrict(const DensityOpMeasure& mu, const Interval& delta);
OpMeasure restrict(const OpMeasure& mu, const Interval& delta);
ScalarMeasure restrict(const ScalarMeasure& nu, const Interval& delta);

}  // namespace oplab

#endif  // OPLAB_OPMEASURE_HPP
