#ifndef OPLAB_TRANSFORMS_HPP
#define OPLAB_TRANSFORMS_HPP

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "oplab/opmeasure.hpp"

namespace oplab {

// Thrown by hilbert() when evaluated on an atom.
class UndefinedAtAtom : public std::domain_error {
 public:
  explicit UndefinedAtAtom(double x);
  double where() const { return x_; }

 private:
  double x_;
};

// Cμ(z) = ∫ dμ(t)/(t - z), Im z > 0. Density cells are integrated in closed
// form (log). Throws std::invalid_argument for Im z <= 0.
ComplexMatrix cauchy(const SimpleOpMeasure& mu, Complex z);
ComplexMatrix cauchy(const DensityOpMeasure& mu, Complex z);
ComplexMatrix cauchy(const OpMeasure& mu, Complex z);

// H_r μ(x) = Σ_{|x_i - x| >= r} e_i/(x - x_i).
ComplexMatrix hilbert_truncated(const SimpleOpMeasure& mu, double x, double r);

// Hμ(x) = Σ e_i/(x_i - x). Note the opposite kernel sign to
// hilbert_truncated: hilbert(μ, x) = -lim_{r→0} hilbert_truncated(μ, x, r).
ComplexMatrix hilbert(const SimpleOpMeasure& mu, double x);

// H♯μ(x) = sup_r ‖H_r μ(x)‖, exact: H_r is constant on r ∈ (d_{k+1}, d_k]
// for the distinct atom distances d_1 > d_2 > ..., so the sup is a max over
// the cumulative sums.
double hilbert_maximal(const SimpleOpMeasure& mu, double x, SchattenIndex norm);

// Mν(x) = sup_r ν((x - r, x + r))/(2r); +∞ at an atom.
double hl_maximal(const ScalarMeasure& nu, double x);

// Piecewise-constant samples: cell k is centred at start + k*step and has
// length step. Values are >= 0; +∞ is allowed (an atom hit on both edges).
struct GridFunction {
  double start = 0.0;
  double step = 1.0;
  std::vector<double> values;

  std::size_t count() const { return values.size(); }
  double node(std::size_t k) const { return start + static_cast<double>(k) * step; }
  void validate() const;
};

// ScalarMeasure with density |g|^beta on the cells of g.
ScalarMeasure power_density(const GridFunction& g, double beta);

// M_β g(x) = (M|g|^β(x))^{1/β}, 0 < β < 1.
double mbeta_maximal(const GridFunction& g, double beta, double x);
std::vector<double> mbeta_maximal(const GridFunction& g, double beta, const std::vector<double>& xs);

struct ConeSampling {
  double ratio = 1.05;        // geometric step of the y ladder
  int x_samples = 64;         // uniform in (x - λ)/y over [-1, 1], both ends included
  int refine_steps = 40;      // golden-section steps per refinement pass, 0 = off
  double floor_rel = 1e-6;    // ladder bottom, relative to the span
  double top_rel = 10.0;      // ladder top, relative to the span
  // Sample only the cone edges x = λ ± y (plus the segment y = r_min when
  // r_min > 0). ‖Cμ‖ is subharmonic, so the sup over the cone is reached on
  // its boundary and interior samples cannot raise it. false sweeps the
  // whole cone, which is slower and kept as a cross-check.
  bool boundary_only = true;

  void validate() const;
};

struct ConeEstimate {
  double value = 0.0;
  std::size_t samples = 0;  // exact evaluations of ‖Cμ‖
  std::size_t candidates = 0;  // grid points considered (bounded or evaluated)
  Complex argmax{0.0, 0.0};
};

// Cμ prepared for many evaluations: atoms and cells are stacked so that one
// evaluation is a single matrix-vector product.
class CauchyField {
 public:
  CauchyField(const OpMeasure& mu, SchattenIndex norm);

  ComplexMatrix value(Complex z) const;
  // ‖Cμ(z)‖ via schatten_norm_fast
  double norm_at(Complex z) const;
  // norm_at for a batch of points as one matrix product; out[k] for zs[k]
  void norms_at(const std::vector<Complex>& zs, std::vector<double>& out) const;
  // Σ‖e_i‖/|x_i - z| + Σ‖D_c‖ ∫_c dt/|t - z| >= norm_at(z)
  double bound_at(Complex z) const;

  bool empty() const { return xs_.empty() && lo_.empty(); }
  bool is_atom(double x) const;
  // Distance from x to the nearest atom or cell edge (+∞ if none).
  double nearest_feature(double x) const;
  // max(support diameter, largest distance from x to an atom or cell edge)
  double extent(double x) const;

 private:
  Eigen::Index rows_, cols_;
  SchattenIndex norm_;
  std::vector<double> xs_, atom_norms_;
  Eigen::MatrixXcd atom_stack_;  // atoms as rows, vectorised values
  std::vector<double> lo_, hi_, cell_norms_;
  Eigen::MatrixXcd cell_stack_;
  std::vector<double> features_;  // sorted atom positions and cell edges
  Eigen::MatrixXd stacked_;        // [Re; Im] of atoms then cells, for norms_at
};

// T_r^<μ(λ) = sup{‖Cμ(x+iy)‖ : y > r_min, |x - λ| < y}; r_min = 0 gives T^<.
// Grid samples whose cheap upper bound cannot beat the running max are
// skipped, which does not change the result.
ConeEstimate nontangential_maximal(const CauchyField& field, double lambda, double r_min,
                                   const ConeSampling& sampling = {});
ConeEstimate nontangential_maximal(const SimpleOpMeasure& mu, double lambda, double r_min,
                                   SchattenIndex norm, const ConeSampling& sampling = {});
ConeEstimate nontangential_maximal(const OpMeasure& mu, double lambda, double r_min,
                                   SchattenIndex norm, const ConeSampling& sampling = {});

// (1/π) ∫ r/((x - y)² + r²) dν(y)
double poisson_average(const ScalarMeasure& nu, double x, double r);

// sup_t t |{f > t}| of the step function: max_k v_(k) * k * step over the
// samples sorted descending. Throws std::invalid_argument on an empty grid.
double weak_quasinorm(const GridFunction& f);

// Cell k of the result covers [lo + k*step, lo + (k+1)*step] and carries
// min(f(left edge), f(right edge)). Evaluations run on `threads` workers.
GridFunction sample_cells(double lo, double step, std::size_t cells,
                          const std::function<double(double)>& f, int threads = 1);

// Terms of the pointwise estimate at vertex λ:
//   defect = ‖Cμ(λ + x + ir) - ∫_{|t-λ|>2r} dμ(t)/(t - λ)‖,
//   bound  = (2 + 4π) M‖μ‖(λ).
struct CauchyHilbertDefect {
  double defect = 0.0;
  double bound = 0.0;
};
CauchyHilbertDefect cauchy_hilbert_defect(const SimpleOpMeasure& mu, const ScalarMeasure& variation,
                                          double lambda, double r, double x, SchattenIndex norm);

}  // namespace oplab

#endif  // OPLAB_TRANSFORMS_HPP
