#ifndef OPLAB_SCATTERING_HPP
#define OPLAB_SCATTERING_HPP

#include <optional>
#include <stdexcept>
#include <vector>

#include "oplab/dyadic.hpp"
#include "oplab/opmeasure.hpp"
#include "oplab/schatten.hpp"

namespace oplab {

// I + B_0(z)J (or a similar system) is numerically singular.
class SingularSystem : public std::runtime_error {
 public:
  explicit SingularSystem(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kHermitianTol = 1e-12;

bool is_hermitian(const ComplexMatrix& h, double rel_tol = kHermitianTol);

// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
struct SpectralData {
  Eigen::VectorXd eigenvalues;
  ComplexMatrix eigenvectors;

  // Throws std::invalid_argument unless h is square and Hermitian to 1e-12.
  static SpectralData of(const ComplexMatrix& h);

  // [first, last) of eigenvalues in the half-open interval
  std::pair<Eigen::Index, Eigen::Index> range(const Interval& delta) const;
  ComplexMatrix projection(const Interval& delta) const;
  // ‖H - UΛU*‖_op / max(‖H‖_op, tiny)
  double reconstruction_residual(const ComplexMatrix& h) const;
  // Sorted eigenvalues with ties within 1e-12 * scale collapsed.
  std::vector<double> distinct() const;
};

ComplexMatrix spectral_projection(const ComplexMatrix& h, const Interval& delta);

// H_1 = H_0 + G*JG with G: C^n → C^k. Both spectra are computed at
// construction; everything below is a pure function of the cache.
class ScatteringModel {
 public:
  ScatteringModel(ComplexMatrix h0, ComplexMatrix g, ComplexMatrix j);

  const ComplexMatrix& H0() const { return h0_; }
  const ComplexMatrix& G() const { return g_; }
  const ComplexMatrix& J() const { return j_; }
  const ComplexMatrix& H1() const { return h1_; }
  // H_j for j = 0, 1
  const ComplexMatrix& H(int which) const;
  Eigen::Index n() const { return h0_.rows(); }
  Eigen::Index k() const { return g_.rows(); }

  const SpectralData& spectrum(int which) const;
  // G U_j: column m is G applied to the m-th eigenvector of H_j
  const ComplexMatrix& visible(int which) const;

 private:
  ComplexMatrix h0_, g_, j_, h1_;
  SpectralData s0_, s1_;
  ComplexMatrix w0_, w1_;
};

// μ_j(δ) = G E_{H_j}(δ) G*
ComplexMatrix sandwiched_measure(const ScatteringModel& model, const Interval& delta, int which = 0);

// μ_j realised as a simple measure: one atom per eigenvalue of H_j.
SimpleOpMeasure sandwiched_atoms(const ScatteringModel& model, int which = 0);

// B_j(z) = G (H_j - z)^{-1} G*, from the spectral cache. Throws
// std::invalid_argument for Im z = 0.
ComplexMatrix sandwiched_resolvent(const ScatteringModel& model, int which, Complex z);

struct ResolventResiduals {
  double r1 = 0.0;  // max of ‖(I+B_0J)(I-B_1J) - I‖, ‖(I-B_1J)(I+B_0J) - I‖
  double r2 = 0.0;  // ‖B_1 - (I+B_0J)^{-1}B_0‖
  double norm_b0 = 0.0, norm_b1 = 0.0;
  double tolerance = 0.0;  // 1e-10 (1 + ‖B_0‖)(1 + ‖B_1‖)
  bool pass() const { return r1 <= tolerance && r2 <= tolerance; }
};

// Operator norms throughout. Throws SingularSystem when the smallest
// singular value of I + B_0 J is below 1e-10 (relative to its largest).
ResolventResiduals resolvent_identity_residuals(const ScatteringModel& model, Complex z);

struct HypothesisReport {
  bool pass = true;
  double worst_margin = 0.0;  // min over probes of ν0(δ) - ‖μ_j(δ)‖_p
  double worst_ratio = 0.0;   // max over probes of ‖μ_j(δ)‖_p / ν0(δ)
  std::size_t probes = 0;
  std::optional<Interval> violation;  // first violating δ
  double tolerance = 1e-10;
};

// ‖G E_{H_j}(δ) G*‖_p <= ν0(δ) for the dyadic subdivisions of Δ (2^m equal
// pieces, m = 0..depth) and for every (prev(λ), λ] with λ an eigenvalue in
// Δ. p = ∞ gives the operator-norm form. A probe fails when
// lhs > ν0(δ) + tol * (ν0(δ) + ‖μ_j(ℝ)‖_p).
HypothesisReport hypothesis_check(const ScatteringModel& model, SchattenIndex p, const Interval& delta,
                                  const ScalarMeasure& nu0, int depth, int which = 0, double tol = 1e-10);

struct SmoothnessReport {
  double constant = 0.0;           // max over all probed δ of ‖μ_j(δ)‖/|δ|
  std::vector<double> per_depth;   // the same max restricted to depth m
};

// Kato-smoothness probe over dyadic δ ⊂ Δ. At finite dimension a G-visible
// eigenvalue shows up as per_depth doubling with m instead of a literal +∞.
SmoothnessReport kato_smoothness_constant(const ScatteringModel& model, int which, const Interval& delta,
                                          int depth);

// Det_q(I + B_0(λ + iε)J) with the toleranced zero test.
RegularizedDeterminant det_probe(const ScatteringModel& model, double lambda, double eps, int q);

// 4 × the spacing of the distinct eigenvalues of H_j around λ (0 when H_j has
// a single distinct eigenvalue).
double ladder_floor(const ScatteringModel& model, int which, double lambda);

struct EpsilonLadder {
  double lambda = 0.0;
  double floor = 0.0;
  std::vector<double> epsilons;
  std::vector<ComplexMatrix> values;
  std::vector<double> differences;  // ‖v_{k+1} - v_k‖
  double max_difference = 0.0;
  // d log‖v‖ / d log(1/ε) between the ends: ~1 at a pole, ~0 when converging
  double growth_slope = 0.0;
};

// B_j(λ + iε_k) along strictly decreasing ε. Throws std::invalid_argument if
// the ladder is not strictly decreasing or dips below ladder_floor().
EpsilonLadder boundary_ladder(const ScatteringModel& model, int which, double lambda,
                              const std::vector<double>& eps, SchattenIndex norm = SchattenIndex::operator_norm());

struct WaveProbe {
  std::vector<double> times;
  std::vector<ComplexVector> states;       // W(t)ψ
  std::vector<double> increments;          // ‖W(t_{m+1})ψ - W(t_m)ψ‖
  std::vector<double> isometry_defect;     // |‖W(t)ψ‖ - ‖E(Δ)ψ‖|
  std::vector<double> intertwining;        // ‖H_1 W(t)ψ - W(t) H_0 ψ‖ (ψ → E(Δ)ψ)
  // number of leading strictly decreasing increments
  std::size_t decreasing_window() const;
};

// W(t)ψ = e^{itH_1} e^{-itH_0} E_{H_0}(Δ)ψ through both eigenbases.
WaveProbe wave_probe(const ScatteringModel& model, const ComplexVector& psi, const std::vector<double>& times,
                     const std::optional<Interval>& delta = std::nullopt);

// Discretised multiplication operator on (0, 1): grid_n cells, `channels`
// internal dimensions. H_0 = diag(x_m) ⊗ I with basis index m*channels + c,
// and G's column block m is G(x_m) sqrt(1/grid_n).
ScatteringModel build_example_e1(int grid_n, int channels, const std::vector<ComplexMatrix>& g_samples,
                                 const ComplexMatrix& j);

std::vector<double> cell_midpoints(int grid_n);

// ν0 for the discretised model: atoms at the midpoints with weight
// ‖G(x_m)‖_{2p}^2 / grid_n.
ScalarMeasure example_nu0(const std::vector<ComplexMatrix>& g_samples, SchattenIndex p);

struct CorollarySides {
  double lhs = 0.0;  // ‖G‖_{2p}^2 of the stacked operator
  double rhs = 0.0;  // Σ ‖G(x_m)‖_{2p}^2 Δx
};

// p ∈ [1, ∞). Throws std::invalid_argument for p = ∞ or ragged samples.
CorollarySides corollary_inequality(const std::vector<ComplexMatrix>& g_samples, double cell_width, SchattenIndex p);

// H_0 = 0, G = |V|^{1/2}, J = sign(V) for a Hermitian V, so that G*JG = V.
ScatteringModel build_remark_model(const ComplexMatrix& v);

}  // namespace oplab

#endif  // OPLAB_SCATTERING_HPP
