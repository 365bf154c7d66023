// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oplab/cli.hpp"
#include "oplab/czd.hpp"
#include "oplab/ensembles.hpp"
#include "oplab/scattering.hpp"
#include "oplab/transforms.hpp"

using namespace oplab;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint64_t kMasterSeed = 20241017;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// the audit ensemble shared by criteria 2 and 3
struct Item {
  SimpleOpMeasure mu;
  SchattenIndex norm;
};

std::vector<Item> audit_ensemble() {
  std::vector<Item> out;
  MeasureSpec spec;  // 1..200 atoms, up to 16×16, support [-1, 1)
  for (std::size_t i = 0; i < 200; ++i) {
    std::mt19937_64 rng(stream_seed(kMasterSeed, i));
    SimpleOpMeasure mu = random_simple_measure(rng, spec);
    out.push_back({std::move(mu), random_norm(rng)});
  }
  return out;
}

// ---- 1 ----
Outcome criterion1() {
  const SimpleOpMeasure mu(1, 1, {{0.0, ComplexMatrix::Ones(1, 1)}});
  const GridSpec grid{-50.0, 0.01, 10000};
  WeakNormOptions opt;
  struct Case {
    MaximalOperator op;
    double exact;
  } cases[] = {{MaximalOperator::M, 1.0}, {MaximalOperator::H, 2.0}, {MaximalOperator::T, 2.0 * std::sqrt(2.0)}};
  Outcome o;
  for (const auto& c : cases) {
    const auto r = weak_norm_audit(mu, SchattenIndex::operator_norm(), c.op, grid, opt);
    const double rel = std::abs(r.quasinorm - c.exact) / c.exact;
    o.pass = o.pass && rel <= 0.01;
    o.detail += to_string(c.op) + "=" + fmt("%.6f", r.quasinorm) + " ";
  }
  return o;
}

// ---- 2 ----
Outcome criterion2(const std::vector<Item>& items) {
  const double cx = kPi * kPi;
  // coarse grid for the expensive operators, finer for M and H
  const GridSpec coarse{-10.0, 20.0 / 256, 256};
  const GridSpec fine{-10.0, 20.0 / 2048, 2048};
  WeakNormOptions opt;
  opt.c_x = cx;
  opt.cone.boundary_only = true;
  opt.cone.ratio = 1.2;
  opt.cone.refine_steps = 20;
  const MaximalOperator ops[] = {MaximalOperator::M, MaximalOperator::H, MaximalOperator::HSharp, MaximalOperator::T};
  double max_ratio[4] = {0, 0, 0, 0};
  double min_cx[4] = {0, 0, 0, 0};
  Outcome o;
  for (const auto& it : items) {
    for (int k = 0; k < 4; ++k) {
      const GridSpec& g = (ops[k] == MaximalOperator::HSharp || ops[k] == MaximalOperator::T) ? coarse : fine;
      const auto r = weak_norm_audit(it.mu, it.norm, ops[k], g, opt);
      o.pass = o.pass && r.pass;
      max_ratio[k] = std::max(max_ratio[k], r.quasinorm / r.reference);
      min_cx[k] = std::max(min_cx[k], r.minimal_cx.value_or(INFINITY));
    }
  }
  for (int k = 0; k < 4; ++k)
    o.detail += to_string(ops[k]) + ": max ratio " + fmt("%.3f", max_ratio[k]) + " (limit " +
                fmt("%.0f", weak_type_constant(ops[k], cx)) + ", min feasible C_X " + fmt("%.3g", min_cx[k]) + "); ";
  return o;
}

// ---- 3 ----
Outcome criterion3(const std::vector<Item>& items) {
  const double factors[] = {0.25, 1.0, 4.0, 16.0, 64.0};
  Outcome o;
  std::size_t runs = 0, failed = 0;
  double worst_integral = 0.0;
  std::string first_fail;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    const double total = total_variation(it.mu, Interval::real_line(), it.norm);
    for (double f : factors) {
      const CZDecomposition dec = decompose(it.mu, f * total, it.norm);
      const CZReport rep = verify_decomposition(it.mu, dec);
      ++runs;
      if (rep.integral_limit > 0.0) worst_integral = std::max(worst_integral, rep.integral / rep.integral_limit);
      if (!rep.all_pass()) {
        ++failed;
        if (first_fail.empty())
          for (const auto& c : rep.checks)
            if (!c.pass) {
              first_fail = "item " + std::to_string(i) + " " + c.name + ": " + c.detail;
              break;
            }
      }
    }
  }
  o.pass = failed == 0;
  o.detail = std::to_string(runs) + " decompositions, " + std::to_string(failed) + " failing, worst integral/limit " +
             fmt("%.4f", worst_integral);
  if (!first_fail.empty()) o.detail += "; " + first_fail;
  return o;
}

// ---- 4 ----
Outcome criterion4() {
  Outcome o;
  MeasureSpec spec;
  spec.max_atoms = 100;
  spec.max_dim = 8;
  double worst = 0.0;  // max defect/bound
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    std::mt19937_64 rng(stream_seed(kMasterSeed + 4, i));
    const SimpleOpMeasure mu = random_simple_measure(rng, spec);
    const SchattenIndex norm = random_norm(rng);
    const ScalarMeasure var = variation_measure(mu, norm);
    std::uniform_real_distribution<double> lam(-1.5, 1.5), logr(std::log(1e-4), std::log(2.0)), u(-1.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      const double lambda = lam(rng);
      const double r = std::exp(logr(rng));
      const double x = u(rng) * r * (1.0 - 1e-9);
      const auto d = cauchy_hilbert_defect(mu, var, lambda, r, x, norm);
      ++checked;
      const double ratio = d.defect / d.bound;
      worst = std::max(worst, ratio);
      if (!(d.defect <= d.bound)) o.pass = false;
    }
  }
  o.detail = std::to_string(checked) + " triples, max defect/bound " + fmt("%.4f", worst) + " (margin " +
             fmt("%.4f", 1.0 - worst) + ")";
  return o;
}

// ---- 5 ----
Outcome criterion5() {
  Outcome o;
  double worst = 0.0;
  std::size_t checked = 0, singular = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    std::mt19937_64 rng(stream_seed(kMasterSeed + 5, i));
    std::uniform_int_distribution<int> dim(1, 24);
    const int n = dim(rng);
    std::uniform_int_distribution<int> kd(1, n);
    const ScatteringModel model = random_model(rng, n, kd(rng));
    std::uniform_real_distribution<double> re(-3.0, 3.0), le(-2.0, 1.0);
    for (int t = 0; t < 10; ++t) {
      const double y = std::pow(10.0, le(rng));
      const Complex z(re(rng), t % 2 ? -y : y);
      try {
        const auto r = resolvent_identity_residuals(model, z);
        ++checked;
        worst = std::max(worst, std::max(r.r1, r.r2) / r.tolerance);
        o.pass = o.pass && r.pass();
      } catch (const SingularSystem&) {
        ++singular;
        o.pass = false;
      }
    }
  }
  o.detail = std::to_string(checked) + " (model, z) pairs, max residual/tolerance " + fmt("%.3g", worst) +
             ", singular " + std::to_string(singular);
  return o;
}

// ---- 6 ----
Outcome criterion6() {
  Outcome o;
  std::size_t scalar = 0, checked = 0;
  double worst_gap = -INFINITY, worst_eq = 0.0;
  const double ps[] = {1.0, 2.0, 4.0};
  for (std::size_t i = 0; i < 1000; ++i) {
    std::mt19937_64 rng(stream_seed(kMasterSeed + 6, i));
    std::uniform_int_distribution<int> gn(1, 32), dim(1, 6), pick(0, 3);
    const int grid_n = gn(rng);
    const bool scalar_case = pick(rng) == 0;
    const int k = scalar_case ? 1 : dim(rng);
    const int ch = scalar_case ? 1 : dim(rng);
    std::vector<ComplexMatrix> g;
    for (int m = 0; m < grid_n; ++m) g.push_back(gaussian_matrix(rng, k, ch));
    for (double p : ps) {
      const auto s = corollary_inequality(g, 1.0 / grid_n, SchattenIndex(p));
      ++checked;
      worst_gap = std::max(worst_gap, s.lhs - s.rhs);
      o.pass = o.pass && s.lhs <= s.rhs + 1e-10;
      if (scalar_case) {
        worst_eq = std::max(worst_eq, std::abs(s.lhs - s.rhs));
        o.pass = o.pass && std::abs(s.lhs - s.rhs) <= 1e-10;
      }
    }
    scalar += scalar_case;
  }
  // two channels: diag(1,0) on the first half, diag(0,1) on the second
  std::vector<ComplexMatrix> two;
  for (int m = 0; m < 64; ++m) {
    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(m < 32 ? 0 : 1, m < 32 ? 0 : 1) = 1.0;
    two.push_back(d);
  }
  const auto s2 = corollary_inequality(two, 1.0 / 64, SchattenIndex(2.0));
  const auto s1 = corollary_inequality(two, 1.0 / 64, SchattenIndex(1.0));
  const bool example = std::abs(s2.lhs - 1.0 / std::sqrt(2.0)) <= 1e-12 && std::abs(s2.rhs - 1.0) <= 1e-12 &&
                       std::abs(s1.lhs - 1.0) <= 1e-12 && std::abs(s1.rhs - 1.0) <= 1e-12;
  o.pass = o.pass && example;
  o.detail = std::to_string(checked) + " (operator, p) checks, max lhs-rhs " + fmt("%.3g", worst_gap) + ", " +
             std::to_string(scalar) + " scalar-channel operators with max |lhs-rhs| " + fmt("%.3g", worst_eq) +
             ", two-channel p=2 lhs " + fmt("%.12f", s2.lhs) + " rhs " + fmt("%.12f", s2.rhs);
  return o;
}

// ---- 7 ----
// sup of ‖Cμ_n(z) - Cμ(z)‖ over Im z >= r. The difference is analytic and
// vanishes at infinity, so the sup sits on the line Im z = r.
double line_sup(const SimpleOpMeasure& mn, const OpMeasure& mu, SchattenIndex norm, double r) {
  std::vector<Atom> atoms(mn.atoms().begin(), mn.atoms().end());
  for (const auto& x : mu.atoms.atoms()) atoms.push_back({x.x, -x.value});
  std::vector<DensityCell> cells;
  for (auto c : mu.density.cells()) {
    c.density = -c.density;
    cells.push_back(std::move(c));
  }
  const OpMeasure d(SimpleOpMeasure(mn.rows(), mn.cols(), std::move(atoms)),
                    DensityOpMeasure(mn.rows(), mn.cols(), std::move(cells)));
  const CauchyField field(d, norm);
  auto f = [&](double x) { return field.norm_at({x, r}); };
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& a : d.atoms.atoms()) lo = std::min(lo, a.x), hi = std::max(hi, a.x);
  for (const auto& c : d.density.cells()) lo = std::min(lo, c.lo), hi = std::max(hi, c.hi);
  lo -= 20.0 * r;
  hi += 20.0 * r;
  const double step = r / 8.0;
  double best = 0.0, arg = lo;
  for (double x = lo; x <= hi; x += step) {
    const double v = f(x);
    if (v > best) best = v, arg = x;
  }
  // golden-section polish around the best sample
  double u = arg - step, w = arg + step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 40; ++it) {
    const double c = w - g * (w - u), e = u + g * (w - u);
    if (f(c) > f(e)) w = e;
    else u = c;
  }
  return std::max(best, f(0.5 * (u + w)));
}

// μ_n(Q) = μ(Q) on every dyadic Q of scale m <= n meeting [lo, hi]
double worst_cell_mass(const OpMeasure& mu, const SimpleOpMeasure& mn, SchattenIndex norm, int n, double lo,
                       double hi, std::size_t& checked) {
  double worst = 0.0;
  for (int m = n - 6; m <= n; ++m) {
    const auto first = static_cast<std::int64_t>(std::floor(std::ldexp(lo, m)));
    const auto last = static_cast<std::int64_t>(std::ceil(std::ldexp(hi, m)));
    for (std::int64_t j = first; j <= last; ++j) {
      const Interval q = DyadicInterval(j, m).bounds();
      const double scale = total_variation(mu, q, norm);
      if (scale == 0.0) continue;
      worst = std::max(worst, schatten_norm(mn.mass(q) - mu.mass(q), norm) / scale);
      ++checked;
    }
  }
  return worst;
}

Outcome criterion7() {
  Outcome o;
  MeasureSpec spec;
  spec.max_atoms = 50;
  spec.max_dim = 6;
  const double r = 0.05;
  const int scales[] = {6, 7, 8, 9, 10};
  std::size_t mono_fail = 0, mass_checked = 0, atomic_non_mono = 0;
  double worst_mass = 0.0, worst_step = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    // general measures: piecewise-constant matrix densities
    std::mt19937_64 rng(stream_seed(kMasterSeed + 7, i));
    const OpMeasure mu = random_density_measure(rng, spec, 8);
    const SchattenIndex norm = random_norm(rng);
    double prev = INFINITY;
    for (int n : scales) {
      const SimpleOpMeasure mn = discretize(mu, n);
      const double e = line_sup(mn, mu, norm, r);
      if (!(e < prev)) ++mono_fail;
      if (std::isfinite(prev)) worst_step = std::max(worst_step, e / prev);
      prev = e;
      worst_mass = std::max(worst_mass, worst_cell_mass(mu, mn, norm, n, spec.support_lo, spec.support_hi, mass_checked));
    }
    // purely atomic measures, reported only: an atom near a scale-n centre
    // makes the error grow at scale n+1, so no monotonicity is expected
    std::mt19937_64 rng2(stream_seed(kMasterSeed + 70, i));
    const OpMeasure atomic(random_simple_measure(rng2, spec));
    prev = INFINITY;
    for (int n : scales) {
      const SimpleOpMeasure mn = discretize(atomic, n);
      const double e = line_sup(mn, atomic, norm, r);
      if (!(e < prev)) ++atomic_non_mono;
      prev = e;
      worst_mass = std::max(worst_mass, worst_cell_mass(atomic, mn, norm, n, spec.support_lo, spec.support_hi, mass_checked));
    }
  }
  o.pass = mono_fail == 0 && worst_mass <= 1e-12;
  o.detail = "density measures, scales 6..10, r=" + fmt("%.2f", r) + ": non-monotone steps " +
             std::to_string(mono_fail) + ", worst step ratio " + fmt("%.3f", worst_step) + "; " +
             std::to_string(mass_checked) + " cell masses with max rel error " + fmt("%.3g", worst_mass) +
             "; atomic measures (not judged): " + std::to_string(atomic_non_mono) + " non-monotone steps of 80";
  return o;
}

// ---- 8 ----
std::vector<ComplexMatrix> scalar_g(int grid_n) {
  std::vector<ComplexMatrix> g;
  for (double x : cell_midpoints(grid_n)) g.push_back(smooth_g(x, 1, 1));
  return g;
}

Outcome criterion8() {
  Outcome o;
  const int sizes[] = {256, 512, 1024};
  const double lambda = 0.5;
  std::vector<std::size_t> windows;
  std::vector<double> ladder_diff;
  double worst_iso = 0.0;
  bool increments_ok = true;
  for (int n : sizes) {
    const ScatteringModel model = build_example_e1(n, 1, scalar_g(n), ComplexMatrix::Ones(1, 1));
    // hat wavepacket centred at 1/2
    ComplexVector psi(n);
    const auto x = cell_midpoints(n);
    for (int m = 0; m < n; ++m) psi(m) = std::max(0.0, 1.0 - std::abs(x[m] - 0.5) / 0.25);
    psi /= psi.norm();
    std::vector<double> times;
    for (int m = 0; m <= 12; ++m) times.push_back(std::ldexp(10.0, m));
    const WaveProbe w = wave_probe(model, psi, times);
    windows.push_back(w.decreasing_window());
    for (double d : w.isometry_defect) worst_iso = std::max(worst_iso, d);
    if (w.decreasing_window() < 2) increments_ok = false;

    const double spacing = ladder_floor(model, 0, lambda) / 4.0;
    std::vector<double> eps;
    for (int i = 0; i < 10; ++i) eps.push_back(spacing * 40.0 * std::pow(0.1, i / 9.0));
    eps.back() = ladder_floor(model, 0, lambda);
    const EpsilonLadder lad = boundary_ladder(model, 0, lambda, eps);
    ladder_diff.push_back(lad.max_difference);
  }
  const bool grows = windows[1] > windows[0] && windows[2] > windows[1];
  double min_shrink = INFINITY;
  for (std::size_t i = 1; i < ladder_diff.size(); ++i) min_shrink = std::min(min_shrink, ladder_diff[i - 1] / ladder_diff[i]);
  o.pass = increments_ok && grows && worst_iso <= 1e-10 && min_shrink >= 2.0;
  o.detail = std::string("increments decreasing: ") + (increments_ok ? "yes" : "no") + ", window growth: " +
             (grows ? "yes" : "no") + ", ladder shrink >= 2: " + (min_shrink >= 2.0 ? "yes" : "no") + "; windows " +
             std::to_string(windows[0]) + "/" + std::to_string(windows[1]) + "/" +
             std::to_string(windows[2]) + ", max isometry defect " + fmt("%.3g", worst_iso) +
             ", ladder max-difference shrink per doubling " + fmt("%.4f", ladder_diff[0] / ladder_diff[1]) + ", " +
             fmt("%.4f", ladder_diff[1] / ladder_diff[2]);
  return o;
}

// ---- 9 ----
bool svd_invertible(const ComplexMatrix& a) {
  const auto sv = singular_values(a);
  return sv.back() > kInvertibilityThreshold;
}

Outcome criterion9() {
  Outcome o;
  std::size_t agree = 0, total = 0;
  bool j0_exact = true;
  for (std::size_t i = 0; i < 100; ++i) {
    std::mt19937_64 rng(stream_seed(kMasterSeed + 9, i));
    std::uniform_int_distribution<int> dim(1, 16);
    const int n = dim(rng);
    std::uniform_int_distribution<int> kd(1, n), qd(1, 3);
    const ScatteringModel model = random_model(rng, n, kd(rng));
    std::uniform_real_distribution<double> lam(-2.0, 2.0), le(-3.0, 0.0);
    const double lambda = lam(rng), eps = std::pow(10.0, le(rng));
    const int q = qd(rng);
    const auto d = det_probe(model, lambda, eps, q);
    const ComplexMatrix a = ComplexMatrix::Identity(model.k(), model.k()) +
                            sandwiched_resolvent(model, 0, {lambda, eps}) * model.J();
    ++total;
    agree += d.invertible == svd_invertible(a);
    // J = 0
    const ScatteringModel free(model.H0(), model.G(), ComplexMatrix::Zero(model.k(), model.k()));
    j0_exact = j0_exact && det_probe(free, lambda, eps, q).value == Complex(1.0, 0.0);
  }
  // rank-one family: J = -ww*/(w*B0(λ)w) makes I + B0(λ)J singular at real λ
  const double ladder[] = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-13, 1e-14};
  std::size_t fam_agree = 0, fam_total = 0, fam_singular = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    std::mt19937_64 rng(stream_seed(kMasterSeed + 90, i));
    const int n = 12, k = 3;
    const ComplexMatrix a = gaussian_matrix(rng, n, n);
    const ComplexMatrix h0 = (a + a.adjoint()) * (0.5 / std::sqrt(double(n)));
    const ComplexMatrix g = gaussian_matrix(rng, k, n) / std::sqrt(double(n));
    const ScatteringModel base(h0, g, ComplexMatrix::Zero(k, k));
    // λ midway between two eigenvalues, B0(λ) Hermitian there
    const auto& ev = base.spectrum(0).eigenvalues;
    const double lambda = 0.5 * (ev(n / 2 - 1) + ev(n / 2));
    const ComplexVector d = (ev.array() - lambda).inverse().cast<Complex>();
    const ComplexMatrix w0 = base.visible(0);
    const ComplexMatrix b0 = w0 * d.asDiagonal() * w0.adjoint();
    const ComplexVector w = gaussian_matrix(rng, k, 1).col(0);
    const double c = (w.adjoint() * b0 * w)(0, 0).real();
    const ComplexMatrix j = -(w * w.adjoint()) / c;
    const ScatteringModel model(h0, g, 0.5 * (j + j.adjoint()));
    for (double eps : ladder) {
      for (int q = 1; q <= 3; ++q) {
        const auto det = det_probe(model, lambda, eps, q);
        const ComplexMatrix s = ComplexMatrix::Identity(k, k) + sandwiched_resolvent(model, 0, {lambda, eps}) * model.J();
        const bool sv = svd_invertible(s);
        ++fam_total;
        fam_agree += det.invertible == sv;
        fam_singular += !sv;
      }
    }
  }
  o.pass = agree == total && fam_agree == fam_total && j0_exact && fam_singular > 0;
  o.detail = "random " + std::to_string(agree) + "/" + std::to_string(total) + " agree, near-singular family " +
             std::to_string(fam_agree) + "/" + std::to_string(fam_total) + " agree (" + std::to_string(fam_singular) +
             " singular), J=0 exact: " + (j0_exact ? "yes" : "no");
  return o;
}

}  // namespace

// optional arguments: criterion numbers to run (default all)
int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double budget;  // seconds
    std::function<Outcome()> run;
  };
  std::vector<Item> items;
  std::vector<Criterion> list = {
      {1, "single-atom quasi-norms", 5.0, criterion1},
      {2, "weak-type constant audit", 180.0, [&] { return criterion2(items); }},
      {3, "CZ verifier", 120.0, [&] { return criterion3(items); }},
      {4, "pointwise Cauchy/Hilbert chain", 30.0, criterion4},
      {5, "resolvent identities", 30.0, criterion5},
      {6, "corollary inequality", 30.0, criterion6},
      {7, "discretisation", 30.0, criterion7},
      {8, "scattering refinement", 300.0, criterion8},
      {9, "determinant probe", 30.0, criterion9},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  if (wanted(2) || wanted(3)) items = audit_ensemble();
  int failures = 0;
  for (const auto& c : list) {
    if (!wanted(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double t = seconds_since(t0);
    const bool in_time = t < c.budget;
    const bool ok = o.pass && in_time;
    failures += !ok;
    std::printf("[%s] criterion %d (%s): %s; %.2f s of %.0f s\n", ok ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), t, c.budget);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
