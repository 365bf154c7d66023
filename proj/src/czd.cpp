#include "oplab/czd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace oplab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Sum of weights over the atoms in (lo, hi], in position order.
double range_mass(const std::vector<ScalarAtom>& atoms, std::size_t first, std::size_t last) {
  double m = 0.0;
  for (std::size_t i = first; i < last; ++i) m += atoms[i].weight;
  return m;
}

std::size_t upper_index(const std::vector<ScalarAtom>& atoms, std::size_t first, std::size_t last, double v) {
  auto it = std::upper_bound(atoms.begin() + static_cast<std::ptrdiff_t>(first),
                             atoms.begin() + static_cast<std::ptrdiff_t>(last), v,
                             [](double t, const ScalarAtom& a) { return t < a.x; });
  return static_cast<std::size_t>(it - atoms.begin());
}

// atoms of ‖μ‖ with positive weight
std::vector<ScalarAtom> weighted_atoms(const ScalarMeasure& variation) {
  std::vector<ScalarAtom> out;
  for (const ScalarAtom& a : variation.atoms())
    if (a.weight > 0.0) out.push_back(a);
  return out;
}

void descend(const std::vector<ScalarAtom>& atoms, const DyadicInterval& q, std::size_t first, std::size_t last,
             double s, std::vector<DyadicInterval>& out) {
  const auto [left, right] = q.children();
  const std::size_t split = upper_index(atoms, first, last, left.right());
  const std::pair<DyadicInterval, std::pair<std::size_t, std::size_t>> kids[2] = {
      {left, {first, split}}, {right, {split, last}}};
  for (const auto& [child, range] : kids) {
    if (range.first == range.second) continue;
    const double density = std::ldexp(range_mass(atoms, range.first, range.second), child.scale());
    if (density > s)
      out.push_back(child);
    else
      descend(atoms, child, range.first, range.second, s, out);
  }
}

std::vector<DyadicInterval> sorted_checked(std::vector<DyadicInterval> qs) {
  std::sort(qs.begin(), qs.end());
  for (std::size_t i = 1; i < qs.size(); ++i)
    if (qs[i - 1].right() > qs[i].left()) throw std::invalid_argument("CZ intervals overlap");
  return qs;
}

std::string describe(const DyadicInterval& q) {
  std::ostringstream os;
  os.precision(17);
  os << "(j=" << q.index() << ", n=" << q.scale() << ") = (" << q.left() << ", " << q.right() << "]";
  return os.str();
}

CZCheck named(const char* name) {
  CZCheck c;
  c.name = name;
  return c;
}

void fail(CZCheck& c, const std::string& why) {
  if (c.pass) c.detail = why;
  c.pass = false;
}

// Gauss–Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double p = std::legendre(static_cast<unsigned>(n), t);
      const double pm = std::legendre(static_cast<unsigned>(n - 1), t);
      dp = n * (t * p - pm) / (t * t - 1.0);
      const double dt = p / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    const double p = std::legendre(static_cast<unsigned>(n), t);
    const double pm = std::legendre(static_cast<unsigned>(n - 1), t);
    dp = n * (t * p - pm) / (t * t - 1.0);
    x[static_cast<std::size_t>(i)] = t;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

// Hν(x) = Σ_ℓ ∫ dν_ℓ(y)/(y - x) for x off the supports. The kernels are
// real, so a batch of points is two real GEMMs.
class BadField {
 public:
  BadField(const std::vector<OpMeasure>& parts, Eigen::Index rows, Eigen::Index cols) : rows_(rows), cols_(cols) {
    std::vector<const ComplexMatrix*> w;
    for (const OpMeasure& nu : parts) {
      for (const Atom& a : nu.atoms.atoms()) {
        if (a.value.norm() == 0.0) continue;
        xs_.push_back(a.x);
        w.push_back(&a.value);
      }
    }
    for (const OpMeasure& nu : parts) {
      for (const DensityCell& c : nu.density.cells()) {
        lo_.push_back(c.lo);
        hi_.push_back(c.hi);
        w.push_back(&c.density);
      }
    }
    re_.resize(rows * cols, static_cast<Eigen::Index>(w.size()));
    im_.resize(rows * cols, static_cast<Eigen::Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Eigen::Map<const Eigen::VectorXcd> v(w[i]->data(), w[i]->size());
      re_.col(static_cast<Eigen::Index>(i)) = v.real();
      im_.col(static_cast<Eigen::Index>(i)) = v.imag();
    }
  }

  // column k holds the vectorised Hν(xs[k])
  void values(const double* xs, Eigen::Index count, Eigen::MatrixXd& re, Eigen::MatrixXd& im) const {
    const auto na = static_cast<Eigen::Index>(xs_.size());
    Eigen::MatrixXd k(re_.cols(), count);
    for (Eigen::Index j = 0; j < count; ++j) {
      const double x = xs[j];
      for (Eigen::Index i = 0; i < na; ++i) k(i, j) = 1.0 / (xs_[static_cast<std::size_t>(i)] - x);
      for (std::size_t i = 0; i < lo_.size(); ++i) k(na + static_cast<Eigen::Index>(i), j) = cell_kernel(lo_[i], hi_[i], x);
    }
    re.noalias() = re_ * k;
    im.noalias() = im_ * k;
  }

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  // ∫_lo^hi dy/(y - x) for x outside [lo, hi]
  static double cell_kernel(double lo, double hi, double x) {
    if (x < lo) return std::log1p((hi - lo) / (lo - x));
    return -std::log1p((hi - lo) / (x - hi));
  }

 private:
  Eigen::Index rows_, cols_;
  std::vector<double> xs_, lo_, hi_;
  Eigen::MatrixXd re_, im_;  // atoms first, then cells
};

}  // namespace

double dyadic_density(const ScalarMeasure& variation, const DyadicInterval& q) {
  return std::ldexp(variation.mass(q.bounds()), q.scale());
}

int root_scale(double total, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("CZ level s must be positive and finite");
  if (!(total > 0.0) || !std::isfinite(total)) throw std::invalid_argument("CZ needs finite nonzero total variation");
  int n = std::min(0, static_cast<int>(std::floor(-std::log2(total / s))));
  while (n > kMinScale && std::ldexp(total, n) > s) --n;
  while (n < 0 && std::ldexp(total, n + 1) <= s) ++n;
  return n;
}

std::vector<DyadicInterval> maximal_intervals(const SimpleOpMeasure& mu, double s, SchattenIndex norm) {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("maximal_intervals: s must be positive");
  if (mu.empty()) throw std::invalid_argument("maximal_intervals: empty measure");
  const std::vector<ScalarAtom> atoms = weighted_atoms(variation_measure(mu, norm));
  if (atoms.empty()) throw std::invalid_argument("maximal_intervals: measure has zero total variation");
  const int n0 = root_scale(range_mass(atoms, 0, atoms.size()), s);

  std::vector<DyadicInterval> out;
  std::size_t first = 0;
  while (first < atoms.size()) {
    const DyadicInterval root = containing(atoms[first].x, n0);
    const std::size_t last = upper_index(atoms, first, atoms.size(), root.right());
    // root density never exceeds s by the choice of n0
    descend(atoms, root, first, last, s, out);
    first = last;
  }
  return out;
}

DensityOpMeasure good_part(const SimpleOpMeasure& mu, const std::vector<DyadicInterval>& intervals) {
  const auto qs = sorted_checked(intervals);
  std::vector<DensityCell> cells;
  cells.reserve(qs.size());
  for (const DyadicInterval& q : qs) {
    ComplexMatrix avg = mu.mass(q.bounds());
    // divide by |Q| = 2^-n: exact power-of-two scaling
    for (Eigen::Index k = 0; k < avg.size(); ++k)
      avg.data()[k] = Complex(std::ldexp(avg.data()[k].real(), q.scale()), std::ldexp(avg.data()[k].imag(), q.scale()));
    cells.push_back({q.left(), q.right(), std::move(avg)});
  }
  return DensityOpMeasure(mu.rows(), mu.cols(), std::move(cells));
}

std::vector<OpMeasure> bad_part(const SimpleOpMeasure& mu, const DensityOpMeasure& f,
                                const std::vector<DyadicInterval>& intervals) {
  if (f.rows() != mu.rows() || f.cols() != mu.cols()) throw std::invalid_argument("bad_part: shape mismatch");
  std::vector<OpMeasure> out;
  out.reserve(intervals.size());
  for (const DyadicInterval& q : intervals) {
    const auto cells = f.cells();
    auto it = std::find_if(cells.begin(), cells.end(),
                           [&](const DensityCell& c) { return c.lo == q.left() && c.hi == q.right(); });
    if (it == cells.end()) throw std::invalid_argument("bad_part: f has no cell on " + describe(q));
    DensityOpMeasure minus_f(mu.rows(), mu.cols(), {DensityCell{q.left(), q.right(), -it->density}});
    out.emplace_back(restrict(mu, q.bounds()), std::move(minus_f));
  }
  return out;
}

CZDecomposition decompose(const SimpleOpMeasure& mu, double s, SchattenIndex norm) {
  CZDecomposition dec;
  dec.s = s;
  dec.norm = norm;
  dec.intervals = maximal_intervals(mu, s, norm);
  dec.good = good_part(mu, dec.intervals);
  dec.bad_parts = bad_part(mu, dec.good, dec.intervals);
  return dec;
}

bool CZReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CZCheck& c) { return c.pass; });
}

const CZCheck* CZReport::find(const std::string& name) const {
  for (const CZCheck& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

CZReport verify_decomposition(const SimpleOpMeasure& mu, const CZDecomposition& dec, const VerifyOptions& opt) {
  const SchattenIndex norm = dec.norm;
  const double s = dec.s;
  const ScalarMeasure var = variation_measure(mu, norm);
  const double total = var.total();
  const auto& qs = dec.intervals;

  CZCheck maximal = named("maximality");
  CZCheck parent_bound = named("parent_bound");
  CZCheck good_bound = named("good_bound");
  CZCheck cancel = named("cancellation");
  CZCheck bad_var = named("bad_variation");
  CZCheck length = named("total_length");
  CZCheck coverage = named("atom_coverage");
  CZCheck recon = named("reconstruction");
  CZCheck kernel = named("kernel_bound");
  CZCheck integral = named("integral_bound");

  if (dec.bad_parts.size() != qs.size()) {
    fail(cancel, "bad_parts count differs from interval count");
    fail(bad_var, "bad_parts count differs from interval count");
  }

  double sum_len = 0.0;
  for (std::size_t l = 0; l < qs.size(); ++l) {
    const DyadicInterval& q = qs[l];
    const double dens = dyadic_density(var, q);
    ++maximal.evaluated;
    maximal.worst = std::max(maximal.worst, s / dens);
    if (!(dens > s)) fail(maximal, "density " + std::to_string(dens) + " <= s on " + describe(q));

    const DyadicInterval p = parent(q);
    const double pd = dyadic_density(var, p);
    ++parent_bound.evaluated;
    parent_bound.worst = std::max(parent_bound.worst, pd / s);
    if (pd > s) fail(parent_bound, "parent density " + std::to_string(pd) + " > s above " + describe(q));

    sum_len += q.length();

    if (l < dec.bad_parts.size()) {
      const OpMeasure& nu = dec.bad_parts[l];
      const double mq = var.mass(q.bounds());
      const double res = schatten_norm(nu.mass(q.bounds()), norm);
      ++cancel.evaluated;
      cancel.worst = std::max(cancel.worst, mq > 0.0 ? res / mq : res);
      if (res > opt.cancel_tol * mq) fail(cancel, "nu(Q) = " + std::to_string(res) + " on " + describe(q));
      const double tv = total_variation(nu, Interval::real_line(), norm);
      ++bad_var.evaluated;
      bad_var.worst = std::max(bad_var.worst, tv / (2.0 * mq));
      if (tv > 2.0 * mq * (1.0 + 1e-12)) fail(bad_var, "|nu|(Q) > 2|mu|(Q) on " + describe(q));
    }
  }

  for (const DensityCell& c : dec.good.cells()) {
    const double v = schatten_norm(c.density, norm);
    ++good_bound.evaluated;
    good_bound.worst = std::max(good_bound.worst, v / (2.0 * s));
    if (v > 2.0 * s * (1.0 + 1e-12)) fail(good_bound, "|f| = " + std::to_string(v) + " > 2s");
  }

  length.evaluated = 1;
  length.worst = sum_len * s / total;
  if (sum_len > total / s * (1.0 + 1e-12)) fail(length, "sum |Q| = " + std::to_string(sum_len));

  for (const ScalarAtom& a : var.atoms()) {
    if (a.weight == 0.0) continue;
    int hits = 0;
    for (const DyadicInterval& q : qs) hits += q.contains(a.x) ? 1 : 0;
    ++coverage.evaluated;
    if (hits != 1) {
      std::ostringstream os;
      os.precision(17);
      os << "atom at " << a.x << " covered " << hits << " times";
      fail(coverage, os.str());
    }
  }

  // μ = f dx + Σ ν_ℓ on dyadic intervals from the root scale down to the
  // scale that separates all atoms
  {
    std::vector<double> pos;
    for (const ScalarAtom& a : var.atoms())
      if (a.weight > 0.0) pos.push_back(a.x);
    int n_lo = root_scale(total, s);
    int n_hi = n_lo;
    for (const DyadicInterval& q : qs) n_hi = std::max(n_hi, q.scale() + 1);
    for (std::size_t i = 1; i < pos.size(); ++i) {
      int n = std::max(n_lo, static_cast<int>(std::ceil(-std::log2(pos[i] - pos[i - 1]))));
      while (n < kMaxScale && containing(pos[i - 1], n) == containing(pos[i], n)) ++n;
      n_hi = std::max(n_hi, n);
    }
    n_hi = std::min(n_hi, kMaxScale);
    std::vector<DyadicInterval> probes;
    for (int n = n_lo; n <= n_hi; ++n)
      for (double x : pos) {
        const DyadicInterval q = containing(x, n);
        if (probes.empty() || !(probes.back() == q)) probes.push_back(q);
      }
    for (const DyadicInterval& q : qs) {
      probes.push_back(q);
      probes.push_back(q.children().first);
      probes.push_back(q.children().second);
    }
    const double tol = opt.recon_tol * std::max(total, std::numeric_limits<double>::min());
    for (const DyadicInterval& q : probes) {
      const Interval b = q.bounds();
      ComplexMatrix rebuilt = dec.good.mass(b);
      // only the Q_ℓ meeting Q contribute
      auto first = std::lower_bound(qs.begin(), qs.end(), b.lo,
                                    [](const DyadicInterval& d, double v) { return d.right() <= v; });
      for (auto it = first; it != qs.end() && it->left() < b.hi; ++it)
        rebuilt += dec.bad_parts[static_cast<std::size_t>(it - qs.begin())].mass(b);
      const double res = schatten_norm_fast(rebuilt - mu.mass(b), norm);
      ++recon.evaluated;
      recon.worst = std::max(recon.worst, res / total);
      if (res > tol) fail(recon, "residual " + std::to_string(res) + " on " + describe(q));
    }
  }

  // ‖Hν_ℓ(x)‖ <= 4‖μ‖(Q)|Q|/(|x - c|² + |Q|²) for x outside 2Q_ℓ
  for (std::size_t l = 0; l < qs.size() && l < dec.bad_parts.size(); ++l) {
    const DyadicInterval& q = qs[l];
    const OpMeasure& nu = dec.bad_parts[l];
    const double len = q.length(), c = q.center(), mq = var.mass(q.bounds());
    std::mt19937_64 rng(opt.seed ^ (0x9e3779b97f4a7c15ULL * (l + 1)));
    std::uniform_real_distribution<double> logd(0.0, std::log(1e4));
    std::bernoulli_distribution side(0.5);
    for (int k = 0; k < opt.kernel_samples; ++k) {
      const double d = len * std::exp(logd(rng));
      const double x = side(rng) ? c + d : c - d;
      if (std::abs(x - c) < len) continue;  // rounding at the edge of 2Q
      ComplexMatrix h = ComplexMatrix::Zero(mu.rows(), mu.cols());
      for (const Atom& a : nu.atoms.atoms()) h += a.value * (1.0 / (a.x - x));
      for (const DensityCell& cell : nu.density.cells())
        h += cell.density * BadField::cell_kernel(cell.lo, cell.hi, x);
      const double rhs = 4.0 * mq * len / ((x - c) * (x - c) + len * len);
      ++kernel.evaluated;
      // a sample whose Frobenius bound can neither fail nor raise the worst
      // ratio needs no eigensolve
      if (schatten_norm_frobenius_bound(h, norm) * (1.0 + 1e-12) <= rhs * std::min(kernel.worst, 1.0)) continue;
      const double lhs = schatten_norm_fast(h, norm);
      kernel.worst = std::max(kernel.worst, lhs / rhs);
      if (lhs > rhs * (1.0 + 1e-9)) {
        std::ostringstream os;
        os.precision(17);
        os << "x = " << x << " off " << describe(q) << ": " << lhs << " > " << rhs;
        fail(kernel, os.str());
      }
    }
  }

  CZReport report;
  report.integral = std::numeric_limits<double>::quiet_NaN();
  report.integral_limit = 4.0 * kPi * total;
  if (opt.integral && !qs.empty() && qs.size() == dec.bad_parts.size()) {
    // (∪2Q)^c as gaps between merged blocks plus two tails
    std::vector<Interval> doubled;
    for (const DyadicInterval& q : qs) doubled.push_back(scaled_double(q));
    std::sort(doubled.begin(), doubled.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> blocks;
    for (const Interval& d : doubled) {
      if (!blocks.empty() && d.lo <= blocks.back().hi)
        blocks.back().hi = std::max(blocks.back().hi, d.hi);
      else
        blocks.push_back(d);
    }
    std::vector<double> features;
    for (const DyadicInterval& q : qs) {
      features.push_back(q.left());
      features.push_back(q.right());
    }
    for (const ScalarAtom& a : var.atoms()) features.push_back(a.x);
    std::sort(features.begin(), features.end());
    auto local_scale = [&](double x) {
      auto it = std::lower_bound(features.begin(), features.end(), x);
      double d = std::numeric_limits<double>::infinity();
      if (it != features.end()) d = std::min(d, *it - x);
      if (it != features.begin()) d = std::min(d, x - *(it - 1));
      return d;
    };

    const BadField field(dec.bad_parts, mu.rows(), mu.cols());
    std::vector<double> gx, gw;
    gauss_legendre(opt.gauss_points, gx, gw);
    std::vector<double> nodes, weights;
    auto panel = [&](double a, double b) {
      const double h = 0.5 * (b - a), m = 0.5 * (a + b);
      for (std::size_t i = 0; i < gx.size(); ++i) {
        nodes.push_back(m + h * gx[i]);
        weights.push_back(h * gw[i]);
      }
    };
    // panels on [a, b] doubling in width away from one end
    auto graded = [&](double a, double b, bool from_left) {
      const double anchor = from_left ? a : b;
      double step = std::min(b - a, 0.5 * local_scale(anchor));
      if (!(step > 0.0)) step = 1e-12 * (b - a);
      double done = 0.0;
      while (done < b - a) {
        const double next = std::min(b - a, done + step);
        if (from_left)
          panel(a + done, a + next);
        else
          panel(b - next, b - done);
        done = next;
        step *= 2.0;
      }
    };
    for (std::size_t i = 1; i < blocks.size(); ++i) {
      const double a = blocks[i - 1].hi, b = blocks[i].lo;
      if (!(b > a)) continue;
      const double m = 0.5 * (a + b);
      graded(a, m, true);
      graded(m, b, false);
    }
    const double span = blocks.back().hi - blocks.front().lo;
    const double reach = opt.tail_factor * span;
    graded(blocks.back().hi, blocks.back().hi + reach, true);
    graded(blocks.front().lo - reach, blocks.front().lo, false);
    double acc = 0.0;
    const std::size_t evals = nodes.size();
    constexpr std::size_t kBatch = 512;
    Eigen::MatrixXd re, im;
    ComplexMatrix h(mu.rows(), mu.cols());
    for (std::size_t start = 0; start < evals; start += kBatch) {
      const auto count = static_cast<Eigen::Index>(std::min(kBatch, evals - start));
      field.values(nodes.data() + start, count, re, im);
      for (Eigen::Index j = 0; j < count; ++j) {
        h.real() = Eigen::Map<const Eigen::MatrixXd>(re.col(j).data(), mu.rows(), mu.cols());
        h.imag() = Eigen::Map<const Eigen::MatrixXd>(im.col(j).data(), mu.rows(), mu.cols());
        acc += weights[start + static_cast<std::size_t>(j)] * schatten_norm_fast(h, norm);
      }
    }
    // beyond the reach, bound each ‖Hν_ℓ‖ by the kernel estimate
    double tail = 0.0;
    for (const DyadicInterval& q : qs) {
      const double len = q.length(), c = q.center(), mq = var.mass(q.bounds());
      const double right = blocks.back().hi + reach - c;
      const double left = c - (blocks.front().lo - reach);
      tail += 4.0 * mq * ((0.5 * kPi - std::atan(right / len)) + (0.5 * kPi - std::atan(left / len)));
    }
    report.integral = acc + tail;
    integral.evaluated = evals;
    integral.worst = report.integral / report.integral_limit;
    if (!(report.integral <= report.integral_limit)) {
      std::ostringstream os;
      os.precision(17);
      os << "integral " << report.integral << " > " << report.integral_limit;
      fail(integral, os.str());
    }
  }

  report.checks = {maximal, parent_bound, good_bound, cancel, bad_var, length, coverage, recon, kernel};
  if (opt.integral) report.checks.push_back(integral);
  return report;
}

}  // namespace oplab
