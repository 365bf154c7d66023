#include "oplab/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace oplab {

namespace {

// |j| below 2^62 keeps j+1 and 2j+1 exact in both int64 and double.
constexpr double kIndexLimit = 4611686018427387904.0;  // 2^62

std::int64_t floor_div2(std::int64_t j) { return j >= 0 ? j / 2 : -((-j + 1) / 2); }

}  // namespace

bool Interval::bounded() const { return std::isfinite(lo) && std::isfinite(hi); }

Interval Interval::intersect(const Interval& other) const {
  return {std::max(lo, other.lo), std::min(hi, other.hi)};
}

DyadicInterval::DyadicInterval(std::int64_t j, int n) : j_(j), n_(n) {
  if (n < kMinScale || n > kMaxScale)
    throw std::overflow_error("dyadic scale " + std::to_string(n) + " out of range");
  if (std::abs(static_cast<double>(j)) >= kIndexLimit)
    throw std::overflow_error("dyadic index out of range");
}

double DyadicInterval::left() const { return std::ldexp(static_cast<double>(j_), -n_); }
double DyadicInterval::right() const { return std::ldexp(static_cast<double>(j_ + 1), -n_); }
double DyadicInterval::length() const { return std::ldexp(1.0, -n_); }
double DyadicInterval::center() const {
  return std::ldexp(static_cast<double>(2 * j_ + 1), -n_ - 1);
}

bool DyadicInterval::contains(double x) const { return left() < x && x <= right(); }

bool DyadicInterval::contains(const DyadicInterval& q) const {
  if (q.n_ < n_) return false;
  std::int64_t j = q.j_;
  for (int k = q.n_; k > n_; --k) j = floor_div2(j);
  return j == j_;
}

bool DyadicInterval::disjoint(const DyadicInterval& q) const {
  return !contains(q) && !q.contains(*this);
}

std::pair<DyadicInterval, DyadicInterval> DyadicInterval::children() const {
  return {DyadicInterval(2 * j_, n_ + 1), DyadicInterval(2 * j_ + 1, n_ + 1)};
}

DyadicInterval containing(double x, int n) {
  if (!std::isfinite(x)) throw std::invalid_argument("containing: non-finite point");
  if (n < kMinScale || n > kMaxScale)
    throw std::overflow_error("containing: scale " + std::to_string(n) + " out of range");
  // x 2^n is exact (power-of-two scaling); x ∈ (j, j+1] in scaled units
  const double scaled = std::ldexp(x, n);
  if (std::abs(scaled) >= kIndexLimit) throw std::overflow_error("containing: index overflow");
  const double j = std::ceil(scaled) - 1.0;
  return DyadicInterval(static_cast<std::int64_t>(j), n);
}

DyadicInterval parent(const DyadicInterval& q) {
  if (q.scale() - 1 < kMinScale) throw std::underflow_error("parent: scale underflow");
  return DyadicInterval(floor_div2(q.index()), q.scale() - 1);
}

Interval scaled_double(const DyadicInterval& q) {
  const double c = q.center();
  const double len = q.length();
  return {c - len, c + len};
}

}  // namespace oplab
