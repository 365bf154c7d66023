#ifndef OPLAB_DYADIC_HPP
#define OPLAB_DYADIC_HPP

#include <compare>
#include <cstdint>
#include <limits>
#include <utility>

namespace oplab {

// Half-open interval (lo, hi] of the real line. lo = -inf / hi = +inf give
// unbounded intervals; the whole line is Interval::real_line().
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static Interval real_line() { return {}; }

  bool contains(double x) const { return lo < x && x <= hi; }
  bool empty() const { return !(lo < hi); }
  bool bounded() const;
  double length() const { return empty() ? 0.0 : hi - lo; }
  // (a, b] ∩ (c, d] = (max(a, c), min(b, d)]
  Interval intersect(const Interval& other) const;

  friend bool operator==(const Interval&, const Interval&) = default;
};

// Scale range for which 2^-n and j * 2^-n stay normal doubles for any
// representable index.
inline constexpr int kMinScale = -960;
inline constexpr int kMaxScale = 960;

// The dyadic interval (j 2^-n, (j+1) 2^-n]. Stored as integers so that
// nesting and disjointness are decided exactly.
class DyadicInterval {
 public:
  DyadicInterval(std::int64_t j, int n);

  std::int64_t index() const { return j_; }
  int scale() const { return n_; }

  double left() const;
  double right() const;
  double length() const;
  double center() const;
  Interval bounds() const { return {left(), right()}; }

  bool contains(double x) const;
  // Q ⊂ *this (not necessarily strict).
  bool contains(const DyadicInterval& q) const;
  bool disjoint(const DyadicInterval& q) const;

  std::pair<DyadicInterval, DyadicInterval> children() const;

  friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;
  friend auto operator<=>(const DyadicInterval& a, const DyadicInterval& b) {
    // order by left endpoint, then coarser first
    const double la = a.left(), lb = b.left();
    if (la != lb) return la < lb ? std::strong_ordering::less : std::strong_ordering::greater;
    return b.n_ <=> a.n_;
  }

 private:
  std::int64_t j_;
  int n_;
};

// The unique dyadic interval of scale n with x ∈ (j 2^-n, (j+1) 2^-n].
// Throws std::overflow_error when the scale or index leaves the supported range.
DyadicInterval containing(double x, int n);

// Q̂: the interval of scale n-1 containing Q. Throws std::underflow_error
// below kMinScale.
DyadicInterval parent(const DyadicInterval& q);

// 2Q = (c(Q) - |Q|, c(Q) + |Q|].
Interval scaled_double(const DyadicInterval& q);

}  // namespace oplab

#endif  // OPLAB_DYADIC_HPP
