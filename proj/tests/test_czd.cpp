#include <cmath>
#include <random>

#include "doctest.h"
#include "oplab/czd.hpp"
#include "oplab/ensembles.hpp"
#include "oplab/transforms.hpp"

using namespace oplab;

namespace {
const SchattenIndex kOp = SchattenIndex::operator_norm();

ComplexMatrix unit_e() {
  ComplexMatrix e(2, 2);
  e << 0.6, 0.0, 0.0, Complex(0.0, 0.8);  // scaled to operator norm 1
  return e / 0.8;
}

SimpleOpMeasure third() { return SimpleOpMeasure(2, 2, {{1.0 / 3.0, unit_e()}}); }

bool passes(const CZReport& r, const char* name) {
  const CZCheck* c = r.find(name);
  REQUIRE(c != nullptr);
  return c->pass;
}
}  // namespace

TEST_CASE("maximal intervals over an atom at 1/3") {
  auto q = maximal_intervals(third(), 1.0, kOp);
  REQUIRE(q.size() == 1);
  CHECK(q[0] == DyadicInterval(0, 1));
  q = maximal_intervals(third(), 3.0, kOp);
  REQUIRE(q.size() == 1);
  CHECK(q[0] == DyadicInterval(1, 2));
  q = maximal_intervals(third(), 0.5, kOp);
  REQUIRE(q.size() == 1);
  CHECK(q[0] == DyadicInterval(0, 0));
}

TEST_CASE("density exactly s does not stop") {
  // (0,1] has density 1 = s, so the stop happens one level down
  const SimpleOpMeasure mu(1, 1, {{0.75, ComplexMatrix::Constant(1, 1, 1.0)}});
  const auto q = maximal_intervals(mu, 1.0, kOp);
  REQUIRE(q.size() == 1);
  CHECK(q[0] == DyadicInterval(1, 1));
}

TEST_CASE("good and bad parts") {
  const ComplexMatrix e = unit_e();
  auto f = good_part(third(), {DyadicInterval(0, 1)});
  REQUIRE(f.cells().size() == 1);
  CHECK((f.at(0.2) - 2.0 * e).norm() < 1e-15);
  CHECK(f.at(0.7).norm() == 0.0);
  f = good_part(third(), {DyadicInterval(1, 2)});
  CHECK((f.at(0.3) - 4.0 * e).norm() < 1e-15);
  CHECK(good_part(third(), {}).empty());

  const auto g = good_part(third(), {DyadicInterval(0, 1)});
  const auto nu = bad_part(third(), g, {DyadicInterval(0, 1)});
  REQUIRE(nu.size() == 1);
  CHECK(nu[0].mass({0.0, 0.5}).norm() < 1e-15);

  const SimpleOpMeasure twin(2, 2, {{0.1, e}, {0.4, e}});
  const std::vector<DyadicInterval> q{DyadicInterval(0, 1)};
  const auto nt = bad_part(twin, good_part(twin, q), q);
  CHECK(nt[0].atoms.size() == 2);
  CHECK(nt[0].mass({0.0, 0.5}).norm() < 1e-15);
  // a brute-force cell sum of the signed measure
  ComplexMatrix acc = ComplexMatrix::Zero(2, 2);
  for (int k = 0; k < 64; ++k) acc += nt[0].mass({k / 128.0, (k + 1) / 128.0});
  CHECK(acc.norm() < 1e-14);
}

TEST_CASE("bad part of a discretized density is small") {
  const OpMeasure smooth(DensityOpMeasure(1, 1, {{0.0, 0.5, ComplexMatrix::Constant(1, 1, 3.0)}}));
  const std::vector<DyadicInterval> q{DyadicInterval(0, 1)};
  double prev = INFINITY;
  for (int n = 6; n <= 12; n += 2) {
    const auto mu = discretize(smooth, n);
    const auto nu = bad_part(mu, good_part(mu, q), q);
    const double e = cauchy(nu[0], Complex(0.25, 0.1)).norm();
    CHECK(e < 4.0 * std::ldexp(1.0, -n) / 0.01);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("decompositions verify, constructed negatives fail") {
  auto dec = decompose(third(), 1.0, kOp);
  CHECK(verify_decomposition(third(), dec).all_pass());

  auto up = dec;
  up.intervals[0] = parent(up.intervals[0]);
  up.good = good_part(third(), up.intervals);
  up.bad_parts = bad_part(third(), up.good, up.intervals);
  const auto r = verify_decomposition(third(), up);
  CHECK_FALSE(passes(r, "maximality"));

  auto tripled = dec;
  std::vector<DensityCell> cells(dec.good.cells().begin(), dec.good.cells().end());
  for (auto& c : cells) c.density *= 3.0;
  tripled.good = DensityOpMeasure(2, 2, cells);
  const auto t = verify_decomposition(third(), tripled);
  CHECK_FALSE(passes(t, "reconstruction"));
  CHECK_FALSE(passes(t, "good_bound"));
  CHECK_FALSE(t.all_pass());
}

TEST_CASE("random ensembles satisfy every check") {
  std::mt19937_64 rng(41);
  MeasureSpec spec;
  spec.max_atoms = 60;
  spec.max_dim = 5;
  for (int it = 0; it < 30; ++it) {
    const auto mu = random_simple_measure(rng, spec);
    const SchattenIndex p = random_norm(rng);
    const double total = total_variation(mu, Interval::real_line(), p);
    for (double f : {0.3, 2.0, 40.0}) {
      const double s = f * total;
      const auto dec = decompose(mu, s, p);
      VerifyOptions opt;
      opt.kernel_samples = 20;
      const auto rep = verify_decomposition(mu, dec, opt);
      CHECK(rep.all_pass());
      CHECK(rep.integral <= rep.integral_limit);

      // each atom in exactly one interval, intervals disjoint
      for (const Atom& a : mu.atoms()) {
        int hits = 0;
        for (const auto& q : dec.intervals) hits += q.contains(a.x);
        CHECK(hits == 1);
      }
      for (std::size_t i = 1; i < dec.intervals.size(); ++i)
        CHECK(dec.intervals[i - 1].disjoint(dec.intervals[i]));
      const auto var = variation_measure(mu, p);
      double len = 0;
      for (const auto& q : dec.intervals) {
        len += q.length();
        CHECK(var.mass(q.bounds()) / q.length() > s);
        const auto pq = parent(q);
        CHECK(var.mass(pq.bounds()) / pq.length() <= s * (1 + 1e-12));
      }
      CHECK(len <= total / s * (1 + 1e-12));
    }
  }
}

TEST_CASE("root scale") {
  CHECK(root_scale(1.0, 1.0) == 0);
  CHECK(root_scale(1.0, 0.5) == -1);
  CHECK(root_scale(1.0, 0.3) == -2);
  CHECK(root_scale(1.0, 100.0) == 0);
  CHECK_THROWS(root_scale(0.0, 1.0));
  CHECK_THROWS(root_scale(1.0, -1.0));
}
