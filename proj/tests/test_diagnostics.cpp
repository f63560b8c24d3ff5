#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "critsys/diagnostics.hpp"

#include <cmath>

using namespace critsys;

namespace {

GridPtr annulus(int N, int res) {
  ReducedGeometry geom;
  geom.kind = GeometryKind::radial_annulus;
  geom.N = N;
  geom.a = 1.0;
  geom.b = 2.0;
  return build_grid(geom, res);
}

GridPtr ball(int N, double b, int res) {
  ReducedGeometry geom;
  geom.kind = GeometryKind::radial_ball;
  geom.N = N;
  geom.a = 0.0;
  geom.b = b;
  return build_grid(geom, res);
}

}  // namespace

TEST_CASE("Pohozaev residual: small at a genuine annulus solution") {
  auto g = annulus(4, 256);
  SystemParams p = make_params(4, 1.0, 1.0, -1.0);
  FlowConfig cfg;
  auto [state, report] = flow_to_critical(genus_init(g, 1, p)[0], p, cfg);
  REQUIRE(report.converged);
  CHECK(std::abs(pohozaev_residual(state, p)) < 5e-3);

  // An arbitrary constrained pair with sizable boundary flux is order one.
  Field s1(g), s2(g);
  for (int i = 0; i < g->ax1.nodes; ++i) {
    const double t = (g->ax1.x[i] - 1.0);  // in [0, 1]
    s1.v[g->idx(i)] = std::sin(M_PI * t);
    s2.v[g->idx(i)] = std::sin(2.0 * M_PI * t);
  }
  s1.zero_boundary();
  s2.zero_boundary();
  PairState raw(s1, s2);
  CHECK(std::abs(pohozaev_residual(raw, p)) > 1e-2);
}

TEST_CASE("concentration function tracks a planted bubble") {
  auto g = ball(4, 2.0, 512);
  SystemParams p = make_params(4, 1.0, 1.0, -1.0);
  double prev = 0.0;
  for (double eps : {0.2, 0.1, 0.05}) {
    Field u(g);
    for (int i = 0; i < g->ax1.nodes; ++i)
      u.v[g->idx(i)] = bubble_radial(4, eps, g->ax1.x[i]);
    u.zero_boundary();
    PairState state(u, u);
    auto [radius, center] = concentration_function(state, p, 0.5);
    CHECK(center < 0.1);       // mass sits at the origin
    CHECK(radius < 4.0 * eps);  // radius follows the bubble scale
    if (prev > 0.0) CHECK(radius < prev);
    prev = radius;
  }
}

TEST_CASE("mixed inequality probe: deterministic, monotone in epsilon") {
  const double c1 = bl_mixed_inequality_probe(2.0, 2.0, 0.5, 20000);
  const double c2 = bl_mixed_inequality_probe(2.0, 2.0, 0.5, 20000);
  CHECK(c1 == c2);
  CHECK(c1 > 0.0);
  // A larger slack epsilon never needs a larger C.
  const double c3 = bl_mixed_inequality_probe(2.0, 2.0, 1.0, 20000);
  CHECK(c3 <= c1 + 1e-12);
}

TEST_CASE("Brezis-Lieb deficits decrease with the bubble scale") {
  ReducedGeometry geom;
  geom.kind = GeometryKind::radial_ball;
  geom.N = 10;
  geom.a = 0.0;
  geom.b = 6.0;
  auto g = build_grid(geom, 1024);
  const double ts = critical_exponent(10);
  SystemParams p;
  p.N = 10;
  p.mu1 = p.mu2 = 1.0;
  p.lambda = -1.0;
  p.alpha = p.beta = 0.5 * ts;
  PairState base(make_bump(g, {3.3}, 1.5, 1.0), make_bump(g, {3.3}, 1.5, 0.7));
  for (BLKind kind : {BLKind::product, BLKind::power, BLKind::derivative}) {
    auto deficits = bl_deficit(kind, g, base, {0.2, 0.1, 0.05}, p);
    REQUIRE(deficits.size() == 3);
    CHECK(deficits[0] > deficits[1]);
    CHECK(deficits[1] > deficits[2]);
  }
}

TEST_CASE("budget check bounds the final norm") {
  SystemParams p = make_params(4, 1.0, 1.0, -1.0);
  FlowReport report;
  report.final_norm_sq = 2.0 * sobolev_constant(4) * sobolev_constant(4) - 1.0;
  CHECK(budget_check(report, p, 1.0));
  report.final_norm_sq += 2.0;
  CHECK(!budget_check(report, p, 1.0));
  CHECK(budget_check(report, p, std::numeric_limits<double>::infinity()));
}

TEST_CASE("separation sweep: overlap decreases down the ladder") {
  auto g = annulus(4, 128);
  SystemParams p = make_params(4, 1.0, 1.0, -1.0);
  FlowConfig cfg;
  auto records = separation_sweep(g, p, {-1.0, -10.0}, cfg);
  REQUIRE(records.size() == 2);
  CHECK(records[0].converged);
  CHECK(records[1].converged);
  CHECK(records[0].lambda == doctest::Approx(-1.0));
  CHECK(records[1].lambda == doctest::Approx(-10.0));
  CHECK(records[1].overlap < records[0].overlap);
  CHECK(records[1].energy > records[0].energy);
  // Extracted supports are ordered, nonempty intervals.
  for (const auto& r : records) {
    CHECK(r.omega1_lo < r.omega1_hi);
    CHECK(r.omega2_lo < r.omega2_hi);
    CHECK(r.omega1_hi <= r.omega2_lo + 0.2);  // u block sits to the left
  }
}
