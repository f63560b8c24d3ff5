// Acceptance harness: one PASS/FAIL line per criterion, exit 0 only if all
// criteria pass. Tolerances are pinned in-line next to each check.

#include "critsys/diagnostics.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace critsys;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok,
            const std::string& detail) {
  std::printf("%s criterion-%02d %s: %s\n", ok ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

GridPtr make_annulus(int N, double a, double b, int res) {
  ReducedGeometry geom;
  geom.kind = GeometryKind::radial_annulus;
  geom.N = N;
  geom.a = a;
  geom.b = b;
  return build_grid(geom, res);
}

GridPtr make_ball(int N, double b, int res) {
  ReducedGeometry geom;
  geom.kind = GeometryKind::radial_ball;
  geom.N = N;
  geom.a = 0.0;
  geom.b = b;
  return build_grid(geom, res);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---- criterion 1: Sobolev constant vs bubble Rayleigh quotient ------------

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int N : {3, 4, 5, 6}) {
    auto g = make_ball(N, 100.0, 16384);
    Field U(g);
    for (int i = 0; i < g->ax1.nodes; ++i)
      U.v[g->idx(i)] = bubble_radial(N, 1.0, g->ax1.x[i]);
    const double ts = critical_exponent(N);
    const double num = dirichlet_norm_sq(U);
    const double den =
        std::pow(integrate(U, [&](double x) { return apow(x, ts); }), 2.0 / ts);
    const double rel = std::abs(num / den - sobolev_constant(N)) /
                       sobolev_constant(N);
    worst = std::max(worst, rel);
  }
  const double dt = elapsed_s(t0);
  report(1, "sobolev-constant", worst <= 5e-3 && dt < 5.0,
         fmt("worst rel err %.3g (tol 5e-3), %.2fs (limit 5s)", worst, dt));
}

// ---- criterion 2: synchronized algebra -------------------------------------

void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> mu(0.3, 3.0), lam(0.05, 2.0);
  std::uniform_int_distribution<int> dim(3, 8);

  double worst_resid = 0.0;
  for (int k = 0; k < 200; ++k) {
    SystemParams p;
    p.N = dim(rng);
    const double ts = critical_exponent(p.N);
    std::uniform_real_distribution<double> al(1.05, ts - 1.05);
    p.mu1 = mu(rng);
    p.mu2 = mu(rng);
    p.lambda = lam(rng);
    p.alpha = al(rng);
    p.beta = ts - p.alpha;
    for (const auto& root : sync_roots(p))
      worst_resid = std::max(
          worst_resid,
          std::max(std::abs(root.residual1), std::abs(root.residual2)));
  }

  // N >= 6 with alpha in (2*-2, 2): list must be nonempty.
  bool always_nonempty = true;
  std::uniform_int_distribution<int> dim_hi(6, 8);
  for (int k = 0; k < 50; ++k) {
    SystemParams p;
    p.N = dim_hi(rng);
    const double ts = critical_exponent(p.N);
    // alpha in (2*-2, 2), intersected with the validity strip alpha,beta > 1.
    std::uniform_real_distribution<double> al(std::max(ts - 2.0, 1.0) + 1e-3,
                                              std::min(2.0, ts - 1.0) - 1e-3);
    p.mu1 = mu(rng);
    p.mu2 = mu(rng);
    p.lambda = lam(rng);
    p.alpha = al(rng);
    p.beta = ts - p.alpha;
    if (sync_roots(p).empty()) always_nonempty = false;
  }

  const bool rejected = sync_roots(make_params(4, 1.0, 1.0, -1.0)).empty();
  const double dt = elapsed_s(t0);
  report(2, "synchronized-algebra",
         worst_resid <= 1e-10 && always_nonempty && rejected && dt < 10.0,
         fmt("worst resid %.3g (tol 1e-10), nonempty=%d, rejected=%d, %.2fs",
             worst_resid, always_nonempty ? 1 : 0, rejected ? 1 : 0, dt));
}

// ---- criterion 3: gradient vs central finite differences -------------------

void criterion_3() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  double worst = 0.0;
  for (int gcase = 0; gcase < 3; ++gcase) {
    ReducedGeometry geom;
    if (gcase == 0) {
      geom.kind = GeometryKind::radial_annulus;
      geom.N = 4;
      geom.a = 1.0;
      geom.b = 2.0;
    } else if (gcase == 1) {
      geom.kind = GeometryKind::radial_ball;
      geom.N = 5;
      geom.a = 0.0;
      geom.b = 2.0;
    } else {
      geom.kind = GeometryKind::biradial;
      geom.N = 4;
      geom.a = 0.5;
      geom.b = 1.5;
      geom.a2 = 0.6;
      geom.b2 = 1.6;
      geom.m = 2;
      geom.n = 2;
    }
    auto g = build_grid(geom, gcase == 2 ? 64 : 256);
    SystemParams p = make_params(geom.N, 1.0, 1.5, 0.3);
    auto smooth = [&]() {
      Field f(g);
      const double c1 = un(rng), c2 = un(rng), c3 = un(rng);
      const double x0 = g->ax1.x.front(), x1 = g->ax1.x.back();
      const double y0 = g->radial() ? 0.0 : g->ax2.x.front();
      const double y1 = g->radial() ? 1.0 : g->ax2.x.back();
      for (int j = 0; j < std::max(g->ax2.nodes, 1); ++j)
        for (int i = 0; i < g->ax1.nodes; ++i) {
          const double x = g->ax1.x[i];
          const double y = g->radial() ? 0.0 : g->ax2.x[j];
          const double wx = std::sin(M_PI * (x - x0) / (x1 - x0));
          const double wy =
              g->radial() ? 1.0 : std::sin(M_PI * (y - y0) / (y1 - y0));
          f.v[g->idx(i, j)] = wx * wy * (c1 + c2 * std::cos(x + y) + c3 * x);
        }
      f.zero_boundary();
      return f;
    };
    for (int trial = 0; trial < 20; ++trial) {
      PairState x(smooth(), smooth());
      PairState phi(smooth(), smooth());
      PairState gr = grad(x, p);
      const double lhs =
          dirichlet_product(gr.u, phi.u) + dirichlet_product(gr.v, phi.v);
      const double t = 1e-5;
      PairState xp(x.u, x.v), xm(x.u, x.v);
      axpy(xp.u, t, phi.u);
      axpy(xp.v, t, phi.v);
      axpy(xm.u, -t, phi.u);
      axpy(xm.v, -t, phi.v);
      const double rhs = (energy(xp, p) - energy(xm, p)) / (2.0 * t);
      worst = std::max(worst,
                       std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
  }
  report(3, "gradient-correctness", worst <= 1e-6,
         fmt("worst rel err %.3g (tol 1e-6), 20 states x 3 geometries", worst));
}

// ---- criterion 4: instanton residual refinement -----------------------------

void criterion_4() {
  bool ok = true;
  std::ostringstream detail;
  for (int N : {3, 4}) {
    const double ts = critical_exponent(N);
    double prev = 0.0;
    for (int res : {128, 256, 512}) {
      auto g = make_annulus(N, 0.5, 10.0, res);
      Field U(g);
      for (int i = 0; i < g->ax1.nodes; ++i)
        U.v[g->idx(i)] = bubble_radial(N, 1.0, g->ax1.x[i]);
      Field lap = laplace_apply(U);
      double acc = 0.0;
      for (int i = 1; i + 1 < g->ax1.nodes; ++i) {
        const std::size_t k = g->idx(i);
        const double r = lap.v[k] - spow(U.v[k], ts - 1.0);
        acc += g->weight[k] * r * r;
      }
      const double norm = std::sqrt(acc);
      if (prev > 0.0) {
        const double ratio = prev / norm;
        detail << "N=" << N << " ratio=" << fmt("%.3g ", ratio);
        if (ratio < 3.0 || ratio > 5.0) ok = false;
      }
      prev = norm;
    }
  }
  report(4, "instanton-residual", ok, detail.str() + "(required in [3,5])");
}

// ---- criterion 5: competitive annulus solve --------------------------------

void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  auto g = make_annulus(4, 1.0, 2.0, 512);
  SystemParams p = make_params(4, 1.0, 1.0, -1.0);
  FlowConfig cfg;
  auto [state, rep] = flow_to_critical(genus_init(g, 1, p).front(), p, cfg);
  const double inf = nehari_inf_value(p);
  auto [w, J] = limit_profile(g, p, cfg);
  const double poho = std::abs(pohozaev_residual(state, p));
  const double dt = elapsed_s(t0);
  const bool ok = rep.converged && rep.final_grad_norm <= 1e-6 &&
                  rep.final_energy > 1.01 * inf &&
                  rep.final_energy < 0.99 * J && poho <= 5e-3 && dt < 60.0;
  report(5, "competitive-annulus-solve", ok,
         fmt("conv=%d gn=%.2e E=%.4f in (%.1f, %.1f) poho=%.2e (tol 5e-3) "
             "%.1fs",
             rep.converged ? 1 : 0, rep.final_grad_norm, rep.final_energy,
             1.01 * inf, 0.99 * J, poho, dt));
}

// ---- criterion 6: multiplicity ---------------------------------------------

void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  auto g = make_annulus(4, 1.0, 2.0, 256);
  SystemParams p = make_params(4, 1.0, 1.0, -1.0);
  FlowConfig cfg;
  auto found = multi_start(g, p, 3, cfg);

  bool ok = found.size() >= 3;
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < found.size(); ++i) {
    ok = ok && found[i].second.converged &&
         budget_check(found[i].second, p,
                      std::numeric_limits<double>::infinity());
    for (std::size_t j = i + 1; j < found.size(); ++j)
      min_dist = std::min(min_dist,
                          equiv_distance(found[i].first, found[j].first));
  }
  ok = ok && min_dist >= 1e-3;
  double node_min = 0.0;
  if (!found.empty()) {
    for (double x : found[0].first.u.v) node_min = std::min(node_min, x);
    for (double x : found[0].first.v.v) node_min = std::min(node_min, x);
  }
  ok = ok && node_min >= -1e-10;
  const double dt = elapsed_s(t0);
  ok = ok && dt < 300.0;
  report(6, "multiplicity", ok,
         fmt("states=%zu min equiv dist=%.3g (>=1e-3) node min=%.2g "
             "(>=-1e-10) %.1fs",
             found.size(), min_dist, node_min, dt));
}

// ---- criterion 7: phase separation ------------------------------------------

void criterion_7() {
  const auto t0 = std::chrono::steady_clock::now();
  auto g = make_annulus(4, 1.0, 2.0, 512);
  SystemParams p = make_params(4, 1.0, 1.0, -1.0);
  FlowConfig cfg;
  auto recs = separation_sweep(g, p, {-1.0, -10.0, -100.0, -1000.0}, cfg);

  bool ok = recs.size() == 4;
  for (const auto& r : recs) ok = ok && r.converged;
  for (std::size_t k = 1; k < recs.size(); ++k)
    ok = ok && recs[k].overlap < recs[k - 1].overlap;
  const double ratio =
      recs.empty() ? 1.0 : recs.back().overlap / recs.front().overlap;
  ok = ok && ratio <= 1e-3;

  // Disjoint supports with small coverage gap at the final rung.
  double gap = 1.0, resid = 1.0;
  if (!recs.empty()) {
    const auto& last = recs.back();
    ok = ok && last.omega1_hi <= last.omega2_lo;
    const double len = g->ax1.x.back() - g->ax1.x.front();
    gap = len - (last.omega1_hi - last.omega1_lo) -
          (last.omega2_hi - last.omega2_lo);
    ok = ok && gap <= 0.05 * len;
    resid = std::max(last.resid1, last.resid2);
    ok = ok && resid <= 5e-2;
  }
  const double dt = elapsed_s(t0);
  ok = ok && dt < 600.0;
  report(7, "phase-separation", ok,
         fmt("overlap ratio=%.3g (tol 1e-3) coverage gap=%.3g (tol 0.05) "
             "limit resid=%.3g (tol 5e-2) %.0fs",
             ratio, gap, resid, dt));
}

// ---- criterion 8: starshaped obstruction ------------------------------------

void criterion_8() {
  auto g = make_ball(4, 2.0, 256);
  SystemParams p = make_params(4, 1.0, 1.0, -1.0);
  FlowConfig cfg;
  cfg.max_iters = 4000;
  auto [state, rep] = flow_to_critical(genus_init(g, 1, p).front(), p, cfg);

  bool ok = !rep.converged && !rep.diagnostic.empty();
  // Concentration radius shrinks along the run.
  const double ts = p.two_star();
  std::vector<double> eps;
  for (const PairState& snap : rep.snapshots) {
    const double total =
        integrate2(snap.u, snap.v, [&](double a, double b) {
          return p.mu1 * apow(a, ts) + p.mu2 * apow(b, ts);
        });
    eps.push_back(concentration_function(snap, p, 0.5 * total).first);
  }
  ok = ok && eps.size() >= 2 && eps.back() < 0.5 * eps.front();
  report(8, "starshaped-obstruction", ok,
         fmt("converged=%d diag=\"%s\" eps %.3g -> %.3g (must halve)",
             rep.converged ? 1 : 0, rep.diagnostic.c_str(),
             eps.empty() ? 0.0 : eps.front(), eps.empty() ? 0.0 : eps.back()));
}

// ---- criterion 9: Brezis-Lieb harness ---------------------------------------

void criterion_9() {
  auto g = make_ball(10, 6.0, 4096);
  const double ts = critical_exponent(10);
  SystemParams p;
  p.N = 10;
  p.mu1 = p.mu2 = 1.0;
  p.lambda = -1.0;
  p.alpha = p.beta = 0.5 * ts;
  PairState base(make_bump(g, {3.3}, 1.5, 1.0), make_bump(g, {3.3}, 1.5, 0.7));

  bool ok = true;
  double worst_ratio = 0.0;
  for (BLKind kind : {BLKind::product, BLKind::power, BLKind::derivative}) {
    auto d = bl_deficit(kind, g, base, {0.2, 0.1, 0.05, 0.025}, p);
    for (std::size_t k = 1; k < d.size(); ++k) ok = ok && d[k] < d[k - 1];
    const double ratio = d.back() / d.front();
    worst_ratio = std::max(worst_ratio, ratio);
    ok = ok && ratio <= 1e-3;
  }
  const double c1 = bl_mixed_inequality_probe(p.alpha, p.beta, 0.5, 100000);
  const double c2 = bl_mixed_inequality_probe(p.alpha, p.beta, 0.5, 200000);
  const double drift = std::abs(c2 - c1) / c1;
  ok = ok && drift <= 0.10;
  report(9, "brezis-lieb-harness", ok,
         fmt("worst deficit ratio=%.3g (tol 1e-3) probe C=%.4f drift=%.3g "
             "(tol 0.10)",
             worst_ratio, c1, drift));
}

// ---- criterion 10: CLI determinism ------------------------------------------

void criterion_10() {
#ifndef CRITSYS_CLI_PATH
  report(10, "cli-determinism", false, "CLI path not configured");
#else
  const fs::path dir = fs::temp_directory_path() / "critsys-accept";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "sweep.cfg";
  {
    std::ofstream f(cfg);
    f << "geometry=annulus\nN=4\na=1\nb=2\nmu1=1\nmu2=1\nlambda=-1\n"
         "resolution=128\nlambdas=-1,-10,-100,-1000\n";
  }
  auto run = [&](const std::string& out) {
    const std::string cmd = std::string(CRITSYS_CLI_PATH) + " sweep --config " +
                            cfg.string() + " --out " + (dir / out).string() +
                            " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const int rc1 = run("run1");
  const int rc2 = run("run2");
  auto slurp = [&](const std::string& out) {
    std::ifstream f(dir / out / "sweep.csv", std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  const std::string s1 = slurp("run1"), s2 = slurp("run2");
  const bool ok = rc1 == 0 && rc2 == 0 && !s1.empty() && s1 == s2;
  report(10, "cli-determinism", ok,
         fmt("exit codes %d/%d, sweep.csv %zu bytes, byte-identical=%d", rc1,
             rc2, s1.size(), s1 == s2 ? 1 : 0));
#endif
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%s: %d/10 criteria passed\n", failures == 0 ? "PASS" : "FAIL",
              10 - failures);
  return failures == 0 ? 0 : 1;
}
