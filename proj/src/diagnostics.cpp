#include "critsys/diagnostics.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace critsys {

namespace {

// Fraction of the sphere of radius r about the origin that lies inside the
// ball of radius eps centered at distance c from the origin: a spherical
// cap, expressed through the regularized incomplete beta function.
double cap_fraction(int N, double r, double c, double eps) {
  if (r + c <= eps) return 1.0;
  if (std::abs(r - c) >= eps) return 0.0;
  if (c == 0.0 || r == 0.0) return r <= eps ? 1.0 : 0.0;
  const double cth = (r * r + c * c - eps * eps) / (2.0 * r * c);
  const double s2 = std::max(0.0, 1.0 - cth * cth);
  const double half = 0.5 * boost::math::ibeta((N - 1) / 2.0, 0.5, s2);
  return cth >= 0.0 ? half : 1.0 - half;
}

std::vector<double> concentration_density(const PairState& st,
                                          const SystemParams& p) {
  const double ts = p.two_star();
  const double lp = std::max(p.lambda, 0.0);
  std::vector<double> f(st.u.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double u = st.u.v[k], v = st.v.v[k];
    f[k] = p.mu1 * apow(u, ts) + p.mu2 * apow(v, ts) +
           ts * lp * apow(u, p.alpha) * apow(v, p.beta);
  }
  return f;
}

// Interval hull and 1-D measure of {|w| > theta} on a radial grid, plus the
// relative interior residual of -Δ w = mu |w|^{2*-2} w on the shrunk hull.
struct SupportInfo {
  double lo = 0.0, hi = 0.0, resid = 0.0;
  bool empty = true;
};

SupportInfo support_info(const Field& w, const Field& other, double mu,
                         double ts) {
  const Grid& g = *w.grid;
  SupportInfo info;
  double wmax = 0.0;
  for (double x : w.v) wmax = std::max(wmax, std::abs(x));
  if (wmax == 0.0) return info;
  const double theta = 1e-3 * wmax;

  // Dominance-trimmed support: above threshold and the larger of the two
  // components, the discrete analogue of the limit positivity set. The
  // exponential tails beyond the interface stay with the other component.
  int ilo = -1, ihi = -1;
  for (int i = 0; i < g.ax1.nodes; ++i) {
    const std::size_t k = g.idx(i);
    if (std::abs(w.v[k]) > theta &&
        std::abs(w.v[k]) >= std::abs(other.v[k])) {
      if (ilo < 0) ilo = i;
      ihi = i;
    }
  }
  if (ilo < 0) return info;
  info.empty = false;
  info.lo = g.ax1.x[ilo];
  info.hi = g.ax1.x[ihi];

  // Residual over the hull shrunk by 15% per side: the interface layers at
  // the ends are excluded, matching the open positivity set of the limit.
  const double margin = 0.15 * (info.hi - info.lo);
  Field lap = laplace_apply(w);
  double num = 0.0, den = 0.0;
  for (int i = ilo; i <= ihi; ++i) {
    const double r = g.ax1.x[i];
    if (r < info.lo + margin || r > info.hi - margin) continue;
    const std::size_t k = g.idx(i);
    const double target = mu * spow(w.v[k], ts - 1.0);
    num += g.weight[k] * (lap.v[k] - target) * (lap.v[k] - target);
    den += g.weight[k] * target * target;
  }
  info.resid = den > 0.0 ? std::sqrt(num / den) : 0.0;
  return info;
}

SeparationRecord make_record(const PairState& st, const SystemParams& p,
                             bool converged) {
  SeparationRecord rec;
  rec.lambda = p.lambda;
  rec.converged = converged;
  rec.state = st;
  rec.energy = st.energy;
  rec.overlap =
      integrate2(st.u, st.v, [&](double a, double b) {
        return apow(a, p.alpha) * apow(b, p.beta);
      });

  const double ts = p.two_star();
  SupportInfo s1 = support_info(st.u, st.v, p.mu1, ts);
  SupportInfo s2 = support_info(st.v, st.u, p.mu2, ts);
  rec.omega1_lo = s1.lo;
  rec.omega1_hi = s1.hi;
  rec.omega2_lo = s2.lo;
  rec.omega2_hi = s2.hi;
  rec.resid1 = s1.resid;
  rec.resid2 = s2.resid;

  const Grid& g = *st.u.grid;
  double umax = 0.0, vmax = 0.0;
  for (double x : st.u.v) umax = std::max(umax, std::abs(x));
  for (double x : st.v.v) vmax = std::max(vmax, std::abs(x));
  const double tu = 1e-3 * umax, tv = 1e-3 * vmax;
  for (int i = 0; i < g.ax1.nodes; ++i) {
    const std::size_t k = g.idx(i);
    if (std::abs(st.u.v[k]) > tu && std::abs(st.v.v[k]) > tv)
      rec.support_gap += g.ax1.h;
  }
  return rec;
}

}  // namespace

double pohozaev_residual(const PairState& state, const SystemParams& p) {
  const Grid& g = *state.u.grid;
  if (!g.radial())
    throw std::domain_error("pohozaev_residual: radial grids only");
  const GridAxis& ax = g.ax1;
  const int n = ax.nodes - 1;
  const double h = ax.h;

  // One-sided second-order derivatives; Dirichlet data zero at both ends.
  auto d_outer = [&](const Field& w) {
    return (w.v[g.idx(n - 2)] - 4.0 * w.v[g.idx(n - 1)]) / (2.0 * h);
  };
  auto d_inner = [&](const Field& w) {
    return (4.0 * w.v[g.idx(1)] - w.v[g.idx(2)]) / (2.0 * h);
  };

  const double b = ax.x[n];
  const double a = ax.x[0];
  double term = std::pow(b, p.N) *
                (d_outer(state.u) * d_outer(state.u) +
                 d_outer(state.v) * d_outer(state.v));
  if (!ax.axis)
    term -= std::pow(a, p.N) * (d_inner(state.u) * d_inner(state.u) +
                                d_inner(state.v) * d_inner(state.v));
  term *= g.sphere_factor;

  const double norm_sq =
      dirichlet_norm_sq(state.u) + dirichlet_norm_sq(state.v);
  return norm_sq > 0.0 ? term / norm_sq : 0.0;
}

std::pair<double, double> concentration_function(const PairState& state,
                                                 const SystemParams& p,
                                                 double delta) {
  const Grid& g = *state.u.grid;
  if (!g.radial())
    throw std::domain_error("concentration_function: radial grids only");
  const std::vector<double> f = concentration_density(state, p);

  double total = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) total += g.weight[k] * f[k];
  if (!(delta > 0.0) || !(delta < total))
    throw std::domain_error(
        "concentration_function: delta outside (0, total mass)");

  // Candidate centers (c,0,...,0) on a subsampled set of radial nodes.
  const int stride = std::max(1, g.ax1.nodes / 64);
  std::vector<double> centers;
  for (int i = 0; i < g.ax1.nodes; i += stride) centers.push_back(g.ax1.x[i]);

  auto mass = [&](double c, double eps) {
    double s = 0.0;
    for (int i = 0; i < g.ax1.nodes; ++i) {
      const std::size_t k = g.idx(i);
      if (f[k] == 0.0) continue;
      s += g.weight[k] * f[k] * cap_fraction(p.N, g.ax1.x[i], c, eps);
    }
    return s;
  };
  auto best_mass = [&](double eps, double* argmax = nullptr) {
    double m = -1.0;
    for (double c : centers) {
      const double s = mass(c, eps);
      if (s > m) {
        m = s;
        if (argmax) *argmax = c;
      }
    }
    return m;
  };

  double lo = 0.25 * g.ax1.h, hi = 2.0 * g.ax1.x.back();
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    (best_mass(mid) >= delta ? hi : lo) = mid;
  }
  double center = 0.0;
  best_mass(hi, &center);
  return {hi, center};
}

std::vector<SeparationRecord> separation_sweep(const GridPtr& grid,
                                               const SystemParams& params_base,
                                               const std::vector<double>& lambdas,
                                               const FlowConfig& cfg) {
  if (!grid->radial())
    throw std::domain_error("separation_sweep: radial grids only");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] < 0.0))
      throw std::domain_error("separation_sweep: lambdas must be negative");
    if (i > 0 && !(lambdas[i] < lambdas[i - 1]))
      throw std::domain_error("separation_sweep: lambdas must be decreasing");
  }

  std::vector<SeparationRecord> records;
  PairState warm;
  double warm_lambda = 0.0;
  bool have_warm = false;
  for (double lam : lambdas) {
    SystemParams p = params_base;
    p.lambda = lam;
    p.validate();

    PairState sol;
    bool ok = false;
    if (have_warm) {
      auto [st, rep] = flow_to_critical(warm, p, cfg);
      sol = std::move(st);
      ok = rep.converged;
    }
    if (!ok && have_warm && grid->radial()) {
      // The warm state may have no Nehari scaling at a much stronger
      // coupling; path-follow it instead, halving lambda per Newton rung.
      PairState st = warm;
      SystemParams q = p;
      bool nok = true;
      double l = warm_lambda;
      while (nok && l > lam) {
        l = std::max(2.0 * l, lam);
        q.lambda = l;
        nok = newton_refine(st, q, 1e-11, 100);
      }
      if (nok) {
        st.refresh(p);
        st.grad_norm = sobolev_norm(grad(st, p));
        const double scale =
            std::max(1.0, dirichlet_norm_sq(st.u) + dirichlet_norm_sq(st.v));
        if (st.grad_norm <= cfg.grad_tol &&
            std::max(std::abs(st.f1), std::abs(st.f2)) <=
                cfg.nehari_tol * scale) {
          sol = std::move(st);
          ok = true;
        }
      }
    }
    if (!ok) {
      auto [st, rep] = flow_to_critical(genus_init(grid, 1, p).front(), p, cfg);
      if (rep.converged || !have_warm) sol = std::move(st);
      ok = rep.converged;
    }
    records.push_back(make_record(sol, p, ok));
    if (ok) {
      warm = sol;
      warm_lambda = lam;
      have_warm = true;
    }
  }
  return records;
}

double bl_mixed_inequality_probe(double alpha, double beta, double epsilon,
                                 long samples, unsigned seed) {
  if (alpha < 1.0 || beta < 1.0 || !(epsilon > 0.0))
    throw std::domain_error("bl_mixed_inequality_probe: need alpha,beta >= 1, epsilon > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-10.0, 10.0);
  double C = 0.0;
  for (long k = 0; k < samples; ++k) {
    const double a1 = box(rng), a2 = box(rng), b1 = box(rng), b2 = box(rng);
    const double lhs = std::abs(apow(a1 + b1, alpha) * apow(a2 + b2, beta) -
                                apow(a1, alpha) * apow(a2, beta));
    const double allow = epsilon * apow(a1, alpha) * apow(a2, beta);
    const double denom = apow(a1, alpha) * apow(b2, beta) +
                         apow(b1, alpha) * apow(a2, beta) +
                         apow(b1, alpha) * apow(b2, beta);
    if (denom > 0.0) C = std::max(C, (lhs - allow) / denom);
  }
  return C;
}

std::vector<double> bl_deficit(BLKind kind, const GridPtr& grid,
                               const PairState& base,
                               const std::vector<double>& bubble_scales,
                               const SystemParams& p) {
  const Grid& g = *grid;
  if (g.geom.kind != GeometryKind::radial_ball)
    throw std::domain_error("bl_deficit: radial ball grids only");
  for (std::size_t i = 0; i < bubble_scales.size(); ++i) {
    if (!(bubble_scales[i] > 0.0))
      throw std::domain_error("bl_deficit: scales must be positive");
    if (i > 0 && !(bubble_scales[i] < bubble_scales[i - 1]))
      throw std::domain_error("bl_deficit: scales must be decreasing");
    if (bubble_scales[i] > g.geom.b / 20.0)
      throw std::domain_error(
          "bl_deficit: bubble support leaves the truncated domain");
  }

  const double ts = p.two_star();
  // Fixed smooth probe covering the whole ball, for the derivative pairing.
  Field phi(grid);
  for (int i = 0; i < g.ax1.nodes; ++i) {
    const double q = g.ax1.x[i] / g.geom.b;
    phi.v[g.idx(i)] = std::pow(1.0 - q * q, 3);
  }
  phi.zero_boundary();

  std::vector<double> deficits;
  for (double eps : bubble_scales) {
    // Pointwise-combined integrand: the huge bubble-only and base-only
    // terms cancel exactly node by node instead of after quadrature.
    double acc = 0.0;
    for (int i = 0; i < g.ax1.nodes; ++i) {
      const std::size_t k = g.idx(i);
      const double B = bubble_radial(p.N, eps, g.ax1.x[i]);
      const double u = base.u.v[k], v = base.v.v[k];
      double val = 0.0;
      switch (kind) {
        case BLKind::product:
          val = apow(u + B, p.alpha) * apow(v + B, p.beta) -
                apow(B, p.alpha) * apow(B, p.beta) -
                apow(u, p.alpha) * apow(v, p.beta);
          break;
        case BLKind::power:
          val = apow(u + B, ts) - apow(B, ts) - apow(u, ts);
          break;
        case BLKind::derivative:
          val = (spow(u + B, p.alpha - 1.0) * apow(v + B, p.beta) -
                 spow(B, p.alpha - 1.0) * apow(B, p.beta) -
                 spow(u, p.alpha - 1.0) * apow(v, p.beta)) *
                phi.v[k];
          break;
      }
      acc += g.weight[k] * val;
    }
    deficits.push_back(std::abs(acc));
  }
  return deficits;
}

bool budget_check(const FlowReport& report, const SystemParams& p,
                  double orbit_min) {
  return report.final_norm_sq <= energy_budget(p, orbit_min);
}

}  // namespace critsys
