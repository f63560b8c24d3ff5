#include "critsys/energy.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace critsys {

double spow(double x, double p) {
  if (x == 0.0) return 0.0;
  const double a = std::pow(std::abs(x), p);
  return x > 0.0 ? a : -a;
}

double apow(double x, double p) { return x == 0.0 ? 0.0 : std::pow(std::abs(x), p); }

namespace {

struct NehariScalars {
  double A, P, B, R, Q;  // ||u||^2, mu1∫|u|^{2*}, ||v||^2, mu2∫|v|^{2*}, ∫|u|^a|v|^b
};

NehariScalars nehari_scalars(const PairState& st, const SystemParams& p) {
  const double ts = p.two_star();
  NehariScalars s{};
  s.A = dirichlet_norm_sq(st.u);
  s.B = dirichlet_norm_sq(st.v);
  s.P = p.mu1 * integrate(st.u, [&](double x) { return apow(x, ts); });
  s.R = p.mu2 * integrate(st.v, [&](double x) { return apow(x, ts); });
  s.Q = integrate2(st.u, st.v, [&](double x, double y) {
    return apow(x, p.alpha) * apow(y, p.beta);
  });
  return s;
}

}  // namespace

double energy(const PairState& state, const SystemParams& p) {
  const NehariScalars s = nehari_scalars(state, p);
  const double ts = p.two_star();
  return 0.5 * (s.A + s.B) - (s.P + s.R) / ts - p.lambda * s.Q;
}

PairState grad(const PairState& state, const SystemParams& p) {
  const double ts = p.two_star();
  Field fu(state.u.grid), fv(state.v.grid);
  for (std::size_t k = 0; k < fu.size(); ++k) {
    const double u = state.u.v[k], v = state.v.v[k];
    fu.v[k] = p.mu1 * spow(u, ts - 1.0) +
              p.lambda * p.alpha * spow(u, p.alpha - 1.0) * apow(v, p.beta);
    fv.v[k] = p.mu2 * spow(v, ts - 1.0) +
              p.lambda * p.beta * apow(u, p.alpha) * spow(v, p.beta - 1.0);
  }
  fu.zero_boundary();
  fv.zero_boundary();
  PairState g(state.u - inv_laplace_solve(fu), state.v - inv_laplace_solve(fv));
  return g;
}

double sobolev_norm(const PairState& state) {
  return std::sqrt(dirichlet_norm_sq(state.u) + dirichlet_norm_sq(state.v));
}

std::pair<double, double> nehari_residuals(const PairState& state,
                                           const SystemParams& p) {
  const NehariScalars s = nehari_scalars(state, p);
  return {s.A - s.P - p.lambda * p.alpha * s.Q,
          s.B - s.R - p.lambda * p.beta * s.Q};
}

void PairState::refresh(const SystemParams& p) {
  energy = critsys::energy(*this, p);
  std::tie(f1, f2) = nehari_residuals(*this, p);
}

namespace {

// Normalized constraint values G1 = F1(su, tv)/s^2, G2 = F2(su, tv)/t^2
// from precomputed scalars. Normalizing removes the spurious trivial root
// at s = t = 0: G1(0+, t) = ||u||^2 > 0.
inline void scaled_residuals(const NehariScalars& c, const SystemParams& p,
                             double ts, double s, double t, double& G1,
                             double& G2) {
  const double lq = p.lambda * c.Q;
  G1 = c.A - std::pow(s, ts - 2.0) * c.P -
       p.alpha * lq * std::pow(s, p.alpha - 2.0) * std::pow(t, p.beta);
  G2 = c.B - std::pow(t, ts - 2.0) * c.R -
       p.beta * lq * std::pow(s, p.alpha) * std::pow(t, p.beta - 2.0);
}

// Solve F1(s, t) = 0 in s for fixed t by bracketing + bisection.
// Returns s > 0 or 0.0 on failure.
double solve_component(const NehariScalars& c, const SystemParams& p, double ts,
                       double t, bool first) {
  auto psi = [&](double s) {
    double G1, G2;
    scaled_residuals(c, p, ts, first ? s : t, first ? t : s, G1, G2);
    return first ? G1 : G2;
  };
  double lo = 1.0, hi = 1.0;
  double plo = psi(1.0);
  if (plo > 0.0) {
    hi = 1.0;
    for (int i = 0; i < 200 && psi(hi) > 0.0; ++i) hi *= 2.0;
    if (psi(hi) > 0.0) return 0.0;
    lo = hi / 2.0;
  } else if (plo < 0.0) {
    lo = 1.0;
    for (int i = 0; i < 200 && psi(lo) < 0.0; ++i) lo /= 2.0;
    if (psi(lo) < 0.0) return 0.0;
    hi = lo * 2.0;
  } else {
    return 1.0;
  }
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (psi(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::pair<NehariScaling, PairState> nehari_project(const PairState& state,
                                                   const SystemParams& p) {
  const double ts = p.two_star();
  const NehariScalars c = nehari_scalars(state, p);
  if (c.A <= 0.0 || c.P <= 0.0 || c.B <= 0.0 || c.R <= 0.0)
    throw std::domain_error("nehari_project: zero component");

  const double tol = 1e-12 * std::max({1.0, c.A, c.B});
  double s = std::pow(c.A / c.P, 1.0 / (ts - 2.0));
  double t = std::pow(c.B / c.R, 1.0 / (ts - 2.0));

  auto resid = [&](double ss, double tt, double& F1, double& F2) {
    scaled_residuals(c, p, ts, ss, tt, F1, F2);
    return std::max(std::abs(F1), std::abs(F2));
  };

  double F1, F2;
  double best = resid(s, t, F1, F2);

  // Damped Newton on (log s, log t).
  for (int it = 0; it < 120 && best > tol; ++it) {
    const double cpl1 =
        p.lambda * c.Q * std::pow(s, p.alpha - 2.0) * std::pow(t, p.beta);
    const double cpl2 =
        p.lambda * c.Q * std::pow(s, p.alpha) * std::pow(t, p.beta - 2.0);
    // Derivatives of (G1, G2) with respect to log s, log t.
    const double J11 = -(ts - 2.0) * std::pow(s, ts - 2.0) * c.P -
                       p.alpha * (p.alpha - 2.0) * cpl1;
    const double J12 = -p.alpha * p.beta * cpl1;
    const double J21 = -p.beta * p.alpha * cpl2;
    const double J22 = -(ts - 2.0) * std::pow(t, ts - 2.0) * c.R -
                       p.beta * (p.beta - 2.0) * cpl2;
    const double det = J11 * J22 - J12 * J21;
    if (det == 0.0 || !std::isfinite(det)) break;
    const double dx = -(J22 * F1 - J12 * F2) / det;
    const double dy = -(-J21 * F1 + J11 * F2) / det;

    bool accepted = false;
    double step = 1.0;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      const double sn = s * std::exp(step * dx);
      const double tn = t * std::exp(step * dy);
      double G1, G2;
      const double r = resid(sn, tn, G1, G2);
      if (r < best) {
        s = sn;
        t = tn;
        F1 = G1;
        F2 = G2;
        best = r;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  // Alternating 1-D bisection fallback.
  for (int it = 0; it < 400 && best > tol; ++it) {
    const double sn = solve_component(c, p, ts, t, true);
    if (sn <= 0.0) throw projection_error("nehari_project: no positive scaling");
    s = sn;
    const double tn = solve_component(c, p, ts, s, false);
    if (tn <= 0.0) throw projection_error("nehari_project: no positive scaling");
    t = tn;
    best = resid(s, t, F1, F2);
  }

  if (!(best <= 10.0 * tol) || !std::isfinite(s) || !std::isfinite(t) ||
      s <= 0.0 || t <= 0.0)
    throw projection_error("nehari_project: did not converge");

  PairState out(s * state.u, t * state.v);
  out.refresh(p);
  return {NehariScaling{s, t}, std::move(out)};
}

PairState rho_project(const PairState& state, const SystemParams& p) {
  const double ts = p.two_star();
  const NehariScalars c = nehari_scalars(state, p);
  if (c.A <= 0.0 || c.P <= 0.0 || c.B <= 0.0 || c.R <= 0.0)
    throw std::domain_error("rho_project: zero component");
  const double su = std::pow(c.A / c.P, 1.0 / (ts - 2.0));
  const double tv = std::pow(c.B / c.R, 1.0 / (ts - 2.0));
  PairState out(su * state.u, tv * state.v);
  out.refresh(p);
  return out;
}

std::vector<PairState> genus_init(const GridPtr& grid, int n,
                                  const SystemParams& p) {
  if (n < 1) throw std::domain_error("genus_init: n must be >= 1");
  const Grid& g = *grid;
  const double lo = g.ax1.x.front(), hi = g.ax1.x.back();
  const double window = (hi - lo) / (2 * n);
  const double width = 0.35 * window;
  if (width < 3.0 * g.ax1.h)
    throw std::domain_error("genus_init: too many windows for resolution");

  auto bump_at = [&](int k) {
    const double c = lo + (k + 0.5) * window;
    std::vector<double> center{c};
    if (!g.radial()) center.push_back(0.5 * (g.ax2.x.front() + g.ax2.x.back()));
    return make_bump(grid, center, width, 1.0);
  };

  std::vector<PairState> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    PairState st(bump_at(i), bump_at(n + i));
    out.push_back(rho_project(st, p));
  }
  return out;
}

double equiv_distance(const PairState& a, const PairState& b) {
  const double na = sobolev_norm(a), nb = sobolev_norm(b);
  const double scale = std::max(na, nb);
  if (scale == 0.0) return 0.0;

  const std::array<std::array<double, 2>, 4> signs{{{1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};
  double best = std::numeric_limits<double>::infinity();
  for (bool swap : {false, true}) {
    const Field& bu = swap ? b.v : b.u;
    const Field& bv = swap ? b.u : b.v;
    for (const auto& sg : signs) {
      Field du = a.u;
      axpy(du, -sg[0], bu);
      Field dv = a.v;
      axpy(dv, -sg[1], bv);
      const double d =
          std::sqrt(dirichlet_norm_sq(du) + dirichlet_norm_sq(dv));
      best = std::min(best, d);
    }
  }
  return best / scale;
}

}  // namespace critsys
