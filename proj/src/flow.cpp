#include "critsys/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace critsys {

namespace {

double pair_norm_sq(const PairState& st) {
  return dirichlet_norm_sq(st.u) + dirichlet_norm_sq(st.v);
}

double weighted_residual_norm(const Field& fu, const Field& fv) {
  double s = 0.0;
  const Grid& g = *fu.grid;
  for (std::size_t k = 0; k < fu.size(); ++k) {
    if (g.is_boundary[k]) continue;
    s += g.weight[k] * (fu.v[k] * fu.v[k] + fv.v[k] * fv.v[k]);
  }
  return std::sqrt(s);
}

// Strong-form residual (-Δu - f_u, -Δv - f_v) of the discrete system.
void system_residual(const PairState& st, const SystemParams& p, Field& Fu,
                     Field& Fv) {
  const double ts = p.two_star();
  Fu = laplace_apply(st.u);
  Fv = laplace_apply(st.v);
  const Grid& g = *st.u.grid;
  for (std::size_t k = 0; k < Fu.size(); ++k) {
    if (g.is_boundary[k]) continue;
    const double u = st.u.v[k], v = st.v.v[k];
    Fu.v[k] -= p.mu1 * spow(u, ts - 1.0) +
               p.lambda * p.alpha * spow(u, p.alpha - 1.0) * apow(v, p.beta);
    Fv.v[k] -= p.mu2 * spow(v, ts - 1.0) +
               p.lambda * p.beta * apow(u, p.alpha) * spow(v, p.beta - 1.0);
  }
}

}  // namespace

std::pair<PairState, FlowReport> flow_to_critical(const PairState& start,
                                                  const SystemParams& p,
                                                  const FlowConfig& cfg) {
  FlowReport rep;
  PairState x;
  try {
    x = nehari_project(start, p).second;
  } catch (const std::exception& e) {
    rep.diagnostic = std::string("initial projection failed: ") + e.what();
    return {start, rep};
  }

  double E = x.energy;
  double tau = cfg.step;
  const int snap_stride =
      std::max(1, cfg.max_iters / std::max(1, cfg.snapshot_count));
  int stall = 0;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    rep.iterations = iter;
    PairState g = grad(x, p);
    const double gn = sobolev_norm(g);
    x.grad_norm = gn;
    rep.energy_trace.push_back(E);
    rep.grad_norm_trace.push_back(gn);
    if (iter == 1 || iter % snap_stride == 0) rep.snapshots.push_back(x);

    if (gn <= cfg.grad_tol &&
        std::max(std::abs(x.f1), std::abs(x.f2)) <=
            cfg.nehari_tol * std::max(1.0, pair_norm_sq(x))) {
      rep.converged = true;
      break;
    }

    bool accepted = false;
    bool projected_any = false;
    // Once the Armijo decrease drops below the roundoff floor of E, energy
    // comparisons are pure noise; switch to demanding gradient contraction.
    const double noise = 1e-12 * std::abs(E);
    const bool noise_regime = 1e-4 * cfg.step * gn * gn <= noise;
    for (int ls = 0; ls < 30; ++ls, tau *= 0.5) {
      PairState cand(x.u, x.v);
      axpy(cand.u, -tau, g.u);
      axpy(cand.v, -tau, g.v);
      try {
        PairState y = nehari_project(cand, p).second;
        projected_any = true;
        bool good = y.energy <= E - 1e-4 * tau * gn * gn;
        if (!good && noise_regime && y.energy <= E + noise)
          good = sobolev_norm(grad(y, p)) <= 0.9 * gn;
        if (good) {
          const double decrease = E - y.energy;
          x = std::move(y);
          E = x.energy;
          accepted = true;
          tau = std::min(tau * 2.0, 100.0 * cfg.step);
          stall = (decrease < 1e-14 && !noise_regime) ? stall + 1 : 0;
          break;
        }
      } catch (const projection_error&) {
        // shrink the step and retry
      } catch (const std::domain_error&) {
        // step annihilated a component; shrink and retry
      }
    }
    if (!accepted || stall >= 50) {
      // Descent exhausted. Near a nondegenerate critical point a guarded
      // Newton step finishes the job; the move bound rejects the polish at
      // concentrating (Palais-Smale, non-convergent) iterates, where the
      // nearest discrete solution is a far-away grid-scale spike.
      PairState polished = x;
      if (x.u.grid->radial() && newton_refine(polished, p)) {
        Field du = polished.u - x.u, dv = polished.v - x.v;
        const double move =
            std::sqrt(dirichlet_norm_sq(du) + dirichlet_norm_sq(dv));
        if (move <= 1e-3 * std::sqrt(pair_norm_sq(x))) {
          polished.refresh(p);
          polished.grad_norm = sobolev_norm(grad(polished, p));
          if (polished.grad_norm <= cfg.grad_tol) {
            x = std::move(polished);
            E = x.energy;
            rep.converged = true;
            break;
          }
        }
      }
      rep.diagnostic =
          !projected_any
              ? "projection failure (collapse toward semitrivial or "
                "concentrating iterates)"
              : (accepted ? "stagnation: energy flat while gradient above "
                            "tolerance"
                          : "line search stagnated");
      break;
    }
  }

  if (!rep.converged && rep.diagnostic.empty())
    rep.diagnostic = "max_iters reached";
  x.refresh(p);
  rep.snapshots.push_back(x);
  rep.final_energy = x.energy;
  rep.final_grad_norm = x.grad_norm = sobolev_norm(grad(x, p));
  rep.final_norm_sq = pair_norm_sq(x);
  if (rep.final_grad_norm <= cfg.grad_tol &&
      std::max(std::abs(x.f1), std::abs(x.f2)) <=
          cfg.nehari_tol * std::max(1.0, rep.final_norm_sq))
    rep.converged = true;
  // A competitive state on the constraint cannot lie below the Nehari
  // infimum, which is never attained; a discrete state that does is a
  // grid-scale concentration artifact (the starshaped obstruction in
  // discrete form), not a solution.
  if (rep.converged && p.lambda < 0.0 &&
      x.energy < 0.99 * nehari_inf_value(p)) {
    rep.converged = false;
    rep.diagnostic =
        "energy below the Nehari infimum: grid-scale concentration artifact";
  }
  return {std::move(x), std::move(rep)};
}

Field scalar_ground(const GridPtr& grid, double lo, double hi, double mu,
                    int N, double tol, int max_iters) {
  const Grid& g = *grid;
  if (!g.radial()) throw std::domain_error("scalar_ground: radial grids only");
  const double h = g.ax1.h;
  const int ilo = static_cast<int>(std::lround((lo - g.ax1.x.front()) / h));
  const int ihi = static_cast<int>(std::lround((hi - g.ax1.x.front()) / h));
  if (ihi - ilo < 16)
    throw std::domain_error("scalar_ground: sub-interval too coarse");

  ReducedGeometry sub;
  sub.N = N;
  sub.a = g.ax1.x[ilo];
  sub.b = g.ax1.x[ihi];
  sub.kind = (sub.a == 0.0) ? GeometryKind::radial_ball
                            : GeometryKind::radial_annulus;
  GridPtr sg = build_grid(sub, ihi - ilo);

  const double ts = critical_exponent(N);
  auto rescale = [&](Field& u) {
    const double A = dirichlet_norm_sq(u);
    const double P = mu * integrate(u, [&](double x) { return apow(x, ts); });
    if (!(A > 0.0) || !(P > 0.0))
      throw std::runtime_error("scalar_ground: degenerate iterate");
    const double s = std::pow(A / P, 1.0 / (ts - 2.0));
    for (double& x : u.v) x *= s;
    return A * s * s;  // ||su||^2
  };
  auto J = [&](const Field& u) {
    const double A = dirichlet_norm_sq(u);
    const double P = mu * integrate(u, [&](double x) { return apow(x, ts); });
    return 0.5 * A - P / ts;
  };

  Field u = make_bump(sg, {0.5 * (sub.a + sub.b)}, 0.3 * (sub.b - sub.a), 1.0);
  rescale(u);
  double Ju = J(u);
  double tau = 1.0;

  for (int iter = 0; iter < max_iters; ++iter) {
    Field f(sg);
    for (std::size_t k = 0; k < f.size(); ++k)
      f.v[k] = mu * spow(u.v[k], ts - 1.0);
    f.zero_boundary();
    Field grad_u = u - inv_laplace_solve(f);
    const double gn = std::sqrt(dirichlet_norm_sq(grad_u));
    if (gn <= tol) break;

    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, tau *= 0.5) {
      Field cand = u;
      axpy(cand, -tau, grad_u);
      try {
        rescale(cand);
      } catch (const std::runtime_error&) {
        continue;
      }
      const double Jc = J(cand);
      if (Jc <= Ju - 1e-4 * tau * gn * gn) {
        u = std::move(cand);
        Ju = Jc;
        tau = std::min(tau * 2.0, 100.0);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  Field out(grid);
  for (int i = ilo; i <= ihi; ++i) out.v[g.idx(i)] = u.v[i - ilo];
  out.zero_boundary();
  return out;
}

bool newton_refine(PairState& state, const SystemParams& p, double tol,
                   int max_iters) {
  const Grid& g = *state.u.grid;
  if (!g.radial()) return false;
  const GridAxis& ax = g.ax1;
  const int n1 = ax.nodes;
  const int lo = ax.axis ? 0 : 1;
  const int hi = n1 - 2;
  const int m = hi - lo + 1;
  const double ts = p.two_star();

  Field Fu(state.u.grid), Fv(state.u.grid);
  system_residual(state, p, Fu, Fv);
  double res = weighted_residual_norm(Fu, Fv);
  const double scale = std::max(1.0, pair_norm_sq(state));

  using Mat2 = std::array<double, 4>;  // row-major 2x2
  auto inv2 = [](const Mat2& a) {
    const double det = a[0] * a[3] - a[1] * a[2];
    return Mat2{a[3] / det, -a[1] / det, -a[2] / det, a[0] / det};
  };
  auto mul2 = [](const Mat2& a, const Mat2& b) {
    return Mat2{a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
                a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
  };

  for (int it = 0; it < max_iters; ++it) {
    if (res <= tol * scale) return true;

    // Block-tridiagonal Jacobian: scalar off-diagonal couplings from -Δ,
    // dense 2x2 diagonal blocks from the nonlinearity.
    std::vector<Mat2> diag(m);
    std::vector<double> lower(m, 0.0), upper(m, 0.0);
    std::vector<double> bu(m), bv(m);
    for (int i = lo; i <= hi; ++i) {
      const int r = i - lo;
      const double vol =
          (i == 0 && ax.axis) ? ax.vol[0] : std::pow(ax.x[i], ax.dim - 1) * ax.h;
      const double cR = ax.face[i] / (ax.h * vol);
      const double cL = (i > 0) ? ax.face[i - 1] / (ax.h * vol) : 0.0;
      const double u = state.u.v[g.idx(i)], v = state.v.v[g.idx(i)];
      const double au = std::max(std::abs(u), 1e-14);
      const double av = std::max(std::abs(v), 1e-14);
      const double duu = p.mu1 * (ts - 1.0) * std::pow(au, ts - 2.0) +
                         p.lambda * p.alpha * (p.alpha - 1.0) *
                             std::pow(au, p.alpha - 2.0) * apow(v, p.beta);
      const double dvv = p.mu2 * (ts - 1.0) * std::pow(av, ts - 2.0) +
                         p.lambda * p.beta * (p.beta - 1.0) * apow(u, p.alpha) *
                             std::pow(av, p.beta - 2.0);
      const double duv = p.lambda * p.alpha * p.beta * spow(u, p.alpha - 1.0) *
                         spow(v, p.beta - 1.0);
      diag[r] = Mat2{cL + cR - duu, -duv, -duv, cL + cR - dvv};
      if (i > lo) lower[r] = -cL;
      if (i < hi) upper[r] = -cR;
      bu[r] = -Fu.v[g.idx(i)];
      bv[r] = -Fv.v[g.idx(i)];
    }

    // Block Thomas elimination.
    std::vector<Mat2> dinv(m);
    dinv[0] = inv2(diag[0]);
    for (int r = 1; r < m; ++r) {
      const double w = lower[r] * upper[r - 1];
      Mat2 d = diag[r];
      const Mat2& di = dinv[r - 1];
      d[0] -= w * di[0];
      d[1] -= w * di[1];
      d[2] -= w * di[2];
      d[3] -= w * di[3];
      dinv[r] = inv2(d);
      const double cu = lower[r] * (dinv[r - 1][0] * bu[r - 1] + dinv[r - 1][1] * bv[r - 1]);
      const double cv = lower[r] * (dinv[r - 1][2] * bu[r - 1] + dinv[r - 1][3] * bv[r - 1]);
      bu[r] -= cu;
      bv[r] -= cv;
    }
    std::vector<double> du(m), dv(m);
    du[m - 1] = dinv[m - 1][0] * bu[m - 1] + dinv[m - 1][1] * bv[m - 1];
    dv[m - 1] = dinv[m - 1][2] * bu[m - 1] + dinv[m - 1][3] * bv[m - 1];
    for (int r = m - 2; r >= 0; --r) {
      const double ru = bu[r] - upper[r] * du[r + 1];
      const double rv = bv[r] - upper[r] * dv[r + 1];
      du[r] = dinv[r][0] * ru + dinv[r][1] * rv;
      dv[r] = dinv[r][2] * ru + dinv[r][3] * rv;
    }

    // Damped update.
    bool accepted = false;
    for (double step = 1.0; step >= 1.0 / 1024.0; step *= 0.5) {
      PairState cand = state;
      for (int i = lo; i <= hi; ++i) {
        cand.u.v[g.idx(i)] += step * du[i - lo];
        cand.v.v[g.idx(i)] += step * dv[i - lo];
      }
      Field Gu(state.u.grid), Gv(state.u.grid);
      system_residual(cand, p, Gu, Gv);
      const double cres = weighted_residual_norm(Gu, Gv);
      if (cres < res) {
        state = std::move(cand);
        Fu = std::move(Gu);
        Fv = std::move(Gv);
        res = cres;
        accepted = true;
        break;
      }
    }
    if (!accepted) return res <= tol * scale;
  }
  return res <= tol * scale;
}

namespace {

// Segregated (blocks+0)-interface start: u on even blocks, v on odd blocks,
// each block carrying its own least-energy scalar profile.
PairState block_start(const GridPtr& grid, const SystemParams& p, int blocks) {
  const Grid& g = *grid;
  const double a = g.ax1.x.front(), b = g.ax1.x.back();
  PairState st{Field(grid), Field(grid)};
  for (int k = 0; k < blocks; ++k) {
    const double lo = a + k * (b - a) / blocks;
    const double hi = a + (k + 1) * (b - a) / blocks;
    const double mu = (k % 2 == 0) ? p.mu1 : p.mu2;
    Field w = scalar_ground(grid, lo, hi, mu, p.N, 1e-8, 4000);
    if (k % 2 == 0)
      st.u = st.u + w;
    else
      st.v = st.v + w;
  }
  st.refresh(p);
  return st;
}

FlowReport report_from_state(PairState& st, const SystemParams& p,
                             const FlowConfig& cfg, bool converged,
                             const std::string& note) {
  FlowReport rep;
  st.refresh(p);
  st.grad_norm = sobolev_norm(grad(st, p));
  // The constraint values are differences of O(||x||^2) quantities, so the
  // residual tolerance is relative to that scale.
  rep.converged = converged && st.grad_norm <= cfg.grad_tol &&
                  std::max(std::abs(st.f1), std::abs(st.f2)) <=
                      cfg.nehari_tol * std::max(1.0, pair_norm_sq(st));
  rep.final_energy = st.energy;
  rep.final_grad_norm = st.grad_norm;
  rep.final_norm_sq = pair_norm_sq(st);
  rep.diagnostic = note;
  rep.energy_trace.push_back(st.energy);
  rep.grad_norm_trace.push_back(st.grad_norm);
  rep.snapshots.push_back(st);
  return rep;
}

}  // namespace

std::vector<std::pair<PairState, FlowReport>> multi_start(
    const GridPtr& grid, const SystemParams& p, int n, const FlowConfig& cfg) {
  if (n < 1) throw std::domain_error("multi_start: n must be >= 1");
  std::vector<std::pair<PairState, FlowReport>> runs;

  // Descent from the segregated genus starts.
  for (auto& start : genus_init(grid, n, p)) {
    auto [st, rep] = flow_to_critical(start, p, cfg);
    runs.emplace_back(std::move(st), std::move(rep));
  }

  // Higher modes: multi-interface segregated composites. Plain descent
  // merges every genus start into the least-energy basin, so the
  // k-interface candidates are saddle-polished by Newton instead, walking
  // lambda in from the strongly segregated regime where the composite
  // (whose interface layers are thin) lies in the Newton basin.
  if (grid->radial()) {
    for (int j = 2; j <= n; ++j) {
      try {
        PairState st = block_start(grid, p, j + 1);
        bool ok = false;
        if (p.lambda < 0.0) {
          std::vector<double> ladder{p.lambda};
          while (ladder.back() > -1000.0) ladder.push_back(2.0 * ladder.back());
          SystemParams q = p;
          ok = true;
          for (auto it = ladder.rbegin(); it != ladder.rend() && ok; ++it) {
            q.lambda = *it;
            ok = newton_refine(st, q);
          }
        } else {
          ok = newton_refine(st, p);
        }
        st.refresh(p);
        runs.emplace_back(st, report_from_state(st, p, cfg, ok,
                                                "newton-corrected composite"));
      } catch (const std::exception& e) {
        PairState dummy{Field(grid), Field(grid)};
        FlowReport rep;
        rep.diagnostic = std::string("composite start failed: ") + e.what();
        runs.emplace_back(std::move(dummy), std::move(rep));
      }
    }
  }

  // Cooperative case: synchronized bubble start on ball geometries.
  if (p.lambda > 0.0 && grid->geom.kind == GeometryKind::radial_ball) {
    const auto roots = sync_roots(p);
    if (!roots.empty()) {
      const auto& r0 = roots.front();
      Field U(grid);
      const double eps = grid->geom.b / 10.0;
      for (int i = 0; i < grid->ax1.nodes; ++i)
        U.v[grid->idx(i)] = bubble_radial(p.N, eps, grid->ax1.x[i]);
      U.zero_boundary();
      PairState st(r0.s * U, r0.t * U);
      auto [sol, rep] = flow_to_critical(st, p, cfg);
      runs.emplace_back(std::move(sol), std::move(rep));
    }
  }

  // Keep converged runs, dedupe by equivalence distance, sort by energy.
  std::vector<std::pair<PairState, FlowReport>> out;
  for (auto& run : runs) {
    if (!run.second.converged) continue;
    bool duplicate = false;
    for (auto& kept : out) {
      if (equiv_distance(run.first, kept.first) < 1e-3) {
        duplicate = true;
        if (run.first.energy < kept.first.energy) kept = run;
        break;
      }
    }
    if (!duplicate) out.push_back(run);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.first.energy < b.first.energy;
  });

  // Positive representative for the least-energy state.
  if (!out.empty()) {
    PairState absed = out.front().first;
    for (double& x : absed.u.v) x = std::abs(x);
    for (double& x : absed.v.v) x = std::abs(x);
    auto [st, rep] = flow_to_critical(absed, p, cfg);
    if (rep.converged && st.energy <= out.front().first.energy * (1.0 + 1e-6))
      out.front() = {std::move(st), std::move(rep)};
  }
  return out;
}

std::pair<Field, double> limit_profile(const GridPtr& grid,
                                       const SystemParams& p,
                                       const FlowConfig& cfg) {
  const Grid& g = *grid;
  if (!g.radial()) throw std::domain_error("limit_profile: radial grids only");
  if (!(p.mu1 > 0.0) || !(p.mu2 > 0.0))
    throw std::domain_error("limit_profile: mu1, mu2 must be positive");
  const double ts = p.two_star();
  const double a = g.ax1.x.front(), b = g.ax1.x.back();

  auto split = [](const Field& w, Field& wp, Field& wm) {
    wp = w;
    wm = w;
    for (std::size_t k = 0; k < w.size(); ++k) {
      wp.v[k] = std::max(w.v[k], 0.0);
      wm.v[k] = std::min(w.v[k], 0.0);
    }
  };
  auto rescale_parts = [&](Field& w, double& sdev) {
    Field wp(grid), wm(grid);
    split(w, wp, wm);
    const double Ap = dirichlet_norm_sq(wp);
    const double Pp = p.mu1 * integrate(wp, [&](double x) { return apow(x, ts); });
    const double Am = dirichlet_norm_sq(wm);
    const double Pm = p.mu2 * integrate(wm, [&](double x) { return apow(x, ts); });
    if (!(Pp > 1e-300) || !(Pm > 1e-300) || !(Ap > 0.0) || !(Am > 0.0))
      throw std::runtime_error("limit_profile: one sign collapsed");
    const double s = std::pow(Ap / Pp, 1.0 / (ts - 2.0));
    const double t = std::pow(Am / Pm, 1.0 / (ts - 2.0));
    sdev = std::max(std::abs(s - 1.0), std::abs(t - 1.0));
    for (std::size_t k = 0; k < w.size(); ++k)
      w.v[k] = s * wp.v[k] + t * wm.v[k];
  };
  auto J = [&](const Field& w) {
    Field wp(grid), wm(grid);
    split(w, wp, wm);
    const double Pp = p.mu1 * integrate(wp, [&](double x) { return apow(x, ts); });
    const double Pm = p.mu2 * integrate(wm, [&](double x) { return apow(x, ts); });
    return 0.5 * dirichlet_norm_sq(w) - (Pp + Pm) / ts;
  };

  const double mid = 0.5 * (a + b);
  Field w = make_bump(grid, {0.5 * (a + mid)}, 0.3 * (mid - a), 1.0) -
            make_bump(grid, {0.5 * (mid + b)}, 0.3 * (b - mid), 1.0);
  double sdev = 0.0;
  rescale_parts(w, sdev);
  double Jw = J(w);
  double tau = cfg.step;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    Field f(grid);
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double x = w.v[k];
      f.v[k] = p.mu1 * spow(std::max(x, 0.0), ts - 1.0) +
               p.mu2 * spow(std::min(x, 0.0), ts - 1.0);
    }
    f.zero_boundary();
    Field grad_w = w - inv_laplace_solve(f);
    const double gn = std::sqrt(dirichlet_norm_sq(grad_w));
    if (gn <= cfg.grad_tol && sdev <= 1e-10) break;

    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, tau *= 0.5) {
      Field cand = w;
      axpy(cand, -tau, grad_w);
      double cd = 0.0;
      try {
        rescale_parts(cand, cd);
      } catch (const std::runtime_error&) {
        continue;
      }
      const double Jc = J(cand);
      if (Jc <= Jw - 1e-4 * tau * gn * gn) {
        w = std::move(cand);
        Jw = Jc;
        sdev = cd;
        tau = std::min(tau * 2.0, 100.0 * cfg.step);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return {std::move(w), Jw};
}

}  // namespace critsys
