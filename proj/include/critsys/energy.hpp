#pragma once

#include "critsys/grid.hpp"
#include "critsys/scalar_core.hpp"

#include <utility>

namespace critsys {

/// Candidate pair (u, v) with cached functional values. Caches are filled
/// by refresh(); states produced by the solvers come refreshed.
struct PairState {
  Field u, v;
  double energy = 0.0;
  double f1 = 0.0, f2 = 0.0;   // Nehari constraint residuals
  double grad_norm = -1.0;     // Sobolev-gradient norm, -1 when not computed

  PairState() = default;
  PairState(Field uu, Field vv) : u(std::move(uu)), v(std::move(vv)) {}
  void refresh(const SystemParams& p);
};

struct NehariScaling {
  double s = 1.0, t = 1.0;
};

/// Raised by nehari_project when no positive scaling pair exists; flows
/// treat it as a recoverable signal.
struct projection_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// E(u,v) = 1/2 (||u||^2 + ||v||^2) - (1/2*) ∫(mu1|u|^{2*} + mu2|v|^{2*})
///          - lambda ∫ |u|^alpha |v|^beta, with Dirichlet energies taken by
/// summation by parts on the weighted grid.
double energy(const PairState& state, const SystemParams& p);

/// Sobolev (preconditioned) gradient pair: g_u solves
///   -Δ g_u = -Δ u - mu1|u|^{2*-2}u - lambda alpha |u|^{alpha-2}|v|^beta u,
/// and symmetrically for g_v. Zero at a critical point.
PairState grad(const PairState& state, const SystemParams& p);

/// Sobolev norm sqrt(||g_u||^2 + ||g_v||^2) of a gradient pair.
double sobolev_norm(const PairState& state);

/// (F1, F2) = (∂_u E(u,v) u, ∂_v E(u,v) v).
std::pair<double, double> nehari_residuals(const PairState& state,
                                           const SystemParams& p);

/// Scales (s u, t v) onto the Nehari set by damped Newton on (log s, log t)
/// with an alternating-bisection fallback. Throws projection_error when no
/// positive solution is found, std::domain_error when u or v vanishes.
std::pair<NehariScaling, PairState> nehari_project(const PairState& state,
                                                   const SystemParams& p);

/// Independent single-field Nehari scalings (s_u u, t_v v); lands on the
/// Nehari set whenever u v = 0. Odd: rho(-u,-v) = -rho(u,v).
PairState rho_project(const PairState& state, const SystemParams& p);

/// n pairwise-distant segregated starting pairs: pair i pairs bumps in
/// disjoint windows i and n+i of the domain, rho-projected.
std::vector<PairState> genus_init(const GridPtr& grid, int n,
                                  const SystemParams& p);

/// min over the 8 equivalence images g of ||a - g(b)||_H, normalized by
/// max(||a||_H, ||b||_H). Below 1e-3 the states count as equivalent.
double equiv_distance(const PairState& a, const PairState& b);

/// Pointwise power helpers shared across modules.
double spow(double x, double p);  // sign(x) |x|^p
double apow(double x, double p);  // |x|^p

}  // namespace critsys
