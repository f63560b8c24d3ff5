#pragma once

#include "critsys/flow.hpp"

namespace critsys {

/// One rung of a phase-separation ladder: the converged state at a given
/// coupling together with the segregation metrics extracted from it.
struct SeparationRecord {
  double lambda = 0.0;
  double overlap = 0.0;      // ∫ |u|^alpha |v|^beta
  double energy = 0.0;
  double support_gap = 0.0;  // radial measure of {|u|>theta} ∩ {|v|>theta}
  double omega1_lo = 0.0, omega1_hi = 0.0;  // interval hull of {|u|>theta}
  double omega2_lo = 0.0, omega2_hi = 0.0;  // interval hull of {|v|>theta}
  double resid1 = 0.0, resid2 = 0.0;  // limit-equation residuals on Ω1, Ω2
  bool converged = false;
  PairState state;
};

/// Relative Pohozaev boundary term
///   ω_{N-1}[b^N(u'(b)^2 + v'(b)^2) - a^N(u'(a)^2 + v'(a)^2)] / ||(u,v)||^2
/// with one-sided second-order boundary derivatives. Vanishes (to O(h^2))
/// for genuine annulus solutions; order one on starshaped domains, which is
/// the nonexistence obstruction. Radial grids only.
double pohozaev_residual(const PairState& state, const SystemParams& p);

/// Smallest ball radius ε whose best center captures mass δ of
/// f(u,v) = mu1|u|^{2*} + mu2|v|^{2*} + 2* max{lambda,0}|u|^alpha|v|^beta:
/// bisection over ε, maximization over centers on the radial axis. Returns
/// (ε, center radius). Shrinking ε along a flow flags bubbling.
std::pair<double, double> concentration_function(const PairState& state,
                                                 const SystemParams& p,
                                                 double delta);

/// Warm-started flow down a decreasing negative λ ladder, recording overlap,
/// energy, support overlap at θ = 1e-3 · max, and the extracted Ω1, Ω2
/// intervals. Non-convergence marks the record and restarts cold. The
/// warm-started minimizers are presumed least-energy but not certified.
std::vector<SeparationRecord> separation_sweep(const GridPtr& grid,
                                               const SystemParams& params_base,
                                               const std::vector<double>& lambdas,
                                               const FlowConfig& cfg);

/// Empirical smallest C for the four-term pointwise bound
///   ||a1+b1|^α|a2+b2|^β - |a1|^α|a2|^β|
///     ≤ ε|a1|^α|a2|^β + C(|a1|^α|b2|^β + |b1|^α|a2|^β + |b1|^α|b2|^β)
/// over `samples` uniform tuples in [-10,10]^4 (the bound is 2*-homogeneous,
/// so a bounded box suffices up to scaling).
double bl_mixed_inequality_probe(double alpha, double beta, double epsilon,
                                 long samples, unsigned seed = 20240817u);

/// Which Brezis-Lieb-type identity deficit to measure: the mixed product
/// identity, the classic single-power identity, or the derivative identity
/// paired against a fixed smooth probe.
enum class BLKind { product, power, derivative };

/// Deficit of the chosen identity per bubble scale, with u_k = u + (bubble
/// at scale ε_k centered at the origin, away from the support of `base`),
/// v_k likewise. Integrands are combined pointwise before quadrature so the
/// large separated-support terms cancel exactly. Radial ball grids only.
std::vector<double> bl_deficit(BLKind kind, const GridPtr& grid,
                               const PairState& base,
                               const std::vector<double>& bubble_scales,
                               const SystemParams& p);

/// true iff the report's final ||(u,v)||^2 is within the a-priori budget
/// (1 + orbit_min) mu0^{(2-N)/2} S^{N/2}. Monotone in orbit_min.
bool budget_check(const FlowReport& report, const SystemParams& p,
                  double orbit_min);

}  // namespace critsys
