#pragma once

#include "critsys/energy.hpp"

#include <string>
#include <vector>

namespace critsys {

struct FlowConfig {
  double step = 1.0;
  int max_iters = 20000;
  double grad_tol = 1e-6;
  double nehari_tol = 1e-8;
  unsigned seed = 1234;
  int snapshot_count = 8;  // states kept along the run for diagnostics
};

struct FlowReport {
  bool converged = false;
  int iterations = 0;
  double final_energy = 0.0;
  double final_grad_norm = 0.0;
  double final_norm_sq = 0.0;  // ||(u,v)||^2, the quantity the budget bounds
  bool budget_ok = true;
  std::string diagnostic;
  std::vector<double> grad_norm_trace;
  std::vector<double> energy_trace;
  std::vector<PairState> snapshots;
};

/// Projected Sobolev-gradient descent on the Nehari constraint:
/// x <- nehari_project(x - tau grad(x)) with Armijo backtracking. Stops at
/// grad_tol or max_iters; projection failure aborts with a report.
std::pair<PairState, FlowReport> flow_to_critical(const PairState& start,
                                                  const SystemParams& p,
                                                  const FlowConfig& cfg);

/// Least-energy scalar solve of -Δ w = mu |w|^{2*-2} w on a radial
/// sub-interval [lo, hi] of `grid` (bounds snapped to nodes), returned as a
/// field on the full grid. Nehari-scaled Sobolev descent.
Field scalar_ground(const GridPtr& grid, double lo, double hi, double mu,
                    int N, double tol = 1e-9, int max_iters = 20000);

/// Damped Newton on the discrete system from a nearby guess; radial grids
/// only. Returns true when the residual dropped below tol.
bool newton_refine(PairState& state, const SystemParams& p,
                   double tol = 1e-11, int max_iters = 60);

/// Up to n pairwise nonequivalent converged critical pairs, sorted by
/// energy; the least-energy representative is recomputed from (|u|, |v|).
/// A shorter list than n is a diagnostic outcome, not an error.
std::vector<std::pair<PairState, FlowReport>> multi_start(
    const GridPtr& grid, const SystemParams& p, int n, const FlowConfig& cfg);

/// Minimizer of J(w) = 1/2||w||^2 - (1/2*)∫(mu1|w^+|^{2*} + mu2|w^-|^{2*})
/// over sign-changing w whose positive and negative parts each sit on their
/// single-field Nehari manifolds. Returns (w, J(w)).
std::pair<Field, double> limit_profile(const GridPtr& grid,
                                       const SystemParams& p,
                                       const FlowConfig& cfg);

}  // namespace critsys
