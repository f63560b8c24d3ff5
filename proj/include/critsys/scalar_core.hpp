#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace critsys {

/// Parameters of the coupled critical system
///   -Δu = mu1 |u|^{2*-2} u + lambda alpha |u|^{alpha-2} |v|^beta u
///   -Δv = mu2 |v|^{2*-2} v + lambda beta  |u|^alpha |v|^{beta-2} v
/// with alpha + beta = 2* = 2N/(N-2).
struct SystemParams {
  int N = 4;
  double mu1 = 1.0;
  double mu2 = 1.0;
  double lambda = 0.0;
  double alpha = 2.0;
  double beta = 2.0;

  double two_star() const;
  /// Throws std::domain_error on any invariant violation.
  void validate() const;
};

/// Convenience: alpha = beta = 2*/2.
SystemParams make_params(int N, double mu1, double mu2, double lambda);

/// 2* = 2N/(N-2). Throws for N < 3.
double critical_exponent(int N);

/// Dilated/translated entire ground state of -Δw = |w|^{2*-2} w.
struct BubbleSpec {
  double epsilon = 1.0;
  std::vector<double> xi;  // center; empty means origin
  int N = 4;
};

/// eps^{(2-N)/2} U((x-xi)/eps) with U(y) = [N(N-2)]^{(N-2)/4} (1+|y|^2)^{-(N-2)/2}.
double bubble_value(const BubbleSpec& spec, std::span<const double> x);

/// Radial profile: bubble centered at the origin evaluated at radius r >= 0.
double bubble_radial(int N, double epsilon, double r);

/// Best constant of D^{1,2}(R^N) -> L^{2*}(R^N):
/// S = pi N (N-2) (Gamma(N/2)/Gamma(N))^{2/N}. Throws for N < 3.
double sobolev_constant(int N);

/// h(r) = mu1 r^{2*-2} + lambda alpha r^{alpha-2} - lambda beta r^alpha - mu2.
double h_eval(const SystemParams& p, double r);

/// A positive root r of h with admissible scalings (s,t) = (r t, t),
/// t = (mu2 + lambda beta r^alpha)^{-1/(2*-2)}.
struct SynchronizedSolution {
  double r = 0.0;
  double s = 0.0;
  double t = 0.0;
  double residual1 = 0.0;  // mu1 s^{2*-2} + lambda alpha s^{alpha-2} t^beta - 1
  double residual2 = 0.0;  // mu2 t^{2*-2} + lambda beta  s^alpha t^{beta-2} - 1
};

/// Scans (0, r_max] for sign changes of h, refines by bisection, keeps
/// roots with mu2 + lambda beta r^alpha > 0, sorted by r. An empty list
/// means no admissible synchronized scaling exists.
std::vector<SynchronizedSolution> sync_roots(const SystemParams& p,
                                             double r_max = 1e3);

struct ShatBound {
  double m = 0.0;      // min_{t>=0} (1+t^2)/(1+t^{2*}+t^beta)^{2/2*}
  double bound = 0.0;  // S * m / mu_bar, mu_bar = max{mu1,mu2,2* lambda}^{2/2*}
};

ShatBound shat_lower_bound(const SystemParams& p);

/// (1/N)(mu1^{-(N-2)/2} + mu2^{-(N-2)/2}) S^{N/2}; only meaningful for
/// lambda < 0, throws otherwise.
double nehari_inf_value(const SystemParams& p);

/// (1 + orbit_min) mu0^{(2-N)/2} S^{N/2} with mu0 = max{mu1, mu2}.
/// orbit_min may be +infinity, in which case the budget is +infinity.
double energy_budget(const SystemParams& p, double orbit_min);

}  // namespace critsys
