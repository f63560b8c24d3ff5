#include "critsys/scalar_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace critsys {

double critical_exponent(int N) {
  if (N < 3) throw std::domain_error("critical_exponent: N must be >= 3");
  return 2.0 * N / (N - 2.0);
}

double SystemParams::two_star() const { return critical_exponent(N); }

void SystemParams::validate() const {
  if (N < 3) throw std::domain_error("SystemParams: N must be >= 3");
  if (!(mu1 > 0.0) || !(mu2 > 0.0))
    throw std::domain_error("SystemParams: mu1, mu2 must be positive");
  if (!(alpha > 1.0) || !(beta > 1.0))
    throw std::domain_error("SystemParams: alpha, beta must exceed 1");
  if (!std::isfinite(lambda))
    throw std::domain_error("SystemParams: lambda must be finite");
  if (std::abs(alpha + beta - two_star()) > 1e-12)
    throw std::domain_error("SystemParams: alpha + beta must equal 2N/(N-2)");
}

SystemParams make_params(int N, double mu1, double mu2, double lambda) {
  SystemParams p;
  p.N = N;
  p.mu1 = mu1;
  p.mu2 = mu2;
  p.lambda = lambda;
  p.alpha = p.beta = critical_exponent(N) / 2.0;
  return p;
}

double bubble_radial(int N, double epsilon, double r) {
  if (N < 3) throw std::domain_error("bubble_radial: N must be >= 3");
  if (!(epsilon > 0.0)) throw std::domain_error("bubble_radial: epsilon <= 0");
  const double amp = std::pow(N * (N - 2.0), (N - 2.0) / 4.0);
  const double y = r / epsilon;
  return std::pow(epsilon, (2.0 - N) / 2.0) * amp *
         std::pow(1.0 + y * y, -(N - 2.0) / 2.0);
}

double bubble_value(const BubbleSpec& spec, std::span<const double> x) {
  double rr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = spec.xi.size() > i ? spec.xi[i] : 0.0;
    const double d = x[i] - xi;
    rr += d * d;
  }
  return bubble_radial(spec.N, spec.epsilon, std::sqrt(rr));
}

double sobolev_constant(int N) {
  if (N < 3) throw std::domain_error("sobolev_constant: N must be >= 3");
  const double lg = std::lgamma(N / 2.0) - std::lgamma(static_cast<double>(N));
  return M_PI * N * (N - 2.0) * std::exp(2.0 * lg / N);
}

double h_eval(const SystemParams& p, double r) {
  if (!(r > 0.0)) throw std::domain_error("h_eval: r must be positive");
  const double ts = p.two_star();
  return p.mu1 * std::pow(r, ts - 2.0) + p.lambda * p.alpha * std::pow(r, p.alpha - 2.0) -
         p.lambda * p.beta * std::pow(r, p.alpha) - p.mu2;
}

namespace {

SynchronizedSolution make_sync(const SystemParams& p, double r) {
  const double ts = p.two_star();
  SynchronizedSolution sol;
  sol.r = r;
  sol.t = std::pow(p.mu2 + p.lambda * p.beta * std::pow(r, p.alpha),
                   -1.0 / (ts - 2.0));
  sol.s = r * sol.t;
  sol.residual1 = p.mu1 * std::pow(sol.s, ts - 2.0) +
                  p.lambda * p.alpha * std::pow(sol.s, p.alpha - 2.0) *
                      std::pow(sol.t, p.beta) -
                  1.0;
  sol.residual2 = p.mu2 * std::pow(sol.t, ts - 2.0) +
                  p.lambda * p.beta * std::pow(sol.s, p.alpha) *
                      std::pow(sol.t, p.beta - 2.0) -
                  1.0;
  return sol;
}

}  // namespace

std::vector<SynchronizedSolution> sync_roots(const SystemParams& p, double r_max) {
  p.validate();
  if (!(r_max > 0.0)) throw std::domain_error("sync_roots: r_max must be positive");

  constexpr int kScanPoints = 10000;
  const double dr = r_max / kScanPoints;

  // Uniform scan over (0, r_max], preceded by a geometric prefix below the
  // first uniform point: h blows up as r -> 0+ whenever lambda alpha > 0 and
  // alpha < 2, so roots can hide at r << dr.
  std::vector<double> scan;
  for (double r = dr * 0.99; r > 1e-10 * r_max; r *= 0.9) scan.push_back(r);
  std::reverse(scan.begin(), scan.end());
  for (int j = 1; j <= kScanPoints; ++j) scan.push_back(j * dr);

  std::vector<double> roots;
  double r_prev = scan.front();
  double h_prev = h_eval(p, r_prev);
  if (!std::isfinite(h_prev)) throw std::runtime_error("sync_roots: non-finite h");
  if (h_prev == 0.0) roots.push_back(r_prev);

  for (std::size_t j = 1; j < scan.size(); ++j) {
    const double r = scan[j];
    const double h = h_eval(p, r);
    if (!std::isfinite(h)) throw std::runtime_error("sync_roots: non-finite h");
    if (h == 0.0) {
      roots.push_back(r);
    } else if (h_prev != 0.0 && (h_prev < 0.0) != (h < 0.0)) {
      double lo = r_prev, hi = r, hlo = h_prev;
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double hm = h_eval(p, mid);
        if (hm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((hm < 0.0) == (hlo < 0.0)) {
          lo = mid;
          hlo = hm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    r_prev = r;
    h_prev = h;
  }

  std::vector<SynchronizedSolution> out;
  for (double r : roots) {
    if (p.mu2 + p.lambda * p.beta * std::pow(r, p.alpha) > 0.0)
      out.push_back(make_sync(p, r));
  }
  std::sort(out.begin(), out.end(),
            [](const SynchronizedSolution& a, const SynchronizedSolution& b) {
              return a.r < b.r;
            });
  return out;
}

ShatBound shat_lower_bound(const SystemParams& p) {
  p.validate();
  const double ts = p.two_star();
  auto phi = [&](double t) {
    return (1.0 + t * t) /
           std::pow(1.0 + std::pow(t, ts) + std::pow(t, p.beta), 2.0 / ts);
  };

  // Coarse scan, then golden-section refinement of the best bracket.
  constexpr int kScan = 10000;
  const double t_hi = 100.0;
  double best_t = 0.0, best = phi(0.0);
  for (int j = 1; j <= kScan; ++j) {
    const double t = t_hi * j / kScan;
    const double v = phi(t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  double lo = std::max(0.0, best_t - t_hi / kScan);
  double hi = std::min(t_hi, best_t + t_hi / kScan);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = phi(c), fd = phi(d);
  while (hi - lo > 1e-10) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = phi(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = phi(d);
    }
  }
  const double m = std::min(best, std::min(fc, fd));
  if (m < std::pow(2.0, -2.0 / ts) - 1e-12)
    throw std::runtime_error("shat_lower_bound: minimum below 2^{-2/2*}");

  const double mu_bar =
      std::pow(std::max({p.mu1, p.mu2, ts * p.lambda}), 2.0 / ts);
  return ShatBound{m, sobolev_constant(p.N) * m / mu_bar};
}

double nehari_inf_value(const SystemParams& p) {
  p.validate();
  if (p.lambda >= 0.0)
    throw std::domain_error("nehari_inf_value: requires lambda < 0");
  const double S = sobolev_constant(p.N);
  const double e = (p.N - 2.0) / 2.0;
  return (std::pow(p.mu1, -e) + std::pow(p.mu2, -e)) * std::pow(S, p.N / 2.0) /
         p.N;
}

double energy_budget(const SystemParams& p, double orbit_min) {
  p.validate();
  if (!(orbit_min >= 1.0))
    throw std::domain_error("energy_budget: orbit_min must be >= 1");
  if (std::isinf(orbit_min)) return std::numeric_limits<double>::infinity();
  const double mu0 = std::max(p.mu1, p.mu2);
  return (1.0 + orbit_min) * std::pow(mu0, (2.0 - p.N) / 2.0) *
         std::pow(sobolev_constant(p.N), p.N / 2.0);
}

}  // namespace critsys
