#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "spde/errors.hpp"
#include "spde/field.hpp"
#include "spde/grid.hpp"
#include "spde/regularity.hpp"
#include "spde/rng.hpp"
#include "spde/semigroup.hpp"
#include "spde/stats.hpp"

namespace spde {

/// Step initial data: -M left of the midpoint, +M right of it.  Its
/// evolution sharpens all the smoothing-rate fits because the Hölder
/// norms decay at exactly the borderline rate.
inline SpatialField jump_data(const SpaceTimeGrid& grid, double m = 1.0) {
  SpatialField f = SpatialField::zeros(grid);
  const int ny = (grid.d == 2) ? grid.nx : 1;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix)
      f.at(ix, iy) = (grid.x(ix) < 0.5) ? -m : m;
  return f;
}

/// Independent random signs +-M at every interior node (rough data at grid
/// scale, inside the zero-boundary class).
inline SpatialField random_sign_data(const SpaceTimeGrid& grid, std::uint64_t seed,
                                     double m = 1.0) {
  SpatialField f = SpatialField::zeros(grid);
  const int iy_lo = (grid.d == 2) ? 1 : 0;
  const int iy_hi = (grid.d == 2) ? grid.nx - 1 : 1;
  for (int iy = iy_lo; iy < iy_hi; ++iy)
    for (int ix = 1; ix < grid.nx - 1; ++ix) {
      const double u = uniform01(seed, 0x5157ull, static_cast<std::uint64_t>(iy),
                                 static_cast<std::uint64_t>(ix));
      f.at(ix, iy) = (u < 0.5) ? -m : m;
    }
  return f;
}

inline std::vector<double> log_spaced(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > lo) || n < 2)
    throw ValidationError("log spacing: need 0 < lo < hi and n >= 2");
  std::vector<double> out(static_cast<size_t>(n));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1));
  return out;
}

struct KernelDecayFit {
  double p = 2.0;
  double expected_slope = 0.0;  // -d/(2q), 1/p + 1/q = 1
  double slope = 0.0;
  std::vector<double> t;
  std::vector<double> norm;  // L^p norm of the kernel column at each t
};

/// Log-log slope of t -> ||G(x0, ., t)||_{L^p}.  The power-law window
/// should stay well below the principal-eigenvalue time scale or the
/// exponential factor contaminates the fit.
inline KernelDecayFit fit_kernel_decay(const Semigroup& sg, double p,
                                       const std::vector<double>& t_list, int source_ix = -1,
                                       int source_iy = -1) {
  if (!(p > 1.0)) throw ValidationError("kernel decay: p must exceed 1");
  if (t_list.size() < 4)
    throw ValidationError("kernel decay: need at least 4 time points for the fit");
  const SpaceTimeGrid& g = sg.grid();
  if (source_ix < 0) source_ix = (g.nx - 1) / 2;
  if (source_iy < 0) source_iy = (g.d == 2) ? (g.nx - 1) / 2 : 0;
  KernelDecayFit fit;
  fit.p = p;
  const double q = p / (p - 1.0);
  fit.expected_slope = -g.d / (2.0 * q);
  for (double t : t_list) {
    if (!(t > 0.0)) throw ValidationError("kernel decay: times must be positive");
    const SpatialField kernel = green_kernel(sg, source_ix, source_iy, t);
    fit.t.push_back(t);
    fit.norm.push_back(lp_norm(kernel, p));
  }
  fit.slope = stats::log_log_fit(fit.t, fit.norm).slope;
  return fit;
}

struct SmoothingFit {
  double theta = 0.0;
  std::vector<double> t;
  std::vector<double> holder_norm;  // sup + spatial C^theta seminorm of S_t F
  double slope = 0.0;               // log-log in t
  double max_ratio = 0.0;           // of holder_norm * t^{theta/2}
  double min_ratio = 0.0;
};

/// Evolves F and measures the spatial Hölder norm across a time ladder.
/// The smoothing estimate predicts norm <= c M t^{-theta/2} (up to the
/// long-time exponential), so the fitted slope should not fall below
/// -theta/2 by more than fit noise, and the compensated ratio stays
/// bounded.
inline SmoothingFit fit_smoothing_exponents(const Semigroup& sg, const SpatialField& F,
                                            double theta, const std::vector<double>& t_list) {
  SmoothingFit fit;
  fit.theta = theta;
  fit.min_ratio = 1e300;
  for (double t : t_list) {
    const SpatialField v = sg.evolve(F, t);
    const double norm = v.sup() + spatial_holder_seminorm(v, theta);
    fit.t.push_back(t);
    fit.holder_norm.push_back(norm);
    const double ratio = norm * std::pow(t, theta / 2.0);
    fit.max_ratio = std::max(fit.max_ratio, ratio);
    fit.min_ratio = std::min(fit.min_ratio, ratio);
  }
  fit.slope = stats::log_log_fit(fit.t, fit.holder_norm).slope;
  return fit;
}

struct TimeIncrementFit {
  double theta = 0.0;
  double t_fixed = 0.0;
  std::vector<double> delta;
  std::vector<double> increment;  // sup_x |v(x, t+delta) - v(x, t)|
  double slope = 0.0;             // target >= theta
};

/// Time-increment smoothing: sup_x |S_{t+delta}F - S_t F| against delta
/// at a fixed base time.
inline TimeIncrementFit fit_time_increments(const Semigroup& sg, const SpatialField& F,
                                            double theta, double t_fixed,
                                            const std::vector<double>& deltas) {
  TimeIncrementFit fit;
  fit.theta = theta;
  fit.t_fixed = t_fixed;
  const SpatialField base = sg.evolve(F, t_fixed);
  for (double d : deltas) {
    const SpatialField later = sg.evolve(F, t_fixed + d);
    double sup = 0.0;
    for (size_t i = 0; i < base.v.size(); ++i)
      sup = std::max(sup, std::abs(later.v[i] - base.v[i]));
    fit.delta.push_back(d);
    fit.increment.push_back(sup);
  }
  fit.slope = stats::log_log_fit(fit.delta, fit.increment).slope;
  return fit;
}

struct NashLadder {
  std::vector<double> thetas;
  std::vector<double> ratio_spread;  // max/min of the compensated ratio per theta
  std::vector<bool> bounded;
  double alpha = 0.0;  // largest bounded theta, 0 when none
};

/// Empirical a-priori Hölder exponent: the largest theta on the ladder
/// {0.05, ..., 0.5} for which ||S_t F||_{C^theta} t^{theta/2} stays within
/// a factor `bound_factor` across the short-time window, with step initial
/// data.  The window must end well before the relaxation time: the step is
/// odd about x = 1/2, so its slowest surviving mode decays at 4 pi^2 a.
inline NashLadder fit_nash_exponent(const Semigroup& sg, double bound_factor = 3.0) {
  NashLadder ladder;
  const std::vector<double> ts = log_spaced(2e-4, 1e-2, 9);
  for (int i = 1; i <= 10; ++i) {
    const double theta = 0.05 * i;
    const SmoothingFit fit = fit_smoothing_exponents(sg, jump_data(sg.grid()), theta, ts);
    const double spread = fit.max_ratio / std::max(fit.min_ratio, 1e-300);
    ladder.thetas.push_back(theta);
    ladder.ratio_spread.push_back(spread);
    const bool ok = spread <= bound_factor;
    ladder.bounded.push_back(ok);
    if (ok) ladder.alpha = std::max(ladder.alpha, theta);
  }
  return ladder;
}

/// ||S_t S_s F - S_{s+t} F||_inf.
inline double semigroup_defect(const Semigroup& sg, const SpatialField& F, double s, double t) {
  const SpatialField two_step = sg.evolve(sg.evolve(F, s), t);
  const SpatialField one_step = sg.evolve(F, s + t);
  double sup = 0.0;
  for (size_t i = 0; i < two_step.v.size(); ++i)
    sup = std::max(sup, std::abs(two_step.v[i] - one_step.v[i]));
  return sup;
}

/// Relative L-infinity gap between two backends evolving the same data.
inline double cross_backend_discrepancy(const Semigroup& a, const Semigroup& b,
                                        const SpatialField& F, double t) {
  const SpatialField va = a.evolve(F, t);
  const SpatialField vb = b.evolve(F, t);
  double sup = 0.0;
  for (size_t i = 0; i < va.v.size(); ++i) sup = std::max(sup, std::abs(va.v[i] - vb.v[i]));
  return sup / std::max(va.sup(), 1e-300);
}

/// Large-time slope of log ||S_t F||_inf against t; for the Dirichlet
/// Laplacian this approaches -(d pi^2).
inline double decay_slope(const Semigroup& sg, const SpatialField& F, double t_lo, double t_hi,
                          int n_pts = 8) {
  std::vector<double> ts, lognorm;
  for (int i = 0; i < n_pts; ++i) {
    const double t = t_lo + (t_hi - t_lo) * i / (n_pts - 1);
    const double norm = sg.evolve(F, t).sup();
    if (!(norm > 0.0)) throw NumericalError("decay slope: evolved field vanished");
    ts.push_back(t);
    lognorm.push_back(std::log(norm));
  }
  return stats::least_squares(ts, lognorm).slope;
}

struct InterpolationCheck {
  double lhs = 0.0;  // spatial C^theta seminorm
  double rhs = 0.0;  // 2 ||v||_inf^{1-theta} ||v||_{C^1}^theta
  bool holds() const { return lhs <= rhs * (1.0 + 1e-12); }
};

/// Seminorm interpolation between L^inf and C^1 on the grid: any pair is
/// bounded both by 2||v||_inf and by the worst difference quotient times
/// the distance, and optimizing the crossover gives the product bound.
inline InterpolationCheck interpolation_check(const SpatialField& v, double theta) {
  InterpolationCheck c;
  c.lhs = spatial_holder_seminorm(v, theta);
  c.rhs = 2.0 * std::pow(v.sup(), 1.0 - theta) * std::pow(spatial_c1_norm(v), theta);
  return c;
}

}  // namespace spde
