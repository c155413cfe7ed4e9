#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spde/errors.hpp"
#include "spde/rng.hpp"

namespace spde::stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw ValidationError("stats: mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw ValidationError("stats: variance needs at least 2 samples");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double central_moment(std::span<const double> xs, int k) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += std::pow(x - m, k);
  return s / static_cast<double>(xs.size());
}

inline double skewness(std::span<const double> xs) {
  const double m2 = central_moment(xs, 2);
  return central_moment(xs, 3) / std::pow(m2, 1.5);
}

/// Plain (non-excess) kurtosis; 3 for a Gaussian.
inline double kurtosis(std::span<const double> xs) {
  const double m2 = central_moment(xs, 2);
  return central_moment(xs, 4) / (m2 * m2);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw ValidationError("stats: least squares needs matching samples, at least 2 points");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double det = n * sxx - sx * sx;
  if (det == 0.0) throw ValidationError("stats: degenerate abscissae in least squares");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

/// Slope of log(y) against log(x); all inputs must be positive.
inline LineFit log_log_fit(std::span<const double> xs, std::span<const double> ys) {
  std::vector<double> lx, ly;
  lx.reserve(xs.size());
  ly.reserve(ys.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw ValidationError("stats: log-log fit requires positive data");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  return least_squares(lx, ly);
}

/// Linear-interpolated quantile of an unsorted sample, q in [0,1].
inline double quantile(std::span<const double> xs, double q) {
  if (xs.empty()) throw ValidationError("stats: quantile of empty sample");
  if (q < 0.0 || q > 1.0) throw ValidationError("stats: quantile level out of [0,1]");
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  const double pos = q * static_cast<double>(s.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  if (lo + 1 >= s.size()) return s.back();
  const double frac = pos - static_cast<double>(lo);
  return s[lo] * (1.0 - frac) + s[lo + 1] * frac;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap interval for a statistic of one sample.  Resampling
/// is counter-based: deterministic for a given seed, independent of thread
/// count or call order.
inline Interval bootstrap_ci(std::span<const double> xs,
                             const std::function<double(std::span<const double>)>& statistic,
                             int resamples = 1000, double level = 0.95,
                             std::uint64_t seed = 0x626F6F74ull) {
  if (xs.empty()) throw ValidationError("stats: bootstrap of empty sample");
  const size_t n = xs.size();
  std::vector<double> work(n);
  std::vector<double> stat_values;
  stat_values.reserve(static_cast<size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    for (size_t i = 0; i < n; ++i) {
      const double u = uniform01(seed, 0xB00Bull, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(i));
      size_t idx = static_cast<size_t>(u * static_cast<double>(n));
      if (idx >= n) idx = n - 1;
      work[i] = xs[idx];
    }
    stat_values.push_back(statistic(work));
  }
  const double alpha = 1.0 - level;
  Interval ci;
  ci.lo = quantile(stat_values, alpha / 2.0);
  ci.hi = quantile(stat_values, 1.0 - alpha / 2.0);
  return ci;
}

inline Interval bootstrap_mean_ci(std::span<const double> xs, int resamples = 1000,
                                  double level = 0.95, std::uint64_t seed = 0x626F6F74ull) {
  return bootstrap_ci(xs, [](std::span<const double> ys) { return mean(ys); }, resamples, level, seed);
}

/// Empirical survival function S(K) = P{X > K} evaluated on a K grid.
struct SurvivalCurve {
  std::vector<double> k;
  std::vector<double> s;
};

inline SurvivalCurve survival_curve(std::span<const double> xs, int points = 64) {
  if (xs.size() < 8) throw ValidationError("stats: survival curve needs at least 8 samples");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const double kmax = sorted.back();
  double kmin = kmax;
  for (double x : sorted)
    if (x > 0.0) {
      kmin = x;
      break;
    }
  if (!(kmax > 0.0)) throw ValidationError("stats: survival curve needs positive samples");
  SurvivalCurve c;
  const double lmin = std::log(kmin), lmax = std::log(kmax);
  for (int i = 0; i < points; ++i) {
    const double k = std::exp(lmin + (lmax - lmin) * static_cast<double>(i) / (points - 1));
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), k);
    const double surv = static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
    c.k.push_back(k);
    c.s.push_back(surv);
  }
  return c;
}

/// Log-log slope of the empirical survival function over the probability
/// band S in [s_lo, s_hi] (one decade of survival mass by default).  The
/// fit runs over order statistics, so it is exact for the sample.
inline double survival_band_slope(std::span<const double> xs, double s_hi = 0.5, double s_lo = 0.05) {
  if (xs.size() < 100) throw ValidationError("stats: survival slope needs at least 100 samples");
  if (!(s_lo > 0.0 && s_lo < s_hi && s_hi < 1.0))
    throw ValidationError("stats: survival band must satisfy 0 < s_lo < s_hi < 1");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  std::vector<double> lk, ls;
  for (size_t i = 0; i < n; ++i) {
    const double surv = static_cast<double>(n - 1 - i) / static_cast<double>(n);
    if (surv < s_lo || surv > s_hi) continue;
    if (!(sorted[i] > 0.0)) continue;
    lk.push_back(std::log(sorted[i]));
    ls.push_back(std::log(surv));
  }
  if (lk.size() < 8) throw ValidationError("stats: survival band contains too few points");
  return least_squares(lk, ls).slope;
}

}  // namespace spde::stats
