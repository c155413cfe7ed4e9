// Independent reference implementations used to cross-check the library.
// Everything here is deliberately naive: direct scans, closed forms, no
// shared code paths with the headers under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "spde/field.hpp"
#include "spde/grid.hpp"

namespace oracle {

// Oscillation of f over dyadic cubes of side 2^-n, by direct enumeration of
// every grid node inside every cube.
inline double brute_osc_gamma(const spde::SpaceTimeField& f, int n) {
  const spde::SpaceTimeGrid& g = f.grid;
  const long cells = 1L << n;
  const long span_x = (g.nx - 1) / cells;
  const long span_t = g.steps_per_unit() / cells;
  const long cy = (g.d == 2) ? cells : 1;
  double worst = 0.0;
  for (long kt = 0; kt < cells; ++kt)
    for (long ky = 0; ky < cy; ++ky)
      for (long kx = 0; kx < cells; ++kx) {
        double lo = 1e300, hi = -1e300;
        for (long l = kt * span_t; l <= (kt + 1) * span_t; ++l)
          for (long iy = ky * span_x; iy <= (g.d == 2 ? (ky + 1) * span_x : 0); ++iy)
            for (long ix = kx * span_x; ix <= (kx + 1) * span_x; ++ix) {
              const double v = f.at(l, g.spatial_index(ix, iy));
              lo = std::min(lo, v);
              hi = std::max(hi, v);
            }
        worst = std::max(worst, hi - lo);
      }
  return worst;
}

// All-pairs Hölder seminorm over every grid node, optionally restricted to
// pairs within a distance cap (dist = |dt| + max-norm spatial distance).
inline double brute_seminorm(const spde::SpaceTimeField& f, double theta,
                             double dist_cap = 1e300) {
  const spde::SpaceTimeGrid& g = f.grid;
  const long lt = g.steps_per_unit();
  const long ny = (g.d == 2) ? g.nx : 1;
  struct Node {
    double x, y, t, v;
  };
  std::vector<Node> nodes;
  for (long l = 0; l <= lt; ++l)
    for (long iy = 0; iy < ny; ++iy)
      for (long ix = 0; ix < g.nx; ++ix)
        nodes.push_back({g.x(ix), g.d == 2 ? g.x(iy) : 0.0, g.t(l),
                         f.at(l, g.spatial_index(ix, iy))});
  double best = 0.0;
  for (size_t a = 0; a < nodes.size(); ++a)
    for (size_t b = a + 1; b < nodes.size(); ++b) {
      const double dx = std::max(std::abs(nodes[a].x - nodes[b].x),
                                 std::abs(nodes[a].y - nodes[b].y));
      const double dist = std::abs(nodes[a].t - nodes[b].t) + dx;
      if (dist <= 0.0 || dist > dist_cap) continue;
      best = std::max(best, std::abs(nodes[a].v - nodes[b].v) / std::pow(dist, theta));
    }
  return best;
}

// Covariance of the mild solution for a spectral operator driven by ONE
// Wiener channel: the same w_t multiplies every mode of the profile, so
// cross-mode terms survive:
//   Cov(u(x1,t), u(x2,t)) = sum_{m,n} fhat_m fhat_n phi_m(x1) phi_n(x2)
//                           (1 - e^{-(r_m+r_n) t}) / (r_m + r_n).
// Basis values are supplied by the caller so this stays backend-agnostic.
inline double covariance_closed_form(const std::vector<double>& fhat,
                                     const std::vector<double>& rate,
                                     const std::vector<double>& phi_x1,
                                     const std::vector<double>& phi_x2, double t) {
  double total = 0.0;
  for (size_t m = 0; m < fhat.size(); ++m)
    for (size_t n = 0; n < fhat.size(); ++n) {
      const double r = rate[m] + rate[n];
      const double time_factor = (std::abs(r) < 1e-14) ? t : (1.0 - std::exp(-r * t)) / r;
      total += fhat[m] * fhat[n] * phi_x1[m] * phi_x2[n] * time_factor;
    }
  return total;
}

// Whole-line Gaussian heat kernel; matches the Dirichlet Green function away
// from the boundary while sqrt(t) << dist(x, boundary).
inline double heat_kernel_free(double x, double y, double t) {
  return std::exp(-(x - y) * (x - y) / (4.0 * t)) / std::sqrt(4.0 * M_PI * t);
}

}  // namespace oracle
