#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spde/errors.hpp"
#include "spde/grid.hpp"

namespace spde {

/// Values on the spatial nodes of a grid at one instant.  Storage covers the
/// full tensor grid including the Dirichlet boundary (row-major for d=2).
struct SpatialField {
  int d = 1;
  int nx = 0;
  std::vector<double> v;

  static SpatialField zeros(const SpaceTimeGrid& g) {
    SpatialField f;
    f.d = g.d;
    f.nx = g.nx;
    f.v.assign(static_cast<size_t>(g.spatial_nodes()), 0.0);
    return f;
  }

  static SpatialField zeros(int d, int nx) {
    SpatialField f;
    f.d = d;
    f.nx = nx;
    f.v.assign(static_cast<size_t>(d == 1 ? nx : static_cast<long>(nx) * nx), 0.0);
    return f;
  }

  double& at(long ix, long iy = 0) { return v[static_cast<size_t>(d == 1 ? ix : ix * nx + iy)]; }
  double at(long ix, long iy = 0) const { return v[static_cast<size_t>(d == 1 ? ix : ix * nx + iy)]; }

  double sup() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
};

/// Trapezoid quadrature weight of a spatial node (product rule in d=2).
inline double trapezoid_weight(const SpatialField& f, long ix, long iy = 0) {
  double w = (ix == 0 || ix == f.nx - 1) ? 0.5 : 1.0;
  if (f.d == 2) w *= (iy == 0 || iy == f.nx - 1) ? 0.5 : 1.0;
  return w;
}

inline double integral(const SpatialField& f) {
  const double h = 1.0 / (f.nx - 1);
  double s = 0.0;
  if (f.d == 1) {
    for (long i = 0; i < f.nx; ++i) s += trapezoid_weight(f, i) * f.at(i);
    return s * h;
  }
  for (long i = 0; i < f.nx; ++i)
    for (long j = 0; j < f.nx; ++j) s += trapezoid_weight(f, i, j) * f.at(i, j);
  return s * h * h;
}

/// Discrete L^p norm over the unit cube (trapezoid weights).
inline double lp_norm(const SpatialField& f, double p) {
  if (!(p >= 1.0)) throw ValidationError("lp_norm: p must be >= 1");
  const double h = 1.0 / (f.nx - 1);
  double s = 0.0;
  if (f.d == 1) {
    for (long i = 0; i < f.nx; ++i) s += trapezoid_weight(f, i) * std::pow(std::abs(f.at(i)), p);
    return std::pow(s * h, 1.0 / p);
  }
  for (long i = 0; i < f.nx; ++i)
    for (long j = 0; j < f.nx; ++j) s += trapezoid_weight(f, i, j) * std::pow(std::abs(f.at(i, j)), p);
  return std::pow(s * h * h, 1.0 / p);
}

/// Identifies how a space-time sample was produced; embedded in dumps and
/// reports so any output can be traced back to its exact inputs.
struct Provenance {
  std::string operator_preset;
  std::string forcing;
  std::string backend;
  std::uint64_t seed = 0;
  long sample_index = -1;
};

/// Space-time values over one unit window [t0, t0+1]: level l holds the
/// spatial field at time t0 + l*dt.  Layout: value(level, node) with node the
/// spatial index of the grid.
struct SpaceTimeField {
  SpaceTimeGrid grid;
  std::vector<double> v;  // levels() * spatial_nodes()
  Provenance prov;

  static SpaceTimeField zeros(const SpaceTimeGrid& g) {
    SpaceTimeField f;
    f.grid = g;
    f.v.assign(static_cast<size_t>(g.nodes()), 0.0);
    return f;
  }

  long level_stride() const { return grid.spatial_nodes(); }

  double& at(long level, long node) { return v[static_cast<size_t>(level * level_stride() + node)]; }
  double at(long level, long node) const { return v[static_cast<size_t>(level * level_stride() + node)]; }

  const double* level_data(long level) const { return v.data() + level * level_stride(); }
  double* level_data(long level) { return v.data() + level * level_stride(); }

  void set_level(long level, const SpatialField& s) {
    std::copy(s.v.begin(), s.v.end(), v.begin() + level * level_stride());
  }

  SpatialField level_field(long level) const {
    SpatialField s;
    s.d = grid.d;
    s.nx = grid.nx;
    s.v.assign(level_data(level), level_data(level) + level_stride());
    return s;
  }
};

/// Distance used by all window analyzers: |t1-t2| + max-norm of the spatial
/// displacement.
inline double spacetime_dist(double dx_max, double dtime) {
  return std::abs(dtime) + std::abs(dx_max);
}

}  // namespace spde
