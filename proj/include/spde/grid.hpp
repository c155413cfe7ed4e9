#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spde/errors.hpp"

namespace spde {

inline bool is_power_of_two(long v) { return v > 0 && (v & (v - 1)) == 0; }

/// Exact integer log2; -1 when v is not a positive power of two.
inline int log2_exact(long v) {
  if (!is_power_of_two(v)) return -1;
  int n = 0;
  while (v > 1) {
    v >>= 1;
    ++n;
  }
  return n;
}

/// Uniform tensor grid on the unit cube [0,1]^d crossed with the time window
/// [t0, t0+1].  Spatial axes share the node count nx (two of them are the
/// Dirichlet boundary); time levels are spaced dt apart and dt must divide
/// the unit window exactly.
struct SpaceTimeGrid {
  int d = 1;
  int nx = 0;
  double dt = 0.0;
  double t0 = 0.0;

  static SpaceTimeGrid make(int d, int nx, double dt, double t0 = 0.0) {
    if (d < 1 || d > 2) throw ValidationError("grid: dimension must be 1 or 2, got " + std::to_string(d));
    if (nx < 3) throw ValidationError("grid: nx must be at least 3, got " + std::to_string(nx));
    if (!(dt > 0.0) || dt > 1.0) throw ValidationError("grid: dt must lie in (0, 1]");
    const double inv = 1.0 / dt;
    const long steps = std::lround(inv);
    if (steps < 1 || std::abs(steps * dt - 1.0) > 4e-16 * steps)
      throw ValidationError("grid: dt must divide the unit window exactly");
    if (t0 < 0.0) throw ValidationError("grid: window start must be nonnegative");
    SpaceTimeGrid g;
    g.d = d;
    g.nx = nx;
    g.dt = dt;
    g.t0 = t0;
    return g;
  }

  double h() const { return 1.0 / (nx - 1); }
  long steps_per_unit() const { return std::lround(1.0 / dt); }
  long levels() const { return steps_per_unit() + 1; }
  long spatial_nodes() const { return d == 1 ? nx : static_cast<long>(nx) * nx; }
  long nodes() const { return spatial_nodes() * levels(); }

  double x(long i) const { return static_cast<double>(i) * h(); }
  double t(long level) const { return t0 + static_cast<double>(level) * dt; }

  long spatial_index(long ix, long iy = 0) const { return d == 1 ? ix : ix * nx + iy; }
  bool on_boundary(long ix, long iy = 0) const {
    if (ix == 0 || ix == nx - 1) return true;
    return d == 2 && (iy == 0 || iy == nx - 1);
  }
};

/// Largest dyadic level n such that the mesh 2^-n aligns with both the
/// spatial spacing and the time step.  Requires nx-1 and 1/dt to be powers
/// of two (the dyadic-alignment contract used by the regularity analyzers).
inline int max_dyadic_level(const SpaceTimeGrid& g) {
  const int la = log2_exact(g.nx - 1);
  const int lb = log2_exact(g.steps_per_unit());
  if (la < 0) throw ValidationError("grid: nx-1 must be a power of two for dyadic analysis, got nx=" + std::to_string(g.nx));
  if (lb < 0) throw ValidationError("grid: 1/dt must be a power of two for dyadic analysis");
  return la < lb ? la : lb;
}

/// Node set of the dyadic lattice at a given level: integer vectors k with
/// k * 2^-level inside the closed cylinder [0,1]^d x [t0, t0+1].
/// Layout of a node: {k_x1 (, k_x2), k_t}; the unused slot stays 0.
struct DyadicMesh {
  int d = 1;
  int level = 0;
  double t0 = 0.0;
  std::vector<std::array<long, 3>> nodes;

  long per_axis() const { return (1L << level) + 1; }
};

inline DyadicMesh build_dyadic_mesh(int d, double t0, int level) {
  if (d < 1 || d > 2) throw ValidationError("dyadic mesh: dimension must be 1 or 2");
  if (level < 0 || level > 30) throw ValidationError("dyadic mesh: level out of range");
  if (t0 < 0.0) throw ValidationError("dyadic mesh: window start must be nonnegative");
  const double scaled = t0 * std::exp2(static_cast<double>(level));
  const long kt0 = std::llround(scaled);
  if (std::abs(scaled - static_cast<double>(kt0)) > 1e-12)
    throw ValidationError("dyadic mesh: window start is not aligned with level " + std::to_string(level));

  DyadicMesh mesh;
  mesh.d = d;
  mesh.level = level;
  mesh.t0 = t0;
  const long n = 1L << level;
  if (d == 1) {
    mesh.nodes.reserve(static_cast<size_t>((n + 1) * (n + 1)));
    for (long kx = 0; kx <= n; ++kx)
      for (long kt = kt0; kt <= kt0 + n; ++kt) mesh.nodes.push_back({kx, kt, 0});
  } else {
    mesh.nodes.reserve(static_cast<size_t>((n + 1) * (n + 1) * (n + 1)));
    for (long kx = 0; kx <= n; ++kx)
      for (long ky = 0; ky <= n; ++ky)
        for (long kt = kt0; kt <= kt0 + n; ++kt) mesh.nodes.push_back({kx, ky, kt});
  }
  return mesh;
}

/// Overload that checks the lattice is no finer than the simulation grid, so
/// every dyadic node coincides with a grid node.
inline DyadicMesh build_dyadic_mesh(const SpaceTimeGrid& g, int level) {
  const int nmax = max_dyadic_level(g);
  if (level > nmax)
    throw ValidationError("dyadic mesh: level " + std::to_string(level) +
                          " too fine for the grid (max " + std::to_string(nmax) + ")");
  return build_dyadic_mesh(g.d, g.t0, level);
}

/// All nonzero offsets e in {-1,0,1}^(d+1); 3^(d+1)-1 of them, max-norm 1.
/// Layout matches DyadicMesh nodes: {e_x1 (, e_x2), e_t}.
inline std::vector<std::array<int, 3>> neighbor_offsets(int d) {
  if (d < 1 || d > 2) throw ValidationError("neighbor offsets: dimension must be 1 or 2");
  std::vector<std::array<int, 3>> out;
  if (d == 1) {
    out.reserve(8);
    for (int ex = -1; ex <= 1; ++ex)
      for (int et = -1; et <= 1; ++et) {
        if (ex == 0 && et == 0) continue;
        out.push_back({ex, et, 0});
      }
  } else {
    out.reserve(26);
    for (int ex = -1; ex <= 1; ++ex)
      for (int ey = -1; ey <= 1; ++ey)
        for (int et = -1; et <= 1; ++et) {
          if (ex == 0 && ey == 0 && et == 0) continue;
          out.push_back({ex, ey, et});
        }
  }
  return out;
}

}  // namespace spde
