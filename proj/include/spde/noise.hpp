#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "spde/errors.hpp"
#include "spde/field.hpp"
#include "spde/grid.hpp"
#include "spde/rng.hpp"

namespace spde {

/// Brownian increments for j_count independent drivers.  Every increment
/// is a pure function of (seed, sample_index, j, step), so paths are
/// reproducible regardless of execution order.
struct NoisePath {
  std::uint64_t seed = 0;
  std::uint64_t sample_index = 0;
  int j_count = 0;
  int steps = 0;
  double dt = 0.0;
  std::vector<double> inc;  // [j * steps + m]

  static NoisePath sample(std::uint64_t seed, std::uint64_t sample_index, int j_count,
                          double dt, double horizon) {
    if (!(dt > 0.0)) throw ValidationError("noise path: dt must be positive");
    if (!(horizon >= dt)) throw ValidationError("noise path: horizon shorter than one step");
    if (j_count < 1) throw ValidationError("noise path: j_count must be >= 1");
    NoisePath p;
    p.seed = seed;
    p.sample_index = sample_index;
    p.j_count = j_count;
    p.dt = dt;
    p.steps = static_cast<int>(std::ceil(horizon / dt - 1e-9));
    p.inc.resize(static_cast<size_t>(j_count) * p.steps);
    const double root_dt = std::sqrt(dt);
    for (int j = 0; j < j_count; ++j)
      for (int m = 0; m < p.steps; ++m)
        p.inc[static_cast<size_t>(j) * p.steps + m] =
            root_dt * standard_normal(seed, static_cast<std::uint64_t>(j), sample_index,
                                      static_cast<std::uint64_t>(m));
    return p;
  }

  double at(int j, int m) const { return inc[static_cast<size_t>(j) * steps + m]; }

  /// Sum consecutive increments into a path on a step factor times larger;
  /// the coarse path is the same Brownian motion observed less often.
  NoisePath coarsened(int factor) const {
    if (factor < 1 || steps % factor != 0)
      throw ValidationError("noise path: coarsening factor must divide the step count");
    NoisePath c = *this;
    c.dt = dt * factor;
    c.steps = steps / factor;
    c.inc.assign(static_cast<size_t>(j_count) * c.steps, 0.0);
    for (int j = 0; j < j_count; ++j)
      for (int m = 0; m < c.steps; ++m) {
        double s = 0.0;
        for (int r = 0; r < factor; ++r) s += at(j, m * factor + r);
        c.inc[static_cast<size_t>(j) * c.steps + m] = s;
      }
    return c;
  }
};

/// Deterministic time factor multiplying every forcing profile.
struct Modulation {
  enum class Kind { None, ExpDecay, Cosine };
  Kind kind = Kind::None;
  double rate = 0.0;  // decay rate or angular frequency

  double at(double t) const {
    switch (kind) {
      case Kind::None: return 1.0;
      case Kind::ExpDecay: return std::exp(-rate * t);
      case Kind::Cosine: return std::cos(rate * t);
    }
    return 1.0;
  }

  static Modulation none() { return {}; }
  static Modulation exp_decay(double alpha) {
    if (alpha < 0.0) throw ValidationError("modulation: decay rate must be >= 0");
    return {Kind::ExpDecay, alpha};
  }
  static Modulation cosine(double omega) { return {Kind::Cosine, omega}; }
};

/// Normalization class of the forcing profiles: sup-norm at most 1, or
/// spatial L^p norm at most 1 for every time, or unchecked.
enum class NoiseClass { None, BInfty, Bp };

struct ForcingSpec {
  std::string kind = "constant-one";
  int j_count = 1;
  NoiseClass condition = NoiseClass::BInfty;
  double p = 2.0;           // exponent for the Bp certificate
  double epsilon = 0.0625;  // spike width
  double x0 = 0.5;          // spike center
  double amplitude = 1.0;   // checkerboard amplitude
  int cells = 8;            // checkerboard cells per axis
  double scale = 1.0;       // linear rescale (for linearity tests; voids certificates)
  Modulation modulation = Modulation::none();
};

/// Realized forcing: per-driver spatial profiles plus the measured
/// normalization certificate.  The instantaneous field for driver j is
/// profile(j) * scale * modulation(t); feedback forcings additionally
/// multiply pointwise by clip(1 + u(x, t-)), an adapted factor that does
/// not vanish on zero initial data.
struct Forcing {
  ForcingSpec spec;
  std::vector<SpatialField> profiles;
  double certified_bound = 0.0;  // measured sup- or L^p-norm over profiles
  bool state_feedback = false;

  const SpatialField& profile(int j) const { return profiles[static_cast<size_t>(j)]; }
  double time_factor(double t) const { return spec.scale * spec.modulation.at(t); }

  bool is_zero() const { return spec.kind == "zero"; }
};

namespace detail {

inline SpatialField checkerboard_field(const SpaceTimeGrid& grid, double amplitude, int cells) {
  if (cells < 1) throw ValidationError("forcing: checkerboard needs >= 1 cell per axis");
  SpatialField f = SpatialField::zeros(grid);
  const int ny = (grid.d == 2) ? grid.nx : 1;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      // half-open cells [i/cells, (i+1)/cells) so every node has one owner
      int cx = static_cast<int>(grid.x(ix) * cells);
      if (cx >= cells) cx = cells - 1;
      int parity = cx;
      if (grid.d == 2) {
        int cy = static_cast<int>(grid.x(iy) * cells);
        if (cy >= cells) cy = cells - 1;
        parity += cy;
      }
      f.at(ix, iy) = (parity % 2 == 0) ? amplitude : -amplitude;
    }
  return f;
}

inline SpatialField spike_field(const SpaceTimeGrid& grid, double epsilon, double x0, double p) {
  const double h = grid.h();
  if (epsilon < 2.0 * h - 1e-12)
    throw ValidationError("forcing: spike width below 2h (unresolvable on this grid)");
  const double k_real = epsilon / h;
  const long k = std::lround(k_real);
  if (std::abs(k_real - static_cast<double>(k)) > 1e-9)
    throw ValidationError("forcing: spike width must be a multiple of the grid spacing");
  const double left = x0 - 0.5 * epsilon;
  const long i_left = std::lround(left / h);
  if (std::abs(left - static_cast<double>(i_left) * h) > 1e-9 * h)
    throw ValidationError("forcing: spike support must be grid-aligned");
  if (i_left < 1 || i_left + k > grid.nx - 1)
    throw ValidationError("forcing: spike support touches the boundary");
  // Height eps^{-1/p} over the half-open support [x0 - eps/2, x0 + eps/2):
  // exactly eps/h interior nodes carry the value, so the discrete L^p norm
  // (trapezoid weights h at interior nodes) is exactly 1 on dyadic widths.
  const double height = std::pow(epsilon, -1.0 / p);
  SpatialField f = SpatialField::zeros(grid);
  if (grid.d == 1) {
    for (long i = i_left; i < i_left + k; ++i) f.at(static_cast<int>(i)) = height;
    return f;
  }
  // d=2: product spike, height eps^{-2/p} over a square support of area eps^2
  const double h2 = std::pow(epsilon, -2.0 / p);
  for (long j = i_left; j < i_left + k; ++j)
    for (long i = i_left; i < i_left + k; ++i)
      f.at(static_cast<int>(i), static_cast<int>(j)) = h2;
  return f;
}

}  // namespace detail

inline Forcing make_forcing(const ForcingSpec& spec, const SpaceTimeGrid& grid) {
  if (spec.j_count < 1) throw ValidationError("forcing: j_count must be >= 1");
  Forcing f;
  f.spec = spec;
  const int ny = (grid.d == 2) ? grid.nx : 1;
  for (int j = 0; j < spec.j_count; ++j) {
    SpatialField prof = SpatialField::zeros(grid);
    if (spec.kind == "zero") {
      // stays zero
    } else if (spec.kind == "constant-one") {
      for (double& v : prof.v) v = 1.0;
    } else if (spec.kind == "smooth-bump") {
      for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
          double v = std::sin(M_PI * grid.x(ix));
          if (grid.d == 2) v *= std::sin(M_PI * grid.x(iy));
          prof.at(ix, iy) = v;
        }
    } else if (spec.kind == "eigenmode") {
      const int mode = j + 1;
      for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
          double v = std::sqrt(2.0) * std::sin(mode * M_PI * grid.x(ix));
          if (grid.d == 2) v *= std::sqrt(2.0) * std::sin(mode * M_PI * grid.x(iy));
          prof.at(ix, iy) = v;
        }
    } else if (spec.kind == "checkerboard") {
      prof = detail::checkerboard_field(grid, spec.amplitude, spec.cells);
    } else if (spec.kind == "spike") {
      prof = detail::spike_field(grid, spec.epsilon, spec.x0, spec.p);
    } else if (spec.kind == "feedback") {
      for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
          double v = std::sin(M_PI * grid.x(ix));
          if (grid.d == 2) v *= std::sin(M_PI * grid.x(iy));
          prof.at(ix, iy) = v;
        }
      f.state_feedback = true;
    } else {
      throw ValidationError("forcing: unknown kind " + spec.kind);
    }
    f.profiles.push_back(std::move(prof));
  }

  // normalization certificate over all drivers
  double bound = 0.0;
  for (const SpatialField& prof : f.profiles) {
    if (spec.condition == NoiseClass::BInfty)
      bound = std::max(bound, prof.sup());
    else if (spec.condition == NoiseClass::Bp)
      bound = std::max(bound, lp_norm(prof, spec.p));
  }
  f.certified_bound = bound;
  if (spec.condition == NoiseClass::BInfty && !(bound <= 1.0 + 1e-12)) {
    std::ostringstream os;
    os << "forcing: sup-norm certificate violated (measured " << bound << " > 1)";
    throw ValidationError(os.str());
  }
  if (spec.condition == NoiseClass::Bp && !(bound <= 1.0 + 0.02)) {
    std::ostringstream os;
    os << "forcing: L^" << spec.p << " certificate violated (measured " << bound << " > 1)";
    throw ValidationError(os.str());
  }
  if (spec.condition != NoiseClass::None && spec.scale != 1.0)
    throw ValidationError("forcing: rescaled profiles cannot carry a normalization certificate");
  return f;
}

}  // namespace spde
