#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "spde/errors.hpp"
#include "spde/field.hpp"
#include "spde/grid.hpp"
#include "spde/noise.hpp"
#include "spde/semigroup.hpp"
#include "spde/stats.hpp"

namespace spde {

struct SolveOptions {
  /// The moment bounds assume a nonpositive zero-order term; growth
  /// experiments opt in explicitly instead of shifting it away.
  bool allow_positive_c = false;
  /// Instability guard on ||u||_inf at recorded levels; tripping it means
  /// dt/nx are misconfigured for the operator.
  double sup_guard = 100.0;
};

namespace detail {

inline void check_solve_inputs(const Semigroup& sg, const Forcing& forcing,
                               const NoisePath& path, const SolveOptions& opts) {
  const SpaceTimeGrid& g = sg.grid();
  if (std::abs(path.dt - g.dt) > 1e-15)
    throw ValidationError("solve: noise path step does not match the grid step");
  for (const SpatialField& prof : forcing.profiles)
    if (prof.d != g.d || prof.nx != g.nx)
      throw ValidationError("solve: forcing profile does not match the grid");
  if (forcing.spec.condition == NoiseClass::BInfty && !(forcing.certified_bound <= 1.0 + 1e-12))
    throw ValidationError("solve: forcing sup-norm certificate violated");
  if (forcing.spec.condition == NoiseClass::Bp && !(forcing.certified_bound <= 1.0 + 0.02))
    throw ValidationError("solve: forcing L^p certificate violated");
  if (sg.c_bar() > 0.0 && !opts.allow_positive_c)
    throw ValidationError(
        "solve: operator has a positive zero-order part; shift it away "
        "(shift_zero_order) or enable growth mode");
}

}  // namespace detail

/// Stochastic exponential-Euler recursion
///     u_{m+1} = S_dt( u_m + sum_j f_j(., t_m) dw^j_m ),   u_0 = 0,
/// stepped incrementally from t = 0.  For the spectral backend the state
/// lives in coefficient space and each step is exact per mode
/// (hat u <- e^{-rate dt} (hat u + hat f dw)); the field is synthesized
/// only when observed.  Other backends (and feedback forcings, which need
/// the pointwise state) step in physical space.
class MildRecursion {
 public:
  MildRecursion(const Semigroup& sg, const Forcing& forcing, const NoisePath& path,
                const SolveOptions& opts = {})
      : sg_(&sg), forcing_(&forcing), path_(&path), opts_(opts), grid_(sg.grid()) {
    detail::check_solve_inputs(sg, forcing, path, opts);
    const SpectralBackend* sb = sg.spectral_backend();
    fast_ = (sb != nullptr) && !forcing.state_feedback;
    field_ = SpatialField::zeros(grid_);
    if (fast_) {
      coeffs_.assign(static_cast<size_t>(sb->coeff_count()), 0.0);
      decay_.resize(coeffs_.size());
      for (size_t m = 0; m < decay_.size(); ++m)
        decay_[m] = std::exp(-sb->rate(static_cast<int>(m)) * grid_.dt);
      for (const SpatialField& prof : forcing.profiles) {
        SpatialField clamped = prof;
        sg.project_dirichlet(clamped);
        forcing_coeffs_.push_back(sb->analyze(clamped));
      }
      field_synced_ = true;
    }
  }

  int step_index() const { return m_; }
  double time() const { return m_ * grid_.dt; }

  void advance() {
    if (m_ >= path_->steps) throw ValidationError("solve: noise path exhausted");
    const double t_m = time();
    const double tf = forcing_->time_factor(t_m);
    if (fast_) {
      for (int j = 0; j < forcing_->spec.j_count; ++j) {
        const double w = tf * path_->at(j, m_);
        if (w != 0.0) {
          const std::vector<double>& fc = forcing_coeffs_[static_cast<size_t>(j)];
          for (size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += w * fc[k];
        }
      }
      for (size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] *= decay_[k];
      field_synced_ = false;
    } else {
      SpatialField in = field_;
      for (int j = 0; j < forcing_->spec.j_count; ++j) {
        const double w = tf * path_->at(j, m_);
        if (w == 0.0) continue;
        const SpatialField& prof = forcing_->profile(j);
        if (forcing_->state_feedback) {
          // affine in the past of the solution, clipped to keep the
          // certified profile bound: zero initial data still gets kicked
          for (size_t i = 0; i < in.v.size(); ++i)
            in.v[i] += w * prof.v[i] * std::clamp(1.0 + field_.v[i], -1.0, 1.0);
        } else {
          for (size_t i = 0; i < in.v.size(); ++i) in.v[i] += w * prof.v[i];
        }
      }
      field_ = sg_->evolve(in, grid_.dt);
      guard(field_.sup());
    }
    ++m_;
  }

  void advance_to(int step) {
    while (m_ < step) advance();
  }

  /// Current state as a spatial field (synthesized on demand).
  const SpatialField& state() {
    if (fast_ && !field_synced_) {
      field_ = sg_->spectral_backend()->synthesize(coeffs_);
      field_synced_ = true;
      guard(field_.sup());
    }
    return field_;
  }

  /// Current state at one grid node without synthesizing the whole field.
  double point(int ix, int iy = 0) {
    if (!fast_) return field_.at(ix, iy);
    const SpectralBackend* sb = sg_->spectral_backend();
    double s = 0.0;
    if (grid_.d == 1) {
      for (int k = 1; k <= sb->n_modes(); ++k)
        s += coeffs_[static_cast<size_t>(k - 1)] * sb->phi(k, ix);
      return s;
    }
    for (int k = 1; k <= sb->n_modes(); ++k)
      for (int l = 1; l <= sb->n_modes(); ++l)
        s += coeffs_[static_cast<size_t>(k - 1) * sb->n_modes() + (l - 1)] * sb->phi(k, ix) *
             sb->phi(l, iy);
    return s;
  }

  void guard(double sup) const {
    if (!(sup <= opts_.sup_guard)) {
      std::ostringstream os;
      os << "solve: instability guard tripped (||u||_inf = " << sup << " > " << opts_.sup_guard
         << " at t = " << time() << "); dt/nx are likely misconfigured";
      throw NumericalError(os.str());
    }
  }

 private:
  const Semigroup* sg_;
  const Forcing* forcing_;
  const NoisePath* path_;
  SolveOptions opts_;
  SpaceTimeGrid grid_;
  bool fast_ = false;
  int m_ = 0;
  std::vector<double> coeffs_;
  std::vector<double> decay_;
  std::vector<std::vector<double>> forcing_coeffs_;
  SpatialField field_;
  bool field_synced_ = false;
};

/// Solve over the unit window [t0, t0+1], recording every time level.
inline SpaceTimeField solve(const Semigroup& sg, const Forcing& forcing, const NoisePath& path,
                            double window_t0, const SolveOptions& opts = {}) {
  const SpaceTimeGrid& base = sg.grid();
  SpaceTimeGrid wgrid = SpaceTimeGrid::make(base.d, base.nx, base.dt, window_t0);
  SpaceTimeField out = SpaceTimeField::zeros(wgrid);
  out.prov.operator_preset = sg.operator_preset();
  out.prov.forcing = forcing.spec.kind;
  out.prov.backend = sg.backend_name();
  out.prov.seed = path.seed;
  out.prov.sample_index = path.sample_index;

  MildRecursion rec(sg, forcing, path, opts);
  const int m0 = static_cast<int>(std::lround(window_t0 / base.dt));
  rec.advance_to(m0);
  for (int level = 0; level <= wgrid.steps_per_unit(); ++level) {
    out.set_level(level, rec.state());
    if (level < wgrid.steps_per_unit()) rec.advance();
  }
  return out;
}

/// Stream several windows of one trajectory through a callback without
/// retaining more than one window in memory.  Window starts must be
/// nondecreasing with gaps of at least one unit (windows may share an
/// endpoint).  fn(window_index, field) is called as each window closes.
template <typename WindowFn>
void solve_windows(const Semigroup& sg, const Forcing& forcing, const NoisePath& path,
                   const std::vector<double>& window_starts, WindowFn&& fn,
                   const SolveOptions& opts = {}) {
  const SpaceTimeGrid& base = sg.grid();
  for (size_t w = 1; w < window_starts.size(); ++w)
    if (window_starts[w] < window_starts[w - 1] + 1.0 - 1e-12)
      throw ValidationError("solve: window starts must be sorted with unit gaps");
  MildRecursion rec(sg, forcing, path, opts);
  for (size_t w = 0; w < window_starts.size(); ++w) {
    const double t0 = window_starts[w];
    SpaceTimeGrid wgrid = SpaceTimeGrid::make(base.d, base.nx, base.dt, t0);
    SpaceTimeField field = SpaceTimeField::zeros(wgrid);
    field.prov.operator_preset = sg.operator_preset();
    field.prov.forcing = forcing.spec.kind;
    field.prov.backend = sg.backend_name();
    field.prov.seed = path.seed;
    field.prov.sample_index = path.sample_index;
    const int m0 = static_cast<int>(std::lround(t0 / base.dt));
    rec.advance_to(m0);
    for (int level = 0; level <= wgrid.steps_per_unit(); ++level) {
      field.set_level(level, rec.state());
      if (level < wgrid.steps_per_unit()) rec.advance();
    }
    fn(w, field);
  }
}

/// State at a single time, no window recording.
inline SpatialField solve_snapshot(const Semigroup& sg, const Forcing& forcing,
                                   const NoisePath& path, double t,
                                   const SolveOptions& opts = {}) {
  MildRecursion rec(sg, forcing, path, opts);
  rec.advance_to(static_cast<int>(std::lround(t / sg.grid().dt)));
  return rec.state();
}

/// Trajectory of one grid node observed at the given times.
inline std::vector<double> solve_point_series(const Semigroup& sg, const Forcing& forcing,
                                              const NoisePath& path, int ix, int iy,
                                              const std::vector<double>& times,
                                              const SolveOptions& opts = {}) {
  MildRecursion rec(sg, forcing, path, opts);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    const int m = static_cast<int>(std::lround(t / sg.grid().dt));
    if (m < rec.step_index()) throw ValidationError("solve: observation times must be sorted");
    rec.advance_to(m);
    out.push_back(rec.point(ix, iy));
  }
  return out;
}

namespace detail {

/// Adaptive Simpson on [a,b] to relative tolerance rtol.
template <typename F>
double simpson_recurse(const F& f, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) throw NumericalError("covariance quadrature: max recursion depth reached");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double rtol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double scale = std::max(std::abs(whole), 1e-30);
  return simpson_recurse(f, a, b, fa, fm, fb, whole, rtol * scale, 48);
}

}  // namespace detail

/// Exact Gaussian covariance of the mild solution at one time for the
/// spectral backend and time-independent forcing:
///   Cov(u(x1,t), u(x2,t)) = sum_j int_0^t (S_s f_j)(x1) (S_s f_j)(x2) ds,
/// with (S_s f)(x) evaluated modally and the time integral by adaptive
/// Simpson quadrature to relative tolerance 1e-6.
inline double exact_covariance(const Semigroup& sg, const Forcing& forcing, const Point& x1,
                               const Point& x2, double t, double rtol = 1e-6) {
  const SpectralBackend* sb = sg.spectral_backend();
  if (sb == nullptr)
    throw ValidationError("exact covariance: requires the spectral backend");
  if (forcing.state_feedback || forcing.spec.modulation.kind != Modulation::Kind::None)
    throw ValidationError("exact covariance: forcing must be constant in time");
  if (t < 0.0) throw ValidationError("exact covariance: negative time");
  if (t == 0.0) return 0.0;
  const int count = sb->coeff_count();
  double total = 0.0;
  for (int j = 0; j < forcing.spec.j_count; ++j) {
    SpatialField clamped = forcing.profile(j);
    sg.project_dirichlet(clamped);
    const std::vector<double> fc = sb->analyze(clamped);
    std::vector<double> b1(static_cast<size_t>(count)), b2(static_cast<size_t>(count));
    for (int m = 0; m < count; ++m) {
      b1[static_cast<size_t>(m)] = sb->basis_at(m, x1);
      b2[static_cast<size_t>(m)] = sb->basis_at(m, x2);
    }
    auto integrand = [&](double s) {
      double v1 = 0.0, v2 = 0.0;
      for (int m = 0; m < count; ++m) {
        const double cm = fc[static_cast<size_t>(m)] * std::exp(-sb->rate(m) * s);
        v1 += cm * b1[static_cast<size_t>(m)];
        v2 += cm * b2[static_cast<size_t>(m)];
      }
      return v1 * v2;
    };
    total += detail::adaptive_simpson(integrand, 0.0, t, rtol);
  }
  return total * forcing.spec.scale * forcing.spec.scale;
}

/// A space-time grid node inside one window field.
struct GridPointRef {
  int ix = 0;
  int iy = 0;
  int level = 0;
};

inline double field_value(const SpaceTimeField& f, const GridPointRef& z) {
  return f.at(z.level, f.grid.spatial_index(z.ix, z.iy));
}

inline double pair_distance(const SpaceTimeGrid& g, const GridPointRef& z1,
                            const GridPointRef& z2) {
  const double dt_abs = std::abs(g.t(z1.level) - g.t(z2.level));
  double dx = std::abs(g.x(z1.ix) - g.x(z2.ix));
  if (g.d == 2) dx = std::max(dx, std::abs(g.x(z1.iy) - g.x(z2.iy)));
  return spacetime_dist(dx, dt_abs);
}

struct IncrementMomentReport {
  std::vector<double> distances;           // per pair
  std::vector<double> moments;             // E|u(z1)-u(z2)|^p per pair
  std::vector<stats::Interval> moment_ci;  // bootstrap 95% CI per pair
  double p = 2.0;
  double fitted_exponent = 0.0;  // slope of log moment vs log distance
};

/// Moment estimates for per-pair increment samples plus the companion
/// log-log exponent fit (to compare against theta * p).  Pairs at zero
/// distance are excluded from the fit but still reported.
inline IncrementMomentReport increment_moments(
    const std::vector<std::vector<double>>& increment_samples,
    const std::vector<double>& distances, double p, int min_samples = 1000) {
  if (increment_samples.size() != distances.size())
    throw ValidationError("increment moments: samples/distances size mismatch");
  if (increment_samples.empty()) throw ValidationError("increment moments: no pairs");
  IncrementMomentReport rep;
  rep.p = p;
  rep.distances = distances;
  for (const std::vector<double>& xs : increment_samples) {
    if (static_cast<int>(xs.size()) < min_samples) {
      std::ostringstream os;
      os << "increment moments: insufficient samples (" << xs.size() << " < " << min_samples
         << ")";
      throw ValidationError(os.str());
    }
    std::vector<double> powed(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) powed[i] = std::pow(std::abs(xs[i]), p);
    rep.moments.push_back(stats::mean(powed));
    rep.moment_ci.push_back(stats::bootstrap_mean_ci(powed));
  }
  std::vector<double> fx, fy;
  for (size_t i = 0; i < rep.moments.size(); ++i)
    if (distances[i] > 0.0 && rep.moments[i] > 0.0) {
      fx.push_back(distances[i]);
      fy.push_back(rep.moments[i]);
    }
  if (fx.size() >= 2) rep.fitted_exponent = stats::log_log_fit(fx, fy).slope;
  return rep;
}

}  // namespace spde
