#pragma once

#include <cmath>
#include <sstream>
#include <variant>
#include <vector>

#include "spde/errors.hpp"
#include "spde/field.hpp"
#include "spde/grid.hpp"
#include "spde/operators.hpp"

namespace spde {

/// Eigenfunction expansion of the Dirichlet heat semigroup on the unit
/// cube.  Only valid for identity diffusion with at most a constant
/// zero-order term: modes are products of sqrt(2) sin(k pi x) and decay
/// independently at rate (k pi)^2 - c0 per axis sum.
///
/// With the full basis (n_modes = nx - 2) the discrete sine transform is
/// exactly invertible on interior nodes, so evolve(u, 0) == u.
class SpectralBackend {
 public:
  static SpectralBackend make(const SpaceTimeGrid& grid, const OperatorSpec& spec,
                              int n_modes = 0) {
    if (!spec.is_identity_diffusion())
      throw ValidationError(
          "spectral backend requires identity diffusion (preset laplacian or "
          "shifted_laplacian); got preset " +
          spec.preset);
    if (spec.d != grid.d) throw ValidationError("spectral backend: dimension mismatch");
    SpectralBackend b;
    b.d_ = grid.d;
    b.nx_ = grid.nx;
    b.h_ = grid.h();
    b.n_modes_ = (n_modes > 0) ? n_modes : grid.nx - 2;
    if (b.n_modes_ < 1 || b.n_modes_ > grid.nx - 2)
      throw ValidationError("spectral backend: n_modes out of range [1, nx-2]");
    const Point origin{0.0, 0.0};
    b.c0_ = spec.c ? spec.c(origin) : 0.0;
    // sine table: table[(k-1)*nx + i] = sqrt(2) sin(k pi x_i)
    b.table_.resize(static_cast<size_t>(b.n_modes_) * b.nx_);
    for (int k = 1; k <= b.n_modes_; ++k)
      for (int i = 0; i < b.nx_; ++i)
        b.table_[static_cast<size_t>(k - 1) * b.nx_ + i] =
            std::sqrt(2.0) * std::sin(k * M_PI * (i * b.h_));
    const int count = b.coeff_count();
    b.rate_.resize(count);
    for (int m = 0; m < count; ++m) {
      if (b.d_ == 1) {
        const double k = m + 1;
        b.rate_[m] = k * k * M_PI * M_PI - b.c0_;
      } else {
        const double k = m / b.n_modes_ + 1;
        const double l = m % b.n_modes_ + 1;
        b.rate_[m] = (k * k + l * l) * M_PI * M_PI - b.c0_;
      }
    }
    return b;
  }

  int n_modes() const { return n_modes_; }
  int coeff_count() const { return d_ == 1 ? n_modes_ : n_modes_ * n_modes_; }

  /// Decay rate of mode m: the evolved coefficient is scaled by
  /// exp(-rate(m) * t).  Negative when c0 exceeds the principal eigenvalue.
  double rate(int m) const { return rate_[static_cast<size_t>(m)]; }

  double phi(int k, int i) const {  // sqrt(2) sin(k pi x_i), 1-based mode
    return table_[static_cast<size_t>(k - 1) * nx_ + i];
  }

  std::vector<double> analyze(const SpatialField& u) const {
    std::vector<double> coeffs(static_cast<size_t>(coeff_count()), 0.0);
    if (d_ == 1) {
      for (int k = 1; k <= n_modes_; ++k) {
        double s = 0.0;
        for (int i = 1; i + 1 < nx_; ++i) s += u.at(i) * phi(k, i);
        coeffs[static_cast<size_t>(k - 1)] = s * h_;
      }
      return coeffs;
    }
    // tensor analyze: contract y first, then x
    std::vector<double> partial(static_cast<size_t>(nx_) * n_modes_, 0.0);
    for (int i = 1; i + 1 < nx_; ++i)
      for (int l = 1; l <= n_modes_; ++l) {
        double s = 0.0;
        for (int j = 1; j + 1 < nx_; ++j) s += u.at(i, j) * phi(l, j);
        partial[static_cast<size_t>(i) * n_modes_ + (l - 1)] = s;
      }
    for (int k = 1; k <= n_modes_; ++k)
      for (int l = 1; l <= n_modes_; ++l) {
        double s = 0.0;
        for (int i = 1; i + 1 < nx_; ++i)
          s += partial[static_cast<size_t>(i) * n_modes_ + (l - 1)] * phi(k, i);
        coeffs[static_cast<size_t>(k - 1) * n_modes_ + (l - 1)] = s * h_ * h_;
      }
    return coeffs;
  }

  SpatialField synthesize(const std::vector<double>& coeffs) const {
    SpatialField u;
    u.d = d_;
    u.nx = nx_;
    u.v.assign(d_ == 1 ? static_cast<size_t>(nx_) : static_cast<size_t>(nx_) * nx_, 0.0);
    if (d_ == 1) {
      for (int i = 1; i + 1 < nx_; ++i) {
        double s = 0.0;
        for (int k = 1; k <= n_modes_; ++k) s += coeffs[static_cast<size_t>(k - 1)] * phi(k, i);
        u.at(i) = s;
      }
      return u;
    }
    std::vector<double> partial(static_cast<size_t>(n_modes_) * nx_, 0.0);
    for (int k = 1; k <= n_modes_; ++k)
      for (int j = 1; j + 1 < nx_; ++j) {
        double s = 0.0;
        for (int l = 1; l <= n_modes_; ++l)
          s += coeffs[static_cast<size_t>(k - 1) * n_modes_ + (l - 1)] * phi(l, j);
        partial[static_cast<size_t>(k - 1) * nx_ + j] = s;
      }
    for (int i = 1; i + 1 < nx_; ++i)
      for (int j = 1; j + 1 < nx_; ++j) {
        double s = 0.0;
        for (int k = 1; k <= n_modes_; ++k)
          s += partial[static_cast<size_t>(k - 1) * nx_ + j] * phi(k, i);
        u.at(i, j) = s;
      }
    return u;
  }

  /// In-place coefficient decay over time t.  t = 0 is a strict no-op.
  void decay(std::vector<double>& coeffs, double t) const {
    if (t == 0.0) return;
    for (size_t m = 0; m < coeffs.size(); ++m) coeffs[m] *= std::exp(-rate_[m] * t);
  }

  /// Mode m evaluated at an arbitrary (off-grid) point.
  double basis_at(int m, const Point& p) const {
    if (d_ == 1) {
      const double k = m + 1;
      return std::sqrt(2.0) * std::sin(k * M_PI * p[0]);
    }
    const double k = m / n_modes_ + 1;
    const double l = m % n_modes_ + 1;
    return 2.0 * std::sin(k * M_PI * p[0]) * std::sin(l * M_PI * p[1]);
  }

  double synth_at(const std::vector<double>& coeffs, const Point& p) const {
    double s = 0.0;
    for (int m = 0; m < coeff_count(); ++m) s += coeffs[static_cast<size_t>(m)] * basis_at(m, p);
    return s;
  }

  SpatialField evolve(const SpatialField& u, double t) const {
    if (t == 0.0) return u;
    std::vector<double> coeffs = analyze(u);
    decay(coeffs, t);
    return synthesize(coeffs);
  }

 private:
  int d_ = 1;
  int nx_ = 0;
  int n_modes_ = 0;
  double h_ = 0.0;
  double c0_ = 0.0;
  std::vector<double> table_;
  std::vector<double> rate_;
};

namespace detail {

/// Tridiagonal solve (Thomas).  Bands are full-length; row i uses
/// lower[i], diag[i], upper[i].  Overwrites rhs with the solution.
inline void thomas_solve(std::vector<double> lower, std::vector<double> diag,
                         std::vector<double> upper, std::vector<double>& rhs) {
  const size_t n = diag.size();
  for (size_t i = 1; i < n; ++i) {
    if (diag[i - 1] == 0.0) throw NumericalError("tridiagonal solve: zero pivot");
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  if (diag[n - 1] == 0.0) throw NumericalError("tridiagonal solve: zero pivot");
  rhs[n - 1] /= diag[n - 1];
  for (size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace detail

/// Finite-difference semigroup for general measurable coefficients.
/// Time stepping is Crank-Nicolson by default (backward Euler available
/// for very rough data); evolve() substeps so no implicit step exceeds
/// dt_inner.  d = 1 assembles the tridiagonal rows of the operator by
/// probing apply() with three interleaved combs; d = 2 stays matrix-free
/// and solves each implicit system with BiCGStab.
class ImplicitFdBackend {
 public:
  enum class Stepper { CrankNicolson, BackwardEuler };

  static ImplicitFdBackend make(const SpaceTimeGrid& grid, const OperatorSpec& spec,
                                Stepper stepper = Stepper::CrankNicolson,
                                double dt_inner = 0.0) {
    validate(spec, grid);  // symmetry + ellipticity before any stepping
    ImplicitFdBackend b;
    b.grid_ = grid;
    b.spec_ = spec;
    b.stepper_ = stepper;
    b.dt_inner_ = (dt_inner > 0.0) ? dt_inner : std::min(grid.dt, grid.h());
    if (grid.d == 1) b.assemble_rows();
    return b;
  }

  Stepper stepper() const { return stepper_; }
  double dt_inner() const { return dt_inner_; }

  SpatialField evolve(const SpatialField& u, double t) const {
    if (t < 0.0) throw ValidationError("semigroup: negative time");
    if (t == 0.0) return u;
    const int n_sub = std::max(1, static_cast<int>(std::ceil(t / dt_inner_ - 1e-12)));
    const double dt = t / n_sub;
    SpatialField v = u;
    for (int s = 0; s < n_sub; ++s) v = step(v, dt);
    return v;
  }

  /// One implicit step of size dt.
  SpatialField step(const SpatialField& u, double dt) const {
    const double w_rhs = (stepper_ == Stepper::CrankNicolson) ? 0.5 * dt : 0.0;
    const double w_lhs = (stepper_ == Stepper::CrankNicolson) ? 0.5 * dt : dt;
    SpatialField rhs = u;
    if (w_rhs != 0.0) {
      const SpatialField au = apply(spec_, grid_, u);
      for (size_t i = 0; i < rhs.v.size(); ++i) rhs.v[i] += w_rhs * au.v[i];
    }
    if (grid_.d == 1) return step_1d(rhs, w_lhs);
    return step_2d(u, rhs, w_lhs);
  }

 private:
  SpatialField step_1d(const SpatialField& rhs, double w) const {
    const int nx = grid_.nx;
    // rows of (I - w A) on interior nodes; boundary rows are identity
    std::vector<double> lo(nx, 0.0), di(nx, 1.0), up(nx, 0.0), b(nx, 0.0);
    for (int i = 1; i + 1 < nx; ++i) {
      lo[i] = -w * row_lower_[i];
      di[i] = 1.0 - w * row_diag_[i];
      up[i] = -w * row_upper_[i];
      b[i] = rhs.v[static_cast<size_t>(i)];
    }
    detail::thomas_solve(lo, di, up, b);
    SpatialField out = rhs;
    out.v.assign(b.begin(), b.end());
    out.v.front() = 0.0;
    out.v.back() = 0.0;
    return out;
  }

  SpatialField step_2d(const SpatialField& guess, const SpatialField& rhs, double w) const {
    auto matvec = [this, w](const SpatialField& v) {
      SpatialField av = apply(spec_, grid_, v);
      SpatialField out = v;
      for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= w * av.v[i];
      clamp_boundary(out);
      return out;
    };
    SpatialField b = rhs;
    clamp_boundary(b);
    SpatialField x = guess;
    clamp_boundary(x);
    // BiCGStab, unpreconditioned; the system is a strictly diagonally
    // dominant perturbation of the identity so this converges quickly.
    SpatialField r = residual(matvec, b, x);
    SpatialField r0 = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    SpatialField v = SpatialField::zeros(grid_), p = SpatialField::zeros(grid_);
    const double bnorm = std::max(norm2(b), 1e-300);
    const double tol = 1e-11;
    for (int it = 0; it < 5000; ++it) {
      if (norm2(r) / bnorm < tol) return x;
      const double rho_next = dot(r0, r);
      if (std::abs(rho_next) < 1e-300) throw NumericalError("implicit solve: BiCGStab breakdown");
      const double beta = (rho_next / rho) * (alpha / omega);
      rho = rho_next;
      for (size_t i = 0; i < p.v.size(); ++i) p.v[i] = r.v[i] + beta * (p.v[i] - omega * v.v[i]);
      v = matvec(p);
      alpha = rho / dot(r0, v);
      SpatialField s = r;
      for (size_t i = 0; i < s.v.size(); ++i) s.v[i] -= alpha * v.v[i];
      if (norm2(s) / bnorm < tol) {
        for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += alpha * p.v[i];
        return x;
      }
      const SpatialField t = matvec(s);
      omega = dot(t, s) / std::max(dot(t, t), 1e-300);
      for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += alpha * p.v[i] + omega * s.v[i];
      for (size_t i = 0; i < r.v.size(); ++i) r.v[i] = s.v[i] - omega * t.v[i];
    }
    throw NumericalError("implicit solve: BiCGStab did not converge in 5000 iterations");
  }

  template <typename MatVec>
  SpatialField residual(MatVec&& matvec, const SpatialField& b, const SpatialField& x) const {
    SpatialField ax = matvec(x);
    SpatialField r = b;
    for (size_t i = 0; i < r.v.size(); ++i) r.v[i] -= ax.v[i];
    return r;
  }

  static double dot(const SpatialField& a, const SpatialField& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
    return s;
  }
  static double norm2(const SpatialField& a) { return std::sqrt(dot(a, a)); }

  void clamp_boundary(SpatialField& f) const {
    const int nx = grid_.nx;
    if (grid_.d == 1) {
      f.v.front() = 0.0;
      f.v.back() = 0.0;
      return;
    }
    for (int i = 0; i < nx; ++i) {
      f.at(i, 0) = 0.0;
      f.at(i, nx - 1) = 0.0;
      f.at(0, i) = 0.0;
      f.at(nx - 1, i) = 0.0;
    }
  }

  /// Recover the tridiagonal rows of A from apply() with three combs:
  /// the stencil has reach one, so unit masses three nodes apart never
  /// interfere and each output row reads off exactly one coefficient.
  void assemble_rows() {
    const int nx = grid_.nx;
    row_lower_.assign(nx, 0.0);
    row_diag_.assign(nx, 0.0);
    row_upper_.assign(nx, 0.0);
    for (int r = 0; r < 3; ++r) {
      SpatialField comb = SpatialField::zeros(grid_);
      for (int i = 1; i + 1 < nx; ++i)
        if (i % 3 == r) comb.at(i) = 1.0;
      const SpatialField a = apply(spec_, grid_, comb);
      for (int i = 1; i + 1 < nx; ++i) {
        if (i % 3 == r) row_diag_[i] = a.at(i);
        if ((i - 1 + 3) % 3 == r && i - 1 >= 1) row_lower_[i] = a.at(i);
        if ((i + 1) % 3 == r && i + 1 <= nx - 2) row_upper_[i] = a.at(i);
      }
    }
  }

  SpaceTimeGrid grid_;
  OperatorSpec spec_;
  Stepper stepper_ = Stepper::CrankNicolson;
  double dt_inner_ = 0.0;
  std::vector<double> row_lower_, row_diag_, row_upper_;
};

/// Backend-erased semigroup handle.  evolve() first projects the input
/// onto the Dirichlet class (zeroes boundary nodes): the mild recursion
/// feeds states of the form u + f dw whose boundary values are generally
/// nonzero even though the solution itself vanishes there.
class Semigroup {
 public:
  static Semigroup spectral(const SpaceTimeGrid& grid, const OperatorSpec& spec,
                            int n_modes = 0) {
    Semigroup s;
    s.grid_ = grid;
    s.report_ = validate(spec, grid);
    s.operator_preset_ = spec.preset;
    s.backend_ = SpectralBackend::make(grid, spec, n_modes);
    return s;
  }

  static Semigroup implicit_fd(const SpaceTimeGrid& grid, const OperatorSpec& spec,
                               ImplicitFdBackend::Stepper stepper =
                                   ImplicitFdBackend::Stepper::CrankNicolson,
                               double dt_inner = 0.0) {
    Semigroup s;
    s.grid_ = grid;
    s.report_ = validate(spec, grid);
    s.operator_preset_ = spec.preset;
    s.backend_ = ImplicitFdBackend::make(grid, spec, stepper, dt_inner);
    return s;
  }

  const SpaceTimeGrid& grid() const { return grid_; }
  const OperatorReport& report() const { return report_; }
  const std::string& operator_preset() const { return operator_preset_; }

  /// Growth rate used by the moment bounds: max(0, sup c).
  double c_bar() const { return std::max(0.0, report_.c_sup); }

  std::string backend_name() const {
    return std::holds_alternative<SpectralBackend>(backend_) ? "spectral" : "implicit_fd";
  }

  const SpectralBackend* spectral_backend() const {
    return std::get_if<SpectralBackend>(&backend_);
  }

  SpatialField evolve(const SpatialField& u, double t) const {
    if (t < 0.0) throw ValidationError("semigroup: negative time");
    SpatialField in = u;
    project_dirichlet(in);
    return std::visit([&](const auto& b) { return b.evolve(in, t); }, backend_);
  }

  void project_dirichlet(SpatialField& f) const {
    const int nx = grid_.nx;
    if (grid_.d == 1) {
      f.v.front() = 0.0;
      f.v.back() = 0.0;
      return;
    }
    for (int i = 0; i < nx; ++i) {
      f.at(i, 0) = 0.0;
      f.at(i, nx - 1) = 0.0;
      f.at(0, i) = 0.0;
      f.at(nx - 1, i) = 0.0;
    }
  }

 private:
  SpaceTimeGrid grid_;
  OperatorReport report_;
  std::string operator_preset_;
  std::variant<SpectralBackend, ImplicitFdBackend> backend_;
};

/// Discrete Green kernel column: evolve a unit-mass delta (1/h^d at one
/// interior node) for time t.
inline SpatialField green_kernel(const Semigroup& sg, int source_ix, int source_iy, double t) {
  const SpaceTimeGrid& g = sg.grid();
  if (g.on_boundary(source_ix, source_iy))
    throw ValidationError("green kernel: source node lies on the boundary");
  SpatialField delta = SpatialField::zeros(g);
  const double mass = (g.d == 1) ? 1.0 / g.h() : 1.0 / (g.h() * g.h());
  delta.at(source_ix, source_iy) = mass;
  return sg.evolve(delta, t);
}

}  // namespace spde
