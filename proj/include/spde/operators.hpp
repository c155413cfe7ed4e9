#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>

#include "spde/errors.hpp"
#include "spde/field.hpp"
#include "spde/grid.hpp"

namespace spde {

using Point = std::array<double, 2>;
using ScalarField = std::function<double(const Point&)>;

enum class OperatorForm { NonDivergence, Divergence };

/// Second-order elliptic operator
///   NonDivergence:  A u = sum_ij a_ij d_i d_j u + sum_i b_i d_i u + c u
///   Divergence:     A u = sum_i d_i (a_ii d_i u) + c u   (diagonal a)
/// Coefficients are time-independent functions of the spatial point; in
/// d = 1 only the first coordinate is used and a11/b1/c are read.
struct OperatorSpec {
  int d = 1;
  OperatorForm form = OperatorForm::NonDivergence;
  std::string preset = "custom";
  ScalarField a11, a12, a21, a22;
  ScalarField b1, b2;
  ScalarField c;

  bool is_identity_diffusion() const {
    return preset == "laplacian" || preset == "shifted_laplacian";
  }
};

struct OperatorReport {
  double lambda_min = 0.0;  // smallest eigenvalue of sym(a) over sampled points
  double lambda_max = 0.0;
  double b_max = 0.0;  // sup |b|_2
  double c_sup = 0.0;  // sup c  (growth scale; nonpositive c keeps the evolution contractive)
  double c_inf = 0.0;
};

namespace detail {

inline std::string point_str(const Point& p, int d) {
  std::ostringstream os;
  os << "(" << p[0];
  if (d == 2) os << ", " << p[1];
  os << ")";
  return os.str();
}

}  // namespace detail

/// Samples the coefficients at every grid node and checks symmetry and
/// uniform ellipticity.  Throws ValidationError naming the offending point.
inline OperatorReport validate(const OperatorSpec& spec, const SpaceTimeGrid& grid) {
  if (spec.d != grid.d) throw ValidationError("operator dimension does not match grid");
  OperatorReport rep;
  rep.lambda_min = 1e300;
  rep.lambda_max = -1e300;
  rep.c_sup = -1e300;
  rep.c_inf = 1e300;
  const int nx = grid.nx;
  const int ny = (grid.d == 2) ? nx : 1;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const Point p{grid.x(ix), (grid.d == 2) ? grid.x(iy) : 0.0};
      double lmin, lmax;
      if (spec.d == 1) {
        lmin = lmax = spec.a11(p);
      } else {
        const double s12 = spec.a12 ? spec.a12(p) : 0.0;
        const double s21 = spec.a21 ? spec.a21(p) : 0.0;
        if (std::abs(s12 - s21) > 1e-12)
          throw ValidationError("operator validation: a12 != a21 at x=" + detail::point_str(p, 2));
        // eigenvalues of [[a11, s], [s, a22]]
        const double a = spec.a11(p), d22 = spec.a22(p);
        const double tr = a + d22;
        const double disc = std::sqrt(0.25 * (a - d22) * (a - d22) + s12 * s12);
        lmin = 0.5 * tr - disc;
        lmax = 0.5 * tr + disc;
      }
      if (!(lmin > 0.0))
        throw ValidationError("operator validation: ellipticity fails (lambda_min <= 0) at x=" +
                              detail::point_str(p, spec.d));
      rep.lambda_min = std::min(rep.lambda_min, lmin);
      rep.lambda_max = std::max(rep.lambda_max, lmax);
      double bnorm = 0.0;
      if (spec.b1) bnorm += spec.b1(p) * spec.b1(p);
      if (spec.d == 2 && spec.b2) bnorm += spec.b2(p) * spec.b2(p);
      rep.b_max = std::max(rep.b_max, std::sqrt(bnorm));
      const double cv = spec.c ? spec.c(p) : 0.0;
      rep.c_sup = std::max(rep.c_sup, cv);
      rep.c_inf = std::min(rep.c_inf, cv);
    }
  }
  return rep;
}

/// Substitution u -> e^{alpha t} v absorbs a positive zero-order term:
/// v solves the same problem with c replaced by c - alpha.  alpha must
/// dominate sup c or the shifted operator still has a growing mode.
inline OperatorSpec shift_zero_order(const OperatorSpec& spec, double alpha,
                                     const SpaceTimeGrid& grid) {
  const OperatorReport rep = validate(spec, grid);
  if (alpha < rep.c_sup) {
    std::ostringstream os;
    os << "shift_zero_order: alpha=" << alpha << " below sup c=" << rep.c_sup;
    throw ValidationError(os.str());
  }
  OperatorSpec shifted = spec;
  shifted.preset = spec.preset + "+shift";
  const ScalarField base_c = spec.c;
  shifted.c = [base_c, alpha](const Point& p) { return (base_c ? base_c(p) : 0.0) - alpha; };
  return shifted;
}

/// Applies the operator with centered second-order stencils.  Boundary
/// values of the result are zero: fields live in the Dirichlet class and
/// the operator is only meaningful at interior nodes.
inline SpatialField apply(const OperatorSpec& spec, const SpaceTimeGrid& grid,
                          const SpatialField& u) {
  if (spec.d != grid.d || u.d != grid.d || u.nx != grid.nx)
    throw ValidationError("operator apply: dimension/grid mismatch");
  const double h = grid.h();
  const double inv_h2 = 1.0 / (h * h);
  const double inv_2h = 1.0 / (2.0 * h);
  SpatialField out = SpatialField::zeros(grid);
  if (grid.d == 1) {
    for (int i = 1; i + 1 < grid.nx; ++i) {
      const Point p{grid.x(i), 0.0};
      const double um = u.at(i - 1), uc = u.at(i), up = u.at(i + 1);
      double val = 0.0;
      if (spec.form == OperatorForm::NonDivergence) {
        val += spec.a11(p) * (up - 2.0 * uc + um) * inv_h2;
        if (spec.b1) val += spec.b1(p) * (up - um) * inv_2h;
      } else {
        const Point pm{grid.x(i - 1), 0.0}, pp{grid.x(i + 1), 0.0};
        const double a_r = 0.5 * (spec.a11(p) + spec.a11(pp));
        const double a_l = 0.5 * (spec.a11(p) + spec.a11(pm));
        val += (a_r * (up - uc) - a_l * (uc - um)) * inv_h2;
      }
      if (spec.c) val += spec.c(p) * uc;
      out.at(i) = val;
    }
    return out;
  }
  for (int j = 1; j + 1 < grid.nx; ++j) {
    for (int i = 1; i + 1 < grid.nx; ++i) {
      const Point p{grid.x(i), grid.x(j)};
      const double uc = u.at(i, j);
      const double ue = u.at(i + 1, j), uw = u.at(i - 1, j);
      const double un = u.at(i, j + 1), us = u.at(i, j - 1);
      double val = 0.0;
      if (spec.form == OperatorForm::NonDivergence) {
        val += spec.a11(p) * (ue - 2.0 * uc + uw) * inv_h2;
        val += spec.a22(p) * (un - 2.0 * uc + us) * inv_h2;
        if (spec.a12) {
          const double uxy = (u.at(i + 1, j + 1) - u.at(i + 1, j - 1) - u.at(i - 1, j + 1) +
                              u.at(i - 1, j - 1)) *
                             (0.25 * inv_h2);
          val += 2.0 * spec.a12(p) * uxy;  // a12 d1d2 + a21 d2d1, symmetric a
        }
        if (spec.b1) val += spec.b1(p) * (ue - uw) * inv_2h;
        if (spec.b2) val += spec.b2(p) * (un - us) * inv_2h;
      } else {
        const Point pe{grid.x(i + 1), grid.x(j)}, pw{grid.x(i - 1), grid.x(j)};
        const Point pn{grid.x(i), grid.x(j + 1)}, ps{grid.x(i), grid.x(j - 1)};
        const double a_e = 0.5 * (spec.a11(p) + spec.a11(pe));
        const double a_w = 0.5 * (spec.a11(p) + spec.a11(pw));
        const double a_n = 0.5 * (spec.a22(p) + spec.a22(pn));
        const double a_s = 0.5 * (spec.a22(p) + spec.a22(ps));
        val += (a_e * (ue - uc) - a_w * (uc - uw)) * inv_h2;
        val += (a_n * (un - uc) - a_s * (uc - us)) * inv_h2;
      }
      if (spec.c) val += spec.c(p) * uc;
      out.at(i, j) = val;
    }
  }
  return out;
}

namespace presets {

inline ScalarField constant(double v) {
  return [v](const Point&) { return v; };
}

inline OperatorSpec laplacian(int d) {
  OperatorSpec s;
  s.d = d;
  s.form = OperatorForm::NonDivergence;
  s.preset = "laplacian";
  s.a11 = constant(1.0);
  if (d == 2) s.a22 = constant(1.0);
  return s;
}

/// Laplacian plus constant zero-order term c0 (any sign).
inline OperatorSpec shifted_laplacian(int d, double c0) {
  OperatorSpec s = laplacian(d);
  s.preset = "shifted_laplacian";
  s.c = constant(c0);
  return s;
}

/// Smooth nonconstant coefficients exercising every term of the
/// non-divergence form; uniformly elliptic with margin 1/2.
inline OperatorSpec smooth_variable(int d) {
  OperatorSpec s;
  s.d = d;
  s.form = OperatorForm::NonDivergence;
  s.preset = "smooth_variable";
  s.a11 = [](const Point& p) { return 1.0 + 0.4 * std::sin(2.0 * M_PI * p[0]); };
  s.b1 = [](const Point& p) { return 0.3 * std::cos(2.0 * M_PI * p[0]); };
  s.c = constant(-0.5);
  if (d == 2) {
    s.a22 = [](const Point& p) { return 1.0 + 0.4 * std::sin(2.0 * M_PI * p[1]); };
    s.a12 = [](const Point& p) { return 0.2 * std::sin(M_PI * p[0]) * std::sin(M_PI * p[1]); };
    s.a21 = s.a12;
    s.b2 = [](const Point& p) { return -0.3 * std::sin(2.0 * M_PI * p[1]); };
  }
  return s;
}

/// Discontinuous diffusion: a = 0.5 on [0,1/2), 1.5 on [1/2,1].  Only
/// measurability is assumed of the leading coefficients, so this stays
/// inside the admissible class.
inline OperatorSpec sign_jump(int d) {
  OperatorSpec s;
  s.d = d;
  s.form = OperatorForm::NonDivergence;
  s.preset = "sign_jump";
  auto jump = [](const Point& p) { return p[0] < 0.5 ? 0.5 : 1.5; };
  s.a11 = jump;
  if (d == 2) s.a22 = jump;
  return s;
}

inline OperatorSpec divergence_smooth(int d) {
  OperatorSpec s;
  s.d = d;
  s.form = OperatorForm::Divergence;
  s.preset = "divergence_smooth";
  s.a11 = [](const Point& p) { return 1.0 + 0.4 * std::sin(2.0 * M_PI * p[0]); };
  if (d == 2) s.a22 = [](const Point& p) { return 1.0 + 0.4 * std::sin(2.0 * M_PI * p[1]); };
  return s;
}

/// Divergence-form diffusion with a high/low contrast jump at x = 1/2:
/// a = a_lo on the left half, contrast * a_lo on the right.
inline OperatorSpec divergence_contrast(int d, double contrast, double a_lo = 0.2) {
  if (!(contrast >= 1.0) || !(a_lo > 0.0))
    throw ValidationError("divergence_contrast: need contrast >= 1 and a_lo > 0");
  OperatorSpec s;
  s.d = d;
  s.form = OperatorForm::Divergence;
  s.preset = "divergence_contrast";
  const double a_hi = contrast * a_lo;
  auto jump = [a_lo, a_hi](const Point& p) { return p[0] < 0.5 ? a_lo : a_hi; };
  s.a11 = jump;
  if (d == 2) s.a22 = jump;
  return s;
}

/// Look up a preset by its label, as used in config files.
inline OperatorSpec by_name(const std::string& name, int d, double param = 0.0) {
  if (name == "laplacian") return laplacian(d);
  if (name == "shifted_laplacian") return shifted_laplacian(d, param);
  if (name == "smooth_variable") return smooth_variable(d);
  if (name == "sign_jump") return sign_jump(d);
  if (name == "divergence_smooth") return divergence_smooth(d);
  if (name == "divergence_contrast")
    return divergence_contrast(d, param > 0.0 ? param : 10.0);
  throw ValidationError("unknown operator preset: " + name);
}

}  // namespace presets

}  // namespace spde
