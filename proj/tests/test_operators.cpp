#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "spde/operators.hpp"

using namespace spde;

namespace {

SpatialField sample(const SpaceTimeGrid& g, double (*fn)(double, double)) {
  SpatialField f = SpatialField::zeros(g.d, g.nx);
  const long ny = (g.d == 2) ? g.nx : 1;
  for (long ix = 0; ix < g.nx; ++ix)
    for (long iy = 0; iy < ny; ++iy)
      f.v[static_cast<size_t>(g.spatial_index(ix, iy))] = fn(g.x(ix), g.d == 2 ? g.x(iy) : 0.0);
  return f;
}

}  // namespace

TEST_CASE("ellipticity report covers the coefficient range") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const OperatorReport r = validate(presets::sign_jump(1), g);
  CHECK(r.lambda_min == Catch::Approx(0.5));
  CHECK(r.lambda_max == Catch::Approx(1.5));
  CHECK(r.c_sup <= 0.0);

  const OperatorReport s = validate(presets::smooth_variable(1), g);
  CHECK(s.lambda_min > 0.0);
  CHECK(s.c_sup == Catch::Approx(-0.5));
}

TEST_CASE("degenerate or asymmetric diffusion is rejected, naming a point") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(2, 17, 1.0 / 16);
  OperatorSpec bad = presets::laplacian(2);
  bad.a11 = presets::constant(0.0);
  try {
    validate(bad, g);
    FAIL("expected ellipticity rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("(") != std::string::npos);  // offending point named
  }

  OperatorSpec asym = presets::laplacian(2);
  asym.a12 = presets::constant(0.1);
  asym.a21 = presets::constant(-0.1);
  CHECK_THROWS_AS(validate(asym, g), ValidationError);
}

TEST_CASE("discrete operator is linear") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const OperatorSpec op = presets::smooth_variable(1);
  const SpatialField f = sample(g, [](double x, double) { return std::sin(3 * M_PI * x) + x; });
  const SpatialField w = sample(g, [](double x, double) { return x * (1 - x) * std::cos(x); });
  const SpatialField af = apply(op, g, f);
  const SpatialField aw = apply(op, g, w);
  SpatialField combo = SpatialField::zeros(1, g.nx);
  for (size_t i = 0; i < combo.v.size(); ++i) combo.v[i] = 2.0 * f.v[i] - 3.0 * w.v[i];
  const SpatialField acombo = apply(op, g, combo);
  for (size_t i = 0; i < combo.v.size(); ++i)
    CHECK(acombo.v[i] == Catch::Approx(2.0 * af.v[i] - 3.0 * aw.v[i]).margin(1e-10));
}

TEST_CASE("laplacian eigenfunction is reproduced to second order") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 129, 1.0 / 128);
  const SpatialField phi = sample(g, [](double x, double) { return std::sin(M_PI * x); });
  const SpatialField aphi = apply(presets::laplacian(1), g, phi);
  double worst = 0.0;
  for (long i = 1; i < g.nx - 1; ++i)
    worst = std::max(worst, std::abs(aphi.v[static_cast<size_t>(i)] +
                                     M_PI * M_PI * phi.v[static_cast<size_t>(i)]));
  CHECK(worst < 1e-2);  // O(h^2) with constant pi^4/12 ~ 8

  const SpaceTimeGrid g2 = SpaceTimeGrid::make(2, 33, 1.0 / 32);
  const SpatialField phi2 =
      sample(g2, [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); });
  const SpatialField aphi2 = apply(presets::laplacian(2), g2, phi2);
  double worst2 = 0.0;
  for (long ix = 1; ix < g2.nx - 1; ++ix)
    for (long iy = 1; iy < g2.nx - 1; ++iy) {
      const size_t i = static_cast<size_t>(g2.spatial_index(ix, iy));
      worst2 = std::max(worst2, std::abs(aphi2.v[i] + 2.0 * M_PI * M_PI * phi2.v[i]));
    }
  CHECK(worst2 < 0.2);  // h = 1/32
}

TEST_CASE("divergence-form operator yields a negative quadratic form") {
  // <u, div(a grad u)> = -<a grad u, grad u> < 0 for u in the Dirichlet class
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const OperatorSpec op = presets::divergence_contrast(1, 10.0);
  const SpatialField u = sample(g, [](double x, double) { return std::sin(2 * M_PI * x) + 0.3 * std::sin(5 * M_PI * x); });
  const SpatialField au = apply(op, g, u);
  double form = 0.0;
  for (size_t i = 0; i < u.v.size(); ++i) form += u.v[i] * au.v[i];
  CHECK(form < 0.0);
}

TEST_CASE("zero-order shift composes with the original operator") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const OperatorSpec grow = presets::shifted_laplacian(1, 2.0);
  const OperatorSpec shifted = shift_zero_order(grow, 2.0, g);
  CHECK(validate(shifted, g).c_sup == Catch::Approx(0.0).margin(1e-12));
  const SpatialField u = sample(g, [](double x, double) { return x * (1 - x); });
  const SpatialField a = apply(grow, g, u);
  const SpatialField b = apply(shifted, g, u);
  for (long i = 1; i < g.nx - 1; ++i)
    CHECK(a.v[static_cast<size_t>(i)] - b.v[static_cast<size_t>(i)] ==
          Catch::Approx(2.0 * u.v[static_cast<size_t>(i)]).margin(1e-12));

  CHECK_THROWS_AS(shift_zero_order(grow, 1.0, g), ValidationError);  // alpha below c_sup
}

TEST_CASE("preset lookup validates names") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 17, 1.0 / 16);
  CHECK_NOTHROW(validate(presets::by_name("laplacian", 1), g));
  CHECK_NOTHROW(validate(presets::by_name("divergence_contrast", 1, 10.0), g));
  CHECK_THROWS_AS(presets::by_name("laplacean", 1), ValidationError);
}
