#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "oracles.hpp"
#include "spde/diagnostics.hpp"
#include "spde/semigroup.hpp"

using namespace spde;

namespace {

SpatialField sine_mode(const SpaceTimeGrid& g, int k) {
  SpatialField f = SpatialField::zeros(g);
  for (long i = 0; i < g.nx; ++i) f.v[static_cast<size_t>(i)] = std::sin(k * M_PI * g.x(i));
  return f;
}

SpatialField hump(const SpaceTimeGrid& g) {
  SpatialField f = SpatialField::zeros(g);
  const long ny = (g.d == 2) ? g.nx : 1;
  for (long ix = 0; ix < g.nx; ++ix)
    for (long iy = 0; iy < ny; ++iy)
      f.v[static_cast<size_t>(g.spatial_index(ix, iy))] =
          g.x(ix) * (1.0 - g.x(ix)) * (g.d == 2 ? g.x(iy) * (1.0 - g.x(iy)) : 1.0);
  return f;
}

}  // namespace

TEST_CASE("spectral backend decays eigenmodes at the exact rate") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 129, 1.0 / 1024);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  const SpatialField phi = sine_mode(g, 1);
  const double t = 0.37;
  const SpatialField st = sg.evolve(phi, t);
  const double factor = std::exp(-M_PI * M_PI * t);
  for (long i = 0; i < g.nx; ++i)
    CHECK(st.v[static_cast<size_t>(i)] ==
          Catch::Approx(factor * phi.v[static_cast<size_t>(i)]).margin(1e-12));
}

TEST_CASE("time zero is the identity on the Dirichlet class") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  const SpatialField f = hump(g);
  const SpatialField s0 = sg.evolve(f, 0.0);
  for (size_t i = 0; i < f.v.size(); ++i) CHECK(s0.v[i] == f.v[i]);  // bit-exact
}

TEST_CASE("spectral backend rejects non-identity diffusion") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  CHECK_THROWS_AS(Semigroup::spectral(g, presets::smooth_variable(1)), ValidationError);
  CHECK_NOTHROW(Semigroup::spectral(g, presets::shifted_laplacian(1, -0.5)));
}

TEST_CASE("backends agree on smooth data") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 257, 1.0 / 1024);
  const Semigroup a = Semigroup::spectral(g, presets::laplacian(1));
  const Semigroup b = Semigroup::implicit_fd(g, presets::laplacian(1));
  CHECK(cross_backend_discrepancy(a, b, hump(g), 0.1) <= 1e-3);
}

TEST_CASE("implicit backend handles variable coefficients stably") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 129, 1.0 / 256);
  const Semigroup sg = Semigroup::implicit_fd(g, presets::sign_jump(1));
  const SpatialField f = hump(g);
  const SpatialField out = sg.evolve(f, 0.5);
  CHECK(out.sup() < f.sup());
  CHECK(out.sup() > 0.0);
}

TEST_CASE("short-time Green kernel approaches the free heat kernel") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 257, 1.0 / 1024);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  const double t = 5e-4;  // sqrt(t) ~ 0.022 << distance to the boundary
  const SpatialField k = green_kernel(sg, 128, 0, t);
  for (long i = 108; i <= 148; ++i) {
    const double expect = oracle::heat_kernel_free(g.x(i), 0.5, t);
    CHECK(k.v[static_cast<size_t>(i)] == Catch::Approx(expect).epsilon(0.02).margin(0.05));
  }
}

TEST_CASE("kernel mass never exceeds one and decreases in time") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 257, 1.0 / 1024);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  double last = 1.0 + 1e-9;
  for (double t : {1e-3, 5e-3, 0.02, 0.1, 0.5}) {
    const double mass = integral(green_kernel(sg, 128, 0, t));
    CHECK(mass <= last + 1e-12);
    CHECK(mass <= 1.0 + 1e-9);
    last = mass;
  }
  CHECK_THROWS_AS(green_kernel(sg, 0, 0, 0.1), ValidationError);  // boundary source
}

TEST_CASE("Green kernel is symmetric for self-adjoint operators") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  const double t = 0.01;
  const SpatialField from_a = green_kernel(sg, 20, 0, t);
  const SpatialField from_b = green_kernel(sg, 44, 0, t);
  CHECK(from_a.at(44) == Catch::Approx(from_b.at(20)).epsilon(1e-10));
}

TEST_CASE("evolution is an L-infinity contraction when c <= 0") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(2, 33, 1.0 / 64);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(2));
  SpatialField f = hump(g);
  for (double t : {0.01, 0.1, 1.0}) CHECK(sg.evolve(f, t).sup() <= f.sup() + 1e-12);
}

TEST_CASE("semigroup composition property") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 129, 1.0 / 1024);
  const Semigroup spectral = Semigroup::spectral(g, presets::laplacian(1));
  CHECK(semigroup_defect(spectral, hump(g), 0.05, 0.07) <= 1e-12);
  const Semigroup fd = Semigroup::implicit_fd(g, presets::laplacian(1));
  CHECK(semigroup_defect(fd, hump(g), 0.05, 0.07) <= 1e-4);
}

TEST_CASE("two-dimensional implicit solve matches spectral") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(2, 33, 1.0 / 64);
  const Semigroup a = Semigroup::spectral(g, presets::laplacian(2));
  // substep well below the grid dt: at h = 1/32 the remaining gap is the
  // second-order stencil eigenvalue defect, delta-lambda * t ~ 1.6e-3
  const Semigroup b = Semigroup::implicit_fd(g, presets::laplacian(2),
                                             ImplicitFdBackend::Stepper::CrankNicolson, 1.0 / 1024);
  CHECK(cross_backend_discrepancy(a, b, hump(g), 0.1) <= 2e-3);
}
