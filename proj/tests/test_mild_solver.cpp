#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "spde/mild_solver.hpp"
#include "spde/regularity.hpp"
#include "spde/stats.hpp"

using namespace spde;

namespace {

Forcing unit_forcing(const SpaceTimeGrid& g) {
  ForcingSpec spec;  // constant-one, b-infty
  return make_forcing(spec, g);
}

}  // namespace

TEST_CASE("zero forcing stays at the zero solution") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  ForcingSpec spec;
  spec.kind = "zero";
  spec.condition = NoiseClass::None;
  const Forcing f = make_forcing(spec, g);
  const NoisePath path = NoisePath::sample(1, 0, 1, g.dt, 1.0);
  const SpaceTimeField u = solve(sg, f, path, 0.0);
  CHECK(sup_norm(u) == 0.0);
}

TEST_CASE("zero noise increments keep the solution at zero") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  NoisePath path = NoisePath::sample(1, 0, 1, g.dt, 1.0);
  std::fill(path.inc.begin(), path.inc.end(), 0.0);
  const SpaceTimeField u = solve(sg, unit_forcing(g), path, 0.0);
  CHECK(sup_norm(u) == 0.0);
}

TEST_CASE("modal covariance quadrature matches the closed form") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 129, 1.0 / 1024);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  const Forcing f = unit_forcing(g);
  const SpectralBackend* sb = sg.spectral_backend();
  REQUIRE(sb != nullptr);

  // independent oracle: discrete sine coefficients by direct summation,
  // time integral in closed form
  const int modes = sb->n_modes();
  std::vector<double> fhat(modes, 0.0), rate(modes), phi_a(modes), phi_b(modes);
  const double x_a = 0.25, x_b = 0.5;
  for (int k = 1; k <= modes; ++k) {
    for (long i = 1; i < g.nx - 1; ++i)
      fhat[k - 1] += g.h() * std::sqrt(2.0) * std::sin(k * M_PI * g.x(i));
    rate[k - 1] = k * k * M_PI * M_PI;
    phi_a[k - 1] = std::sqrt(2.0) * std::sin(k * M_PI * x_a);
    phi_b[k - 1] = std::sqrt(2.0) * std::sin(k * M_PI * x_b);
  }
  for (double t : {0.1, 0.5, 1.0}) {
    const double expect = oracle::covariance_closed_form(fhat, rate, phi_a, phi_b, t);
    const double got = exact_covariance(sg, f, {x_a, 0.0}, {x_b, 0.0}, t);
    CHECK(got == Catch::Approx(expect).epsilon(1e-5));
  }
  CHECK(exact_covariance(sg, f, {0.25, 0.0}, {0.5, 0.0}, 0.0) == 0.0);
}

TEST_CASE("Monte Carlo variance agrees with the covariance oracle") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 256);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  const Forcing f = unit_forcing(g);
  const double t = 0.5;
  const double target = exact_covariance(sg, f, {0.5, 0.0}, {0.5, 0.0}, t);
  const int m = 3000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const NoisePath path = NoisePath::sample(77, static_cast<std::uint64_t>(i), 1, g.dt, t + g.dt);
    MildRecursion rec(sg, f, path, {});
    rec.advance_to(static_cast<int>(std::lround(t / g.dt)));
    const double v = rec.point(32, 0);
    s += v;
    s2 += v * v;
  }
  const double var = s2 / m - (s / m) * (s / m);
  const double se = target * std::sqrt(2.0 / m);
  CHECK(std::abs(var - target) < 3.0 * se);
  CHECK(std::abs(s / m) < 3.0 * std::sqrt(target / m));  // mean is zero
}

TEST_CASE("solution scales linearly in the forcing amplitude") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 129, 1.0 / 256);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  ForcingSpec one;
  one.condition = NoiseClass::None;
  ForcingSpec two = one;
  two.scale = 2.0;
  const NoisePath path = NoisePath::sample(9, 3, 1, g.dt, 1.0);
  const SpaceTimeField u1 = solve(sg, make_forcing(one, g), path, 0.0);
  const SpaceTimeField u2 = solve(sg, make_forcing(two, g), path, 0.0);
  REQUIRE(u1.v.size() == u2.v.size());
  for (size_t i = 0; i < u1.v.size(); ++i) CHECK(u2.v[i] == 2.0 * u1.v[i]);  // bit-exact
}

TEST_CASE("refining dt with the same Brownian path moves the sup norm only slightly") {
  const int nx = 65;
  const SpaceTimeGrid fine = SpaceTimeGrid::make(1, nx, 1.0 / 512);
  const SpaceTimeGrid coarse = SpaceTimeGrid::make(1, nx, 1.0 / 256);
  const Semigroup sg_f = Semigroup::spectral(fine, presets::laplacian(1));
  const Semigroup sg_c = Semigroup::spectral(coarse, presets::laplacian(1));
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    const NoisePath path_f = NoisePath::sample(21, static_cast<std::uint64_t>(i), 1, fine.dt, 1.0);
    const NoisePath path_c = path_f.coarsened(2);
    const SpaceTimeField uf = solve(sg_f, unit_forcing(fine), path_f, 0.0);
    const SpaceTimeField uc = solve(sg_c, unit_forcing(coarse), path_c, 0.0);
    const double a = sup_norm(uf), b = sup_norm(uc);
    worst = std::max(worst, std::abs(a - b) / std::max(a, b));
  }
  CHECK(worst <= 0.05);
}

TEST_CASE("pointwise marginals are gaussian") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 256);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  const Forcing f = unit_forcing(g);
  std::vector<double> xs(2000);
  for (size_t i = 0; i < xs.size(); ++i) {
    const NoisePath path = NoisePath::sample(5, static_cast<std::uint64_t>(i), 1, g.dt, 0.5 + g.dt);
    MildRecursion rec(sg, f, path, {});
    rec.advance_to(128);
    xs[i] = rec.point(32, 0);
  }
  CHECK(stats::skewness(xs) == Catch::Approx(0.0).margin(0.15));
  CHECK(stats::kurtosis(xs) == Catch::Approx(3.0).margin(0.35));
}

TEST_CASE("point evaluation agrees with the synthesized state") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  const NoisePath path = NoisePath::sample(3, 1, 1, g.dt, 1.0);
  MildRecursion rec(sg, unit_forcing(g), path, {});
  rec.advance_to(17);
  const SpatialField state = rec.state();
  for (int ix : {1, 16, 32, 63})
    CHECK(rec.point(ix, 0) == Catch::Approx(state.at(ix)).margin(1e-12));
}

TEST_CASE("growth without opt-in is rejected; the instability guard trips") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const Semigroup grow = Semigroup::spectral(g, presets::shifted_laplacian(1, 2.0));
  const NoisePath path = NoisePath::sample(1, 0, 1, g.dt, 1.0);
  const Forcing f = unit_forcing(g);
  CHECK_THROWS_AS(solve(grow, f, path, 0.0), ValidationError);
  SolveOptions opts;
  opts.allow_positive_c = true;
  CHECK_NOTHROW(solve(grow, f, path, 0.0, opts));

  SolveOptions tight;
  tight.sup_guard = 1e-6;
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  CHECK_THROWS_AS(solve(sg, f, path, 0.0, tight), NumericalError);
}

TEST_CASE("feedback forcing runs adapted to the past of the solution") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  ForcingSpec spec;
  spec.kind = "feedback";
  const Forcing f = make_forcing(spec, g);
  const NoisePath path = NoisePath::sample(2, 0, 1, g.dt, 1.0);
  const SpaceTimeField u = solve(sg, f, path, 0.0);
  CHECK(sup_norm(u) > 0.0);
  CHECK(sup_norm(u) < 100.0);
  CHECK_THROWS_AS(exact_covariance(sg, f, {0.5, 0.0}, {0.5, 0.0}, 0.5), ValidationError);
}

TEST_CASE("windows must be sorted with unit gaps") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 33, 1.0 / 32);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  const Forcing f = unit_forcing(g);
  const NoisePath path = NoisePath::sample(1, 0, 1, g.dt, 3.0);
  std::vector<double> seen;
  solve_windows(sg, f, path, std::vector<double>{0.0, 2.0},
                [&](size_t, const SpaceTimeField& field) { seen.push_back(field.grid.t0); });
  CHECK(seen == std::vector<double>{0.0, 2.0});
  CHECK_THROWS_AS(
      solve_windows(sg, f, path, std::vector<double>{0.0, 0.5},
                    [&](size_t, const SpaceTimeField&) {}),
      ValidationError);
}

TEST_CASE("covariance preconditions") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 65, 1.0 / 64);
  const Semigroup fd = Semigroup::implicit_fd(g, presets::laplacian(1));
  const Semigroup sp = Semigroup::spectral(g, presets::laplacian(1));
  const Forcing f = unit_forcing(g);
  CHECK_THROWS_AS(exact_covariance(fd, f, {0.5, 0.0}, {0.5, 0.0}, 0.5), ValidationError);

  ForcingSpec modulated;
  modulated.modulation = Modulation::exp_decay(1.0);
  const Forcing fm = make_forcing(modulated, g);
  CHECK_THROWS_AS(exact_covariance(sp, fm, {0.5, 0.0}, {0.5, 0.0}, 0.5), ValidationError);
  CHECK_THROWS_AS(exact_covariance(sp, f, {0.5, 0.0}, {0.5, 0.0}, -1.0), ValidationError);
}

TEST_CASE("increment moment report fits the exponent of synthetic data") {
  // E|X_delta|^2 = delta^0.9 exactly
  std::vector<double> distances = {0.25, 0.5, 1.0};
  std::vector<std::vector<double>> samples(3);
  for (size_t k = 0; k < 3; ++k) {
    const double sd = std::pow(distances[k], 0.45);
    samples[k].resize(1500);
    for (size_t i = 0; i < samples[k].size(); ++i)
      samples[k][i] = sd * standard_normal(7, k, 0, static_cast<std::uint64_t>(i));
  }
  const IncrementMomentReport rep = increment_moments(samples, distances, 2.0);
  CHECK(rep.fitted_exponent == Catch::Approx(0.9).margin(0.08));
  REQUIRE(rep.moment_ci.size() == 3);
  for (size_t k = 0; k < 3; ++k) {
    CHECK(rep.moment_ci[k].lo <= rep.moments[k]);
    CHECK(rep.moment_ci[k].hi >= rep.moments[k]);
  }
  samples[0].resize(10);
  CHECK_THROWS_AS(increment_moments(samples, distances, 2.0), ValidationError);
}

TEST_CASE("solved fields carry provenance") {
  const SpaceTimeGrid g = SpaceTimeGrid::make(1, 33, 1.0 / 32);
  const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
  const NoisePath path = NoisePath::sample(42, 7, 1, g.dt, 1.0);
  const SpaceTimeField u = solve(sg, unit_forcing(g), path, 0.0);
  CHECK(u.prov.operator_preset == "laplacian");
  CHECK(u.prov.forcing == "constant-one");
  CHECK(u.prov.backend == "spectral");
  CHECK(u.prov.seed == 42);
  CHECK(u.prov.sample_index == 7);
  CHECK(u.grid.levels() == 33);
}
