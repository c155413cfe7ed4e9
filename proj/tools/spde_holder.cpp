// spde-holder: batch driver for the SPDE regularity laboratory.
//
//   spde-holder simulate         run the configured study, write artifacts
//   spde-holder analyze          re-analyze raw field dumps
//   spde-holder verify-semigroup semigroup/kernel diagnostics
//   spde-holder report           aggregate a simulate directory into plot data
//   spde-holder selftest         oracle suite (exit 4 on failure)
//
// Exit codes: 0 ok, 1 usage, 2 validation, 3 numerical failure,
// 4 selftest/acceptance failure.  Errors are mirrored as JSON on stderr.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spde/config.hpp"
#include "spde/diagnostics.hpp"
#include "spde/experiments.hpp"
#include "spde/io.hpp"

namespace {

using nlohmann::json;

void emit_error(const std::string& type, const std::string& message) {
  json err{{"error", {{"type", type}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
}

struct Cli {
  std::string config_path;
  std::string out_dir;
  int threads = 0;           // 0: keep config value
  long long seed = -1;       // <0: keep config value
  std::vector<std::string> fields;  // analyze: explicit dump base paths

  void apply(spde::RunConfig& cfg) const {
    if (threads > 0) cfg.plan.threads = threads;
    if (seed >= 0) cfg.plan.seed = static_cast<std::uint64_t>(seed);
  }
};

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

int env_threads() {
  const char* v = std::getenv("SPDE_HOLDER_THREADS");
  if (!v) return 0;
  try {
    return std::max(0, std::stoi(v));
  } catch (...) {
    throw spde::ValidationError("SPDE_HOLDER_THREADS is not an integer");
  }
}

spde::RunConfig load_config(const Cli& cli) {
  if (cli.config_path.empty()) throw spde::ValidationError("a --config file is required");
  spde::RunConfig cfg = spde::RunConfig::load(cli.config_path);
  cli.apply(cfg);
  return cfg;
}

void write_manifest(const std::string& out_dir, const spde::RunConfig& cfg,
                    const std::map<std::string, std::string>& digests) {
  json artifacts = json::object();
  for (const auto& [name, digest] : digests) artifacts[name] = digest;
  json manifest{{"format", "spde-holder-manifest-v1"},
                {"study", cfg.study},
                {"config", cfg.to_json()},
                {"artifacts", artifacts}};
  spde::write_file_atomic(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

void write_artifact(const std::string& out_dir, const std::string& name,
                    const std::string& content, std::map<std::string, std::string>& digests) {
  spde::write_file_atomic(out_dir + "/" + name, content);
  digests[name] = spde::digest_bytes(content);
}

std::string ensemble_csv(const spde::RunConfig& cfg, const spde::EnsembleResult& result) {
  spde::CsvWriter csv;
  csv.comment("per-sample window analysis; u solves du = Au dt + sum_j f_j dw_j");
  csv.comment("config: " + cfg.to_json().dump());
  std::vector<std::string> cols = {"window_t0", "sample_index",    "sup",
                                   "point_value", "seminorm_mode", "k_critical_default",
                                   "chain_ok"};
  for (double th : cfg.plan.thetas) {
    cols.push_back("seminorm_theta=" + spde::format_double(th));
    cols.push_back("k_critical_theta=" + spde::format_double(th));
  }
  csv.header(cols);
  for (const spde::SampleRecord& rec : result.records) {
    std::vector<std::string> row = {spde::format_double(rec.window_t0),
                                    std::to_string(rec.sample_index),
                                    spde::format_double(rec.sup),
                                    spde::format_double(rec.point_value),
                                    rec.seminorm_mode,
                                    spde::format_double(rec.k_critical_default),
                                    rec.chain_ok ? "1" : "0"};
    for (size_t q = 0; q < rec.seminorm.size(); ++q) {
      row.push_back(spde::format_double(rec.seminorm[q]));
      row.push_back(spde::format_double(rec.k_critical[q]));
    }
    csv.row(row);
  }
  return csv.str();
}

std::string moments_csv(const spde::RunConfig& cfg, const std::vector<spde::MomentRow>& rows) {
  spde::CsvWriter csv;
  csv.comment("moment estimates with bootstrap 95% CIs; theta=-1 rows are sup-norm moments");
  csv.comment("config: " + cfg.to_json().dump());
  csv.header({"window_t0", "k", "theta", "estimate", "ci_lo", "ci_hi", "m"});
  for (const spde::MomentRow& row : rows)
    csv.row({spde::format_double(row.window_t0), std::to_string(row.k),
             spde::format_double(row.theta), spde::format_double(row.estimate),
             spde::format_double(row.ci_lo), spde::format_double(row.ci_hi),
             std::to_string(row.m)});
  return csv.str();
}

void dump_sample_fields(const spde::RunConfig& cfg, const std::string& out_dir,
                        std::map<std::string, std::string>& digests) {
  if (cfg.dump_fields <= 0) return;
  std::filesystem::create_directories(out_dir + "/fields");
  const spde::Semigroup sg = spde::plan_semigroup(cfg.plan);
  const spde::Forcing forcing = spde::make_forcing(cfg.plan.forcing, sg.grid());
  spde::SolveOptions opts;
  opts.allow_positive_c = cfg.plan.allow_positive_c;
  opts.sup_guard = cfg.plan.sup_guard;
  const double t0 = cfg.plan.windows.front();
  for (int i = 0; i < cfg.dump_fields && i < cfg.plan.samples; ++i) {
    const spde::NoisePath path = spde::NoisePath::sample(
        cfg.plan.seed, static_cast<std::uint64_t>(i), cfg.plan.forcing.j_count, cfg.plan.dt,
        t0 + 1.0);
    const spde::SpaceTimeField field = spde::solve(sg, forcing, path, t0, opts);
    const std::string base = "fields/sample_" + std::to_string(i);
    spde::dump_field(field, out_dir + "/" + base);
    digests[base + ".bin"] = spde::digest_bytes(spde::read_file(out_dir + "/" + base + ".bin"));
    digests[base + ".json"] = spde::digest_bytes(spde::read_file(out_dir + "/" + base + ".json"));
  }
}

int run_simulate(const Cli& cli) {
  const spde::RunConfig cfg = load_config(cli);
  std::filesystem::create_directories(cli.out_dir);
  std::map<std::string, std::string> digests;

  if (cfg.study == "ensemble") {
    const spde::EnsembleResult result = spde::run_ensemble(cfg.plan);
    write_artifact(cli.out_dir, "ensemble.csv", ensemble_csv(cfg, result), digests);
    write_artifact(cli.out_dir, "moments.csv", moments_csv(cfg, result.moments), digests);
    json summary{{"config", cfg.to_json()},
                 {"chain_violations", result.chain_violations},
                 {"lyapunov_ok", result.lyapunov_ok},
                 {"max_k_critical_default", result.max_k_critical_default}};
    write_artifact(cli.out_dir, "summary.json", summary.dump(2) + "\n", digests);
    dump_sample_fields(cfg, cli.out_dir, digests);
  } else if (cfg.study == "growth") {
    const spde::GrowthReport rep = spde::run_growth(cfg.plan, cfg.growth_c);
    json out{{"config", cfg.to_json()},
             {"c_bar", rep.c_bar},
             {"windows", rep.windows},
             {"mean_sup", rep.mean_sup},
             {"fitted_slope", rep.fitted_slope},
             {"shifted_mean_sup", rep.shifted_mean_sup},
             {"shifted_flatness", rep.shifted_flatness}};
    write_artifact(cli.out_dir, "growth.json", out.dump(2) + "\n", digests);
  } else if (cfg.study == "threshold") {
    const spde::ThresholdReport rep =
        spde::run_threshold_scan(cfg.plan, cfg.threshold_p, cfg.epsilons, cfg.plan.thetas);
    json out{{"config", cfg.to_json()},  {"p", rep.p},
             {"threshold", rep.threshold}, {"epsilons", rep.epsilons},
             {"thetas", rep.thetas},       {"moment", rep.moment},
             {"spread", rep.spread}};
    write_artifact(cli.out_dir, "threshold.json", out.dump(2) + "\n", digests);
  } else if (cfg.study == "tail") {
    const spde::TailReport rep = spde::run_tail(cfg.plan);
    json out{{"config", cfg.to_json()},
             {"m", rep.m},
             {"slope", rep.slope},
             {"survival_k", rep.curve.k},
             {"survival_s", rep.curve.s},
             {"moment_direct", rep.moment_identity.direct},
             {"moment_via_tail", rep.moment_identity.via_tail}};
    write_artifact(cli.out_dir, "tail.json", out.dump(2) + "\n", digests);
  } else {  // increments
    const spde::IncrementStudy rep =
        spde::run_increment_study(cfg.plan, cfg.lags, cfg.t_base);
    json out{{"config", cfg.to_json()},
             {"t_base", rep.t_base},
             {"p", rep.p},
             {"deltas", rep.deltas},
             {"moment", rep.moment},
             {"kurtosis", rep.kurtosis},
             {"exponent", rep.exponent},
             {"exponent_ci", {rep.exponent_ci.lo, rep.exponent_ci.hi}}};
    write_artifact(cli.out_dir, "increments.json", out.dump(2) + "\n", digests);
  }
  write_manifest(cli.out_dir, cfg, digests);
  std::cout << "wrote " << digests.size() + 1 << " artifacts to " << cli.out_dir << "\n";
  return 0;
}

int run_analyze(const Cli& cli) {
  const spde::RunConfig cfg = load_config(cli);
  std::vector<std::string> bases = cli.fields;
  if (bases.empty()) {
    const std::string dir = cli.out_dir + "/fields";
    if (std::filesystem::is_directory(dir)) {
      for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string path = entry.path().string();
        if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
          bases.push_back(path.substr(0, path.size() - 5));
      }
      std::sort(bases.begin(), bases.end());
    }
  }
  if (bases.empty())
    throw spde::ValidationError(
        "analyze: no field dumps found (pass --field or run simulate with dump_fields > 0)");

  spde::CsvWriter csv;
  csv.comment("re-analysis of raw field dumps");
  csv.comment("config: " + cfg.to_json().dump());
  std::vector<std::string> cols = {"field", "window_t0", "sup", "k_critical_default"};
  for (double th : cfg.plan.thetas) cols.push_back("seminorm_theta=" + spde::format_double(th));
  csv.header(cols);
  for (const std::string& base : bases) {
    const spde::SpaceTimeField field = spde::load_field(base);
    const spde::SampleRecord rec = spde::detail::analyze_window(cfg.plan, field);
    std::vector<std::string> row = {std::filesystem::path(base).filename().string(),
                                    spde::format_double(field.grid.t0),
                                    spde::format_double(rec.sup),
                                    spde::format_double(rec.k_critical_default)};
    for (double s : rec.seminorm) row.push_back(spde::format_double(s));
    csv.row(row);
  }
  std::filesystem::create_directories(cli.out_dir);
  spde::write_file_atomic(cli.out_dir + "/analysis.csv", csv.str());
  std::cout << "analyzed " << bases.size() << " fields -> " << cli.out_dir << "/analysis.csv\n";
  return 0;
}

int run_verify_semigroup(const Cli& cli) {
  const spde::RunConfig cfg = load_config(cli);
  const spde::Semigroup sg = spde::plan_semigroup(cfg.plan);
  std::filesystem::create_directories(cli.out_dir);

  const std::vector<double> ts = spde::log_spaced(1e-3, 0.02, 8);
  const spde::KernelDecayFit fit = spde::fit_kernel_decay(sg, 2.0, ts);
  spde::CsvWriter csv;
  csv.comment("Green kernel L^p norm decay; expected slope -d/(2q), 1/p + 1/q = 1");
  csv.comment("config: " + cfg.to_json().dump());
  csv.header({"t", "lp_norm"});
  for (size_t i = 0; i < fit.t.size(); ++i)
    csv.row({spde::format_double(fit.t[i]), spde::format_double(fit.norm[i])});
  spde::write_file_atomic(cli.out_dir + "/kernel_decay.csv", csv.str());

  spde::SpatialField hump = spde::SpatialField::zeros(sg.grid().d, sg.grid().nx);
  const double h = sg.grid().h();
  for (long i = 0; i < static_cast<long>(hump.v.size()); ++i) {
    const long ix = (sg.grid().d == 2) ? i / sg.grid().nx : i;
    const long iy = (sg.grid().d == 2) ? i % sg.grid().nx : 0;
    const double x = ix * h, y = iy * h;
    hump.v[static_cast<size_t>(i)] =
        x * (1.0 - x) * (sg.grid().d == 2 ? y * (1.0 - y) : 1.0);
  }
  const double defect = spde::semigroup_defect(sg, hump, 0.05, 0.05);

  double cross = -1.0;
  if (sg.backend_name() == "spectral") {
    const spde::Semigroup fd = spde::Semigroup::implicit_fd(
        sg.grid(), spde::presets::by_name(cfg.plan.operator_preset, cfg.plan.d,
                                          cfg.plan.operator_param));
    cross = spde::cross_backend_discrepancy(sg, fd, hump, 0.1);
  }

  json out{{"config", cfg.to_json()},
           {"kernel_fit",
            {{"p", fit.p},
             {"slope", fit.slope},
             {"expected_slope", fit.expected_slope}}},
           {"semigroup_defect", defect},
           {"cross_backend_linf", cross}};
  spde::write_file_atomic(cli.out_dir + "/semigroup.json", out.dump(2) + "\n");
  std::cout << "kernel slope " << fit.slope << " (expected " << fit.expected_slope
            << "), defect " << defect << "\n";
  return 0;
}

int run_report(const Cli& cli) {
  const std::string manifest_path = cli.out_dir + "/manifest.json";
  if (!spde::file_exists(manifest_path))
    throw spde::ValidationError("report: missing ensemble in " + cli.out_dir +
                                " (run simulate first)");
  json manifest;
  try {
    manifest = json::parse(spde::read_file(manifest_path));
  } catch (const json::exception& e) {
    throw spde::ValidationError(std::string("report: malformed manifest: ") + e.what());
  }
  const std::string study = manifest.value("study", "");
  json report{{"format", "spde-holder-report-v1"},
              {"study", study},
              {"config", manifest.value("config", json::object())}};

  if (study == "ensemble") {
    const std::string moments_path = cli.out_dir + "/moments.csv";
    if (!spde::file_exists(moments_path))
      throw spde::ValidationError("report: missing ensemble moments in " + cli.out_dir);
    const std::string text = spde::read_file(moments_path);
    spde::CsvWriter csv;
    csv.comment("E ||u||^k vs window start; theta=-1 rows are sup-norm moments");
    csv.header({"window_t0", "k", "theta", "estimate", "ci_lo", "ci_hi"});
    std::istringstream in(text);
    std::string line;
    std::vector<json> rows;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("window_t0", 0) == 0) continue;
      std::istringstream cells(line);
      std::string cell;
      std::vector<std::string> parts;
      while (std::getline(cells, cell, ',')) parts.push_back(cell);
      if (parts.size() < 7) continue;
      csv.row({parts[0], parts[1], parts[2], parts[3], parts[4], parts[5]});
      rows.push_back(json{{"window_t0", std::stod(parts[0])},
                          {"k", std::stoi(parts[1])},
                          {"theta", std::stod(parts[2])},
                          {"estimate", std::stod(parts[3])}});
    }
    spde::write_file_atomic(cli.out_dir + "/moments_vs_T.csv", csv.str());
    report["moments"] = rows;
    if (spde::file_exists(cli.out_dir + "/summary.json"))
      report["summary"] = json::parse(spde::read_file(cli.out_dir + "/summary.json"));
  } else if (study == "growth") {
    const json growth = json::parse(spde::read_file(cli.out_dir + "/growth.json"));
    spde::CsvWriter csv;
    csv.comment("E ||u||_inf vs window start, growth operator and shifted control");
    csv.header({"window_t0", "mean_sup", "shifted_mean_sup"});
    for (size_t i = 0; i < growth.at("windows").size(); ++i)
      csv.row({spde::format_double(growth.at("windows")[i].get<double>()),
               spde::format_double(growth.at("mean_sup")[i].get<double>()),
               spde::format_double(growth.at("shifted_mean_sup")[i].get<double>())});
    spde::write_file_atomic(cli.out_dir + "/moments_vs_T.csv", csv.str());
    report["growth"] = growth;
  } else if (study == "threshold") {
    const json th = json::parse(spde::read_file(cli.out_dir + "/threshold.json"));
    spde::CsvWriter csv;
    csv.comment("E ||u||^2_{C^theta} vs spike width");
    std::vector<std::string> cols = {"epsilon"};
    for (const auto& t : th.at("thetas"))
      cols.push_back("theta=" + spde::format_double(t.get<double>()));
    csv.header(cols);
    for (size_t e = 0; e < th.at("epsilons").size(); ++e) {
      std::vector<std::string> row = {spde::format_double(th.at("epsilons")[e].get<double>())};
      for (const auto& v : th.at("moment")[e]) row.push_back(spde::format_double(v.get<double>()));
      csv.row(row);
    }
    spde::write_file_atomic(cli.out_dir + "/moments_vs_eps.csv", csv.str());
    report["threshold"] = th;
  } else if (study == "tail") {
    const json tail = json::parse(spde::read_file(cli.out_dir + "/tail.json"));
    spde::CsvWriter csv;
    csv.comment("empirical survival of ||u||_inf");
    csv.header({"k", "survival"});
    for (size_t i = 0; i < tail.at("survival_k").size(); ++i)
      csv.row({spde::format_double(tail.at("survival_k")[i].get<double>()),
               spde::format_double(tail.at("survival_s")[i].get<double>())});
    spde::write_file_atomic(cli.out_dir + "/tail_survival.csv", csv.str());
    report["tail"] = {{"slope", tail.at("slope")},
                      {"m", tail.at("m")},
                      {"moment_direct", tail.at("moment_direct")},
                      {"moment_via_tail", tail.at("moment_via_tail")}};
  } else if (study == "increments") {
    const json inc = json::parse(spde::read_file(cli.out_dir + "/increments.json"));
    spde::CsvWriter csv;
    csv.comment("E |u(x, t+delta) - u(x, t)|^2 vs delta at the spatial midpoint");
    csv.header({"delta", "moment", "kurtosis"});
    for (size_t i = 0; i < inc.at("deltas").size(); ++i)
      csv.row({spde::format_double(inc.at("deltas")[i].get<double>()),
               spde::format_double(inc.at("moment")[i].get<double>()),
               spde::format_double(inc.at("kurtosis")[i].get<double>())});
    spde::write_file_atomic(cli.out_dir + "/increment_fits.csv", csv.str());
    report["increments"] = {{"exponent", inc.at("exponent")},
                            {"exponent_ci", inc.at("exponent_ci")}};
  } else {
    throw spde::ValidationError("report: unknown study \"" + study + "\" in manifest");
  }
  spde::write_file_atomic(cli.out_dir + "/report.json", report.dump(2) + "\n");
  std::cout << "wrote " << cli.out_dir << "/report.json\n";
  return 0;
}

bool check(const char* name, bool ok, std::ostringstream& log) {
  log << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
  return ok;
}

int run_selftest(const Cli&) {
  std::ostringstream log;
  bool all = true;
  using namespace spde;

  // modal covariance oracle vs the closed form for a single eigenmode
  {
    const SpaceTimeGrid g = SpaceTimeGrid::make(1, 129, 1.0 / 1024, 0.0);
    const Semigroup sg = Semigroup::spectral(g, presets::laplacian(1));
    ForcingSpec fs;
    fs.kind = "eigenmode";
    fs.condition = NoiseClass::Bp;
    const Forcing f = make_forcing(fs, g);
    const double t = 0.5, lambda1 = M_PI * M_PI;
    const double phi1 = std::sqrt(2.0) * std::sin(M_PI * 0.5);
    const double closed = phi1 * phi1 * (1.0 - std::exp(-2.0 * lambda1 * t)) / (2.0 * lambda1);
    const double quad = exact_covariance(sg, f, {0.5, 0.0}, {0.5, 0.0}, t);
    all &= check("covariance quadrature vs closed form", std::abs(quad - closed) < 1e-5 * closed,
                 log);

    double s2 = 0.0;
    const int m = 2000;
    for (int i = 0; i < m; ++i) {
      const NoisePath path = NoisePath::sample(11, static_cast<std::uint64_t>(i), 1, g.dt, t + g.dt);
      MildRecursion rec(sg, f, path, {});
      rec.advance_to(512);
      const double v = rec.point(64, 0);
      s2 += v * v;
    }
    const double var = s2 / m;
    const double se = closed * std::sqrt(2.0 / m);  // Var(v^2) = 2 Var(v)^2 for Gaussians
    all &= check("Monte Carlo variance vs covariance oracle (3 SE)",
                 std::abs(var - closed) < 3.0 * se, log);
  }

  // dyadic oscillation bound dominates every grid increment (brute force)
  {
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      const SpaceTimeGrid g = SpaceTimeGrid::make(1, 33, 1.0 / 32, 0.0);
      SpaceTimeField f = SpaceTimeField::zeros(g);
      for (size_t i = 0; i < f.v.size(); ++i)
        f.v[i] = 2.0 * uniform01(99, 0x5E1F, static_cast<std::uint64_t>(trial),
                                 static_cast<std::uint64_t>(i)) -
                 1.0;
      const OscProfile prof = osc_profile(f);
      const long n = g.nx;
      const long lt = g.steps_per_unit();
      for (long l1 = 0; l1 <= lt && ok; ++l1)
        for (long i1 = 0; i1 < n && ok; ++i1)
          for (long l2 = l1; l2 <= lt && ok; ++l2)
            for (long i2 = 0; i2 < n; ++i2) {
              const double dist =
                  spacetime_dist(g.x(i2) - g.x(i1), g.t(l2) - g.t(l1));
              if (dist <= 0.0 || dist > 1.0) continue;
              if (std::abs(f.at(l2, i2) - f.at(l1, i1)) >
                  prof.increment_bound(dist) + 1e-12) {
                ok = false;
                break;
              }
            }
    }
    all &= check("oscillation profile dominates grid increments", ok, log);
  }

  // spectral and finite-difference backends agree on a smooth evolution
  {
    const SpaceTimeGrid g = SpaceTimeGrid::make(1, 257, 1.0 / 1024, 0.0);
    const Semigroup a = Semigroup::spectral(g, presets::laplacian(1));
    const Semigroup b = Semigroup::implicit_fd(g, presets::laplacian(1));
    SpatialField hump = SpatialField::zeros(1, g.nx);
    for (long i = 0; i < g.nx; ++i) hump.v[static_cast<size_t>(i)] = g.x(i) * (1.0 - g.x(i));
    const double gap = cross_backend_discrepancy(a, b, hump, 0.1);
    all &= check("cross-backend agreement on smooth data (<= 1e-3)", gap <= 1e-3, log);
  }

  std::cout << log.str();
  std::cout << (all ? "selftest: all checks passed\n" : "selftest: FAILURES\n");
  return all ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPDE Hölder-regularity laboratory"};
  app.require_subcommand(1);

  Cli cli;
  cli.out_dir = env_or("SPDE_HOLDER_OUT", "out");

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", cli.config_path, "run configuration (JSON)");
    if (needs_config) opt->required();
    sub->add_option("--out", cli.out_dir, "output directory");
    sub->add_option("--threads", cli.threads, "worker threads (0: from config)");
    sub->add_option("--seed", cli.seed, "override the config seed");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run the configured study");
  add_common(simulate, true);
  CLI::App* analyze = app.add_subcommand("analyze", "re-analyze raw field dumps");
  add_common(analyze, true);
  analyze->add_option("--field", cli.fields, "field dump base path (repeatable)");
  CLI::App* verify = app.add_subcommand("verify-semigroup", "semigroup diagnostics");
  add_common(verify, true);
  CLI::App* report = app.add_subcommand("report", "aggregate a simulate directory");
  add_common(report, false);
  app.add_subcommand("selftest", "run the built-in oracle suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    emit_error("usage", e.what());
    std::cerr << app.help() << "\n";
    return 1;
  }

  try {
    const int env_t = env_threads();
    if (cli.threads == 0 && env_t > 0) cli.threads = env_t;
    if (app.got_subcommand("simulate")) return run_simulate(cli);
    if (app.got_subcommand("analyze")) return run_analyze(cli);
    if (app.got_subcommand("verify-semigroup")) return run_verify_semigroup(cli);
    if (app.got_subcommand("report")) return run_report(cli);
    return run_selftest(cli);
  } catch (const spde::ValidationError& e) {
    emit_error("validation", e.what());
    return 2;
  } catch (const spde::NumericalError& e) {
    emit_error("numerical", e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 3;
  }
}
