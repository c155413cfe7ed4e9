#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spde/errors.hpp"
#include "spde/experiments.hpp"
#include "spde/grid.hpp"
#include "spde/noise.hpp"
#include "spde/operators.hpp"

namespace spde {

namespace detail {

inline void require_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!obj.is_object()) throw ValidationError("config: " + where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw ValidationError("config: unknown key \"" + it.key() + "\" in " + where);
  }
}

inline NoiseClass noise_class_from(const std::string& s) {
  if (s == "none") return NoiseClass::None;
  if (s == "b-infty") return NoiseClass::BInfty;
  if (s == "b-p") return NoiseClass::Bp;
  throw ValidationError("config: unknown noise condition \"" + s + "\"");
}

inline std::string noise_class_name(NoiseClass c) {
  switch (c) {
    case NoiseClass::None: return "none";
    case NoiseClass::BInfty: return "b-infty";
    default: return "b-p";
  }
}

inline Modulation modulation_from(const nlohmann::json& obj) {
  require_keys(obj, {"kind", "rate"}, "forcing.modulation");
  const std::string kind = obj.value("kind", "none");
  const double rate = obj.value("rate", 0.0);
  if (kind == "none") return Modulation::none();
  if (kind == "exp-decay") return Modulation::exp_decay(rate);
  if (kind == "cosine") return Modulation::cosine(rate);
  throw ValidationError("config: unknown modulation kind \"" + kind + "\"");
}

inline std::string modulation_name(Modulation::Kind k) {
  switch (k) {
    case Modulation::Kind::None: return "none";
    case Modulation::Kind::ExpDecay: return "exp-decay";
    default: return "cosine";
  }
}

inline ForcingSpec forcing_from(const nlohmann::json& obj) {
  require_keys(obj,
               {"kind", "j_count", "condition", "p", "epsilon", "x0", "amplitude", "cells",
                "scale", "modulation"},
               "forcing");
  ForcingSpec spec;
  spec.kind = obj.value("kind", spec.kind);
  spec.j_count = obj.value("j_count", spec.j_count);
  spec.condition = noise_class_from(obj.value("condition", std::string("b-infty")));
  spec.p = obj.value("p", spec.p);
  spec.epsilon = obj.value("epsilon", spec.epsilon);
  spec.x0 = obj.value("x0", spec.x0);
  spec.amplitude = obj.value("amplitude", spec.amplitude);
  spec.cells = obj.value("cells", spec.cells);
  spec.scale = obj.value("scale", spec.scale);
  if (obj.contains("modulation")) spec.modulation = modulation_from(obj.at("modulation"));
  return spec;
}

}  // namespace detail

/// Parsed run description.  Parsing is strict: any key the schema does not
/// define is an error naming the key, so typos never silently fall back to
/// defaults.
struct RunConfig {
  std::string study = "ensemble";  // ensemble | growth | threshold | tail | increments
  ExperimentPlan plan;
  double growth_c = 3.0;
  double threshold_p = 4.0;
  std::vector<double> epsilons = {0.125, 0.0625, 0.03125, 0.015625};
  std::vector<int> lags = {1, 2, 4, 8, 16, 32};
  double t_base = 0.5;
  int dump_fields = 0;  // raw trajectory dumps written by `simulate`

  void validate() const {
    if (study != "ensemble" && study != "growth" && study != "threshold" && study != "tail" &&
        study != "increments")
      throw ValidationError("config: unknown study \"" + study + "\"");
    const SpaceTimeGrid grid = plan_grid(plan);
    max_dyadic_level(grid);  // studies analyze dyadically: nx = 2^m + 1, dt = 2^-k
    presets::by_name(plan.operator_preset, plan.d, plan.operator_param);
    make_forcing(plan.forcing, grid);  // checks profile class + alignment
    plan.validate();
    if (dump_fields < 0) throw ValidationError("config: dump_fields must be >= 0");
    if (study == "increments")
      for (int lag : lags)
        if (lag < 1) throw ValidationError("config: lags must be positive integers");
    if (study == "threshold" && !(threshold_p > 1.0))
      throw ValidationError("config: threshold_p must exceed 1");
  }

  static RunConfig parse(const std::string& text) {
    nlohmann::json root;
    try {
      root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("config: malformed JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
      detail::require_keys(root,
                           {"study", "d", "nx", "dt", "operator", "forcing", "windows",
                            "samples", "k_list", "thetas", "seed", "backend", "threads",
                            "allow_positive_c", "sup_guard", "growth_c", "threshold_p",
                            "epsilons", "lags", "t_base", "dump_fields"},
                           "the top-level object");
      cfg.study = root.value("study", cfg.study);
      cfg.plan.d = root.value("d", cfg.plan.d);
      cfg.plan.nx = root.value("nx", cfg.plan.nx);
      cfg.plan.dt = root.value("dt", cfg.plan.dt);
      if (root.contains("operator")) {
        const nlohmann::json& op = root.at("operator");
        detail::require_keys(op, {"preset", "param"}, "operator");
        cfg.plan.operator_preset = op.value("preset", cfg.plan.operator_preset);
        cfg.plan.operator_param = op.value("param", cfg.plan.operator_param);
      }
      if (root.contains("forcing")) cfg.plan.forcing = detail::forcing_from(root.at("forcing"));
      if (root.contains("windows"))
        cfg.plan.windows = root.at("windows").get<std::vector<double>>();
      cfg.plan.samples = root.value("samples", cfg.plan.samples);
      if (root.contains("k_list")) cfg.plan.k_list = root.at("k_list").get<std::vector<int>>();
      if (root.contains("thetas"))
        cfg.plan.thetas = root.at("thetas").get<std::vector<double>>();
      cfg.plan.seed = root.value("seed", cfg.plan.seed);
      cfg.plan.backend = root.value("backend", cfg.plan.backend);
      cfg.plan.threads = root.value("threads", cfg.plan.threads);
      cfg.plan.allow_positive_c = root.value("allow_positive_c", cfg.plan.allow_positive_c);
      cfg.plan.sup_guard = root.value("sup_guard", cfg.plan.sup_guard);
      cfg.growth_c = root.value("growth_c", cfg.growth_c);
      cfg.threshold_p = root.value("threshold_p", cfg.threshold_p);
      if (root.contains("epsilons"))
        cfg.epsilons = root.at("epsilons").get<std::vector<double>>();
      if (root.contains("lags")) cfg.lags = root.at("lags").get<std::vector<int>>();
      cfg.t_base = root.value("t_base", cfg.t_base);
      cfg.dump_fields = root.value("dump_fields", cfg.dump_fields);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("config: bad value type: ") + e.what());
    }
    cfg.validate();
    return cfg;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  /// Fully resolved configuration (defaults applied), embedded verbatim in
  /// every output so a run can be reproduced from any artifact.  The thread
  /// count is deliberately omitted: results are thread-count invariant by
  /// the deterministic-reduction contract, and embedding it would make
  /// otherwise identical runs differ byte-wise.
  nlohmann::json to_json() const {
    nlohmann::json op{{"preset", plan.operator_preset}, {"param", plan.operator_param}};
    nlohmann::json forcing{
        {"kind", plan.forcing.kind},
        {"j_count", plan.forcing.j_count},
        {"condition", detail::noise_class_name(plan.forcing.condition)},
        {"p", plan.forcing.p},
        {"epsilon", plan.forcing.epsilon},
        {"x0", plan.forcing.x0},
        {"amplitude", plan.forcing.amplitude},
        {"cells", plan.forcing.cells},
        {"scale", plan.forcing.scale},
        {"modulation",
         {{"kind", detail::modulation_name(plan.forcing.modulation.kind)},
          {"rate", plan.forcing.modulation.rate}}}};
    return nlohmann::json{{"study", study},
                          {"d", plan.d},
                          {"nx", plan.nx},
                          {"dt", plan.dt},
                          {"operator", op},
                          {"forcing", forcing},
                          {"windows", plan.windows},
                          {"samples", plan.samples},
                          {"k_list", plan.k_list},
                          {"thetas", plan.thetas},
                          {"seed", plan.seed},
                          {"backend", plan.backend},
                          {"allow_positive_c", plan.allow_positive_c},
                          {"sup_guard", plan.sup_guard},
                          {"growth_c", growth_c},
                          {"threshold_p", threshold_p},
                          {"epsilons", epsilons},
                          {"lags", lags},
                          {"t_base", t_base},
                          {"dump_fields", dump_fields}};
  }
};

}  // namespace spde
