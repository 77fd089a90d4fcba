#include "rwrs/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rwrs/errors.hpp"

namespace rwrs {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_keys(const ordered_json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw UsageError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      std::string known;
      for (const char* a : allowed) known += std::string(known.empty() ? "" : ", ") + a;
      throw UsageError("unknown key '" + key + "' in section '" + section + "' (known keys: " +
                       known + ")");
    }
  }
}

const ordered_json& require_key(const ordered_json& obj, const std::string& section,
                                const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw UsageError("missing required key '" + std::string(key) + "' in section '" + section +
                     "'");
  }
  return *it;
}

template <class T>
T require_as(const ordered_json& obj, const std::string& section, const char* key) {
  try {
    return require_key(obj, section, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("key '" + std::string(key) + "' in section '" + section +
                     "' has the wrong type: " + e.what());
  }
}

template <class T>
T get_or(const ordered_json& obj, const std::string& section, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("key '" + std::string(key) + "' in section '" + section +
                     "' has the wrong type: " + e.what());
  }
}

IncrementLaw parse_walk(const ordered_json& walk) {
  std::string variant = require_as<std::string>(walk, "walk", "variant");
  if (variant == "renewal_finite") {
    check_keys(walk, "walk", {"variant", "support", "probs"});
    RenewalFinite law;
    law.support = require_as<std::vector<std::int64_t>>(walk, "walk", "support");
    law.probs = require_as<std::vector<double>>(walk, "walk", "probs");
    return law;
  }
  if (variant == "simple") {
    check_keys(walk, "walk", {"variant", "dim"});
    SimpleWalk law;
    law.dim = require_as<int>(walk, "walk", "dim");
    return law;
  }
  if (variant == "finite_step_symmetric") {
    check_keys(walk, "walk", {"variant", "dim", "steps", "probs"});
    FiniteStepSymmetric law;
    law.dim = require_as<int>(walk, "walk", "dim");
    auto steps = require_as<std::vector<std::vector<std::int64_t>>>(walk, "walk", "steps");
    for (const auto& s : steps) {
      if (static_cast<int>(s.size()) != law.dim) {
        throw UsageError("walk.steps: every step needs exactly dim=" + std::to_string(law.dim) +
                         " coordinates");
      }
      law.steps.push_back(make_site(s));
    }
    law.probs = require_as<std::vector<double>>(walk, "walk", "probs");
    return law;
  }
  if (variant == "stable_tail") {
    check_keys(walk, "walk", {"variant", "dim", "alpha"});
    StableTail law;
    law.dim = require_as<int>(walk, "walk", "dim");
    law.alpha = require_as<double>(walk, "walk", "alpha");
    return law;
  }
  throw UsageError("unknown walk variant '" + variant +
                   "' (expected renewal_finite, simple, finite_step_symmetric or stable_tail)");
}

Tolerances parse_tolerances(const ordered_json& obj) {
  Tolerances t;
  if (obj.is_null()) return t;
  check_keys(obj, "experiment.tolerances",
             {"variance_rel", "fourth_moment_rel", "ks_p_min", "ks_min_pass_seeds",
              "planar_band_lo", "planar_band_hi", "half_time_rel", "min_power_samples",
              "mean_rel_tol", "slope_max", "trend_band_lo", "trend_band_hi",
              "growth_ratio_bound", "stabilization_min_fraction"});
  t.variance_rel = get_or(obj, "tolerances", "variance_rel", t.variance_rel);
  t.fourth_moment_rel = get_or(obj, "tolerances", "fourth_moment_rel", t.fourth_moment_rel);
  t.ks_p_min = get_or(obj, "tolerances", "ks_p_min", t.ks_p_min);
  t.ks_min_pass_seeds = get_or(obj, "tolerances", "ks_min_pass_seeds", t.ks_min_pass_seeds);
  t.planar_band_lo = get_or(obj, "tolerances", "planar_band_lo", t.planar_band_lo);
  t.planar_band_hi = get_or(obj, "tolerances", "planar_band_hi", t.planar_band_hi);
  t.half_time_rel = get_or(obj, "tolerances", "half_time_rel", t.half_time_rel);
  t.min_power_samples = get_or(obj, "tolerances", "min_power_samples", t.min_power_samples);
  t.mean_rel_tol = get_or(obj, "tolerances", "mean_rel_tol", t.mean_rel_tol);
  t.slope_max = get_or(obj, "tolerances", "slope_max", t.slope_max);
  t.trend_band_lo = get_or(obj, "tolerances", "trend_band_lo", t.trend_band_lo);
  t.trend_band_hi = get_or(obj, "tolerances", "trend_band_hi", t.trend_band_hi);
  t.growth_ratio_bound = get_or(obj, "tolerances", "growth_ratio_bound", t.growth_ratio_bound);
  t.stabilization_min_fraction =
      get_or(obj, "tolerances", "stabilization_min_fraction", t.stabilization_min_fraction);
  return t;
}

void apply_override(ordered_json& root, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw UsageError("override '" + kv + "' is not of the form dotted.path=value");
  }
  std::string path = kv.substr(0, eq);
  std::string raw = kv.substr(eq + 1);

  ordered_json* node = &root;
  std::size_t begin = 0;
  std::vector<std::string> parts;
  while (begin <= path.size()) {
    std::size_t dot = path.find('.', begin);
    parts.push_back(path.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin));
    if (dot == std::string::npos) break;
    begin = dot + 1;
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i])) {
      throw UsageError("override path '" + path + "': section '" + parts[i] + "' does not exist");
    }
    node = &(*node)[parts[i]];
  }
  const std::string& leaf = parts.back();
  if (!node->is_object() || !node->contains(leaf)) {
    throw UsageError("override path '" + path + "': key '" + leaf + "' does not exist");
  }

  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;  // bare strings need no quotes
  }
  ordered_json& old = (*node)[leaf];
  const bool both_numbers = old.is_number() && value.is_number();
  if (!both_numbers && old.type() != value.type()) {
    throw UsageError("override '" + kv + "' changes the type of '" + path + "'");
  }
  old = value;
}

}  // namespace

std::string to_string(RunKind kind) {
  switch (kind) {
    case RunKind::kQuenchedRenewal: return "quenched_renewal";
    case RunKind::kQuenchedPlanar: return "quenched_planar";
    case RunKind::kQuenchedTransient: return "quenched_transient";
    case RunKind::kIntersections: return "intersection_suite";
    case RunKind::kGrowth: return "growth_suite";
  }
  return "unknown";
}

const IncrementLaw& RunConfig::walk_law() const {
  switch (kind) {
    case RunKind::kIntersections: return intersections.law;
    case RunKind::kGrowth: return growth.law;
    default: return quenched.walk;
  }
}

int RunConfig::threads() const {
  switch (kind) {
    case RunKind::kIntersections: return intersections.threads;
    case RunKind::kGrowth: return growth.threads;
    default: return quenched.threads;
  }
}

void RunConfig::set_threads(int threads) {
  quenched.threads = threads;
  intersections.threads = threads;
  growth.threads = threads;
}

RunConfig parse_config_string(const std::string& text,
                              const std::vector<std::string>& overrides) {
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("config parse error: ") + e.what());
  }
  for (const std::string& kv : overrides) apply_override(root, kv);

  check_keys(root, "(top level)", {"scenery", "walk", "experiment", "execution"});
  const ordered_json& experiment = require_key(root, "(top level)", "experiment");
  const ordered_json& walk = require_key(root, "(top level)", "walk");

  RunConfig config;
  IncrementLaw law = parse_walk(walk);

  // execution
  int threads = 0;
  std::uint64_t master_seed = 1;
  if (root.contains("execution")) {
    const ordered_json& exec = root["execution"];
    check_keys(exec, "execution", {"threads", "master_seed", "output_dir"});
    threads = get_or(exec, "execution", "threads", 0);
    master_seed = get_or<std::uint64_t>(exec, "execution", "master_seed", 1);
    config.output_dir = get_or<std::string>(exec, "execution", "output_dir", "out");
  }

  const bool is_suite = experiment.contains("suite");
  if (is_suite) {
    if (root.contains("scenery")) {
      throw UsageError("suite experiments take no scenery section (they involve walks only)");
    }
    check_keys(experiment, "experiment", {"suite", "horizons", "M", "tolerances"});
    std::string suite = require_as<std::string>(experiment, "experiment", "suite");
    auto horizons = require_as<std::vector<std::int64_t>>(experiment, "experiment", "horizons");
    auto replicas = require_as<std::int64_t>(experiment, "experiment", "M");
    Tolerances tol = parse_tolerances(experiment.contains("tolerances") ? experiment["tolerances"]
                                                                        : ordered_json());
    if (suite == "intersections") {
      config.kind = RunKind::kIntersections;
      config.intersections.law = law;
      config.intersections.horizons = horizons;
      config.intersections.replicas = replicas;
      config.intersections.master_seed = master_seed;
      config.intersections.threads = threads;
      config.intersections.tol = tol;
    } else if (suite == "growth") {
      config.kind = RunKind::kGrowth;
      config.growth.law = law;
      config.growth.horizons = horizons;
      config.growth.pairs = replicas;
      config.growth.master_seed = master_seed;
      config.growth.threads = threads;
      config.growth.tol = tol;
    } else {
      throw UsageError("unknown suite '" + suite + "' (expected intersections or growth)");
    }
    return config;
  }

  // quenched experiment
  std::string theorem = require_as<std::string>(experiment, "experiment", "theorem");
  QuenchedExperimentSpec& spec = config.quenched;
  spec.walk = law;
  spec.master_seed = master_seed;
  spec.threads = threads;

  const ordered_json& scenery = require_key(root, "(top level)", "scenery");
  check_keys(scenery, "scenery", {"law", "seeds", "dim"});
  spec.scenery_law =
      scenery_law_from_string(require_as<std::string>(scenery, "scenery", "law"));
  spec.scenery_seeds = require_as<std::vector<std::uint64_t>>(scenery, "scenery", "seeds");
  int scenery_dim = get_or(scenery, "scenery", "dim", dimension(law));
  if (scenery_dim != dimension(law)) {
    throw UsageError("scenery.dim=" + std::to_string(scenery_dim) +
                     " does not match the walk dimension " + std::to_string(dimension(law)));
  }

  if (theorem == "renewal") {
    check_keys(experiment, "experiment", {"theorem", "n", "M", "moment_order", "tolerances"});
    config.kind = RunKind::kQuenchedRenewal;
    spec.theorem = Theorem::kRenewal;
  } else if (theorem == "planar") {
    check_keys(experiment, "experiment",
               {"theorem", "n", "M", "moment_order", "nu", "schedule_max_m", "tolerances"});
    config.kind = RunKind::kQuenchedPlanar;
    spec.theorem = Theorem::kPlanar;
    spec.nu = get_or(experiment, "experiment", "nu", 1.0);
    spec.schedule_max_m = get_or(experiment, "experiment", "schedule_max_m", 3);
  } else if (theorem == "transient") {
    check_keys(experiment, "experiment",
               {"theorem", "n", "M", "time_grid", "moment_order", "gamma", "gamma_override",
                "tolerances"});
    config.kind = RunKind::kQuenchedTransient;
    spec.theorem = Theorem::kTransient;
    spec.time_grid = get_or(experiment, "experiment", "time_grid", std::vector<double>{});
    if (experiment.contains("gamma_override")) {
      spec.gamma_override = require_as<double>(experiment, "experiment", "gamma_override");
    }
    if (experiment.contains("gamma")) {
      const ordered_json& gamma = experiment["gamma"];
      check_keys(gamma, "experiment.gamma", {"T", "M"});
      spec.gamma_horizon = require_as<std::int64_t>(gamma, "experiment.gamma", "T");
      spec.gamma_samples = require_as<std::int64_t>(gamma, "experiment.gamma", "M");
    }
  } else {
    throw UsageError("unknown theorem '" + theorem +
                     "' (expected renewal, planar or transient)");
  }

  spec.horizon = require_as<std::int64_t>(experiment, "experiment", "n");
  spec.samples = require_as<std::int64_t>(experiment, "experiment", "M");
  spec.moment_order = get_or(experiment, "experiment", "moment_order", 4);
  spec.tol = parse_tolerances(experiment.contains("tolerances") ? experiment["tolerances"]
                                                                : ordered_json());
  return config;
}

RunConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_string(buf.str(), overrides);
}

bool config_admissible(const RunConfig& config) {
  const IncrementLaw& law = config.walk_law();
  switch (config.kind) {
    case RunKind::kQuenchedRenewal: return admissible(law, Theorem::kRenewal);
    case RunKind::kQuenchedPlanar: return admissible(law, Theorem::kPlanar);
    case RunKind::kQuenchedTransient: return admissible(law, Theorem::kTransient);
    case RunKind::kIntersections:
      return is_renewal(law) ? admissible(law, Theorem::kRenewal)
                             : admissible(law, Theorem::kPlanar);
    case RunKind::kGrowth:
      return !is_renewal(law) &&
             (admissible(law, Theorem::kTransient) || admissible(law, Theorem::kPlanar));
  }
  return false;
}

ExperimentReport execute(const RunConfig& config) {
  switch (config.kind) {
    case RunKind::kQuenchedRenewal: return run_quenched_renewal(config.quenched);
    case RunKind::kQuenchedPlanar: return run_quenched_planar(config.quenched);
    case RunKind::kQuenchedTransient: return run_quenched_transient(config.quenched);
    case RunKind::kIntersections: return run_intersection_suite(config.intersections);
    case RunKind::kGrowth: return run_growth_suite(config.growth);
  }
  throw UsageError("unhandled run kind");
}

}  // namespace rwrs
