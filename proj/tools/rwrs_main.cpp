// rwrs: config-driven Monte Carlo experiments on random walks in random
// scenery. Subcommands: validate, run, gamma, intersections.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rwrs/config.hpp"
#include "rwrs/errors.hpp"
#include "rwrs/harness.hpp"
#include "rwrs/limits.hpp"
#include "rwrs/parallel.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCriteriaFailed = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitResourceError = 3;

int env_threads() {
  const char* env = std::getenv("RWRS_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  return std::atoi(env);
}

int resolve_threads(int flag_threads, int config_threads) {
  if (flag_threads > 0) return flag_threads;
  int env = env_threads();
  if (env > 0) return env;
  return config_threads;
}

void print_criteria(const rwrs::ExperimentReport& report) {
  for (const rwrs::CriterionResult& c : report.criteria) {
    std::printf("%s %s: observed=%.6g, %s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.observed, c.detail.c_str(), c.low_power ? " [low-power]" : "");
  }
  if (report.underpowered) {
    std::printf("WARNING underpowered: M below the configured minimum, results are indicative "
                "only\n");
  }
}

int run_command(const std::string& config_path, const std::vector<std::string>& overrides,
                int flag_threads, const std::string& output_override, bool suites_only) {
  rwrs::RunConfig config = rwrs::parse_config_file(config_path, overrides);
  if (suites_only && config.kind != rwrs::RunKind::kIntersections &&
      config.kind != rwrs::RunKind::kGrowth) {
    throw rwrs::UsageError("'intersections' runs suite configs only; this config requests " +
                           rwrs::to_string(config.kind) + " (use 'run')");
  }
  config.set_threads(rwrs::resolve_thread_count(resolve_threads(flag_threads, config.threads())));
  if (!output_override.empty()) config.output_dir = output_override;

  rwrs::ExperimentReport report = rwrs::execute(config);
  rwrs::write_report_files(report, config.output_dir);
  print_criteria(report);
  std::printf("report written to %s (%.1fs)\n", config.output_dir.c_str(), report.wall_seconds);

  if (report.underpowered) return kExitPass;  // flagged, not failed
  return report.all_passed() ? kExitPass : kExitCriteriaFailed;
}

int validate_command(const std::string& config_path) {
  rwrs::RunConfig config = rwrs::parse_config_file(config_path);
  const rwrs::IncrementLaw& law = config.walk_law();

  std::printf("law: %s\n", rwrs::describe(law).c_str());
  std::vector<rwrs::HypothesisViolation> violations = rwrs::validate(law);
  for (rwrs::Theorem t :
       {rwrs::Theorem::kRenewal, rwrs::Theorem::kPlanar, rwrs::Theorem::kTransient}) {
    bool ok = rwrs::admissible(law, t);
    std::printf("  %-10s %s\n", rwrs::to_string(t).c_str(), ok ? "admissible" : "blocked");
    for (const rwrs::HypothesisViolation& v : violations) {
      if (!v.blocks.has_value() || *v.blocks == t) {
        std::printf("             - %s\n", v.message.c_str());
      }
    }
  }
  bool ok = rwrs::config_admissible(config);
  std::printf("experiment %s: %s\n", rwrs::to_string(config.kind).c_str(),
              ok ? "admissible" : "not admissible");
  return ok ? kExitPass : kExitCriteriaFailed;
}

rwrs::IncrementLaw law_from_flags(const std::string& walk, int dim, double alpha,
                                  const std::vector<std::int64_t>& support,
                                  const std::vector<double>& probs) {
  if (walk == "simple") return rwrs::SimpleWalk{dim};
  if (walk == "stable_tail") return rwrs::StableTail{dim, alpha};
  if (walk == "renewal_finite") {
    rwrs::RenewalFinite law;
    law.support = support;
    if (probs.empty()) {
      law.probs.assign(support.size(), 1.0 / static_cast<double>(support.size()));
    } else {
      law.probs = probs;
    }
    return law;
  }
  throw rwrs::UsageError("--walk must be simple, stable_tail or renewal_finite");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments on random walks in random scenery"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  int threads = 0;
  std::string output_dir;

  CLI::App* validate = app.add_subcommand("validate", "check a config's walk law hypotheses");
  validate->add_option("--config", config_path, "config file (JSON)")->required();

  CLI::App* run = app.add_subcommand("run", "run the configured experiment and write reports");
  run->add_option("--config", config_path, "config file (JSON)")->required();
  run->add_option("--override", overrides, "dotted.path=value (repeatable)");
  run->add_option("--threads", threads, "worker threads (default: RWRS_THREADS or config)");
  run->add_option("--output", output_dir, "output directory (overrides config)");

  CLI::App* inter = app.add_subcommand("intersections", "run a suite config (alias of run)");
  inter->add_option("--config", config_path, "suite config file (JSON)")->required();
  inter->add_option("--override", overrides, "dotted.path=value (repeatable)");
  inter->add_option("--threads", threads, "worker threads");
  inter->add_option("--output", output_dir, "output directory (overrides config)");

  CLI::App* gamma = app.add_subcommand("gamma", "estimate the escape probability of a walk");
  std::string walk_kind = "simple";
  int dim = 3;
  double alpha = 0.8;
  std::vector<std::int64_t> support;
  std::vector<double> probs;
  std::int64_t horizon = 100000;
  std::int64_t samples = 10000;
  std::uint64_t seed = 1;
  bool doubling = false;
  gamma->add_option("--walk", walk_kind, "simple | stable_tail | renewal_finite");
  gamma->add_option("--dim", dim, "lattice dimension");
  gamma->add_option("--alpha", alpha, "stable tail index");
  gamma->add_option("--support", support, "renewal support steps");
  gamma->add_option("--probs", probs, "renewal step probabilities");
  gamma->add_option("--horizon", horizon, "survival horizon T")->required();
  gamma->add_option("--samples", samples, "Monte Carlo paths M")->required();
  gamma->add_option("--seed", seed, "master seed");
  gamma->add_flag("--double", doubling, "rerun at 2T and report the stability delta");
  gamma->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfigError;
  }

  try {
    if (validate->parsed()) return validate_command(config_path);
    if (run->parsed()) return run_command(config_path, overrides, threads, output_dir, false);
    if (inter->parsed()) return run_command(config_path, overrides, threads, output_dir, true);
    if (gamma->parsed()) {
      rwrs::WalkModel model(law_from_flags(walk_kind, dim, alpha, support, probs));
      int t = rwrs::resolve_thread_count(resolve_threads(threads, 0));
      rwrs::RngStream stream = rwrs::RngStream(seed).child(0x52);
      if (doubling) {
        rwrs::GammaConvergence c =
            rwrs::estimate_gamma_with_doubling(model, horizon, samples, stream, t);
        std::printf("%s\n", c.to_json().c_str());
      } else {
        rwrs::GammaEstimate e = rwrs::estimate_gamma(model, horizon, samples, stream, t);
        std::printf("%s\n", e.to_json().c_str());
      }
      return kExitPass;
    }
  } catch (const rwrs::ResourceError& e) {
    std::fprintf(stderr, "resource error: %s\n", e.what());
    return kExitResourceError;
  } catch (const rwrs::UsageError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const rwrs::DomainError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCriteriaFailed;
  }
  return kExitConfigError;
}
