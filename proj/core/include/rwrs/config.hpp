#pragma once

#include <string>
#include <vector>

#include "rwrs/harness.hpp"

namespace rwrs {

enum class RunKind {
  kQuenchedRenewal,
  kQuenchedPlanar,
  kQuenchedTransient,
  kIntersections,
  kGrowth,
};

std::string to_string(RunKind kind);

// Parsed and validated run configuration. Configs are JSON documents with
// sections scenery / walk / experiment / execution; unknown keys anywhere are
// rejected so typos surface as config errors, not silent defaults.
struct RunConfig {
  RunKind kind = RunKind::kQuenchedRenewal;
  QuenchedExperimentSpec quenched;
  IntersectionSuiteSpec intersections;
  GrowthSuiteSpec growth;
  std::string output_dir = "out";

  const IncrementLaw& walk_law() const;
  int threads() const;
  void set_threads(int threads);
};

// Overrides are `dotted.path=value` strings applied to the JSON document
// before validation; the path must already exist (same typo protection as
// strict keys).
RunConfig parse_config_string(const std::string& text,
                              const std::vector<std::string>& overrides = {});
RunConfig parse_config_file(const std::string& path,
                            const std::vector<std::string>& overrides = {});

// True when the configured walk law satisfies the hypotheses of the
// experiment the config requests.
bool config_admissible(const RunConfig& config);

// Dispatch to the matching harness runner.
ExperimentReport execute(const RunConfig& config);

}  // namespace rwrs
