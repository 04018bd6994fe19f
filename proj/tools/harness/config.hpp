#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "admg/baseline_dag.hpp"
#include "admg/data.hpp"
#include "admg/gibbs.hpp"
#include "admg/graph.hpp"
#include "admg/variational.hpp"

namespace admg::harness {

/// Everything a command needs. Round-trips through JSON, so a manifest's
/// "config" object replays the run that wrote it.
struct RunConfig {
  std::string command;
  std::vector<std::string> graphs;
  std::string data;
  std::string test;
  std::string out;

  std::optional<std::uint64_t> seed;
  std::size_t iterations = 5000;
  std::size_t burn_in = 1000;
  std::size_t thin = 5;
  std::string mode = "sir";
  /// Proposal count; the default depends on the command (see proposals()).
  std::optional<std::size_t> m;
  std::size_t chains = 1;
  bool parallel = false;
  std::string order = "greedy";
  std::string engine = "gibbs";
  std::size_t folds = 0;
  std::size_t trials = 10;
  /// Draws for sample-giw.
  std::size_t n = 1000;

  double delta = 3.0;
  /// "data" (identity times the mean data variance), "identity", a number
  /// (that multiple of the identity) or a headered q x q CSV file.
  std::string prior_scale = "data";
  double b_mean = 0.0;
  double b_variance = 1.0;
  double intercept_variance = 100.0;
  bool intercepts = false;
  /// "parent->child=value" entries fixing coefficients.
  std::vector<std::string> fixed;

  std::size_t max_sweeps = 500;
  double tolerance = 1e-6;

  std::size_t proposals() const;
};

const std::vector<std::string>& command_names();

/// Range and consistency checks; throws ValidationError.
void validate(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);
/// Accepts either a bare config object or a manifest with a "config" member.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

Admg load_graph(const std::string& path);
Dataset load_data(const std::string& path, const Admg& g);
Priors make_priors(const RunConfig& config, const Admg& g, const Dataset* data);
GibbsConfig gibbs_config(const RunConfig& config);
VbConfig vb_config(const RunConfig& config);
BenchmarkConfig benchmark_config(const RunConfig& config);

nlohmann::json to_json(const BenchmarkReport& report);
BenchmarkReport report_from_json(const nlohmann::json& j);

}  // namespace admg::harness
