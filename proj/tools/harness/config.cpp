#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "admg/error.hpp"
#include "admg/giw.hpp"

namespace admg::harness {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class T>
void get(const nlohmann::json& j, const char* key, T& value) {
  if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(value);
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

bool is_sampling(const std::string& command) {
  return command == "sample-giw" || command == "normconst" || command == "score" || command == "fit" ||
         command == "benchmark" || command == "predict";
}

}  // namespace

std::size_t RunConfig::proposals() const {
  if (m) return *m;
  if (command == "normconst" || command == "score") return 10000;
  if (command == "fit" || command == "predict" || command == "benchmark") return engine == "vb" ? 200 : 50;
  return 50;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"sample-giw", "normconst", "score", "fit", "benchmark", "predict"};
  return names;
}

void validate(const RunConfig& c) {
  bool known = false;
  for (const auto& n : command_names()) known = known || n == c.command;
  if (!known) throw ValidationError("unknown command '" + c.command + "'");
  if (is_sampling(c.command) && !c.seed) throw ValidationError("--seed is required for " + c.command);
  if (c.command == "score") {
    if (c.graphs.empty()) throw ValidationError("score needs at least one candidate --graph");
  } else if (c.graphs.size() != 1) {
    throw ValidationError(c.command + " needs exactly one --graph");
  }
  const bool needs_data = c.command == "score" || c.command == "fit" || c.command == "benchmark" ||
                          c.command == "predict";
  if (needs_data && c.data.empty()) throw ValidationError(c.command + " needs --data");
  if (c.command == "predict" && c.test.empty()) throw ValidationError("predict needs --test");
  if (c.thin == 0) throw ValidationError("--thin must be at least 1");
  if (c.iterations > 0 && c.burn_in >= c.iterations) throw ValidationError("--burnin must be below --iterations");
  sampling_mode_from_string(c.mode);
  if (c.order != "given" && c.order != "greedy") {
    throw ValidationError("unknown order '" + c.order + "' (expected given or greedy)");
  }
  const bool all_ok = c.command == "fit" && c.folds > 0;
  if (c.engine != "gibbs" && c.engine != "vb" && c.engine != "dag-baseline" && !(all_ok && c.engine == "all")) {
    throw ValidationError("unknown engine '" + c.engine + "' (expected gibbs, vb or dag-baseline" +
                          std::string(all_ok ? ", or all" : "") + ")");
  }
  if (c.command == "benchmark" && c.engine != "gibbs") {
    throw ValidationError("benchmark always compares the gibbs and dag-baseline engines");
  }
  if (c.folds == 1) throw ValidationError("--folds must be 0 (no cross-validation) or at least 2");
  if (c.m && *c.m == 0) throw ValidationError("--m must be at least 1");
  if (c.n == 0) throw ValidationError("--n must be at least 1");
  if (c.chains == 0) throw ValidationError("--chains must be at least 1");
  if (c.trials == 0) throw ValidationError("--trials must be at least 1");
  if (!(c.delta > 0.0)) throw ValidationError("--delta must be positive");
  if (!(c.b_variance > 0.0) || !(c.intercept_variance > 0.0)) {
    throw ValidationError("prior variances must be positive");
  }
  if (!(c.tolerance >= 0.0)) throw ValidationError("--tolerance must be non-negative");
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["command"] = c.command;
  j["graphs"] = c.graphs;
  j["data"] = c.data;
  j["test"] = c.test;
  j["out"] = c.out;
  j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
  j["iterations"] = c.iterations;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["mode"] = c.mode;
  j["m"] = c.m ? nlohmann::json(*c.m) : nlohmann::json(nullptr);
  j["chains"] = c.chains;
  j["parallel"] = c.parallel;
  j["order"] = c.order;
  j["engine"] = c.engine;
  j["folds"] = c.folds;
  j["trials"] = c.trials;
  j["n"] = c.n;
  j["delta"] = c.delta;
  j["prior_scale"] = c.prior_scale;
  j["b_mean"] = c.b_mean;
  j["b_variance"] = c.b_variance;
  j["intercept_variance"] = c.intercept_variance;
  j["intercepts"] = c.intercepts;
  j["fixed"] = c.fixed;
  j["max_sweeps"] = c.max_sweeps;
  j["tolerance"] = c.tolerance;
  return j;
}

RunConfig config_from_json(const nlohmann::json& in) {
  const nlohmann::json& j = in.contains("config") ? in.at("config") : in;
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  RunConfig c;
  try {
    get(j, "command", c.command);
    get(j, "graphs", c.graphs);
    get(j, "data", c.data);
    get(j, "test", c.test);
    get(j, "out", c.out);
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    get(j, "iterations", c.iterations);
    get(j, "burn_in", c.burn_in);
    get(j, "thin", c.thin);
    get(j, "mode", c.mode);
    if (j.contains("m") && !j.at("m").is_null()) c.m = j.at("m").get<std::size_t>();
    get(j, "chains", c.chains);
    get(j, "parallel", c.parallel);
    get(j, "order", c.order);
    get(j, "engine", c.engine);
    get(j, "folds", c.folds);
    get(j, "trials", c.trials);
    get(j, "n", c.n);
    get(j, "delta", c.delta);
    get(j, "prior_scale", c.prior_scale);
    get(j, "b_mean", c.b_mean);
    get(j, "b_variance", c.b_variance);
    get(j, "intercept_variance", c.intercept_variance);
    get(j, "intercepts", c.intercepts);
    get(j, "fixed", c.fixed);
    get(j, "max_sweeps", c.max_sweeps);
    get(j, "tolerance", c.tolerance);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  try {
    return config_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("cannot parse '" + path + "': " + e.what());
  }
}

Admg load_graph(const std::string& path) {
  try {
    return Admg::parse(read_file(path));
  } catch (const GraphParseError& e) {
    throw GraphParseError(e.kind(), e.line(), path + ": " + e.what());
  }
}

Dataset load_data(const std::string& path, const Admg& g) { return bind(read_table(path), g); }

Priors make_priors(const RunConfig& c, const Admg& g, const Dataset* data) {
  const Index q = static_cast<Index>(g.size());
  Priors p;
  p.v.delta = c.delta;
  if (c.prior_scale == "identity") {
    p.v.scale = Matrix::Identity(q, q);
  } else if (c.prior_scale == "data") {
    double scale = 1.0;
    if (data != nullptr && data->size() > 1) {
      Matrix centered = data->values.rowwise() - data->values.colwise().mean();
      scale = (centered.colwise().squaredNorm() / static_cast<double>(data->size() - 1)).mean();
      if (!(scale > 0.0)) throw ValidationError("data have zero variance; pass --prior-scale");
    }
    p.v.scale = scale * Matrix::Identity(q, q);
  } else if (const auto v = parse_double(c.prior_scale)) {
    if (!(*v > 0.0)) throw ValidationError("--prior-scale multiple must be positive");
    p.v.scale = *v * Matrix::Identity(q, q);
  } else {
    const Table t = read_table(c.prior_scale);
    if (t.header != g.names() || t.values.rows() != q) {
      throw ValidationError("prior scale file must be a q x q table headed by the graph's node names");
    }
    p.v.scale = t.values;
  }
  validate(p.v, g.size());
  p.b.edge = {c.b_mean, c.b_variance, std::nullopt};
  p.b.intercept = {0.0, c.intercept_variance, std::nullopt};
  for (const std::string& spec : c.fixed) {
    const auto arrow = spec.find("->");
    const auto eq = spec.find('=');
    if (arrow == std::string::npos || eq == std::string::npos || eq < arrow) {
      throw ValidationError("--fix expects parent->child=value, got '" + spec + "'");
    }
    const NodeIndex parent = g.index_of(spec.substr(0, arrow));
    const NodeIndex child = g.index_of(spec.substr(arrow + 2, eq - arrow - 2));
    const auto value = parse_double(spec.substr(eq + 1));
    if (!value) throw ValidationError("--fix value is not a number in '" + spec + "'");
    if (!g.has_directed(parent, child)) throw ValidationError("--fix names a missing edge '" + spec + "'");
    p.b.overrides[{parent, child}] = {c.b_mean, c.b_variance, *value};
  }
  return p;
}

GibbsConfig gibbs_config(const RunConfig& c) {
  GibbsConfig g;
  g.iterations = c.iterations;
  g.burn_in = c.burn_in;
  g.thin = c.thin;
  g.mode = sampling_mode_from_string(c.mode);
  g.sir_draws = c.m.value_or(50);
  g.order = c.order == "given" ? OrderStrategy::kGiven : OrderStrategy::kGreedy;
  g.seed = c.seed.value_or(1);
  g.chains = c.chains;
  g.parallel = c.parallel;
  g.intercepts = c.intercepts;
  return g;
}

VbConfig vb_config(const RunConfig& c) {
  VbConfig v;
  v.max_sweeps = c.max_sweeps;
  v.tolerance = c.tolerance;
  v.pool_draws = c.m.value_or(200);
  v.seed = c.seed.value_or(1);
  v.intercepts = c.intercepts;
  return v;
}

BenchmarkConfig benchmark_config(const RunConfig& c) {
  BenchmarkConfig b;
  b.gibbs = gibbs_config(c);
  b.trials = c.trials;
  b.folds = c.folds == 0 ? 10 : c.folds;
  return b;
}

nlohmann::json to_json(const BenchmarkReport& r) {
  nlohmann::json j;
  j["nodes"] = r.nodes;
  j["ancillary_latents"] = r.ancillary_latents;
  j["iterations"] = r.iterations;
  j["trials"] = nlohmann::json::array();
  for (const BenchmarkTrial& t : r.trials) {
    j["trials"].push_back({{"seed", t.seed},
                           {"fold", t.fold},
                           {"admg_seconds", t.admg_seconds},
                           {"dag_seconds", t.dag_seconds},
                           {"admg_predictive", t.admg_predictive},
                           {"dag_predictive", t.dag_predictive}});
  }
  auto timing = [](const TimingSummary& s) {
    return nlohmann::json{{"mean", s.mean}, {"sd", s.sd}, {"per_iteration", s.per_iteration}};
  };
  j["admg"] = timing(r.admg);
  j["dag"] = timing(r.dag);
  j["wall_time_ratio"] = r.wall_time_ratio;
  j["inversions_per_iteration"] = {{"admg_regression_events", r.admg_regression_events},
                                   {"admg_completion_solves", r.admg_completion_solves},
                                   {"admg_coefficient_factorizations", r.admg_coefficient_factorizations},
                                   {"dag_factorizations", r.dag_factorizations}};
  j["predictive_test"] = {{"t", r.predictive_test.t},
                          {"p_value", r.predictive_test.p_value},
                          {"mean_difference", r.predictive_test.mean_difference},
                          {"dof", r.predictive_test.dof}};
  return j;
}

BenchmarkReport report_from_json(const nlohmann::json& j) {
  BenchmarkReport r;
  try {
    j.at("nodes").get_to(r.nodes);
    j.at("ancillary_latents").get_to(r.ancillary_latents);
    j.at("iterations").get_to(r.iterations);
    for (const auto& t : j.at("trials")) {
      BenchmarkTrial x;
      t.at("seed").get_to(x.seed);
      t.at("fold").get_to(x.fold);
      t.at("admg_seconds").get_to(x.admg_seconds);
      t.at("dag_seconds").get_to(x.dag_seconds);
      t.at("admg_predictive").get_to(x.admg_predictive);
      t.at("dag_predictive").get_to(x.dag_predictive);
      r.trials.push_back(x);
    }
    auto timing = [](const nlohmann::json& s) {
      return TimingSummary{s.at("mean").get<double>(), s.at("sd").get<double>(), s.at("per_iteration").get<double>()};
    };
    r.admg = timing(j.at("admg"));
    r.dag = timing(j.at("dag"));
    j.at("wall_time_ratio").get_to(r.wall_time_ratio);
    const auto& inv = j.at("inversions_per_iteration");
    inv.at("admg_regression_events").get_to(r.admg_regression_events);
    inv.at("admg_completion_solves").get_to(r.admg_completion_solves);
    inv.at("admg_coefficient_factorizations").get_to(r.admg_coefficient_factorizations);
    inv.at("dag_factorizations").get_to(r.dag_factorizations);
    const auto& pt = j.at("predictive_test");
    pt.at("t").get_to(r.predictive_test.t);
    pt.at("p_value").get_to(r.predictive_test.p_value);
    pt.at("mean_difference").get_to(r.predictive_test.mean_difference);
    pt.at("dof").get_to(r.predictive_test.dof);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad benchmark report: ") + e.what());
  }
  return r;
}

}  // namespace admg::harness
