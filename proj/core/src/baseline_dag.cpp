#include "admg/baseline_dag.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "admg/error.hpp"
#include "admg/linalg.hpp"

namespace admg {

AncillaryDag to_ancillary_dag(const Admg& g) {
  AncillaryDag out;
  out.original_nodes = g.size();
  std::vector<std::string> names;
  std::vector<bool> latent;
  std::set<std::string> taken;
  for (NodeIndex i = 0; i < g.size(); ++i) {
    names.push_back(g.name(i));
    latent.push_back(g.is_latent(i));
    taken.insert(g.name(i));
  }
  std::vector<Edge> directed = g.directed_edges();
  for (const auto& [a, b] : g.bidirected_edges()) {
    std::string name = "anc_" + g.name(a) + "_" + g.name(b);
    while (taken.count(name) > 0) name += "_";
    taken.insert(name);
    AncillaryLatent anc;
    anc.latent = names.size();
    anc.original = {a, b};
    const bool a_first = g.name(a) < g.name(b);
    anc.fixed_child = a_first ? a : b;
    anc.free_child = a_first ? b : a;
    names.push_back(name);
    latent.push_back(true);
    directed.push_back({anc.latent, a});
    directed.push_back({anc.latent, b});
    out.ancillary.push_back(anc);
  }
  out.dag = Admg(names, latent, directed, {});
  return out;
}

BPrior AncillaryDag::coefficient_prior(const BPrior& base) const {
  BPrior p = base;
  for (const AncillaryLatent& a : ancillary) {
    CoefficientPrior fixed = base.edge;
    fixed.fixed = 1.0;
    p.overrides[{a.latent, a.fixed_child}] = fixed;
  }
  return p;
}

DagPriors dag_priors(const AncillaryDag& dag, const Priors& priors) {
  validate(priors.v, dag.original_nodes);
  DagPriors out;
  out.b = dag.coefficient_prior(priors.b);
  const Index n = static_cast<Index>(dag.dag.size());
  const double q = static_cast<double>(dag.original_nodes);
  out.shape = Vector::Constant(n, 0.5 * (priors.v.delta + 2.0 * q) - 1.0);
  out.rate.resize(n);
  for (Index i = 0; i < static_cast<Index>(dag.original_nodes); ++i) out.rate(i) = 0.5 * priors.v.scale(i, i);
  for (const AncillaryLatent& a : dag.ancillary) {
    out.rate(Index(a.latent)) = 0.5 * priors.v.scale(Index(a.fixed_child), Index(a.fixed_child));
  }
  return out;
}

DagGibbsSampler::DagGibbsSampler(const AncillaryDag& dag, DagPriors priors, const Dataset& data, GibbsConfig config)
    : dag_(dag), priors_(std::move(priors)), config_(std::move(config)), layout_(dag_.dag, priors_.b, config_.intercepts) {
  validate(config_);
  const Index n = static_cast<Index>(dag_.dag.size());
  if (priors_.shape.size() != n || priors_.rate.size() != n) {
    throw ValidationError("variance prior has the wrong dimension");
  }
  if ((priors_.shape.array() <= 0.0).any() || (priors_.rate.array() <= 0.0).any()) {
    throw ValidationError("inverse-gamma prior parameters must be positive");
  }
  observed_nodes_ = dag_.dag.observed_nodes();
  latent_nodes_ = dag_.dag.latent_nodes();
  if (data.nodes != observed_nodes_) throw ValidationError("dataset is not bound to this graph's observed nodes");
  observed_ = data.values;
  offset_ = Vector::Zero(n);
  if (!config_.intercepts && observed_.rows() > 0) {
    const Vector means = data.column_means();
    observed_.rowwise() -= means.transpose();
    for (std::size_t c = 0; c < observed_nodes_.size(); ++c) offset_(Index(observed_nodes_[c])) = means(Index(c));
  }
}

DagChainState DagGibbsSampler::initial_state(std::uint64_t chain) const {
  DagChainState s;
  s.rng = RngStream(mix_seed(config_.seed, chain));
  s.beta = layout_.prior_means();
  s.v = priors_.rate.array() / (priors_.shape.array() + 1.0);
  s.latents = Matrix::Zero(observed_.rows(), static_cast<Index>(latent_nodes_.size()));
  return s;
}

Matrix DagGibbsSampler::completed(const DagChainState& state) const {
  const Index q = static_cast<Index>(dag_.dag.size());
  Matrix z(observed_.rows(), q + 1);
  for (std::size_t c = 0; c < observed_nodes_.size(); ++c) z.col(Index(observed_nodes_[c])) = observed_.col(Index(c));
  for (std::size_t c = 0; c < latent_nodes_.size(); ++c) z.col(Index(latent_nodes_[c])) = state.latents.col(Index(c));
  z.col(q).setOnes();
  return z;
}

void DagGibbsSampler::sample_latents(DagChainState& state) const {
  if (latent_nodes_.empty() || observed_.rows() == 0) return;
  const Index d = observed_.rows();
  Matrix z = completed(state);
  // Rows of A = [I - B, -mu]: residuals are z A^T.
  const Matrix a = layout_.augmented(state.beta);
  for (std::size_t c = 0; c < latent_nodes_.size(); ++c) {
    const Index l = static_cast<Index>(latent_nodes_[c]);
    // The blanket: own equation plus those of the children.
    double precision = 1.0 / state.v(l);
    Vector linear = -(z * a.row(l).transpose() - z.col(l)) / state.v(l);
    for (NodeIndex child : dag_.dag.children(NodeIndex(l))) {
      const Index ch = static_cast<Index>(child);
      const double b = -a(ch, l);
      precision += b * b / state.v(ch);
      const Vector rest = z * a.row(ch).transpose() + b * z.col(l);
      linear += b * rest / state.v(ch);
    }
    const double sd = std::sqrt(1.0 / precision);
    for (Index r = 0; r < d; ++r) z(r, l) = linear(r) / precision + sd * state.rng.normal();
    state.latents.col(Index(c)) = z.col(l);
  }
}

void DagGibbsSampler::sample_v(DagChainState& state, const Matrix& m) const {
  const Matrix a = layout_.augmented(state.beta);
  const double d = static_cast<double>(observed_.rows());
  for (Index i = 0; i < state.v.size(); ++i) {
    const double rss = a.row(i) * m * a.row(i).transpose();
    state.v(i) = state.rng.inv_gamma(priors_.shape(i) + 0.5 * d, priors_.rate(i) + 0.5 * std::max(rss, 0.0));
  }
}

void DagGibbsSampler::sample_b(DagChainState& state, const Matrix& m) const {
  const Matrix w = state.v.cwiseInverse().asDiagonal();
  for (const auto& block : layout_.blocks()) {
    const GaussianConditional c = coefficient_conditional(layout_, block, w, m, state.beta);
    const auto llt = cholesky_or_throw(c.precision, "coefficient conditional precision");
    Vector z(static_cast<Index>(block.size()));
    for (Index i = 0; i < z.size(); ++i) z(i) = state.rng.normal();
    const Vector draw = mvn_canonical_from_normals(llt, c.linear, z);
    for (std::size_t k = 0; k < block.size(); ++k) state.beta(Index(block[k])) = draw(Index(k));
  }
}

void DagGibbsSampler::step(DagChainState& state) const {
  sample_latents(state);
  const Matrix z = completed(state);
  Matrix m = Matrix::Zero(z.cols(), z.cols());
  m.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
  const Matrix moments = m.selfadjointView<Eigen::Lower>();
  sample_v(state, moments);
  sample_b(state, moments);
  ++state.iteration;
}

Theta DagGibbsSampler::theta(const DagChainState& state) const {
  Theta t = layout_.theta(state.beta, Matrix(state.v.asDiagonal()));
  if (!layout_.has_intercepts()) {
    const Index q = static_cast<Index>(dag_.dag.size());
    t.mean += (Matrix::Identity(q, q) - t.B) * offset_;
  }
  return t;
}

std::vector<std::string> DagGibbsSampler::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < layout_.free_count(); ++k) names.push_back(layout_.name(k, dag_.dag));
  for (NodeIndex i = 0; i < dag_.dag.size(); ++i) names.push_back("v[" + dag_.dag.name(i) + "]");
  return names;
}

Vector DagGibbsSampler::parameter_values(const DagChainState& state) const {
  const Theta t = theta(state);
  Vector out(static_cast<Index>(layout_.free_count()) + state.v.size());
  out << layout_.free_values(t), state.v;
  return out;
}

DagGibbsResult run_dag_gibbs(const AncillaryDag& dag, const DagPriors& priors, const Dataset& data,
                             const GibbsConfig& config) {
  const DagGibbsSampler sampler(dag, priors, data, config);
  DagGibbsResult out;
  out.names = sampler.parameter_names();
  out.factorizations_per_iteration = sampler.factorizations_per_iteration();
  std::vector<Vector> rows;
  for (std::size_t c = 0; c < config.chains; ++c) {
    DagChainState s = sampler.initial_state(c);
    for (std::size_t t = 1; t <= config.iterations; ++t) {
      const auto start = std::chrono::steady_clock::now();
      sampler.step(s);
      out.iteration_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      if (t > config.burn_in && (t - config.burn_in) % config.thin == 0) {
        rows.push_back(sampler.parameter_values(s));
        out.samples.push_back(sampler.theta(s));
      }
    }
  }
  out.trace.resize(static_cast<Index>(rows.size()), static_cast<Index>(out.names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out.trace.row(Index(r)) = rows[r].transpose();
  return out;
}

void validate(const BenchmarkConfig& config) {
  validate(config.gibbs);
  if (config.trials == 0) throw ValidationError("benchmark needs at least one trial");
  if (config.folds < 2) throw ValidationError("benchmark needs at least two folds");
}

namespace {

double total_seconds(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

}  // namespace

BenchmarkReport benchmark_compare(const Admg& g, const Priors& priors, const Dataset& data,
                                  const BenchmarkConfig& config) {
  validate(config);
  if (data.size() < config.folds) throw ValidationError("fewer observations than folds");
  const AncillaryDag dag = to_ancillary_dag(g);
  const DagPriors dp = dag_priors(dag, priors);
  const auto folds = fold_indices(data.size(), config.folds);
  BenchmarkReport report;
  report.nodes = g.size();
  report.ancillary_latents = dag.ancillary.size();
  report.iterations = config.gibbs.iterations;
  double solves = 0.0;
  for (std::size_t t = 0; t < config.trials; ++t) {
    GibbsConfig gc = config.gibbs;
    gc.seed = config.gibbs.seed + t;
    BenchmarkTrial trial;
    trial.seed = gc.seed;
    trial.fold = t % config.folds;
    const Dataset train = data.rows(complement(folds, trial.fold));
    const Dataset test = data.rows(folds[trial.fold]);

    const GibbsResult admg = run_gibbs(g, priors, train, gc);
    trial.admg_seconds = total_seconds(admg.iteration_seconds);
    trial.admg_predictive = predictive_loglik(g, admg.samples, test);
    solves += admg.completion_solves_per_iteration;
    report.admg_regression_events = admg.profile.regression_events;

    const DagGibbsResult base = run_dag_gibbs(dag, dp, train, gc);
    trial.dag_seconds = total_seconds(base.iteration_seconds);
    trial.dag_predictive = predictive_loglik(dag.dag, base.samples, test);
    report.dag_factorizations = base.factorizations_per_iteration;
    report.trials.push_back(trial);
  }
  report.admg_completion_solves = solves / static_cast<double>(config.trials);
  report.admg_coefficient_factorizations = CoefficientLayout(g, priors.b, config.gibbs.intercepts).blocks().size();
  summarize(report);
  return report;
}

void summarize(BenchmarkReport& report) {
  std::vector<double> as, ds, ap, dp;
  for (const BenchmarkTrial& t : report.trials) {
    as.push_back(t.admg_seconds);
    ds.push_back(t.dag_seconds);
    ap.push_back(t.admg_predictive);
    dp.push_back(t.dag_predictive);
  }
  auto timing = [&](const std::vector<double>& xs) {
    TimingSummary s;
    if (xs.empty()) return s;
    s.mean = mean(xs);
    s.sd = xs.size() > 1 ? standard_deviation(xs) : 0.0;
    s.per_iteration = report.iterations > 0 ? s.mean / static_cast<double>(report.iterations) : 0.0;
    return s;
  };
  report.admg = timing(as);
  report.dag = timing(ds);
  report.wall_time_ratio = report.dag.mean > 0.0 ? report.admg.mean / report.dag.mean : 0.0;
  report.predictive_test = ap.size() > 1 ? paired_t_test(ap, dp) : TTestResult{};
}

std::string format_report(const BenchmarkReport& r) {
  std::ostringstream os;
  char buf[256];
  os << "ADMG vs ancillary-latent DAG Gibbs\n";
  std::snprintf(buf, sizeof buf, "nodes %zu, ancillary latents %zu, iterations %zu, trials %zu\n", r.nodes,
                r.ancillary_latents, r.iterations, r.trials.size());
  os << buf;
  os << "\n  trial      seed  fold   admg_s    dag_s   admg_pll    dag_pll\n";
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    const BenchmarkTrial& t = r.trials[i];
    std::snprintf(buf, sizeof buf, "  %5zu %9llu %5zu %8.3f %8.3f %10.5f %10.5f\n", i,
                  static_cast<unsigned long long>(t.seed), t.fold, t.admg_seconds, t.dag_seconds, t.admg_predictive,
                  t.dag_predictive);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "\nwall time  admg %.3f s (sd %.3f)  dag %.3f s (sd %.3f)  ratio admg/dag %.3f\n",
                r.admg.mean, r.admg.sd, r.dag.mean, r.dag.sd, r.wall_time_ratio);
  os << buf;
  std::snprintf(buf, sizeof buf, "per iteration  admg %.3g s  dag %.3g s\n", r.admg.per_iteration,
                r.dag.per_iteration);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "inversions per iteration  admg: %zu regression events, %.2f completion solves, %zu coefficient "
                "blocks  dag: %zu coefficient blocks\n",
                r.admg_regression_events, r.admg_completion_solves, r.admg_coefficient_factorizations,
                r.dag_factorizations);
  os << buf;
  std::snprintf(buf, sizeof buf, "predictive log-likelihood admg - dag: mean %.5f, t = %.3f, dof %zu, p = %.4f\n",
                r.predictive_test.mean_difference, r.predictive_test.t, r.predictive_test.dof,
                r.predictive_test.p_value);
  os << buf;
  return os.str();
}

}  // namespace admg
