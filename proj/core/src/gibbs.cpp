#include "admg/gibbs.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <thread>

#include "admg/error.hpp"
#include "admg/stats.hpp"

namespace admg {

void validate(const GibbsConfig& config) {
  if (config.thin == 0) throw ValidationError("thinning interval must be at least 1");
  if (config.chains == 0) throw ValidationError("at least one chain is required");
  if (config.mode == SamplingMode::kSir && config.sir_draws == 0) {
    throw ValidationError("resampling needs at least one proposal draw");
  }
}

GibbsSampler::GibbsSampler(const Admg& g, Priors priors, const Dataset& data, GibbsConfig config)
    : graph_(g),
      priors_(std::move(priors)),
      config_(std::move(config)),
      layout_(g, priors_.b, config_.intercepts) {
  validate(config_);
  validate(priors_.v, g.size());
  bartlett_ = make_layout(g, choose_order(g, config_.order, config_.given_order));
  observed_nodes_ = g.observed_nodes();
  latent_nodes_ = g.latent_nodes();
  if (data.nodes != observed_nodes_) throw ValidationError("dataset is not bound to this graph's observed nodes");
  observed_ = data.values;
  offset_ = Vector::Zero(static_cast<Index>(g.size()));
  if (!config_.intercepts && observed_.rows() > 0) {
    const Vector means = data.column_means();
    observed_.rowwise() -= means.transpose();
    for (std::size_t c = 0; c < observed_nodes_.size(); ++c) offset_(Index(observed_nodes_[c])) = means(Index(c));
  }
  if (latent_nodes_.empty()) {
    ChainState empty;
    fixed_moments_ = moments(empty);
  }
}

ChainState GibbsSampler::initial_state(std::uint64_t chain) const {
  const Index q = static_cast<Index>(graph_.size());
  ChainState s;
  s.rng = RngStream(mix_seed(config_.seed, chain));
  s.beta = layout_.prior_means();
  Matrix v = priors_.v.scale / (priors_.v.delta + 2.0 * static_cast<double>(q));
  for (Index i = 0; i < q; ++i) {
    for (Index j = 0; j < q; ++j) {
      if (i != j && !graph_.has_bidirected(NodeIndex(i), NodeIndex(j))) v(i, j) = 0.0;
    }
  }
  double load = 1e-3 * v.diagonal().mean();
  while (!is_positive_definite(v)) {
    v.diagonal().array() += load;
    load *= 2.0;
  }
  s.v = v;
  s.precision = spd_inverse(cholesky_or_throw(v, "initial error covariance"));
  s.latents = Matrix::Zero(observed_.rows(), static_cast<Index>(latent_nodes_.size()));
  return s;
}

Matrix GibbsSampler::moments(const ChainState& state) const {
  if (fixed_moments_) return *fixed_moments_;
  const Index q = static_cast<Index>(graph_.size());
  Matrix z(observed_.rows(), q + 1);
  for (std::size_t c = 0; c < observed_nodes_.size(); ++c) z.col(Index(observed_nodes_[c])) = observed_.col(Index(c));
  for (std::size_t c = 0; c < latent_nodes_.size(); ++c) {
    z.col(Index(latent_nodes_[c])) = state.latents.col(Index(c));
  }
  z.col(q).setOnes();
  Matrix m = Matrix::Zero(q + 1, q + 1);
  m.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
  return m.selfadjointView<Eigen::Lower>();
}

void GibbsSampler::sample_latents(ChainState& state) const {
  if (latent_nodes_.empty() || observed_.rows() == 0) return;
  const Index q = static_cast<Index>(graph_.size());
  const Theta t = layout_.theta(state.beta, state.v);
  const Matrix ib = Matrix::Identity(q, q) - t.B;
  const Matrix omega = ib.transpose() * state.precision * ib;
  const IndexList lat(latent_nodes_.begin(), latent_nodes_.end());
  const IndexList obs(observed_nodes_.begin(), observed_nodes_.end());
  const Vector mu = implied_mean(t);
  const auto llt = cholesky_or_throw(Matrix(omega(lat, lat)), "latent conditional precision");
  const Matrix gain = llt.solve(Matrix(omega(lat, obs)));  // Omega_LL^-1 Omega_LO
  const Index d = observed_.rows();
  const Index nl = static_cast<Index>(lat.size());
  Matrix centered = observed_;
  centered.rowwise() -= mu(obs).transpose();
  Matrix mean = -centered * gain.transpose();
  mean.rowwise() += mu(lat).transpose();
  Matrix z(nl, d);
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c < nl; ++c) z(c, r) = state.rng.normal();
  }
  state.latents = mean + llt.matrixU().solve(z).transpose();
}

void GibbsSampler::sample_v(ChainState& state) const { sample_v(state, moments(state)); }

void GibbsSampler::sample_v(ChainState& state, const Matrix& m) const {
  const Matrix a = layout_.augmented(state.beta);
  const Matrix scatter = symmetrize(a * m * a.transpose());
  const GiwParams post = posterior_params(priors_.v, scatter, static_cast<double>(observed_.rows()));
  const GiwSampler sampler(bartlett_, post);
  SirDraw draw = draw_covariance(sampler, config_.mode, config_.sir_draws, state.rng);
  const std::size_t draws = config_.mode == SamplingMode::kSir ? config_.sir_draws : 1;
  state.precision = precision_from_composition(draw.sample.composition, draw.sample.phi.gammas, *bartlett_);
  state.v = std::move(draw.sample.sigma);
  state.last_ess = draw.ess;
  state.last_degenerate = draw.degenerate;
  state.last_completion_solves = draws * draw.sample.composition.completion_solves;
}

void GibbsSampler::sample_b(ChainState& state) const { sample_b(state, moments(state)); }

void GibbsSampler::sample_b(ChainState& state, const Matrix& m) const {
  for (const auto& block : layout_.blocks()) {
    const GaussianConditional cond = coefficient_conditional(layout_, block, state.precision, m, state.beta);
    const auto llt = cholesky_or_throw(cond.precision, "coefficient conditional precision");
    Vector z(cond.linear.size());
    for (Index i = 0; i < z.size(); ++i) z(i) = state.rng.normal();
    const Vector draw = mvn_canonical_from_normals(llt, cond.linear, z);
    for (std::size_t k = 0; k < block.size(); ++k) state.beta(Index(block[k])) = draw(Index(k));
  }
}

void GibbsSampler::step(ChainState& state) const {
  sample_latents(state);
  const Matrix m = moments(state);
  sample_v(state, m);
  sample_b(state, m);
  ++state.iteration;
}

Theta GibbsSampler::theta(const ChainState& state) const {
  Theta t = layout_.theta(state.beta, state.v);
  if (!config_.intercepts) {
    const Index q = t.B.rows();
    t.mean += (Matrix::Identity(q, q) - t.B) * offset_;
  }
  return t;
}

std::vector<std::string> GibbsSampler::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < layout_.free_count(); ++k) names.push_back(layout_.name(k, graph_));
  for (NodeIndex i = 0; i < graph_.size(); ++i) names.push_back("v[" + graph_.name(i) + "]");
  for (const auto& [a, b] : graph_.bidirected_edges()) {
    names.push_back("v[" + graph_.name(a) + "<->" + graph_.name(b) + "]");
  }
  return names;
}

Vector GibbsSampler::parameter_values(const ChainState& state) const {
  const std::size_t nb = layout_.free_count();
  const std::size_t q = graph_.size();
  Vector out(static_cast<Index>(nb + q + graph_.bidirected_edges().size()));
  out.head(static_cast<Index>(nb)) = state.beta;
  for (std::size_t i = 0; i < q; ++i) out(Index(nb + i)) = state.v(Index(i), Index(i));
  std::size_t k = nb + q;
  for (const auto& [a, b] : graph_.bidirected_edges()) out(Index(k++)) = state.v(Index(a), Index(b));
  return out;
}

namespace {

struct ChainOutput {
  std::vector<Vector> rows;
  std::vector<std::size_t> iterations;
  std::vector<Theta> samples;
  std::vector<double> seconds;
  double ess_sum = 0.0;
  std::size_t degenerate = 0;
  std::size_t solves = 0;
};

ChainOutput run_chain(const GibbsSampler& sampler, std::uint64_t chain) {
  const GibbsConfig& cfg = sampler.config();
  ChainOutput out;
  ChainState state = sampler.initial_state(chain);
  out.seconds.reserve(cfg.iterations);
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    const auto start = std::chrono::steady_clock::now();
    sampler.step(state);
    out.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    out.ess_sum += state.last_ess;
    out.degenerate += state.last_degenerate;
    out.solves += state.last_completion_solves;
    if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0) {
      out.rows.push_back(sampler.parameter_values(state));
      out.iterations.push_back(t);
      out.samples.push_back(sampler.theta(state));
    }
  }
  return out;
}

}  // namespace

GibbsResult run_gibbs(const Admg& g, const Priors& priors, const Dataset& data, const GibbsConfig& config) {
  const GibbsSampler sampler(g, priors, data, config);
  GibbsResult result;
  result.names = sampler.parameter_names();
  result.order = sampler.order();
  result.profile = inversion_profile(g, result.order);

  std::vector<ChainOutput> chains(config.chains);
  if (config.parallel && config.chains > 1) {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(config.chains);
    for (std::size_t c = 0; c < config.chains; ++c) {
      workers.emplace_back([&, c] {
        try {
          chains[c] = run_chain(sampler, c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t c = 0; c < config.chains; ++c) chains[c] = run_chain(sampler, c);
  }

  std::size_t total = 0;
  for (const auto& c : chains) total += c.rows.size();
  const Index width = static_cast<Index>(result.names.size());
  result.trace.resize(static_cast<Index>(total), width);
  result.running_mean.resize(static_cast<Index>(total), width);
  std::size_t row = 0;
  double ess_sum = 0.0;
  std::size_t solves = 0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    Vector acc = Vector::Zero(width);
    for (std::size_t r = 0; r < chains[c].rows.size(); ++r, ++row) {
      result.trace.row(Index(row)) = chains[c].rows[r].transpose();
      acc += chains[c].rows[r];
      result.running_mean.row(Index(row)) = (acc / static_cast<double>(r + 1)).transpose();
      result.chain_of_row.push_back(c);
      result.iteration_of_row.push_back(chains[c].iterations[r]);
    }
    result.samples.insert(result.samples.end(), chains[c].samples.begin(), chains[c].samples.end());
    result.iteration_seconds.insert(result.iteration_seconds.end(), chains[c].seconds.begin(), chains[c].seconds.end());
    ess_sum += chains[c].ess_sum;
    solves += chains[c].solves;
    result.degenerate_steps += chains[c].degenerate;
  }
  const double steps = static_cast<double>(config.iterations * config.chains);
  if (steps > 0) {
    result.mean_ess = ess_sum / steps;
    result.completion_solves_per_iteration = static_cast<double>(solves) / steps;
  }
  return result;
}

Vector predictive_loglik_rows(const Admg& g, std::span<const Theta> samples, const Dataset& test) {
  if (samples.empty()) throw ValidationError("predictive log-likelihood needs at least one posterior sample");
  const IndexList obs(test.nodes.begin(), test.nodes.end());
  const Index n = test.values.rows();
  const Index k = static_cast<Index>(obs.size());
  if (static_cast<std::size_t>(samples.front().B.rows()) != g.size()) {
    throw ValidationError("posterior samples do not match the graph");
  }
  Matrix lp(n, static_cast<Index>(samples.size()));
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Matrix sigma = implied_covariance(samples[s]);
    const Vector mu = implied_mean(samples[s]);
    const auto llt = cholesky_or_throw(Matrix(sigma(obs, obs)), "implied observed covariance");
    const double half_log_det = 0.5 * log_det(llt);
    Matrix centered = test.values;
    centered.rowwise() -= mu(obs).transpose();
    const Matrix white = llt.matrixL().solve(centered.transpose());
    for (Index r = 0; r < n; ++r) {
      lp(r, Index(s)) = -0.5 * static_cast<double>(k) * log_2pi - half_log_det - 0.5 * white.col(r).squaredNorm();
    }
  }
  Vector out(n);
  std::vector<double> row(samples.size());
  for (Index r = 0; r < n; ++r) {
    for (std::size_t s = 0; s < samples.size(); ++s) row[s] = lp(r, Index(s));
    out(r) = log_mean_exp(row);
  }
  return out;
}

double predictive_loglik(const Admg& g, std::span<const Theta> samples, const Dataset& test) {
  const Vector rows = predictive_loglik_rows(g, samples, test);
  return rows.size() ? rows.mean() : 0.0;
}

}  // namespace admg
