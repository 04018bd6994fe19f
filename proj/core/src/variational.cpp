#include "admg/variational.hpp"

#include <cmath>
#include <numbers>

#include "admg/error.hpp"
#include "admg/stats.hpp"

namespace admg {

Matrix expected_precision(const Admg& g, const GiwParams& params, std::size_t m, const RngStream& rng,
                          const SamplingOrder& order) {
  if (m == 0) throw ValidationError("expected precision needs at least one draw");
  const GiwSampler sampler(g, params, order);
  std::vector<double> lw(m);
  std::vector<Matrix> precisions(m);
  for (std::size_t s = 0; s < m; ++s) {
    RngStream r = rng.split(s);
    const WeightedSample w = sampler.draw(r);
    lw[s] = w.log_weight;
    precisions[s] = precision_from_composition(w.composition, w.phi.gammas, *sampler.layout());
  }
  const std::vector<double> nw = normalized_weights(lw);
  Matrix out = Matrix::Zero(precisions[0].rows(), precisions[0].cols());
  for (std::size_t s = 0; s < m; ++s) out += nw[s] * precisions[s];
  return symmetrize(out);
}

namespace {

Admg induced_covariance_graph(const Admg& g, const std::vector<NodeIndex>& nodes) {
  std::vector<std::string> names;
  for (NodeIndex n : nodes) names.push_back(g.name(n));
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      if (g.has_bidirected(nodes[a], nodes[b])) edges.push_back({a, b});
    }
  }
  return Admg(names, std::vector<bool>(nodes.size(), false), {}, edges);
}

}  // namespace

VPool::VPool(const Admg& g, double delta, const Matrix& reference, std::size_t m, const RngStream& rng)
    : q_(g.size()) {
  const auto parts = districts(g);
  for (std::size_t b = 0; b < parts.size(); ++b) {
    District d;
    d.nodes.assign(parts[b].begin(), parts[b].end());
    d.graph = induced_covariance_graph(g, parts[b]);
    const std::size_t qb = parts[b].size();
    d.complete = d.graph.bidirected_edges().size() == qb * (qb - 1) / 2;
    d.delta = delta + 2.0 * static_cast<double>(q_ - qb);
    d.reference = reference(d.nodes, d.nodes);
    if (!d.complete && m > 0) {
      const GiwSampler sampler(d.graph, {d.delta, d.reference}, choose_order(d.graph, OrderStrategy::kGreedy));
      d.log_iw_reference = log_iw_norm_const(d.delta, d.reference);
      const RngStream stream = rng.split(b);
      for (std::size_t s = 0; s < m; ++s) {
        RngStream r = stream.split(s);
        WeightedSample w = sampler.draw(r);
        d.log_weights.push_back(w.log_weight);
        d.precisions.push_back(precision_from_composition(w.composition, w.phi.gammas, *sampler.layout()));
        d.covariances.push_back(std::move(w.sigma));
      }
    }
    districts_.push_back(std::move(d));
  }
}

VPool::Evaluation VPool::evaluate(const Matrix& scale) const {
  const Index q = static_cast<Index>(q_);
  Evaluation ev;
  ev.expected_precision = Matrix::Zero(q, q);
  ev.expected_covariance = Matrix::Zero(q, q);
  ev.min_ess = std::numeric_limits<double>::infinity();
  for (const District& d : districts_) {
    const Matrix kb = scale(d.nodes, d.nodes);
    const double qb = static_cast<double>(d.nodes.size());
    if (d.complete) {
      const auto llt = cholesky_or_throw(kb, "variational scale block");
      ev.log_norm += log_iw_norm_const(d.delta, kb);
      const Matrix inv = spd_inverse(llt);
      ev.expected_precision(d.nodes, d.nodes) = (d.delta + qb - 1.0) * inv;
      if (d.delta > 2.0) {
        ev.expected_covariance(d.nodes, d.nodes) = kb / (d.delta - 2.0);
      } else {
        ev.expected_covariance(d.nodes, d.nodes).setConstant(std::numeric_limits<double>::infinity());
      }
      continue;
    }
    if (d.log_weights.empty()) throw ValidationError("draw pool is empty");
    const Matrix shift = kb - d.reference;
    std::vector<double> a(d.log_weights.size());
    for (std::size_t s = 0; s < a.size(); ++s) a[s] = d.log_weights[s] - 0.5 * d.precisions[s].cwiseProduct(shift).sum();
    ev.log_norm += d.log_iw_reference + log_mean_exp(a);
    const std::vector<double> w = normalized_weights(a);
    Matrix p = Matrix::Zero(kb.rows(), kb.cols());
    Matrix c = Matrix::Zero(kb.rows(), kb.cols());
    for (std::size_t s = 0; s < w.size(); ++s) {
      p += w[s] * d.precisions[s];
      c += w[s] * d.covariances[s];
    }
    ev.expected_precision(d.nodes, d.nodes) = symmetrize(p);
    ev.expected_covariance(d.nodes, d.nodes) = symmetrize(c);
    ev.min_ess = std::min(ev.min_ess, effective_sample_size(a));
  }
  return ev;
}

Matrix VPool::draw(const Matrix& scale, std::size_t m, RngStream& rng) const {
  const Index q = static_cast<Index>(q_);
  Matrix v = Matrix::Zero(q, q);
  for (const District& d : districts_) {
    const GiwSampler sampler(d.graph, {d.delta, scale(d.nodes, d.nodes)},
                             choose_order(d.graph, OrderStrategy::kGreedy));
    if (d.complete) {
      v(d.nodes, d.nodes) = sampler.draw(rng).sigma;
    } else {
      v(d.nodes, d.nodes) = resample(sampler, std::max<std::size_t>(m, 1), rng).sample.sigma;
    }
  }
  return v;
}

void validate(const VbConfig& config) {
  if (config.pool_draws == 0) throw ValidationError("the variational draw pool needs at least one draw");
  if (config.prior_draws == 0) throw ValidationError("the prior normalizing constant needs at least one draw");
  if (!(config.tolerance >= 0.0)) throw ValidationError("tolerance must be non-negative");
}

VariationalModel::VariationalModel(const Admg& g, Priors priors, const Dataset& data, VbConfig config)
    : graph_(g), priors_(std::move(priors)), config_(std::move(config)), layout_(g, priors_.b, config_.intercepts) {
  validate(config_);
  validate(priors_.v, g.size());
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
  const VPool prior(g, priors_.v.delta, priors_.v.scale, config_.prior_draws, RngStream(config_.seed).split(0));
  prior_log_norm_ = prior.evaluate(priors_.v.scale).log_norm;
}

double VariationalModel::posterior_delta() const {
  return priors_.v.delta + static_cast<double>(observed_.rows());
}

VariationalState VariationalModel::initial_state() const {
  VariationalState s;
  s.b_mean = layout_.prior_means();
  s.b_cov = layout_.prior_precisions().cwiseInverse().asDiagonal();
  const Index nl = static_cast<Index>(latent_nodes_.size());
  s.x_mean = Matrix::Zero(observed_.rows(), nl);
  s.x_cov = Matrix::Identity(nl, nl);
  s.q_v = {posterior_delta(), priors_.v.scale + expected_scatter(s)};
  return s;
}

VPool VariationalModel::make_pool(const VariationalState& state, std::uint64_t index) const {
  return VPool(graph_, state.q_v.delta, state.q_v.scale, config_.pool_draws, RngStream(config_.seed).split(1 + index));
}

Matrix VariationalModel::expected_moments(const VariationalState& state) const {
  const Index q = static_cast<Index>(graph_.size());
  Matrix z(observed_.rows(), q + 1);
  for (std::size_t c = 0; c < observed_nodes_.size(); ++c) z.col(Index(observed_nodes_[c])) = observed_.col(Index(c));
  const IndexList lat(latent_nodes_.begin(), latent_nodes_.end());
  for (std::size_t c = 0; c < lat.size(); ++c) z.col(lat[c]) = state.x_mean.col(Index(c));
  z.col(q).setOnes();
  Matrix m = z.transpose() * z;
  if (!lat.empty()) m(lat, lat) += static_cast<double>(observed_.rows()) * state.x_cov;
  return symmetrize(m);
}

Matrix VariationalModel::expected_scatter(const VariationalState& state) const {
  return expected_residual_scatter(layout_, state.b_mean, state.b_cov, expected_moments(state));
}

void VariationalModel::update_qx(VariationalState& state, const VPool& pool) const {
  if (latent_nodes_.empty()) return;
  const Index q = static_cast<Index>(graph_.size());
  const Matrix w = pool.evaluate(state.q_v.scale).expected_precision;
  const Matrix a = layout_.augmented(state.b_mean);
  // E_B[A^T W A]
  Matrix qm = a.transpose() * w * a;
  for (std::size_t k = 0; k < layout_.free_count(); ++k) {
    const Coefficient& ck = layout_.free_coefficient(k);
    const Index jk = ck.is_intercept() ? q : static_cast<Index>(ck.parent);
    for (std::size_t l = 0; l < layout_.free_count(); ++l) {
      const double c = state.b_cov(Index(k), Index(l));
      if (c == 0.0) continue;
      const Coefficient& cl = layout_.free_coefficient(l);
      const Index jl = cl.is_intercept() ? q : static_cast<Index>(cl.parent);
      qm(jk, jl) += c * w(Index(ck.child), Index(cl.child));
    }
  }
  const IndexList lat(latent_nodes_.begin(), latent_nodes_.end());
  const IndexList obs(observed_nodes_.begin(), observed_nodes_.end());
  const auto llt = cholesky_or_throw(Matrix(qm(lat, lat)), "latent variational precision");
  state.x_cov = spd_inverse(llt);
  Matrix lin = observed_ * qm(obs, lat);
  lin.rowwise() += qm.row(q)(lat);
  state.x_mean = -llt.solve(lin.transpose()).transpose();
}

void VariationalModel::update_qb(VariationalState& state, const VPool& pool) const {
  if (layout_.free_count() == 0) return;
  const Matrix w = pool.evaluate(state.q_v.scale).expected_precision;
  const Matrix m = expected_moments(state);
  Matrix cov = Matrix::Zero(state.b_cov.rows(), state.b_cov.cols());
  Vector mean = state.b_mean;
  for (const auto& block : layout_.blocks()) {
    const GaussianConditional c = coefficient_conditional(layout_, block, w, m, state.b_mean);
    const auto llt = cholesky_or_throw(c.precision, "coefficient variational precision");
    const Vector mu = llt.solve(c.linear);
    const Matrix s = spd_inverse(llt);
    for (std::size_t a = 0; a < block.size(); ++a) {
      mean(Index(block[a])) = mu(Index(a));
      for (std::size_t b = 0; b < block.size(); ++b) cov(Index(block[a]), Index(block[b])) = s(Index(a), Index(b));
    }
  }
  state.b_mean = mean;
  state.b_cov = cov;
}

void VariationalModel::update_qv(VariationalState& state) const {
  state.q_v = {posterior_delta(), symmetrize(priors_.v.scale + expected_scatter(state))};
}

double VariationalModel::compute_bound(const VariationalState& state, const VPool& pool) const {
  const double d = static_cast<double>(observed_.rows());
  const double q = static_cast<double>(graph_.size());
  const VPool::Evaluation ev = pool.evaluate(state.q_v.scale);
  const Matrix resid = priors_.v.scale + expected_scatter(state) - state.q_v.scale;
  double bound = -0.5 * d * q * std::log(2.0 * std::numbers::pi) + ev.log_norm - prior_log_norm_ -
                 0.5 * ev.expected_precision.cwiseProduct(resid).sum();
  const std::size_t n = layout_.free_count();
  if (n > 0) {
    const Vector p0 = layout_.prior_precisions();
    const Vector m0 = layout_.prior_means();
    const auto llt = cholesky_or_throw(state.b_cov, "coefficient variational covariance");
    const Vector diff = state.b_mean - m0;
    const double kl = 0.5 * (p0.dot(state.b_cov.diagonal()) + diff.dot(p0.cwiseProduct(diff)) -
                             static_cast<double>(n) - p0.array().log().sum() - log_det(llt));
    bound -= kl;
  }
  if (!latent_nodes_.empty() && d > 0) {
    const auto llt = cholesky_or_throw(state.x_cov, "latent variational covariance");
    const double nl = static_cast<double>(latent_nodes_.size());
    bound += d * (0.5 * nl * (1.0 + std::log(2.0 * std::numbers::pi)) + 0.5 * log_det(llt));
  }
  return bound;
}

std::vector<std::string> VariationalModel::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < layout_.free_count(); ++k) names.push_back(layout_.name(k, graph_));
  for (NodeIndex i = 0; i < graph_.size(); ++i) names.push_back("v[" + graph_.name(i) + "]");
  for (const auto& [a, b] : graph_.bidirected_edges()) {
    names.push_back("v[" + graph_.name(a) + "<->" + graph_.name(b) + "]");
  }
  return names;
}

Vector VariationalModel::parameter_means(const VariationalState& state, const VPool& pool) const {
  const Matrix ev = pool.evaluate(state.q_v.scale).expected_covariance;
  const std::size_t nb = layout_.free_count();
  const std::size_t q = graph_.size();
  Vector out(static_cast<Index>(nb + q + graph_.bidirected_edges().size()));
  out.head(static_cast<Index>(nb)) = state.b_mean;
  for (std::size_t i = 0; i < q; ++i) out(Index(nb + i)) = ev(Index(i), Index(i));
  std::size_t k = nb + q;
  for (const auto& [a, b] : graph_.bidirected_edges()) out(Index(k++)) = ev(Index(a), Index(b));
  return out;
}

VbResult run_vb(const VariationalModel& model) {
  const VbConfig& cfg = model.config();
  VbResult out;
  out.names = model.parameter_names();
  VariationalState state = model.initial_state();
  auto sweep = [&](const VPool& pool) {
    model.update_qx(state, pool);
    model.update_qb(state, pool);
    model.update_qv(state);
    return model.compute_bound(state, pool);
  };
  std::size_t done = 0;
  for (; done < std::min(cfg.warmup_sweeps, cfg.max_sweeps); ++done) {
    const VPool pool = model.make_pool(state, done);
    state.warmup_history.push_back(sweep(pool));
  }
  const VPool frozen = model.make_pool(state, cfg.warmup_sweeps);
  double previous = model.compute_bound(state, frozen);
  for (; done < cfg.max_sweeps; ++done) {
    const double bound = sweep(frozen);
    state.bound_history.push_back(bound);
    if (bound < previous - 10.0 * cfg.tolerance) {
      throw NumericalError("variational bound decreased from " + format_number(previous) + " to " +
                           format_number(bound));
    }
    const bool small = bound - previous < cfg.tolerance;
    previous = bound;
    if (small) {
      out.converged = true;
      ++done;
      break;
    }
  }
  out.sweeps = done;
  out.means = model.parameter_means(state, frozen);
  out.state = std::move(state);
  return out;
}

VbResult run_vb(const Admg& g, const Priors& priors, const Dataset& data, const VbConfig& config) {
  return run_vb(VariationalModel(g, priors, data, config));
}

std::vector<Theta> vb_draw_thetas(const VariationalModel& model, const VariationalState& state, std::size_t draws,
                                  const RngStream& rng) {
  const CoefficientLayout& layout = model.coefficients();
  const VPool structure(model.graph(), state.q_v.delta, state.q_v.scale, 0, rng);
  std::optional<Eigen::LLT<Matrix>> b_llt;
  if (layout.free_count() > 0) b_llt = cholesky_or_throw(state.b_cov, "coefficient variational covariance");
  const Index q = static_cast<Index>(model.graph().size());
  std::vector<Theta> out;
  for (std::size_t s = 0; s < draws; ++s) {
    RngStream r = rng.split(s);
    Vector beta = state.b_mean;
    if (b_llt) {
      Vector z(beta.size());
      for (Index i = 0; i < z.size(); ++i) z(i) = r.normal();
      beta = mvn_from_normals(state.b_mean, *b_llt, z);
    }
    const Matrix v = structure.draw(state.q_v.scale, 50, r);
    Theta t = layout.theta(beta, v);
    if (!layout.has_intercepts()) t.mean += (Matrix::Identity(q, q) - t.B) * model.offset();
    out.push_back(std::move(t));
  }
  return out;
}

double vb_predictive_loglik(const VariationalModel& model, const VariationalState& state, const Dataset& test,
                            std::size_t draws, const RngStream& rng) {
  const std::vector<Theta> thetas = vb_draw_thetas(model, state, draws, rng);
  return predictive_loglik(model.graph(), thetas, test);
}

}  // namespace admg
