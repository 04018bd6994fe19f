#include "admg/giw.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "admg/error.hpp"
#include "admg/stats.hpp"

namespace admg {

void validate(const GiwParams& params, std::size_t q) {
  if (!(params.delta > 0.0) || !std::isfinite(params.delta)) {
    throw ValidationError("G-IW degrees of freedom must be positive");
  }
  if (static_cast<std::size_t>(params.scale.rows()) != q || params.scale.rows() != params.scale.cols()) {
    throw ValidationError("G-IW scale matrix has the wrong dimension");
  }
  if (!is_positive_definite(params.scale)) throw ValidationError("G-IW scale matrix is not positive definite");
}

const char* to_string(SamplingMode mode) { return mode == SamplingMode::kFaithful ? "faithful" : "sir"; }

SamplingMode sampling_mode_from_string(const std::string& s) {
  if (s == "faithful") return SamplingMode::kFaithful;
  if (s == "sir") return SamplingMode::kSir;
  throw ValidationError("unknown sampling mode '" + s + "' (expected faithful or sir)");
}

GiwSampler::GiwSampler(const Admg& g, GiwParams params, const SamplingOrder& order)
    : GiwSampler(make_layout(g, order.size() == 0 ? SamplingOrder::identity(g.size()) : order),
                 std::move(params)) {}

GiwSampler::GiwSampler(std::shared_ptr<const BartlettLayout> layout, GiwParams params)
    : layout_(std::move(layout)), params_(std::move(params)) {
  const std::size_t q = layout_->size();
  validate(params_, q);
  const Matrix u = permute_symmetric(params_.scale, layout_->permutation());
  steps_.resize(q);
  for (std::size_t kk = 0; kk < q; ++kk) {
    const Index k = static_cast<Index>(kk);
    Step& st = steps_[kk];
    st.shape = 0.5 * (params_.delta + static_cast<double>(k));
    if (k == 0) {
      st.rate = 0.5 * u(0, 0);
      continue;
    }
    const auto llt = cholesky_or_throw(u.topLeftCorner(k, k), "scale sub-matrix");
    st.mean = llt.solve(u.col(k).head(k));
    st.rate = 0.5 * (u(k, k) - u.col(k).head(k).dot(st.mean));
    const auto& sp = layout_->spouses(kk);
    const auto& nsp = layout_->non_spouses(kk);
    if (!sp.empty()) {
      Matrix e = Matrix::Zero(k, static_cast<Index>(sp.size()));
      for (std::size_t s = 0; s < sp.size(); ++s) e(sp[s], static_cast<Index>(s)) = 1.0;
      const Matrix inv_cols = llt.solve(e);
      st.spouse_cov = cholesky_or_throw(Matrix(inv_cols(sp, Eigen::all)), "spouse marginal covariance");
    }
    if (!nsp.empty()) {
      st.nsp_precision = u(nsp, nsp);
      const auto nllt = cholesky_or_throw(st.nsp_precision, "non-spouse scale block");
      st.nsp_log_det = log_det(nllt);
      if (!sp.empty()) st.nsp_from_sp = nllt.solve(Matrix(u(nsp, sp)));
    }
  }
}

WeightedSample GiwSampler::draw(RngStream& rng) const {
  const BartlettLayout& layout = *layout_;
  const std::size_t q = layout.size();
  const Index qi = static_cast<Index>(q);
  WeightedSample out;
  out.phi.layout = layout_;
  out.phi.gammas.resize(qi);
  out.phi.coeffs.resize(q);
  Composition& comp = out.composition;
  comp.sigma = Matrix::Zero(qi, qi);
  comp.coefficients = Matrix::Zero(qi, qi);
  comp.schur_log_det = Vector::Zero(qi);

  double log_gamma_prefix = 0.0;
  for (std::size_t kk = 0; kk < q; ++kk) {
    const Index k = static_cast<Index>(kk);
    const Step& st = steps_[kk];
    const double gamma = rng.inv_gamma(st.shape, st.rate);
    const double log_gamma = std::log(gamma);
    out.phi.gammas(k) = gamma;
    const auto& sp = layout.spouses(kk);
    const auto& nsp = layout.non_spouses(kk);
    const double exponent = static_cast<double>(layout.later_spouses(kk)) - static_cast<double>(q - 1 - kk);
    out.log_weight_spouse_count += exponent * log_gamma;

    Vector row = Vector::Zero(k);
    Vector free(static_cast<Index>(sp.size()));
    if (!sp.empty()) {
      Vector z(static_cast<Index>(sp.size()));
      for (Index s = 0; s < z.size(); ++s) z(s) = rng.normal();
      free = st.mean(sp) + std::sqrt(gamma) * Vector(st.spouse_cov->matrixL() * z);
      row(sp) = free;
    }
    if (!nsp.empty()) {
      double log_det_nsp = log_gamma_prefix;
      if (!sp.empty()) {
        const auto llt = cholesky_or_throw(comp.sigma(nsp, nsp), "sampled non-spouse block");
        row(nsp) = -llt.solve(comp.sigma(nsp, sp) * free);
        log_det_nsp = log_det(llt);
        ++comp.completion_solves;
      }
      // Density of the completed non-spouse coefficients under the
      // conditional Normal of the full Bartlett row given the free part.
      Vector resid = row(nsp) - st.mean(nsp);
      if (!sp.empty()) resid += st.nsp_from_sp * (free - st.mean(sp));
      const double dim = static_cast<double>(nsp.size());
      const double log_f = -0.5 * dim * std::log(2.0 * std::numbers::pi * gamma) + 0.5 * st.nsp_log_det -
                           0.5 * resid.dot(st.nsp_precision * resid) / gamma;
      out.log_weight += log_f - log_det_nsp;
      out.log_weight_spouse_count += log_f;
      if (!sp.empty()) comp.schur_log_det(k) = log_gamma_prefix - log_det_nsp;
    } else if (!sp.empty()) {
      comp.schur_log_det(k) = log_gamma_prefix;
    }
    out.phi.coeffs[kk] = std::move(free);

    if (k > 0) {
      Vector cross = comp.sigma.topLeftCorner(k, k) * row;
      cross(nsp).setZero();
      comp.sigma.block(k, 0, 1, k) = cross.transpose();
      comp.sigma.block(0, k, k, 1) = cross;
      comp.sigma(k, k) = gamma + cross.dot(row);
      comp.coefficients.block(k, 0, 1, k) = row.transpose();
    } else {
      comp.sigma(0, 0) = gamma;
    }
    log_gamma_prefix += log_gamma;
  }
  out.sigma = unpermute_symmetric(comp.sigma, layout.permutation());
  return out;
}

WeightedSample sample_proposal(const Admg& g, const GiwParams& params, const SamplingOrder& order,
                               RngStream& rng) {
  return GiwSampler(g, params, order).draw(rng);
}

GiwParams posterior_params(const GiwParams& prior, const Matrix& sufficient, double count) {
  if (count < 0.0) throw ValidationError("sample count must be non-negative");
  if (sufficient.rows() != prior.scale.rows() || sufficient.cols() != prior.scale.cols()) {
    throw ValidationError("sufficient statistic has the wrong dimension");
  }
  if (!sufficient.allFinite()) throw NumericalError("sufficient statistic is not finite");
  return {prior.delta + count, prior.scale + sufficient};
}

double log_iw_norm_const(double delta, const Matrix& scale) {
  const double q = static_cast<double>(scale.rows());
  const double nu = delta + q - 1.0;
  double log_mv_gamma = 0.25 * q * (q - 1.0) * std::log(std::numbers::pi);
  for (Index j = 0; j < scale.rows(); ++j) {
    log_mv_gamma += boost::math::lgamma(0.5 * nu - 0.5 * static_cast<double>(j));
  }
  const double log_det_u = log_det(cholesky_or_throw(scale, "G-IW scale matrix"));
  return 0.5 * nu * q * std::numbers::ln2 + log_mv_gamma - 0.5 * nu * log_det_u;
}

NormConstEstimate estimate_norm_const(const GiwSampler& sampler, std::size_t m, const RngStream& rng) {
  if (m == 0) throw ValidationError("normalizing-constant estimate needs at least one draw");
  std::vector<double> lw(m);
  for (std::size_t s = 0; s < m; ++s) {
    RngStream stream = rng.split(s);
    lw[s] = sampler.draw(stream).log_weight;
  }
  NormConstEstimate out;
  out.draws = m;
  out.log_iw = log_iw_norm_const(sampler.params().delta, sampler.params().scale);
  const double lme = log_mean_exp(lw);
  out.log_value = out.log_iw + lme;
  double sq = 0.0;
  for (double v : lw) {
    const double w = std::exp(v - lme);
    sq += (w - 1.0) * (w - 1.0);
  }
  const double md = static_cast<double>(m);
  out.std_error = m > 1 ? std::sqrt(sq / (md - 1.0) / md) : 0.0;
  out.ess = effective_sample_size(lw);
  return out;
}

NormConstEstimate estimate_norm_const(const Admg& g, const GiwParams& params, std::size_t m,
                                      const RngStream& rng, const SamplingOrder& order) {
  return estimate_norm_const(GiwSampler(g, params, order), m, rng);
}

MarginalLikelihood log_marginal_likelihood(const Admg& g, const GiwParams& prior, const Matrix& sufficient,
                                           double count, std::size_t m, const RngStream& rng,
                                           const SamplingOrder& order) {
  MarginalLikelihood out;
  const double q = static_cast<double>(g.size());
  // Both integrals use the same streams: their errors are positively
  // correlated, so the difference is more accurate than the combined
  // standard error suggests, and d = 0 gives exactly 0.
  out.posterior = estimate_norm_const(g, posterior_params(prior, sufficient, count), m, rng, order);
  out.prior = estimate_norm_const(g, prior, m, rng, order);
  out.log_value = -0.5 * count * q * std::log(2.0 * std::numbers::pi) + out.posterior.log_value -
                  out.prior.log_value;
  out.std_error = std::hypot(out.posterior.std_error, out.prior.std_error);
  return out;
}

double giw_log_density_unnorm(const Matrix& sigma, const GiwParams& params, const Admg& g) {
  check_membership(sigma, g);
  const auto llt = cholesky_or_throw(sigma, "covariance");
  const double q = static_cast<double>(g.size());
  return -0.5 * (params.delta + 2.0 * q) * log_det(llt) - 0.5 * llt.solve(params.scale).trace();
}

SirDraw resample(const GiwSampler& sampler, std::size_t m, RngStream& rng) {
  if (m == 0) throw ValidationError("resampling needs at least one proposal");
  std::vector<WeightedSample> pool;
  pool.reserve(m);
  std::vector<double> lw(m);
  for (std::size_t s = 0; s < m; ++s) {
    pool.push_back(sampler.draw(rng));
    lw[s] = pool.back().log_weight;
  }
  const auto w = normalized_weights(lw);
  const double u = rng.uniform();
  std::size_t pick = m - 1;
  double acc = 0.0;
  for (std::size_t s = 0; s < m; ++s) {
    acc += w[s];
    if (u < acc) {
      pick = s;
      break;
    }
  }
  SirDraw out;
  out.ess = effective_sample_size(lw);
  out.degenerate = out.ess < 2.0;
  out.sample = std::move(pool[pick]);
  return out;
}

SirDraw resample_exact(const Admg& g, const GiwParams& params, std::size_t m, RngStream& rng,
                       const SamplingOrder& order) {
  return resample(GiwSampler(g, params, order), m, rng);
}

SirDraw draw_covariance(const GiwSampler& sampler, SamplingMode mode, std::size_t m, RngStream& rng) {
  if (mode == SamplingMode::kSir) return resample(sampler, m, rng);
  SirDraw out;
  out.sample = sampler.draw(rng);
  out.ess = 1.0;
  return out;
}

}  // namespace admg
