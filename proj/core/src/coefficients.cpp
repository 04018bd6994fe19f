#include "admg/coefficients.hpp"

#include <cmath>

#include "admg/error.hpp"

namespace admg {

const CoefficientPrior& BPrior::for_edge(NodeIndex parent, NodeIndex child) const {
  const auto it = overrides.find({parent, child});
  return it == overrides.end() ? edge : it->second;
}

namespace {

void check_prior(const CoefficientPrior& p, const std::string& what) {
  if (p.fixed) {
    if (!std::isfinite(*p.fixed)) throw ValidationError("fixed value of " + what + " is not finite");
    return;
  }
  if (!std::isfinite(p.mean)) throw ValidationError("prior mean of " + what + " is not finite");
  if (!(p.variance > 0.0) || !std::isfinite(p.variance)) {
    throw ValidationError("prior variance of " + what + " must be positive");
  }
}

}  // namespace

CoefficientLayout::CoefficientLayout(const Admg& g, const BPrior& prior, bool intercepts)
    : q_(g.size()), intercepts_(intercepts) {
  for (const auto& key : prior.overrides) {
    if (!g.has_directed(key.first.first, key.first.second)) {
      throw ValidationError("coefficient prior given for a missing edge");
    }
  }
  for (const auto& [parent, child] : g.directed_edges()) {
    Coefficient c{child, parent, prior.for_edge(parent, child)};
    check_prior(c.prior, "b[" + g.name(child) + "<-" + g.name(parent) + "]");
    all_.push_back(c);
  }
  if (intercepts_) {
    for (NodeIndex i = 0; i < q_; ++i) {
      check_prior(prior.intercept, "intercept");
      all_.push_back({i, kConstantNode, prior.intercept});
    }
  }
  const auto parts = districts(g);
  std::vector<std::size_t> district_of(q_);
  for (std::size_t d = 0; d < parts.size(); ++d) {
    for (NodeIndex n : parts[d]) district_of[n] = d;
  }
  std::vector<std::vector<std::size_t>> by_district(parts.size());
  for (std::size_t a = 0; a < all_.size(); ++a) {
    if (all_[a].prior.fixed) continue;
    by_district[district_of[all_[a].child]].push_back(free_.size());
    free_.push_back(a);
  }
  for (auto& b : by_district) {
    if (!b.empty()) blocks_.push_back(std::move(b));
  }
}

Vector CoefficientLayout::prior_means() const {
  Vector m(static_cast<Index>(free_.size()));
  for (std::size_t k = 0; k < free_.size(); ++k) m(Index(k)) = all_[free_[k]].prior.mean;
  return m;
}

Vector CoefficientLayout::prior_precisions() const {
  Vector p(static_cast<Index>(free_.size()));
  for (std::size_t k = 0; k < free_.size(); ++k) p(Index(k)) = 1.0 / all_[free_[k]].prior.variance;
  return p;
}

Matrix CoefficientLayout::augmented(const Vector& beta) const {
  const Index q = static_cast<Index>(q_);
  Matrix a = Matrix::Zero(q, q + 1);
  a.leftCols(q).setIdentity();
  std::size_t next = 0;
  for (std::size_t idx = 0; idx < all_.size(); ++idx) {
    const Coefficient& c = all_[idx];
    double value = 0.0;
    if (c.prior.fixed) {
      value = *c.prior.fixed;
    } else {
      value = beta(Index(next++));
    }
    const Index col = c.is_intercept() ? q : static_cast<Index>(c.parent);
    a(static_cast<Index>(c.child), col) -= value;
  }
  return a;
}

Theta CoefficientLayout::theta(const Vector& beta, const Matrix& v) const {
  const Index q = static_cast<Index>(q_);
  const Matrix a = augmented(beta);
  Theta t;
  t.B = Matrix::Identity(q, q) - a.leftCols(q);
  t.V = v;
  t.mean = -a.col(q);
  return t;
}

Vector CoefficientLayout::free_values(const Theta& theta) const {
  Vector beta(static_cast<Index>(free_.size()));
  for (std::size_t k = 0; k < free_.size(); ++k) {
    const Coefficient& c = all_[free_[k]];
    beta(Index(k)) = c.is_intercept() ? theta.mean(Index(c.child)) : theta.B(Index(c.child), Index(c.parent));
  }
  return beta;
}

std::string CoefficientLayout::name(std::size_t k, const Admg& g) const {
  const Coefficient& c = free_coefficient(k);
  if (c.is_intercept()) return "mu[" + g.name(c.child) + "]";
  return "b[" + g.name(c.child) + "<-" + g.name(c.parent) + "]";
}

GaussianConditional coefficient_conditional(const CoefficientLayout& layout, const std::vector<std::size_t>& block,
                                            const Matrix& w, const Matrix& moments, const Vector& beta) {
  const Index q = static_cast<Index>(layout.node_count());
  const Index n = static_cast<Index>(block.size());
  Vector rest = beta;
  for (std::size_t k : block) rest(Index(k)) = 0.0;
  // -1/2 tr(W A M A^T) with A = A_rest - sum_k beta_k e_i e_j^T.
  const Matrix wam = w * layout.augmented(rest) * moments;
  GaussianConditional out{Matrix::Zero(n, n), Vector::Zero(n)};
  const Vector p0 = layout.prior_precisions();
  const Vector m0 = layout.prior_means();
  std::vector<Index> rows(block.size());
  std::vector<Index> cols(block.size());
  for (std::size_t a = 0; a < block.size(); ++a) {
    const Coefficient& c = layout.free_coefficient(block[a]);
    rows[a] = static_cast<Index>(c.child);
    cols[a] = c.is_intercept() ? q : static_cast<Index>(c.parent);
  }
  for (Index a = 0; a < n; ++a) {
    const std::size_t ka = block[std::size_t(a)];
    out.linear(a) = p0(Index(ka)) * m0(Index(ka)) + wam(rows[a], cols[a]);
    out.precision(a, a) += p0(Index(ka));
    for (Index b = 0; b < n; ++b) out.precision(a, b) += w(rows[a], rows[b]) * moments(cols[a], cols[b]);
  }
  return out;
}

Matrix expected_residual_scatter(const CoefficientLayout& layout, const Vector& mean, const Matrix& cov,
                                 const Matrix& moments) {
  const Index q = static_cast<Index>(layout.node_count());
  const Matrix a = layout.augmented(mean);
  Matrix s = a * moments * a.transpose();
  const std::size_t n = layout.free_count();
  for (std::size_t k = 0; k < n; ++k) {
    const Coefficient& ck = layout.free_coefficient(k);
    const Index ik = static_cast<Index>(ck.child);
    const Index jk = ck.is_intercept() ? q : static_cast<Index>(ck.parent);
    for (std::size_t l = 0; l < n; ++l) {
      const double c = cov(Index(k), Index(l));
      if (c == 0.0) continue;
      const Coefficient& cl = layout.free_coefficient(l);
      const Index il = static_cast<Index>(cl.child);
      const Index jl = cl.is_intercept() ? q : static_cast<Index>(cl.parent);
      s(ik, il) += c * moments(jk, jl);
    }
  }
  return symmetrize(s);
}

}  // namespace admg
