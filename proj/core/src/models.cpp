#include "admg/models.hpp"

#include <string>

#include "admg/error.hpp"

namespace admg {

Matrix simulate(const Theta& theta, std::size_t n, RngStream& rng) {
  const Index q = theta.B.rows();
  const auto llt = cholesky_or_throw(theta.V, "error covariance");
  Matrix e(static_cast<Index>(n), q);
  for (Index r = 0; r < e.rows(); ++r) {
    for (Index c = 0; c < q; ++c) e(r, c) = rng.normal();
  }
  e = e * llt.matrixU();  // rows ~ N(0, V)
  if (theta.mean.size() == q) e.rowwise() += theta.mean.transpose();
  const Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(q, q) - theta.B);
  // Z = E (I - B)^-T
  return lu.solve(e.transpose()).transpose();
}

Dataset simulate_dataset(const Admg& g, const Theta& theta, std::size_t n, RngStream& rng) {
  const Matrix z = simulate(theta, n, rng);
  Dataset d;
  d.nodes = g.observed_nodes();
  d.values.resize(z.rows(), static_cast<Index>(d.nodes.size()));
  for (std::size_t c = 0; c < d.nodes.size(); ++c) d.values.col(Index(c)) = z.col(Index(d.nodes[c]));
  return d;
}

SyntheticModel bow_model() {
  SyntheticModel m{Admg::parse("Y2 -> Y3; Y2 <-> Y3"), Theta::zeros(2), {}};
  m.theta.B(1, 0) = 0.5;
  m.theta.V << 1.0, 0.3, 0.3, 1.0;
  return m;
}

SyntheticModel recovery_model() {
  SyntheticModel m{Admg::parse("node Y1; node Y2; node Y3; node Y4; node Y5\n"
                               "Y1 -> Y2; Y2 -> Y4; Y3 -> Y5\n"
                               "Y1 <-> Y3; Y4 <-> Y5\n"),
                   Theta::zeros(5),
                   {}};
  m.theta.B(1, 0) = 0.8;
  m.theta.B(3, 1) = -0.6;
  m.theta.B(4, 2) = 0.7;
  m.theta.V.diagonal() << 1.0, 0.8, 1.2, 0.9, 1.0;
  m.theta.V(0, 2) = m.theta.V(2, 0) = 0.4;
  m.theta.V(3, 4) = m.theta.V(4, 3) = -0.3;
  return m;
}

SyntheticModel factor_model() {
  const Admg g = Admg::parse(
      "node xi latent; node eta1 latent; node eta2 latent\n"
      "node I1; node I2; node I3\n"
      "node D1; node D2; node D3; node D4; node D5; node D6; node D7; node D8\n"
      "xi -> eta1; xi -> eta2; eta1 -> eta2\n"
      "xi -> I1; xi -> I2; xi -> I3\n"
      "eta1 -> D1; eta1 -> D2; eta1 -> D3; eta1 -> D4\n"
      "eta2 -> D5; eta2 -> D6; eta2 -> D7; eta2 -> D8\n"
      "D1 <-> D5; D2 <-> D6; D3 <-> D7; D4 <-> D8; D2 <-> D4; D6 <-> D8\n");
  SyntheticModel m{g, Theta::zeros(g.size()), {}};
  auto edge = [&](const char* parent, const char* child, double value, bool fixed) {
    const NodeIndex p = g.index_of(parent);
    const NodeIndex c = g.index_of(child);
    m.theta.B(Index(c), Index(p)) = value;
    if (fixed) m.prior.overrides[{p, c}] = CoefficientPrior{0.0, 1.0, value};
  };
  edge("xi", "eta1", 0.8, false);
  edge("xi", "eta2", 0.4, false);
  edge("eta1", "eta2", 0.6, false);
  edge("xi", "I1", 1.0, true);
  edge("xi", "I2", 0.9, false);
  edge("xi", "I3", 1.1, false);
  edge("eta1", "D1", 1.0, true);
  edge("eta1", "D2", 0.85, false);
  edge("eta1", "D3", 1.1, false);
  edge("eta1", "D4", 0.9, false);
  edge("eta2", "D5", 1.0, true);
  edge("eta2", "D6", 0.9, false);
  edge("eta2", "D7", 1.05, false);
  edge("eta2", "D8", 0.95, false);
  auto var = [&](const char* a, const char* b, double value) {
    const Index i = Index(g.index_of(a));
    const Index j = Index(g.index_of(b));
    m.theta.V(i, j) = m.theta.V(j, i) = value;
  };
  var("xi", "xi", 1.0);
  var("eta1", "eta1", 0.5);
  var("eta2", "eta2", 0.4);
  var("I1", "I1", 0.4);
  var("I2", "I2", 0.5);
  var("I3", "I3", 0.45);
  const double d_var[] = {0.5, 0.55, 0.45, 0.5, 0.5, 0.6, 0.45, 0.5};
  for (int k = 0; k < 8; ++k) {
    const std::string n = "D" + std::to_string(k + 1);
    var(n.c_str(), n.c_str(), d_var[k]);
  }
  var("D1", "D5", 0.15);
  var("D2", "D6", 0.12);
  var("D3", "D7", 0.1);
  var("D4", "D8", 0.12);
  var("D2", "D4", 0.1);
  var("D6", "D8", 0.1);
  return m;
}

SyntheticModel random_model(std::size_t q, double p_directed, double p_bidirected, RngStream& rng) {
  std::vector<std::string> names;
  std::vector<Edge> directed;
  std::vector<Edge> bidirected;
  for (std::size_t i = 0; i < q; ++i) {
    names.push_back("Y" + std::to_string(i + 1));
    for (std::size_t j = i + 1; j < q; ++j) {
      if (rng.uniform() < p_directed) directed.push_back({i, j});
      if (rng.uniform() < p_bidirected) bidirected.push_back({i, j});
    }
  }
  SyntheticModel m{Admg(names, std::vector<bool>(q, false), directed, bidirected), Theta::zeros(q), {}};
  for (const auto& [p, c] : directed) m.theta.B(Index(c), Index(p)) = 0.8 * (2.0 * rng.uniform() - 1.0);
  for (const auto& [a, b] : bidirected) {
    m.theta.V(Index(a), Index(b)) = m.theta.V(Index(b), Index(a)) = 0.6 * (2.0 * rng.uniform() - 1.0);
  }
  for (Index i = 0; i < Index(q); ++i) {
    m.theta.V(i, i) = m.theta.V.row(i).cwiseAbs().sum() + 0.3 + 0.7 * rng.uniform();
  }
  return m;
}

}  // namespace admg
