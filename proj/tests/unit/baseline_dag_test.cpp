#include <gtest/gtest.h>

#include <cmath>

#include "admg/baseline_dag.hpp"
#include "admg/error.hpp"
#include "admg/gibbs.hpp"
#include "admg/giw.hpp"
#include "admg/models.hpp"
#include "admg/stats.hpp"
#include "oracles.hpp"

using namespace admg;

namespace {

Priors default_priors(std::size_t q, double delta = 3.0) {
  return {{delta, Matrix::Identity(Index(q), Index(q))}, {}};
}

GibbsConfig config(std::size_t iterations, std::size_t burn_in, std::uint64_t seed) {
  GibbsConfig c;
  c.iterations = iterations;
  c.burn_in = burn_in;
  c.thin = 1;
  c.seed = seed;
  return c;
}

/// Posterior-mean observed covariance and its batch-means standard error.
struct CovSummary {
  Matrix mean;
  Matrix se;
};

CovSummary observed_covariance(const std::vector<Theta>& samples, const IndexList& obs) {
  const std::size_t batches = 20;
  const std::size_t per = samples.size() / batches;
  const Index k = static_cast<Index>(obs.size());
  std::vector<Matrix> bm(batches, Matrix::Zero(k, k));
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t s = b * per; s < (b + 1) * per; ++s) bm[b] += implied_covariance(samples[s])(obs, obs);
    bm[b] /= static_cast<double>(per);
  }
  CovSummary out{Matrix::Zero(k, k), Matrix::Zero(k, k)};
  for (const Matrix& m : bm) out.mean += m / static_cast<double>(batches);
  for (const Matrix& m : bm) out.se += (m - out.mean).cwiseAbs2();
  out.se = (out.se / static_cast<double>(batches - 1) / static_cast<double>(batches)).cwiseSqrt();
  return out;
}

Matrix sample_covariance(const Matrix& y) {
  Matrix c = y.rowwise() - y.colwise().mean();
  return c.transpose() * c / static_cast<double>(y.rows());
}

}  // namespace

TEST(AncillaryDag, NoBidirectedEdgesLeavesGraphUnchanged) {
  const Admg g = Admg::parse("node L latent\nnode Y1\nnode Y2\nL -> Y1\nL -> Y2\nY1 -> Y2");
  const AncillaryDag a = to_ancillary_dag(g);
  EXPECT_TRUE(a.ancillary.empty());
  EXPECT_EQ(a.dag.size(), 3u);
  EXPECT_EQ(a.dag.directed_edges(), g.directed_edges());
  EXPECT_TRUE(a.dag.is_latent(0));
}

TEST(AncillaryDag, BowBecomesThreeNodeDag) {
  const AncillaryDag a = to_ancillary_dag(bow_model().graph);
  ASSERT_EQ(a.dag.size(), 3u);
  EXPECT_EQ(a.dag.name(2), "anc_Y2_Y3");
  EXPECT_TRUE(a.dag.is_latent(2));
  EXPECT_TRUE(a.dag.has_directed(0, 1));
  EXPECT_TRUE(a.dag.has_directed(2, 0));
  EXPECT_TRUE(a.dag.has_directed(2, 1));
  EXPECT_TRUE(a.dag.bidirected_edges().empty());
  ASSERT_EQ(a.ancillary.size(), 1u);
  EXPECT_EQ(a.ancillary[0].fixed_child, 0u);
  EXPECT_EQ(a.ancillary[0].free_child, 1u);
  const CoefficientLayout layout(a.dag, a.coefficient_prior({}), false);
  EXPECT_EQ(layout.free_count(), 2u);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < layout.free_count(); ++k) names.push_back(layout.name(k, a.dag));
  EXPECT_EQ(names, (std::vector<std::string>{"b[Y3<-Y2]", "b[Y3<-anc_Y2_Y3]"}));
}

TEST(AncillaryDag, FixedEdgeGoesToLexicographicallySmallerChild) {
  const Admg g = Admg::parse("node beta\nnode alpha\nbeta <-> alpha");
  const AncillaryDag a = to_ancillary_dag(g);
  ASSERT_EQ(a.ancillary.size(), 1u);
  EXPECT_EQ(a.dag.name(a.ancillary[0].fixed_child), "alpha");
}

TEST(AncillaryDag, NameCollisionsAreAvoided) {
  const Admg g = Admg::parse("node Y1\nnode Y2\nnode anc_Y1_Y2\nY1 <-> Y2");
  const AncillaryDag a = to_ancillary_dag(g);
  EXPECT_EQ(a.dag.name(3), "anc_Y1_Y2_");
}

TEST(AncillaryDag, StructureOnRandomGraphs) {
  RngStream rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const Admg g = oracle::random_admg(2 + std::size_t(rep % 7), 0.3, 0.4, rng);
    const AncillaryDag a = to_ancillary_dag(g);
    EXPECT_EQ(a.dag.size(), g.size() + g.bidirected_edges().size());
    EXPECT_TRUE(a.dag.bidirected_edges().empty());
    for (const AncillaryLatent& anc : a.ancillary) {
      EXPECT_EQ(a.dag.children(anc.latent).size(), 2u);
      EXPECT_TRUE(a.dag.parents(anc.latent).empty());
      EXPECT_LT(a.dag.name(anc.fixed_child), a.dag.name(anc.free_child));
    }
    for (NodeIndex i = 0; i < g.size(); ++i) EXPECT_EQ(a.dag.name(i), g.name(i));
  }
}

TEST(DagPriors, MatchGiwDiagonalMarginals) {
  const Admg g = Admg::parse("Y1 <-> Y2\nY2 -> Y3");
  Priors p = default_priors(3, 4.0);
  p.v.scale.diagonal() << 2.0, 3.0, 5.0;
  const AncillaryDag a = to_ancillary_dag(g);
  const DagPriors dp = dag_priors(a, p);
  // (delta + 2q)/2 - 1 with q = 3 original nodes.
  EXPECT_TRUE((dp.shape.array() == 4.0).all());
  EXPECT_DOUBLE_EQ(dp.rate(0), 1.0);
  EXPECT_DOUBLE_EQ(dp.rate(2), 2.5);
  EXPECT_DOUBLE_EQ(dp.rate(3), 1.0);
  // Weighted G-IW draws of the isolated node's variance have the same mean.
  const Admg cov = Admg::parse("node Y1\nnode Y2\nnode Y3\nY1 <-> Y2");
  const GiwSampler sampler(cov, p.v, SamplingOrder::identity(3));
  RngStream rng(40);
  std::vector<double> xs, lw;
  for (int s = 0; s < 100000; ++s) {
    const WeightedSample w = sampler.draw(rng);
    xs.push_back(w.sigma(2, 2));
    lw.push_back(w.log_weight);
  }
  const WeightedMoments wm = weighted_mean(xs, lw);
  EXPECT_LE(std::fabs(wm.mean - dp.rate(2) / (dp.shape(2) - 1.0)), 3.0 * wm.std_error);
}

TEST(DagGibbs, CoefficientStepMatchesAdmgSampler) {
  const Admg g = Admg::parse("node Y1\nnode Y2\nnode Y3\nY1 -> Y2\nY1 -> Y3\nY2 -> Y3");
  RngStream rng(2);
  Theta th{Matrix::Zero(3, 3), Matrix::Identity(3, 3), Vector::Zero(3)};
  th.B(1, 0) = 0.5;
  th.B(2, 0) = -0.4;
  th.B(2, 1) = 0.7;
  const Dataset data = simulate_dataset(g, th, 50, rng);
  const Priors p = default_priors(3);
  const AncillaryDag a = to_ancillary_dag(g);
  const DagGibbsSampler dag(a, dag_priors(a, p), data, config(1, 0, 3));
  const GibbsSampler admg(g, p, data, config(1, 0, 4));
  const Vector v(Eigen::Vector3d(0.8, 1.3, 0.6));
  DagChainState ds = dag.initial_state(0);
  ds.v = v;
  ChainState as = admg.initial_state(0);
  as.v = v.asDiagonal();
  as.precision = v.cwiseInverse().asDiagonal();
  const Matrix m = admg.moments(as);
  const std::size_t n = 20000;
  std::vector<std::vector<double>> xd(3), xa(3);
  for (std::size_t s = 0; s < n; ++s) {
    dag.sample_b(ds, m);
    admg.sample_b(as, m);
    for (int k = 0; k < 3; ++k) {
      xd[k].push_back(ds.beta(k));
      xa[k].push_back(as.beta(k));
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double se = std::sqrt((variance(xd[k]) + variance(xa[k])) / static_cast<double>(n));
    EXPECT_LT(std::abs(mean(xd[k]) - mean(xa[k])), 4.0 * se) << k;
    EXPECT_NEAR(variance(xd[k]) / variance(xa[k]), 1.0, 0.05) << k;
  }
}

TEST(DagGibbs, MarkovBlanketLatentDrawIsExactConditional) {
  const Admg g = Admg::parse("node X latent\nnode Y1\nnode Y2\nX -> Y1\nX -> Y2");
  const AncillaryDag a = to_ancillary_dag(g);
  Dataset data;
  data.nodes = g.observed_nodes();
  data.values.resize(2, 2);
  data.values << 1.0, -0.5, -1.0, 0.5;
  const DagGibbsSampler s(a, dag_priors(a, default_priors(3)), data, config(1, 0, 5));
  DagChainState st = s.initial_state(0);
  st.beta << 0.9, -0.6;
  st.v << 1.2, 0.5, 0.8;
  // Exact Gaussian conditioning of X given (Y1, Y2) on centered data.
  const double prec = 1.0 / 1.2 + 0.81 / 0.5 + 0.36 / 0.8;
  const double mean0 = (0.9 * 1.0 / 0.5 + -0.6 * -0.5 / 0.8) / prec;
  std::vector<double> xs;
  for (int r = 0; r < 40000; ++r) {
    s.sample_latents(st);
    xs.push_back(st.latents(0, 0));
  }
  EXPECT_NEAR(mean(xs), mean0, 4.0 * std::sqrt(1.0 / prec / 40000.0));
  EXPECT_NEAR(variance(xs) * prec, 1.0, 0.03);
}

TEST(DagGibbs, FixedSeedIsDeterministic) {
  const SyntheticModel m = recovery_model();
  RngStream rng(6);
  const Dataset data = simulate_dataset(m.graph, m.theta, 100, rng);
  const AncillaryDag a = to_ancillary_dag(m.graph);
  const DagPriors dp = dag_priors(a, default_priors(5));
  const DagGibbsResult r1 = run_dag_gibbs(a, dp, data, config(50, 10, 7));
  const DagGibbsResult r2 = run_dag_gibbs(a, dp, data, config(50, 10, 7));
  const DagGibbsResult r3 = run_dag_gibbs(a, dp, data, config(50, 10, 8));
  ASSERT_EQ(r1.trace.rows(), 40);
  EXPECT_TRUE((r1.trace.array() == r2.trace.array()).all());
  EXPECT_FALSE((r1.trace.array() == r3.trace.array()).all());
  EXPECT_EQ(r1.iteration_seconds.size(), 50u);
  EXPECT_EQ(r1.factorizations_per_iteration, 4u);
}

TEST(DagGibbs, BowCovarianceAgreesWithAdmgSampler) {
  const SyntheticModel m = bow_model();
  RngStream rng(9);
  const Dataset data = simulate_dataset(m.graph, m.theta, 2000, rng);
  const Priors p = default_priors(2);
  const GibbsResult admg = run_gibbs(m.graph, p, data, config(4000, 500, 10));
  const AncillaryDag a = to_ancillary_dag(m.graph);
  const DagGibbsResult dag = run_dag_gibbs(a, dag_priors(a, p), data, config(4000, 500, 11));
  const IndexList obs{0, 1};
  const CovSummary ca = observed_covariance(admg.samples, obs);
  const CovSummary cd = observed_covariance(dag.samples, obs);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) {
      EXPECT_LT(std::abs(ca.mean(i, j) - cd.mean(i, j)), 4.0 * std::hypot(ca.se(i, j), cd.se(i, j)) + 2e-3)
          << i << "," << j;
    }
  }
}

TEST(DagGibbs, SomeCovariancesAreUnreachable) {
  // A triangle with all correlations 0.6 is positive definite, but its
  // comparison matrix (unit diagonal, -0.6 off) is not, so it is not a
  // diagonal plus a sum of rank-one terms on the edges. The ancillary DAG
  // cannot fit it; with correlations 0.3 it can.
  const Admg g = Admg::parse("Y1 <-> Y2\nY1 <-> Y3\nY2 <-> Y3");
  const AncillaryDag a = to_ancillary_dag(g);
  const IndexList obs{0, 1, 2};
  auto fit_error = [&](double rho, std::uint64_t seed) {
    Theta th{Matrix::Zero(3, 3), Matrix::Constant(3, 3, rho), Vector::Zero(3)};
    th.V.diagonal().setOnes();
    RngStream rng(seed);
    const Dataset data = simulate_dataset(g, th, 5000, rng);
    const DagGibbsResult dag = run_dag_gibbs(a, dag_priors(a, default_priors(3)), data, config(3000, 1000, seed));
    return (observed_covariance(dag.samples, obs).mean - sample_covariance(data.values)).cwiseAbs().maxCoeff();
  };
  Matrix comparison = -0.6 * Matrix::Ones(3, 3);
  comparison.diagonal().setOnes();
  ASSERT_FALSE(is_positive_definite(comparison));
  EXPECT_GT(fit_error(0.6, 12), 0.05);
  EXPECT_LT(fit_error(0.3, 13), 0.03);
}

TEST(Benchmark, ReportHasRatioAndCounts) {
  const SyntheticModel m = recovery_model();
  RngStream rng(14);
  const Dataset data = simulate_dataset(m.graph, m.theta, 200, rng);
  BenchmarkConfig cfg;
  cfg.gibbs = config(100, 20, 15);
  cfg.trials = 3;
  cfg.folds = 5;
  const BenchmarkReport r = benchmark_compare(m.graph, default_priors(5), data, cfg);
  ASSERT_EQ(r.trials.size(), 3u);
  EXPECT_EQ(r.ancillary_latents, 2u);
  EXPECT_EQ(r.trials[2].seed, 17u);
  EXPECT_EQ(r.trials[2].fold, 2u);
  EXPECT_DOUBLE_EQ(r.wall_time_ratio, r.admg.mean / r.dag.mean);
  EXPECT_EQ(r.dag_factorizations, 4u);
  EXPECT_EQ(r.predictive_test.dof, 2u);
  const std::string text = format_report(r);
  EXPECT_NE(text.find("ratio admg/dag"), std::string::npos);
  EXPECT_NE(text.find("inversions per iteration"), std::string::npos);
}

TEST(Benchmark, RejectsBadConfig) {
  const SyntheticModel m = bow_model();
  RngStream rng(16);
  const Dataset data = simulate_dataset(m.graph, m.theta, 20, rng);
  BenchmarkConfig cfg;
  cfg.trials = 0;
  EXPECT_THROW(benchmark_compare(m.graph, default_priors(2), data, cfg), ValidationError);
  cfg.trials = 1;
  cfg.folds = 30;
  EXPECT_THROW(benchmark_compare(m.graph, default_priors(2), data, cfg), ValidationError);
}
