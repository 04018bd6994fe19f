#include <benchmark/benchmark.h>

#include "admg/baseline_dag.hpp"
#include "admg/bartlett.hpp"
#include "admg/gibbs.hpp"
#include "admg/giw.hpp"
#include "admg/models.hpp"
#include "admg/variational.hpp"

using namespace admg;

namespace {

/// Hub graph: Y1 joined to every other node.
Admg hub_graph(std::size_t q) {
  std::vector<std::string> names;
  std::vector<Edge> bi;
  for (std::size_t i = 0; i < q; ++i) names.push_back("Y" + std::to_string(i + 1));
  for (std::size_t i = 1; i < q; ++i) bi.push_back({0, i});
  return Admg(names, std::vector<bool>(q, false), {}, bi);
}

SamplingOrder hub_second(std::size_t q) {
  std::vector<NodeIndex> p;
  p.push_back(1);
  p.push_back(0);
  for (std::size_t i = 2; i < q; ++i) p.push_back(i);
  return SamplingOrder(p);
}

void BM_GiwDrawGreedyOrder(benchmark::State& state) {
  const std::size_t q = static_cast<std::size_t>(state.range(0));
  const Admg g = hub_graph(q);
  const GiwSampler sampler(g, {3.0, Matrix::Identity(Index(q), Index(q))}, choose_order(g, OrderStrategy::kGreedy));
  RngStream rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(rng).log_weight);
}
BENCHMARK(BM_GiwDrawGreedyOrder)->Arg(4)->Arg(8)->Arg(16)->Arg(32);

void BM_GiwDrawHubSecond(benchmark::State& state) {
  const std::size_t q = static_cast<std::size_t>(state.range(0));
  const Admg g = hub_graph(q);
  const GiwSampler sampler(g, {3.0, Matrix::Identity(Index(q), Index(q))}, hub_second(q));
  RngStream rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(rng).log_weight);
}
BENCHMARK(BM_GiwDrawHubSecond)->Arg(4)->Arg(8)->Arg(16)->Arg(32);

void BM_Compose(benchmark::State& state) {
  const std::size_t q = static_cast<std::size_t>(state.range(0));
  const Admg g = hub_graph(q);
  const GiwSampler sampler(g, {3.0, Matrix::Identity(Index(q), Index(q))}, choose_order(g, OrderStrategy::kGreedy));
  RngStream rng(2);
  const BartlettFactors phi = sampler.draw(rng).phi;
  for (auto _ : state) benchmark::DoNotOptimize(compose(phi).data());
}
BENCHMARK(BM_Compose)->Arg(4)->Arg(8)->Arg(16)->Arg(32);

void BM_NormConst(benchmark::State& state) {
  const Admg g = factor_model().graph;
  std::vector<Edge> bi = g.bidirected_edges();
  const Admg cov(g.names(), std::vector<bool>(g.size(), false), {}, bi);
  const Index q = static_cast<Index>(g.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_norm_const(cov, {3.0, Matrix::Identity(q, q)}, 1000, RngStream(3)).log_value);
  }
}
BENCHMARK(BM_NormConst)->Unit(benchmark::kMillisecond);

struct FactorFixture {
  SyntheticModel model = factor_model();
  Dataset data;
  Priors priors;
  FactorFixture() {
    RngStream rng(4);
    data = simulate_dataset(model.graph, model.theta, 75, rng);
    const Index q = static_cast<Index>(model.graph.size());
    priors = {{3.0, Matrix::Identity(q, q)}, model.prior};
  }
};

void BM_AdmgGibbsIteration(benchmark::State& state) {
  const FactorFixture f;
  GibbsConfig c;
  c.sir_draws = static_cast<std::size_t>(state.range(0));
  const GibbsSampler sampler(f.model.graph, f.priors, f.data, c);
  ChainState s = sampler.initial_state(0);
  for (auto _ : state) sampler.step(s);
}
BENCHMARK(BM_AdmgGibbsIteration)->Arg(1)->Arg(50)->Unit(benchmark::kMicrosecond);

void BM_DagGibbsIteration(benchmark::State& state) {
  const FactorFixture f;
  const AncillaryDag dag = to_ancillary_dag(f.model.graph);
  const DagGibbsSampler sampler(dag, dag_priors(dag, f.priors), f.data, GibbsConfig{});
  DagChainState s = sampler.initial_state(0);
  for (auto _ : state) sampler.step(s);
}
BENCHMARK(BM_DagGibbsIteration)->Unit(benchmark::kMicrosecond);

void BM_VbSweep(benchmark::State& state) {
  const FactorFixture f;
  const VariationalModel model(f.model.graph, f.priors, f.data, VbConfig{});
  VariationalState s = model.initial_state();
  const VPool pool = model.make_pool(s, 0);
  for (auto _ : state) {
    model.update_qx(s, pool);
    model.update_qb(s, pool);
    model.update_qv(s);
    benchmark::DoNotOptimize(model.compute_bound(s, pool));
  }
}
BENCHMARK(BM_VbSweep)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
