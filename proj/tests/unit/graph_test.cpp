#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "admg/error.hpp"
#include "admg/graph.hpp"
#include "admg/rng.hpp"
#include "oracles.hpp"

using namespace admg;

namespace {

GraphErrorKind parse_error_kind(const std::string& text, std::size_t* line = nullptr) {
  try {
    Admg::parse(text);
  } catch (const GraphParseError& e) {
    if (line) *line = e.line();
    return e.kind();
  }
  ADD_FAILURE() << "no error for: " << text;
  return GraphErrorKind::kSyntax;
}

Admg hub_graph(std::size_t q) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < q; ++i) names.push_back("Y" + std::to_string(i + 1));
  std::vector<Edge> bi;
  for (std::size_t i = 1; i < q; ++i) bi.push_back({0, i});
  return Admg(names, std::vector<bool>(q, false), {}, bi);
}

Admg complete_bidirected(std::size_t q) {
  std::vector<std::string> names;
  std::vector<Edge> bi;
  for (std::size_t i = 0; i < q; ++i) {
    names.push_back("Y" + std::to_string(i + 1));
    for (std::size_t j = i + 1; j < q; ++j) bi.push_back({i, j});
  }
  return Admg(names, std::vector<bool>(q, false), {}, bi);
}

}  // namespace

TEST(ParseGraph, Bow) {
  const Admg g = Admg::parse("Y2 -> Y3; Y2 <-> Y3");
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g.name(0), "Y2");
  EXPECT_EQ(g.name(1), "Y3");
  EXPECT_EQ(g.directed_edges().size(), 1u);
  EXPECT_EQ(g.bidirected_edges().size(), 1u);
  EXPECT_TRUE(g.has_directed(0, 1));
  EXPECT_FALSE(g.has_directed(1, 0));
  EXPECT_TRUE(g.has_bidirected(1, 0));
}

TEST(ParseGraph, EmptyTextWithNodeList) {
  const std::vector<std::string> declared{"Y1"};
  const Admg g = Admg::parse("", declared);
  EXPECT_EQ(g.size(), 1u);
  EXPECT_TRUE(g.directed_edges().empty());
  EXPECT_TRUE(g.bidirected_edges().empty());
}

TEST(ParseGraph, CycleReported) {
  std::size_t line = 0;
  EXPECT_EQ(parse_error_kind("A -> B; B -> A", &line), GraphErrorKind::kCycle);
  EXPECT_EQ(line, 1u);
  EXPECT_EQ(parse_error_kind("A -> B\nB -> C\nC -> A\n", &line), GraphErrorKind::kCycle);
  EXPECT_GE(line, 1u);
  EXPECT_LE(line, 3u);
}

TEST(ParseGraph, DistinctDiagnostics) {
  std::size_t line = 0;
  EXPECT_EQ(parse_error_kind("A -> B\nA -> B", &line), GraphErrorKind::kDuplicateEdge);
  EXPECT_EQ(line, 2u);
  EXPECT_EQ(parse_error_kind("A <-> B\nB <-> A", &line), GraphErrorKind::kDuplicateEdge);
  EXPECT_EQ(line, 2u);
  EXPECT_EQ(parse_error_kind("node A\nnode B\n\nA -> C", &line), GraphErrorKind::kUndeclaredNode);
  EXPECT_EQ(line, 4u);
  EXPECT_EQ(parse_error_kind("A -> B\nA => B", &line), GraphErrorKind::kSyntax);
  EXPECT_EQ(line, 2u);
  EXPECT_EQ(parse_error_kind("A -> A", &line), GraphErrorKind::kSelfLoop);
  EXPECT_EQ(parse_error_kind("node A\nnode A", &line), GraphErrorKind::kDuplicateNode);
  EXPECT_EQ(line, 2u);
  EXPECT_EQ(parse_error_kind("node 9lives", &line), GraphErrorKind::kSyntax);
  const std::vector<std::string> declared{"A", "B"};
  EXPECT_THROW(Admg::parse("A -> Z", declared), GraphParseError);
}

TEST(ParseGraph, BowAllowsBothEdgeKinds) {
  const Admg g = Admg::parse("node X latent\nnode Y\nX -> Y # loading\nX <-> Y\n");
  EXPECT_TRUE(g.is_latent(0));
  EXPECT_FALSE(g.is_latent(1));
  EXPECT_EQ(g.latent_nodes(), std::vector<NodeIndex>{0});
  EXPECT_EQ(g.observed_nodes(), std::vector<NodeIndex>{1});
}

TEST(ParseGraph, RoundTripRandom) {
  RngStream rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const Admg g = oracle::random_admg(1 + rep % 9, 0.3, 0.3, rng);
    const Admg back = Admg::parse(g.render());
    EXPECT_EQ(back, g) << g.render();
  }
  const Admg latent = Admg::parse("node L latent\nnode Y1\nnode Y2\nL -> Y1\nL -> Y2\nY1 <-> Y2");
  EXPECT_EQ(Admg::parse(latent.render()), latent);
}

TEST(SpousePartition, EmptyAndCompleteGraphs) {
  RngStream rng(1);
  const Admg empty = oracle::random_covariance_graph(5, 0.0, rng);
  const Admg full = complete_bidirected(5);
  const SamplingOrder order({3, 1, 4, 0, 2});
  for (std::size_t i = 0; i < 5; ++i) {
    const auto pe = spouse_partition(empty, order, i);
    EXPECT_TRUE(pe.spouses.empty());
    EXPECT_EQ(pe.non_spouses.size(), i);
    const auto pf = spouse_partition(full, order, i);
    EXPECT_TRUE(pf.non_spouses.empty());
    EXPECT_EQ(pf.spouses.size(), i);
  }
  EXPECT_THROW(spouse_partition(full, order, 5), std::out_of_range);
}

TEST(SpousePartition, Bow) {
  const Admg g = Admg::parse("Y2 -> Y3; Y2 <-> Y3");
  const auto p = spouse_partition(g, SamplingOrder::identity(2), 1);
  EXPECT_EQ(p.spouses, std::vector<NodeIndex>{0});
  EXPECT_TRUE(p.non_spouses.empty());
}

TEST(SpousePartition, DisjointUnionOfPredecessors) {
  RngStream rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const Admg g = oracle::random_admg(7, 0.2, 0.4, rng);
    std::vector<NodeIndex> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    const SamplingOrder order(perm);
    for (std::size_t i = 0; i < 7; ++i) {
      const auto p = spouse_partition(g, order, i);
      std::set<NodeIndex> all(p.spouses.begin(), p.spouses.end());
      for (NodeIndex n : p.non_spouses) EXPECT_TRUE(all.insert(n).second);
      std::set<NodeIndex> expected(perm.begin(), perm.begin() + static_cast<long>(i));
      EXPECT_EQ(all, expected);
      for (NodeIndex s : p.spouses) EXPECT_TRUE(g.has_bidirected(s, perm[i]));
      for (NodeIndex n : p.non_spouses) EXPECT_FALSE(g.has_bidirected(n, perm[i]));
    }
  }
}

TEST(SamplingOrder, RejectsNonPermutation) {
  EXPECT_THROW(SamplingOrder({0, 0, 1}), ValidationError);
  EXPECT_THROW(SamplingOrder({0, 3}), ValidationError);
}

TEST(Districts, Trivial) {
  RngStream rng(2);
  const Admg dag = oracle::random_admg(6, 0.5, 0.0, rng);
  EXPECT_EQ(districts(dag).size(), 6u);
  EXPECT_EQ(districts(complete_bidirected(6)).size(), 1u);
}

TEST(Districts, FactorModelIndicators) {
  const Admg g = Admg::parse(
      "node xi latent; node eta1 latent; node eta2 latent\n"
      "node I1; node I2; node I3\n"
      "node D1; node D2; node D3; node D4; node D5; node D6; node D7; node D8\n"
      "xi -> I1; xi -> I2; xi -> I3\n"
      "eta1 -> D1; eta1 -> D2; eta1 -> D3; eta1 -> D4\n"
      "eta2 -> D5; eta2 -> D6; eta2 -> D7; eta2 -> D8\n"
      "xi -> eta1; xi -> eta2; eta1 -> eta2\n"
      "D1 <-> D5; D2 <-> D6; D3 <-> D7; D4 <-> D8; D2 <-> D4; D6 <-> D8\n");
  // Union-find over bi-directed pairs, written out by hand:
  // {D1,D5}, {D2,D4,D6,D8}, {D3,D7}; everything else singleton.
  const auto parts = districts(g);
  std::set<std::set<std::string>> named;
  for (const auto& block : parts) {
    std::set<std::string> s;
    for (NodeIndex n : block) s.insert(g.name(n));
    named.insert(s);
  }
  EXPECT_TRUE(named.count({"D1", "D5"}));
  EXPECT_TRUE(named.count({"D2", "D4", "D6", "D8"}));
  EXPECT_TRUE(named.count({"D3", "D7"}));
  EXPECT_TRUE(named.count({"I1"}));
  EXPECT_TRUE(named.count({"xi"}));
  EXPECT_EQ(parts.size(), 3u + 6u);
}

TEST(Districts, IsPartition) {
  RngStream rng(3);
  for (int rep = 0; rep < 40; ++rep) {
    const Admg g = oracle::random_admg(1 + rep % 10, 0.2, 0.25, rng);
    std::vector<int> seen(g.size(), 0);
    for (const auto& block : districts(g)) {
      for (NodeIndex n : block) ++seen[n];
    }
    for (int c : seen) EXPECT_EQ(c, 1);
    // No bi-directed edge crosses blocks.
    std::vector<std::size_t> block_of(g.size());
    const auto parts = districts(g);
    for (std::size_t b = 0; b < parts.size(); ++b) {
      for (NodeIndex n : parts[b]) block_of[n] = b;
    }
    for (const auto& [a, b] : g.bidirected_edges()) EXPECT_EQ(block_of[a], block_of[b]);
  }
}

TEST(ChooseOrder, HubLastNeedsOneInversion) {
  const std::size_t q = 6;
  const Admg g = hub_graph(q);
  const SamplingOrder last({1, 2, 3, 4, 5, 0});
  const auto p = inversion_profile(g, last);
  EXPECT_EQ(p.regression_events, 1u);
  EXPECT_EQ(p.completion_solves, 0u);
  EXPECT_DOUBLE_EQ(p.cost, 0.0);
}

TEST(ChooseOrder, HubSecondNeedsGrowingInversions) {
  const std::size_t q = 6;
  const Admg g = hub_graph(q);
  const SamplingOrder second({1, 0, 2, 3, 4, 5});
  const auto p = inversion_profile(g, second);
  EXPECT_EQ(p.regression_events, q - 1);
  ASSERT_EQ(p.regression_sizes.size(), q - 1);
  for (std::size_t k = 1; k < p.regression_sizes.size(); ++k) {
    EXPECT_GT(p.regression_sizes[k], p.regression_sizes[k - 1]);
  }
  EXPECT_EQ(p.completion_solves, q - 2);
  EXPECT_GT(p.cost, 0.0);
}

TEST(ChooseOrder, EmptyGraphHasNoInversions) {
  RngStream rng(9);
  const Admg g = oracle::random_admg(5, 0.4, 0.0, rng);
  for (const auto& order : {SamplingOrder::identity(5), SamplingOrder({4, 2, 0, 3, 1})}) {
    const auto p = inversion_profile(g, order);
    EXPECT_EQ(p.regression_events, 0u);
    EXPECT_EQ(p.completion_solves, 0u);
  }
}

TEST(ChooseOrder, GreedyMovesHubLast) {
  const Admg g = hub_graph(7);
  const SamplingOrder o = choose_order(g, OrderStrategy::kGreedy);
  EXPECT_EQ(o.at(6), 0u);
  EXPECT_DOUBLE_EQ(inversion_profile(g, o).cost, 0.0);
}

TEST(ChooseOrder, GivenOrderIsKept) {
  const Admg g = hub_graph(4);
  const SamplingOrder given({2, 0, 3, 1});
  EXPECT_EQ(choose_order(g, OrderStrategy::kGiven, given), given);
  EXPECT_EQ(choose_order(g, OrderStrategy::kGiven), SamplingOrder::identity(4));
}

TEST(ChooseOrder, GreedyNeverWorseThanDeclarationOrder) {
  RngStream rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t q = 2 + static_cast<std::size_t>(rep % 11);
    const Admg g = oracle::random_admg(q, 0.15, 0.1 + 0.4 * rng.uniform(), rng);
    const double greedy = inversion_profile(g, choose_order(g, OrderStrategy::kGreedy)).cost;
    const double declared = inversion_profile(g, SamplingOrder::identity(q)).cost;
    EXPECT_LE(greedy, declared) << g.render();
  }
}

TEST(ChooseOrder, GreedyIsDeterministic) {
  RngStream rng(23);
  const Admg g = oracle::random_admg(10, 0.2, 0.4, rng);
  EXPECT_EQ(choose_order(g, OrderStrategy::kGreedy), choose_order(g, OrderStrategy::kGreedy));
}
