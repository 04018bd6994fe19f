#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace admg {

using NodeIndex = std::size_t;
using Edge = std::pair<NodeIndex, NodeIndex>;

/// Acyclic directed mixed graph. Node indices follow declaration order.
/// Directed edges are stored as (parent, child); bi-directed edges as
/// (smaller index, larger index). Immutable once constructed.
class Admg {
 public:
  Admg() = default;

  /// Validates every invariant; failures throw GraphParseError with line 0.
  Admg(std::vector<std::string> names, std::vector<bool> latent, std::vector<Edge> directed,
       std::vector<Edge> bidirected);

  /// Parses the text format:
  ///   node <name> [latent]
  ///   <a> -> <b>
  ///   <a> <-> <b>
  /// Statements are separated by newlines or ';' and '#' starts a comment.
  /// When the text has no `node` statements and `declared` is empty, nodes
  /// are declared implicitly by first appearance in an edge. Otherwise every
  /// edge endpoint must be declared.
  static Admg parse(std::string_view text, std::span<const std::string> declared = {});

  std::string render() const;

  std::size_t size() const { return names_.size(); }
  const std::string& name(NodeIndex i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<NodeIndex> find(std::string_view name) const;
  /// Like find() but throws ValidationError for unknown names.
  NodeIndex index_of(std::string_view name) const;

  bool is_latent(NodeIndex i) const { return latent_.at(i); }
  std::vector<NodeIndex> observed_nodes() const;
  std::vector<NodeIndex> latent_nodes() const;

  bool has_directed(NodeIndex parent, NodeIndex child) const;
  bool has_bidirected(NodeIndex a, NodeIndex b) const;

  const std::vector<NodeIndex>& parents(NodeIndex i) const { return parents_.at(i); }
  const std::vector<NodeIndex>& children(NodeIndex i) const { return children_.at(i); }
  const std::vector<NodeIndex>& spouses(NodeIndex i) const { return spouses_.at(i); }

  const std::vector<Edge>& directed_edges() const { return directed_; }
  const std::vector<Edge>& bidirected_edges() const { return bidirected_; }

  std::vector<NodeIndex> topological_order() const;

  bool operator==(const Admg& other) const;

 private:
  void build_indices();

  std::vector<std::string> names_;
  std::vector<bool> latent_;
  std::vector<Edge> directed_;
  std::vector<Edge> bidirected_;
  std::vector<std::vector<NodeIndex>> parents_;
  std::vector<std::vector<NodeIndex>> children_;
  std::vector<std::vector<NodeIndex>> spouses_;
  std::vector<char> bi_adjacent_;
};

/// A permutation of the nodes; position k holds the k-th node to be processed.
class SamplingOrder {
 public:
  SamplingOrder() = default;
  /// Throws ValidationError unless `nodes` is a permutation of 0..n-1.
  explicit SamplingOrder(std::vector<NodeIndex> nodes);
  static SamplingOrder identity(std::size_t n);

  std::size_t size() const { return nodes_.size(); }
  NodeIndex at(std::size_t position) const { return nodes_.at(position); }
  std::size_t position_of(NodeIndex node) const { return positions_.at(node); }
  const std::vector<NodeIndex>& nodes() const { return nodes_; }

  bool operator==(const SamplingOrder& other) const { return nodes_ == other.nodes_; }

 private:
  std::vector<NodeIndex> nodes_;
  std::vector<std::size_t> positions_;
};

/// Predecessors of the node at `position`, split into bi-directed neighbours
/// and the rest. Both lists hold node indices in order position.
struct SpousePartition {
  std::vector<NodeIndex> spouses;
  std::vector<NodeIndex> non_spouses;
};

/// `position` is 0-based; throws std::out_of_range past the end.
SpousePartition spouse_partition(const Admg& g, const SamplingOrder& order, std::size_t position);

/// Connected components of the bi-directed subgraph, each sorted, ordered by
/// smallest member.
std::vector<std::vector<NodeIndex>> districts(const Admg& g);

enum class OrderStrategy { kGiven, kGreedy };

/// Per-order matrix work of the covariance sampler.
///
/// A regression event happens at every position with a non-empty preceding
/// spouse set: that node is regressed on all of its predecessors. A
/// completion solve happens when the preceding non-spouse set is also
/// non-empty; it needs a factorization of the sampled covariance block of the
/// non-spouses, which is the only per-draw matrix factorization.
struct InversionProfile {
  std::size_t regression_events = 0;
  std::vector<std::size_t> regression_sizes;
  std::size_t completion_solves = 0;
  std::vector<std::size_t> completion_sizes;
  /// Sum of cubed completion sizes; the quantity the greedy order minimizes.
  double cost = 0.0;
};

InversionProfile inversion_profile(const Admg& g, const SamplingOrder& order);

/// kGiven returns `given` (identity when absent). kGreedy fills the order
/// from the back, each time placing last the node whose completion cost
/// against all remaining nodes is smallest (ties: latest declared), and
/// falls back to declaration order if that is not strictly cheaper.
SamplingOrder choose_order(const Admg& g, OrderStrategy strategy,
                           const std::optional<SamplingOrder>& given = std::nullopt);

}  // namespace admg
