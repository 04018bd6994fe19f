#include "admg/graph.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "admg/error.hpp"

namespace admg {

const char* to_string(GraphErrorKind kind) {
  switch (kind) {
    case GraphErrorKind::kSyntax: return "syntax error";
    case GraphErrorKind::kUndeclaredNode: return "undeclared node";
    case GraphErrorKind::kDuplicateNode: return "duplicate node";
    case GraphErrorKind::kDuplicateEdge: return "duplicate edge";
    case GraphErrorKind::kSelfLoop: return "self-loop";
    case GraphErrorKind::kCycle: return "directed cycle";
  }
  return "graph error";
}

namespace {

std::string describe(GraphErrorKind kind, std::size_t line, const std::string& detail) {
  std::ostringstream out;
  if (line > 0) out << "line " << line << ": ";
  out << to_string(kind);
  if (!detail.empty()) out << ": " << detail;
  return out.str();
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

struct RawEdge {
  std::string a;
  std::string b;
  bool bidirected;
  std::size_t line;
};

// Line of an edge closing a directed cycle (0 when lines are unknown).
std::optional<std::size_t> find_cycle(std::size_t n, const std::vector<Edge>& edges,
                                      const std::vector<std::size_t>& lines) {
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t e = 0; e < edges.size(); ++e) out[edges[e].first].push_back(e);
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::pair<NodeIndex, std::size_t>> stack;
  for (NodeIndex root = 0; root < n; ++root) {
    if (state[root] != 0) continue;
    stack.push_back({root, 0});
    state[root] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < out[node].size()) {
        const std::size_t e = out[node][next++];
        const NodeIndex child = edges[e].second;
        if (state[child] == 1) return lines.empty() ? 0 : lines[e];
        if (state[child] == 0) {
          state[child] = 1;
          stack.push_back({child, 0});
        }
      } else {
        state[node] = 2;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

}  // namespace

GraphParseError::GraphParseError(GraphErrorKind kind, std::size_t line, const std::string& detail)
    : ValidationError(describe(kind, line, detail)), kind_(kind), line_(line) {}

Admg::Admg(std::vector<std::string> names, std::vector<bool> latent, std::vector<Edge> directed,
           std::vector<Edge> bidirected)
    : names_(std::move(names)), latent_(std::move(latent)) {
  const std::size_t n = names_.size();
  if (latent_.size() != n) {
    throw GraphParseError(GraphErrorKind::kSyntax, 0, "latent flags do not match node count");
  }
  std::set<std::string> seen;
  for (const auto& nm : names_) {
    if (!is_identifier(nm)) throw GraphParseError(GraphErrorKind::kSyntax, 0, "bad node name '" + nm + "'");
    if (!seen.insert(nm).second) throw GraphParseError(GraphErrorKind::kDuplicateNode, 0, nm);
  }
  auto check = [&](const Edge& e) {
    if (e.first >= n || e.second >= n) {
      throw GraphParseError(GraphErrorKind::kUndeclaredNode, 0, "edge endpoint out of range");
    }
    if (e.first == e.second) throw GraphParseError(GraphErrorKind::kSelfLoop, 0, names_[e.first]);
  };
  std::set<Edge> dset;
  for (const auto& e : directed) {
    check(e);
    if (!dset.insert(e).second) {
      throw GraphParseError(GraphErrorKind::kDuplicateEdge, 0,
                            names_[e.first] + " -> " + names_[e.second]);
    }
  }
  std::set<Edge> bset;
  for (auto e : bidirected) {
    check(e);
    if (e.first > e.second) std::swap(e.first, e.second);
    if (!bset.insert(e).second) {
      throw GraphParseError(GraphErrorKind::kDuplicateEdge, 0,
                            names_[e.first] + " <-> " + names_[e.second]);
    }
  }
  directed_.assign(dset.begin(), dset.end());
  bidirected_.assign(bset.begin(), bset.end());
  if (find_cycle(n, directed_, {})) {
    throw GraphParseError(GraphErrorKind::kCycle, 0, "directed edges contain a cycle");
  }
  build_indices();
}

void Admg::build_indices() {
  const std::size_t n = names_.size();
  parents_.assign(n, {});
  children_.assign(n, {});
  spouses_.assign(n, {});
  bi_adjacent_.assign(n * n, 0);
  for (const auto& [p, c] : directed_) {
    parents_[c].push_back(p);
    children_[p].push_back(c);
  }
  for (const auto& [a, b] : bidirected_) {
    spouses_[a].push_back(b);
    spouses_[b].push_back(a);
    bi_adjacent_[a * n + b] = bi_adjacent_[b * n + a] = 1;
  }
  for (auto* lists : {&parents_, &children_, &spouses_}) {
    for (auto& l : *lists) std::sort(l.begin(), l.end());
  }
}

Admg Admg::parse(std::string_view text, std::span<const std::string> declared) {
  std::vector<std::string> names(declared.begin(), declared.end());
  std::vector<bool> latent(names.size(), false);
  std::map<std::string, NodeIndex, std::less<>> index;
  for (NodeIndex i = 0; i < names.size(); ++i) {
    if (!is_identifier(names[i])) {
      throw GraphParseError(GraphErrorKind::kSyntax, 0, "bad node name '" + names[i] + "'");
    }
    if (!index.emplace(names[i], i).second) {
      throw GraphParseError(GraphErrorKind::kDuplicateNode, 0, names[i]);
    }
  }
  bool strict = !names.empty();
  std::vector<RawEdge> raw;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto semi = line.find(';', start);
      std::string_view stmt =
          trim(line.substr(start, semi == std::string_view::npos ? line.size() - start : semi - start));
      start = semi == std::string_view::npos ? line.size() + 1 : semi + 1;
      if (stmt.empty()) continue;

      const auto tokens = split_ws(stmt);
      if (tokens.front() == "node") {
        strict = true;
        const bool ok = (tokens.size() == 2 || (tokens.size() == 3 && tokens[2] == "latent")) &&
                        is_identifier(tokens[1]);
        if (!ok) throw GraphParseError(GraphErrorKind::kSyntax, line_no, std::string(stmt));
        std::string nm(tokens[1]);
        if (!index.emplace(nm, names.size()).second) {
          throw GraphParseError(GraphErrorKind::kDuplicateNode, line_no, nm);
        }
        names.push_back(nm);
        latent.push_back(tokens.size() == 3);
        continue;
      }

      bool bidirected = true;
      auto arrow = stmt.find("<->");
      std::size_t arrow_len = 3;
      if (arrow == std::string_view::npos) {
        bidirected = false;
        arrow = stmt.find("->");
        arrow_len = 2;
      }
      if (arrow == std::string_view::npos) {
        throw GraphParseError(GraphErrorKind::kSyntax, line_no, std::string(stmt));
      }
      const auto a = trim(stmt.substr(0, arrow));
      const auto b = trim(stmt.substr(arrow + arrow_len));
      if (!is_identifier(a) || !is_identifier(b)) {
        throw GraphParseError(GraphErrorKind::kSyntax, line_no, std::string(stmt));
      }
      raw.push_back({std::string(a), std::string(b), bidirected, line_no});
    }
  }

  auto resolve = [&](const std::string& nm, std::size_t line) -> NodeIndex {
    if (auto it = index.find(nm); it != index.end()) return it->second;
    if (strict) throw GraphParseError(GraphErrorKind::kUndeclaredNode, line, nm);
    index.emplace(nm, names.size());
    names.push_back(nm);
    latent.push_back(false);
    return names.size() - 1;
  };

  std::vector<Edge> directed;
  std::vector<std::size_t> directed_lines;
  std::vector<Edge> bidirected;
  std::set<Edge> dset;
  std::set<Edge> bset;
  for (const auto& e : raw) {
    const NodeIndex a = resolve(e.a, e.line);
    const NodeIndex b = resolve(e.b, e.line);
    if (a == b) throw GraphParseError(GraphErrorKind::kSelfLoop, e.line, e.a);
    if (e.bidirected) {
      const Edge key{std::min(a, b), std::max(a, b)};
      if (!bset.insert(key).second) {
        throw GraphParseError(GraphErrorKind::kDuplicateEdge, e.line, e.a + " <-> " + e.b);
      }
      bidirected.push_back(key);
    } else {
      if (!dset.insert({a, b}).second) {
        throw GraphParseError(GraphErrorKind::kDuplicateEdge, e.line, e.a + " -> " + e.b);
      }
      directed.push_back({a, b});
      directed_lines.push_back(e.line);
    }
  }
  if (const auto line = find_cycle(names.size(), directed, directed_lines)) {
    throw GraphParseError(GraphErrorKind::kCycle, *line, "directed edges contain a cycle");
  }
  return Admg(std::move(names), std::move(latent), std::move(directed), std::move(bidirected));
}

std::string Admg::render() const {
  std::ostringstream out;
  for (NodeIndex i = 0; i < size(); ++i) {
    out << "node " << names_[i] << (latent_[i] ? " latent" : "") << '\n';
  }
  for (const auto& [p, c] : directed_) out << names_[p] << " -> " << names_[c] << '\n';
  for (const auto& [a, b] : bidirected_) out << names_[a] << " <-> " << names_[b] << '\n';
  return out.str();
}

std::optional<NodeIndex> Admg::find(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<NodeIndex>(it - names_.begin());
}

NodeIndex Admg::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ValidationError("unknown node '" + std::string(name) + "'");
}

std::vector<NodeIndex> Admg::observed_nodes() const {
  std::vector<NodeIndex> out;
  for (NodeIndex i = 0; i < size(); ++i) {
    if (!latent_[i]) out.push_back(i);
  }
  return out;
}

std::vector<NodeIndex> Admg::latent_nodes() const {
  std::vector<NodeIndex> out;
  for (NodeIndex i = 0; i < size(); ++i) {
    if (latent_[i]) out.push_back(i);
  }
  return out;
}

bool Admg::has_directed(NodeIndex parent, NodeIndex child) const {
  return std::binary_search(directed_.begin(), directed_.end(), Edge{parent, child});
}

bool Admg::has_bidirected(NodeIndex a, NodeIndex b) const {
  if (a >= size() || b >= size()) return false;
  return bi_adjacent_[a * size() + b] != 0;
}

std::vector<NodeIndex> Admg::topological_order() const {
  std::vector<std::size_t> indegree(size(), 0);
  for (const auto& e : directed_) ++indegree[e.second];
  std::vector<NodeIndex> out;
  std::set<NodeIndex> ready;
  for (NodeIndex i = 0; i < size(); ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  while (!ready.empty()) {
    const NodeIndex i = *ready.begin();
    ready.erase(ready.begin());
    out.push_back(i);
    for (NodeIndex c : children_[i]) {
      if (--indegree[c] == 0) ready.insert(c);
    }
  }
  return out;
}

bool Admg::operator==(const Admg& other) const {
  return names_ == other.names_ && latent_ == other.latent_ && directed_ == other.directed_ &&
         bidirected_ == other.bidirected_;
}

SamplingOrder::SamplingOrder(std::vector<NodeIndex> nodes) : nodes_(std::move(nodes)) {
  positions_.assign(nodes_.size(), nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (nodes_[k] >= nodes_.size() || positions_[nodes_[k]] != nodes_.size()) {
      throw ValidationError("sampling order is not a permutation of the nodes");
    }
    positions_[nodes_[k]] = k;
  }
}

SamplingOrder SamplingOrder::identity(std::size_t n) {
  std::vector<NodeIndex> nodes(n);
  std::iota(nodes.begin(), nodes.end(), NodeIndex{0});
  return SamplingOrder(std::move(nodes));
}

SpousePartition spouse_partition(const Admg& g, const SamplingOrder& order, std::size_t position) {
  if (position >= order.size() || order.size() != g.size()) {
    throw std::out_of_range("spouse_partition: position out of range");
  }
  SpousePartition out;
  const NodeIndex node = order.at(position);
  for (std::size_t k = 0; k < position; ++k) {
    const NodeIndex other = order.at(k);
    (g.has_bidirected(node, other) ? out.spouses : out.non_spouses).push_back(other);
  }
  return out;
}

std::vector<std::vector<NodeIndex>> districts(const Admg& g) {
  std::vector<NodeIndex> parent(g.size());
  std::iota(parent.begin(), parent.end(), NodeIndex{0});
  auto root = [&](NodeIndex x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [a, b] : g.bidirected_edges()) {
    const NodeIndex ra = root(a);
    const NodeIndex rb = root(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::map<NodeIndex, std::vector<NodeIndex>> blocks;
  for (NodeIndex i = 0; i < g.size(); ++i) blocks[root(i)].push_back(i);
  std::vector<std::vector<NodeIndex>> out;
  for (auto& [r, members] : blocks) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

InversionProfile inversion_profile(const Admg& g, const SamplingOrder& order) {
  InversionProfile p;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto part = spouse_partition(g, order, k);
    if (part.spouses.empty()) continue;
    ++p.regression_events;
    p.regression_sizes.push_back(k);
    if (!part.non_spouses.empty()) {
      ++p.completion_solves;
      p.completion_sizes.push_back(part.non_spouses.size());
      const double s = static_cast<double>(part.non_spouses.size());
      p.cost += s * s * s;
    }
  }
  return p;
}

namespace {

// Completion cost of placing `node` after all members of `before`.
double placement_cost(const Admg& g, NodeIndex node, const std::vector<NodeIndex>& before) {
  std::size_t sp = 0;
  std::size_t nsp = 0;
  for (NodeIndex other : before) {
    if (other == node) continue;
    (g.has_bidirected(node, other) ? sp : nsp) += 1;
  }
  if (sp == 0 || nsp == 0) return 0.0;
  const double s = static_cast<double>(nsp);
  return s * s * s;
}

}  // namespace

SamplingOrder choose_order(const Admg& g, OrderStrategy strategy,
                           const std::optional<SamplingOrder>& given) {
  if (given && given->size() != g.size()) {
    throw ValidationError("given sampling order has the wrong number of nodes");
  }
  const SamplingOrder declared = SamplingOrder::identity(g.size());
  if (strategy == OrderStrategy::kGiven) return given ? *given : declared;

  std::vector<NodeIndex> remaining = declared.nodes();
  std::vector<NodeIndex> reversed;
  while (!remaining.empty()) {
    std::size_t best = remaining.size() - 1;
    double best_cost = placement_cost(g, remaining[best], remaining);
    for (std::size_t k = remaining.size() - 1; k-- > 0;) {
      const double c = placement_cost(g, remaining[k], remaining);
      if (c < best_cost) {
        best_cost = c;
        best = k;
      }
    }
    reversed.push_back(remaining[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  SamplingOrder greedy(std::vector<NodeIndex>(reversed.rbegin(), reversed.rend()));
  if (inversion_profile(g, greedy).cost < inversion_profile(g, declared).cost) return greedy;
  return declared;
}

}  // namespace admg
