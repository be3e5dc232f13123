#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nodegae/diffcore/sparse.hpp"
#include "nodegae/rng.hpp"

namespace nodegae {

using NodeId = std::int64_t;
using Edge = std::pair<NodeId, NodeId>;

/// Undirected graph in CSR form. Neighbor lists are sorted and unique; no
/// self-loops are stored.
class CsrGraph {
 public:
  CsrGraph() = default;

  /// Symmetrizes and deduplicates the given pairs; self-loops are dropped.
  static CsrGraph from_edges(std::size_t num_nodes, const std::vector<Edge>& edges);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const { return neighbors_.size() / 2; }
  std::size_t degree(NodeId v) const;
  std::span<const NodeId> neighbors(NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const;

  /// Each undirected edge once, as (u, v) with u < v, in lexicographic order.
  std::vector<Edge> edge_list() const;

  const std::vector<std::size_t>& offsets() const { return offsets_; }

  bool operator==(const CsrGraph&) const = default;

 private:
  void check_node(NodeId v) const;

  std::vector<std::size_t> offsets_;
  std::vector<NodeId> neighbors_;
};

struct Splits {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;

  bool operator==(const Splits&) const = default;
};

/// A graph whose nodes carry raw text and optional class labels (-1 = none).
struct TextGraph {
  CsrGraph graph;
  std::vector<std::string> texts;
  std::vector<std::int64_t> labels;
  Splits splits;

  std::size_t num_nodes() const { return graph.num_nodes(); }
  std::size_t num_classes() const;

  bool operator==(const TextGraph&) const = default;
};

/// Nodes at shortest-path distance exactly k, sorted ascending.
std::vector<NodeId> k_hop_neighbors(const CsrGraph& g, NodeId node, std::size_t k);

/// Uniform draw from k_hop_neighbors(node, k); nullopt when that set is empty.
std::optional<NodeId> sample_positive(const CsrGraph& g, NodeId node, std::size_t k, Rng& rng);

/// Precomputed exact-distance hop sets for hops 1..max_hop of every node.
class HopIndex {
 public:
  HopIndex(const CsrGraph& g, std::size_t max_hop);

  std::size_t max_hop() const { return max_hop_; }
  const std::vector<NodeId>& at(NodeId node, std::size_t k) const;
  std::optional<NodeId> sample(NodeId node, std::size_t k, Rng& rng) const;

 private:
  std::size_t max_hop_;
  std::vector<std::vector<std::vector<NodeId>>> hops_;  // [node][k-1]
};

/// D^(-1/2) A D^(-1/2), with A + I used instead of A when add_self_loops is
/// set. Degree-zero rows and columns are zero.
CsrMatrix normalized_adjacency(const CsrGraph& g, bool add_self_loops);

/// Row-normalized adjacency D^(-1) A (neighbor mean); isolated rows are zero.
CsrMatrix mean_adjacency(const CsrGraph& g);

}  // namespace nodegae
