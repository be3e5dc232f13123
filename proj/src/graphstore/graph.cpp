#include "nodegae/graphstore/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "nodegae/errors.hpp"

namespace nodegae {

CsrGraph CsrGraph::from_edges(std::size_t num_nodes, const std::vector<Edge>& edges) {
  std::vector<std::vector<NodeId>> adj(num_nodes);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= num_nodes || static_cast<std::size_t>(v) >= num_nodes) {
      throw IndexError("CsrGraph: edge (" + std::to_string(u) + "," + std::to_string(v) + ") outside " +
                       std::to_string(num_nodes) + " nodes");
    }
    if (u == v) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  CsrGraph g;
  g.offsets_.reserve(num_nodes + 1);
  g.offsets_.push_back(0);
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    g.neighbors_.insert(g.neighbors_.end(), list.begin(), list.end());
    g.offsets_.push_back(g.neighbors_.size());
  }
  return g;
}

void CsrGraph::check_node(NodeId v) const {
  if (v < 0 || static_cast<std::size_t>(v) >= num_nodes()) {
    throw IndexError("node " + std::to_string(v) + " out of range for graph with " + std::to_string(num_nodes()) +
                     " nodes");
  }
}

std::size_t CsrGraph::degree(NodeId v) const {
  check_node(v);
  return offsets_[v + 1] - offsets_[v];
}

std::span<const NodeId> CsrGraph::neighbors(NodeId v) const {
  check_node(v);
  return {neighbors_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

bool CsrGraph::has_edge(NodeId u, NodeId v) const {
  auto nb = neighbors(u);
  check_node(v);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> CsrGraph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; static_cast<std::size_t>(u) < num_nodes(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

std::size_t TextGraph::num_classes() const {
  std::int64_t top = -1;
  for (std::int64_t y : labels) top = std::max(top, y);
  return static_cast<std::size_t>(top + 1);
}

std::vector<NodeId> k_hop_neighbors(const CsrGraph& g, NodeId node, std::size_t k) {
  if (node < 0 || static_cast<std::size_t>(node) >= g.num_nodes()) {
    throw IndexError("k_hop_neighbors: node " + std::to_string(node) + " out of range");
  }
  if (k == 0) throw ConfigError("k_hop_neighbors: k must be >= 1");
  std::vector<NodeId> frontier{node};
  std::vector<char> seen(g.num_nodes(), 0);
  seen[node] = 1;
  for (std::size_t depth = 0; depth < k && !frontier.empty(); ++depth) {
    std::vector<NodeId> next;
    for (NodeId u : frontier) {
      for (NodeId v : g.neighbors(u)) {
        if (!seen[v]) {
          seen[v] = 1;
          next.push_back(v);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(frontier.begin(), frontier.end());
  return frontier;
}

std::optional<NodeId> sample_positive(const CsrGraph& g, NodeId node, std::size_t k, Rng& rng) {
  const auto hop = k_hop_neighbors(g, node, k);
  if (hop.empty()) return std::nullopt;
  return hop[rng.below(hop.size())];
}

HopIndex::HopIndex(const CsrGraph& g, std::size_t max_hop) : max_hop_(max_hop) {
  if (max_hop == 0) throw ConfigError("HopIndex: max_hop must be >= 1");
  hops_.resize(g.num_nodes());
  std::vector<std::size_t> dist(g.num_nodes());
  constexpr std::size_t kUnseen = static_cast<std::size_t>(-1);
  for (NodeId s = 0; static_cast<std::size_t>(s) < g.num_nodes(); ++s) {
    auto& per_hop = hops_[s];
    per_hop.assign(max_hop, {});
    std::fill(dist.begin(), dist.end(), kUnseen);
    dist[s] = 0;
    std::deque<NodeId> queue{s};
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      if (dist[u] == max_hop) continue;
      for (NodeId v : g.neighbors(u)) {
        if (dist[v] != kUnseen) continue;
        dist[v] = dist[u] + 1;
        per_hop[dist[v] - 1].push_back(v);
        queue.push_back(v);
      }
    }
    for (auto& list : per_hop) std::sort(list.begin(), list.end());
  }
}

const std::vector<NodeId>& HopIndex::at(NodeId node, std::size_t k) const {
  if (node < 0 || static_cast<std::size_t>(node) >= hops_.size()) throw IndexError("HopIndex: node out of range");
  if (k == 0 || k > max_hop_) throw ConfigError("HopIndex: hop " + std::to_string(k) + " not indexed");
  return hops_[node][k - 1];
}

std::optional<NodeId> HopIndex::sample(NodeId node, std::size_t k, Rng& rng) const {
  const auto& hop = at(node, k);
  if (hop.empty()) return std::nullopt;
  return hop[rng.below(hop.size())];
}

CsrMatrix normalized_adjacency(const CsrGraph& g, bool add_self_loops) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt_deg(n, 0.0);
  for (NodeId v = 0; static_cast<std::size_t>(v) < n; ++v) {
    const double deg = static_cast<double>(g.degree(v) + (add_self_loops ? 1 : 0));
    inv_sqrt_deg[v] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  CsrMatrix m;
  m.rows = m.cols = n;
  m.offsets.push_back(0);
  for (NodeId u = 0; static_cast<std::size_t>(u) < n; ++u) {
    auto nb = g.neighbors(u);
    bool placed_self = !add_self_loops;
    for (NodeId v : nb) {
      if (!placed_self && v > u) {
        m.indices.push_back(u);
        m.values.push_back(inv_sqrt_deg[u] * inv_sqrt_deg[u]);
        placed_self = true;
      }
      m.indices.push_back(v);
      m.values.push_back(inv_sqrt_deg[u] * inv_sqrt_deg[v]);
    }
    if (!placed_self) {
      m.indices.push_back(u);
      m.values.push_back(inv_sqrt_deg[u] * inv_sqrt_deg[u]);
    }
    m.offsets.push_back(m.indices.size());
  }
  return m;
}

CsrMatrix mean_adjacency(const CsrGraph& g) {
  const std::size_t n = g.num_nodes();
  CsrMatrix m;
  m.rows = m.cols = n;
  m.offsets.push_back(0);
  for (NodeId u = 0; static_cast<std::size_t>(u) < n; ++u) {
    auto nb = g.neighbors(u);
    const double w = nb.empty() ? 0.0 : 1.0 / static_cast<double>(nb.size());
    for (NodeId v : nb) {
      m.indices.push_back(v);
      m.values.push_back(w);
    }
    m.offsets.push_back(m.indices.size());
  }
  return m;
}

}  // namespace nodegae
