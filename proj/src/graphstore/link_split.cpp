#include "nodegae/graphstore/link_split.hpp"

#include <cmath>
#include <set>

#include "nodegae/errors.hpp"
#include "nodegae/textcorpus/textgraph_io.hpp"

namespace nodegae {

CsrGraph LinkSplit::train_graph() const { return CsrGraph::from_edges(num_nodes, train_pos); }

LinkSplit build_link_split(const CsrGraph& g, std::array<double, 3> ratios, std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("build_link_split: ratios must sum to 1");
  for (double r : ratios) {
    if (r < 0.0) throw ConfigError("build_link_split: ratios must be non-negative");
  }
  auto edges = g.edge_list();
  if (edges.size() < 10) throw ConfigError("build_link_split: graph needs at least 10 edges");

  const std::size_t n = g.num_nodes();
  const std::size_t total = edges.size();
  const std::size_t n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(total)));
  const std::size_t n_val = std::min(total - n_train,
                                     static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(total))));
  const std::size_t max_pairs = n * (n - 1) / 2;
  if (max_pairs - total < total) throw ConfigError("build_link_split: not enough non-edges for 1:1 negatives");

  Rng rng(seed);
  rng.shuffle(edges);
  LinkSplit split;
  split.num_nodes = n;
  split.seed = seed;
  split.train_pos.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val_pos.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train),
                       edges.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test_pos.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), edges.end());

  // Rejection sampling of distinct unordered non-edges.
  std::set<Edge> taken;
  auto draw = [&](std::size_t count, std::vector<Edge>& out) {
    while (out.size() < count) {
      NodeId u = static_cast<NodeId>(rng.below(n));
      NodeId v = static_cast<NodeId>(rng.below(n));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (g.has_edge(u, v) || !taken.insert({u, v}).second) continue;
      out.emplace_back(u, v);
    }
  };
  draw(split.train_pos.size(), split.train_neg);
  draw(split.val_pos.size(), split.val_neg);
  draw(split.test_pos.size(), split.test_neg);
  return split;
}

void save_link_split(const LinkSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_edges(dir / "train_pos.tsv", split.train_pos);
  write_edges(dir / "val_pos.tsv", split.val_pos);
  write_edges(dir / "test_pos.tsv", split.test_pos);
  write_edges(dir / "train_neg.tsv", split.train_neg);
  write_edges(dir / "val_neg.tsv", split.val_neg);
  write_edges(dir / "test_neg.tsv", split.test_neg);
}

LinkSplit load_link_split(const std::filesystem::path& dir, std::size_t num_nodes) {
  LinkSplit split;
  split.num_nodes = num_nodes;
  split.train_pos = read_edges(dir / "train_pos.tsv", num_nodes);
  split.val_pos = read_edges(dir / "val_pos.tsv", num_nodes);
  split.test_pos = read_edges(dir / "test_pos.tsv", num_nodes);
  split.train_neg = read_edges(dir / "train_neg.tsv", num_nodes);
  split.val_neg = read_edges(dir / "val_neg.tsv", num_nodes);
  split.test_neg = read_edges(dir / "test_neg.tsv", num_nodes);
  return split;
}

}  // namespace nodegae
