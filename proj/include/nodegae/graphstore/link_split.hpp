#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "nodegae/graphstore/graph.hpp"

namespace nodegae {

/// Positive edges partitioned train/val/test, each with an equal number of
/// negatives drawn uniformly from non-edges of the full graph.
struct LinkSplit {
  std::size_t num_nodes = 0;
  std::vector<Edge> train_pos, val_pos, test_pos;
  std::vector<Edge> train_neg, val_neg, test_neg;
  std::uint64_t seed = 0;

  /// Message-passing graph built from train positives only.
  CsrGraph train_graph() const;

  bool operator==(const LinkSplit&) const = default;
};

/// Throws ConfigError when ratios do not sum to 1 or the graph has fewer than
/// 10 edges; partition sizes are rounded from the exact ratios.
LinkSplit build_link_split(const CsrGraph& g, std::array<double, 3> ratios = {0.7, 0.2, 0.1},
                           std::uint64_t seed = 0);

/// Six edge files in the "src<TAB>dst" format: {train,val,test}_{pos,neg}.tsv.
void save_link_split(const LinkSplit& split, const std::filesystem::path& dir);
LinkSplit load_link_split(const std::filesystem::path& dir, std::size_t num_nodes);

}  // namespace nodegae
