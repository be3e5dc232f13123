#pragma once

#include <cstdint>

#include "nodegae/graphstore/graph.hpp"

namespace nodegae {

/// Planted-partition textual graph: each class owns a keyword pool, all
/// classes share a common pool, and edges are drawn independently with a
/// higher probability inside a class than across classes.
struct SyntheticGraphSpec {
  std::size_t num_nodes = 512;
  std::size_t num_classes = 6;
  std::size_t keywords_per_class = 24;
  std::size_t shared_pool_size = 120;
  std::size_t doc_length_min = 8;
  std::size_t doc_length_max = 16;
  // Probability that a document token comes from the node's class pool.
  double class_token_fraction = 0.7;
  double intra_class_edge_prob = 0.05;
  double inter_class_edge_prob = 0.002;
  std::uint64_t seed = 1;

  /// Throws ConfigError on an impossible spec.
  void validate() const;
};

/// Labels every node, splits nodes 54/18/28 into train/val/test.
TextGraph generate_synthetic(const SyntheticGraphSpec& spec);

}  // namespace nodegae
