#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nodegae/graphstore/graph.hpp"

namespace nodegae {

// Dataset files:
//   nodes:  "<id>\t<label>\t<text>" per line, label -1 when unlabeled; ids
//           must be exactly 0..n-1 in order. Text escapes: \t \n \\.
//   edges:  "<src>\t<dst>" per line.
//   splits: "train:<ids>", "val:<ids>", "test:<ids>" with comma-separated ids.

struct DatasetPaths {
  std::filesystem::path nodes;
  std::filesystem::path edges;
  std::filesystem::path splits;

  /// nodes.tsv, edges.tsv, splits.txt inside dir.
  static DatasetPaths in_dir(const std::filesystem::path& dir);
};

std::string escape_text(std::string_view raw);
std::string unescape_text(std::string_view escaped);

/// Throws IngestionError (with file and line) on malformed content, node id
/// gaps, dangling edge endpoints, overlapping splits, or labeled nodes not
/// covered by any split.
TextGraph load_textgraph(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path,
                         const std::filesystem::path& splits_path);
inline TextGraph load_textgraph(const DatasetPaths& p) { return load_textgraph(p.nodes, p.edges, p.splits); }

void save_textgraph(const TextGraph& g, const DatasetPaths& paths);

std::vector<Edge> read_edges(const std::filesystem::path& path, std::size_t num_nodes);
void write_edges(const std::filesystem::path& path, const std::vector<Edge>& edges);

}  // namespace nodegae
