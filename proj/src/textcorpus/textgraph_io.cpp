#include "nodegae/textcorpus/textgraph_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "nodegae/errors.hpp"

namespace nodegae {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  throw IngestionError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IngestionError("cannot open " + path.string());
  return is;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

void write_id_list(std::ostream& os, const char* name, const std::vector<NodeId>& ids) {
  os << name << ':';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) os << ',';
    os << ids[i];
  }
  os << '\n';
}

}  // namespace

DatasetPaths DatasetPaths::in_dir(const std::filesystem::path& dir) {
  return {dir / "nodes.tsv", dir / "edges.tsv", dir / "splits.txt"};
}

std::string escape_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\\': out += "\\\\"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_text(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    if (escaped[i] == '\\' && i + 1 < escaped.size()) {
      const char n = escaped[i + 1];
      if (n == 't' || n == 'n' || n == '\\') {
        out.push_back(n == 't' ? '\t' : n == 'n' ? '\n' : '\\');
        ++i;
        continue;
      }
    }
    out.push_back(escaped[i]);
  }
  return out;
}

std::vector<Edge> read_edges(const std::filesystem::path& path, std::size_t num_nodes) {
  auto is = open_in(path);
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto parts = split(line, '\t');
    std::int64_t u = 0, v = 0;
    if (parts.size() != 2 || !parse_int(parts[0], u) || !parse_int(parts[1], v)) {
      fail(path, lineno, "expected '<src>\\t<dst>'");
    }
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= num_nodes || static_cast<std::size_t>(v) >= num_nodes) {
      fail(path, lineno, "dangling edge endpoint (" + std::to_string(u) + "," + std::to_string(v) + ")");
    }
    edges.emplace_back(u, v);
  }
  return edges;
}

void write_edges(const std::filesystem::path& path, const std::vector<Edge>& edges) {
  auto os = open_out(path);
  for (const auto& [u, v] : edges) os << u << '\t' << v << '\n';
}

TextGraph load_textgraph(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path,
                         const std::filesystem::path& splits_path) {
  TextGraph tg;
  {
    auto is = open_in(nodes_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto first = line.find('\t');
      const auto second = first == std::string::npos ? first : line.find('\t', first + 1);
      std::int64_t id = 0, label = 0;
      if (second == std::string::npos || !parse_int(std::string_view(line).substr(0, first), id) ||
          !parse_int(std::string_view(line).substr(first + 1, second - first - 1), label)) {
        fail(nodes_path, lineno, "expected '<id>\\t<label>\\t<text>'");
      }
      if (id != static_cast<std::int64_t>(tg.texts.size())) {
        fail(nodes_path, lineno, "node id " + std::to_string(id) + " breaks the dense sequence (expected " +
                                     std::to_string(tg.texts.size()) + ")");
      }
      if (label < -1) fail(nodes_path, lineno, "label must be >= -1");
      tg.labels.push_back(label);
      tg.texts.push_back(unescape_text(std::string_view(line).substr(second + 1)));
    }
  }
  const std::size_t n = tg.texts.size();
  if (n == 0) throw IngestionError(nodes_path.string() + ": no nodes");
  tg.graph = CsrGraph::from_edges(n, read_edges(edges_path, n));

  auto is = open_in(splits_path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<int> owner(n, -1);
  bool seen[3] = {false, false, false};
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) fail(splits_path, lineno, "expected '<name>:<ids>'");
    const std::string name = line.substr(0, colon);
    int which = name == "train" ? 0 : name == "val" ? 1 : name == "test" ? 2 : -1;
    if (which < 0) fail(splits_path, lineno, "unknown split '" + name + "'");
    if (seen[which]) fail(splits_path, lineno, "split '" + name + "' listed twice");
    seen[which] = true;
    auto& dst = which == 0 ? tg.splits.train : which == 1 ? tg.splits.val : tg.splits.test;
    const std::string_view ids = std::string_view(line).substr(colon + 1);
    if (ids.find_first_not_of(" ") == std::string_view::npos) continue;
    for (auto part : split(ids, ',')) {
      std::int64_t id = 0;
      if (!parse_int(part, id)) fail(splits_path, lineno, "bad node id '" + std::string(part) + "'");
      if (id < 0 || static_cast<std::size_t>(id) >= n) fail(splits_path, lineno, "node " + std::to_string(id) + " out of range");
      if (owner[id] >= 0) fail(splits_path, lineno, "node " + std::to_string(id) + " appears in more than one split");
      owner[id] = which;
      dst.push_back(id);
    }
  }
  if (!(seen[0] && seen[1] && seen[2])) throw IngestionError(splits_path.string() + ": train, val and test lines are required");
  for (std::size_t v = 0; v < n; ++v) {
    if (tg.labels[v] >= 0 && owner[v] < 0) {
      throw IngestionError(splits_path.string() + ": labeled node " + std::to_string(v) + " is in no split");
    }
  }
  return tg;
}

void save_textgraph(const TextGraph& g, const DatasetPaths& paths) {
  {
    auto os = open_out(paths.nodes);
    for (std::size_t v = 0; v < g.texts.size(); ++v) {
      os << v << '\t' << g.labels[v] << '\t' << escape_text(g.texts[v]) << '\n';
    }
  }
  write_edges(paths.edges, g.graph.edge_list());
  auto os = open_out(paths.splits);
  write_id_list(os, "train", g.splits.train);
  write_id_list(os, "val", g.splits.val);
  write_id_list(os, "test", g.splits.test);
}

}  // namespace nodegae
