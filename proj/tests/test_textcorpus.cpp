#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "nodegae/errors.hpp"
#include "nodegae/rng.hpp"
#include "nodegae/textcorpus/synthetic.hpp"
#include "nodegae/textcorpus/textgraph_io.hpp"
#include "nodegae/textcorpus/vocabulary.hpp"

using namespace nodegae;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nodegae_textcorpus_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

std::vector<std::string> random_corpus(Rng& rng, std::size_t docs) {
  static const std::vector<std::string> words{"graph", "node", "edge", "text", "model", "Loss", "deep",
                                              "auto", "encoder", "x1", "y2", "zeta"};
  std::vector<std::string> out;
  for (std::size_t d = 0; d < docs; ++d) {
    std::string s;
    const std::size_t len = rng.below(9);
    for (std::size_t i = 0; i < len; ++i) {
      s += words[rng.below(words.size())];
      s += rng.bernoulli(0.2) ? ", " : " ";
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("vocabulary of an exhaustive tiny corpus") {
  const auto v = build_vocab({"a b", "a c"}, 7);
  CHECK(v.size() == 7);
  CHECK(v.id("a") == 4);
  CHECK(v.id("b") == 5);
  CHECK(v.id("c") == 6);
  CHECK(v.token(kPad) == v.tokens()[0]);
  CHECK(v.id("zzz") == kUnk);
}

TEST_CASE("most frequent token gets the first free id") {
  Rng rng(9);
  std::vector<std::string> docs;
  std::map<std::string, std::size_t> counts;
  const std::vector<std::string> filler{"alpha", "beta", "gamma", "delta"};
  for (std::size_t i = 0; i < 1000; ++i) {
    std::string doc = "graph";
    for (std::size_t k = 0; k < 2; ++k) doc += " " + filler[rng.below(filler.size())];
    docs.push_back(doc);
    std::istringstream ss(doc);
    std::string w;
    while (ss >> w) ++counts[w];
  }
  const auto top = std::max_element(counts.begin(), counts.end(),
                                    [](const auto& a, const auto& b) { return a.second < b.second; });
  REQUIRE(top->first == "graph");
  CHECK(build_vocab(docs, 64).id("graph") == 4);
}

TEST_CASE("vocabulary ties break lexicographically and empty texts are harmless") {
  const auto v = build_vocab({"", "b a", "c"}, 6);
  CHECK(v.size() == 6);
  CHECK(v.id("a") == 4);
  CHECK(v.id("b") == 5);
  CHECK_FALSE(v.contains("c"));
}

TEST_CASE("vocabulary rejects a cap below five") {
  CHECK_THROWS_AS(build_vocab({"a"}, 4), ConfigError);
  CHECK_THROWS_AS(build_vocab({}, 10), ConfigError);
}

TEST_CASE("tokenize lowercases and drops punctuation") {
  CHECK(tokenize("Hello, World!  foo-bar") == std::vector<std::string>{"hello", "world", "foo", "bar"});
}

TEST_CASE("encode examples") {
  const auto v = build_vocab({"a b", "a c"}, 7);
  CHECK(encode("", v, 8).ids == std::vector<TokenId>{kEos});
  CHECK(encode("x y z w", v, 4).ids == std::vector<TokenId>{kUnk, kUnk, kUnk, kEos});
  CHECK(encode("a b c a", v, 3).ids == std::vector<TokenId>{4, 5, kEos});
  CHECK(encode("a b", v, 1).ids == std::vector<TokenId>{kEos});
  CHECK(pad(encode("a", v, 8), 4).ids == std::vector<TokenId>{4, kEos, kPad, kPad});
}

TEST_CASE("decode of encode gives the in-vocabulary tokens and re-encodes identically") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const auto corpus = random_corpus(rng, 30);
    const auto vocab = build_vocab(corpus, 5 + rng.below(10));
    for (const auto& text : corpus) {
      const std::size_t max_len = 1 + rng.below(12);
      const auto seq = encode(text, vocab, max_len);
      REQUIRE(seq.ids.back() == kEos);
      REQUIRE(seq.size() <= max_len);
      for (TokenId id : seq.ids) REQUIRE(static_cast<std::size_t>(id) < vocab.size());

      std::vector<std::string> expected;
      for (const auto& t : tokenize(text)) expected.push_back(vocab.contains(t) ? t : vocab.token(kUnk));
      if (expected.size() > max_len - 1) expected.resize(max_len - 1);
      CHECK(decode_tokens(seq, vocab) == expected);
      CHECK(encode(decode(seq, vocab), vocab, max_len) == seq);
    }
  }
}

TEST_CASE("synthetic examples") {
  SyntheticGraphSpec two;
  two.num_nodes = 2;
  two.num_classes = 1;
  two.intra_class_edge_prob = 1.0;
  CHECK(generate_synthetic(two).graph.num_edges() == 1);

  SyntheticGraphSpec none;
  none.num_nodes = 40;
  none.intra_class_edge_prob = 0.0;
  none.inter_class_edge_prob = 0.0;
  CHECK(generate_synthetic(none).graph.num_edges() == 0);

  SyntheticGraphSpec s;
  s.num_nodes = 100;
  CHECK(generate_synthetic(s) == generate_synthetic(s));

  SyntheticGraphSpec bad;
  bad.keywords_per_class = 0;
  CHECK_THROWS_AS(generate_synthetic(bad), ConfigError);
  bad = SyntheticGraphSpec{};
  bad.intra_class_edge_prob = 1.5;
  CHECK_THROWS_AS(generate_synthetic(bad), ConfigError);
}

TEST_CASE("synthetic split is 54/18/28 and labels every node") {
  SyntheticGraphSpec s;
  s.num_nodes = 500;
  const auto g = generate_synthetic(s);
  CHECK(g.splits.train.size() == 270);
  CHECK(g.splits.val.size() == 90);
  CHECK(g.splits.test.size() == 140);
  std::vector<NodeId> all = g.splits.train;
  all.insert(all.end(), g.splits.val.begin(), g.splits.val.end());
  all.insert(all.end(), g.splits.test.begin(), g.splits.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == static_cast<NodeId>(i));
  for (auto y : g.labels) CHECK((y >= 0 && y < 6));
  CHECK(g.num_classes() == 6);
}

TEST_CASE("synthetic graphs are homophilous over five seeds") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticGraphSpec s;
    s.seed = seed;
    const auto g = generate_synthetic(s);
    std::size_t intra = 0, inter = 0;
    for (auto [u, v] : g.graph.edge_list()) (g.labels[u] == g.labels[v] ? intra : inter)++;
    INFO("seed " << seed);
    CHECK(intra > inter);
  }
}

TEST_CASE("class keywords dominate documents at the configured fraction") {
  SyntheticGraphSpec s;
  s.num_nodes = 200;
  s.class_token_fraction = 1.0;
  const auto g = generate_synthetic(s);
  // With fraction 1 no two classes share any document token.
  std::map<std::string, std::int64_t> owner;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    for (const auto& t : tokenize(g.texts[v])) {
      auto [it, fresh] = owner.emplace(t, g.labels[v]);
      CHECK(it->second == g.labels[v]);
    }
  }
}

TEST_CASE("text escaping round-trips") {
  const std::string raw = "tab\there\nnew\\line";
  CHECK(escape_text(raw).find('\t') == std::string::npos);
  CHECK(unescape_text(escape_text(raw)) == raw);
}

TEST_CASE("loading deduplicates edges") {
  const auto dir = scratch_dir("dedup");
  write_file(dir / "nodes.tsv", "0\t0\tfoo\n1\t1\tbar\n2\t-1\tbaz\n");
  write_file(dir / "edges.tsv", "0\t1\n1\t0\n");
  write_file(dir / "splits.txt", "train:0\nval:1\ntest:\n");
  const auto g = load_textgraph(DatasetPaths::in_dir(dir));
  CHECK(g.num_nodes() == 3);
  CHECK(g.graph.num_edges() == 1);
  CHECK(g.labels[2] == -1);
}

TEST_CASE("loading rejects malformed files") {
  const auto dir = scratch_dir("bad");
  const auto p = DatasetPaths::in_dir(dir);
  auto expect_error = [&](const std::string& nodes, const std::string& edges, const std::string& splits,
                          const std::string& needle) {
    write_file(p.nodes, nodes);
    write_file(p.edges, edges);
    write_file(p.splits, splits);
    try {
      load_textgraph(p);
      FAIL("expected IngestionError");
    } catch (const IngestionError& e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  const std::string good_splits = "train:0\nval:\ntest:\n";
  expect_error("0\t0\ta\n2\t0\tb\n", "", "train:0,2\nval:\ntest:\n", "nodes.tsv");
  expect_error("0\t0\ta\n1\t-1\tb\n", "0\t1\n1\t5\n", good_splits, ":2");
  expect_error("0\t0\ta\n1\t0\tb\n", "", "train:0,1\nval:1\ntest:\n", "splits.txt");
  expect_error("0\t0\ta\n1\t0\tb\n", "", good_splits, "splits.txt");
  expect_error("zero\t0\ta\n", "", good_splits, "nodes.tsv");
}

TEST_CASE("save then load is the identity") {
  SyntheticGraphSpec s;
  s.num_nodes = 100;
  auto g = generate_synthetic(s);
  g.texts[3] = "with\ttab and\nnewline \\ slash";
  const auto dir = scratch_dir("roundtrip");
  const auto p = DatasetPaths::in_dir(dir);
  save_textgraph(g, p);
  const auto loaded = load_textgraph(p);
  CHECK(loaded == g);

  CHECK(loaded.num_nodes() == count_lines(p.nodes));
  CHECK(loaded.graph.num_edges() == count_lines(p.edges));

  const auto dir2 = scratch_dir("roundtrip2");
  save_textgraph(loaded, DatasetPaths::in_dir(dir2));
  CHECK(load_textgraph(DatasetPaths::in_dir(dir2)) == g);
}
