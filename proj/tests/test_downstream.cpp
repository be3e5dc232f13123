#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "nodegae/diffcore/ops.hpp"
#include "nodegae/downstream/embeddings.hpp"
#include "nodegae/downstream/gnn.hpp"
#include "nodegae/downstream/training.hpp"
#include "nodegae/errors.hpp"
#include "nodegae/evalmetrics/metrics.hpp"
#include "nodegae/textcorpus/synthetic.hpp"
#include "support/op_cases.hpp"
#include "support/oracles.hpp"

using namespace nodegae;

namespace {

using Mat = oracle::Dense;

Mat rows_of(const DiffTensor& t) {
  Mat m(t.dim(0), std::vector<double>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m[i][j] = t.at(i * t.dim(1) + j);
  return m;
}

Mat relu(Mat m) {
  for (auto& r : m)
    for (double& x : r) x = std::max(0.0, x);
  return m;
}

void set_values(DiffTensor& t, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) t.mutable_data()[i] = v[i];
}

void zero_all(const std::vector<DiffTensor>& params) {
  for (auto p : params)
    for (std::size_t i = 0; i < p.numel(); ++i) p.mutable_data()[i] = 0.0;
}

// C classes, one-hot features, a small homophilous graph.
TextGraph one_hot_graph(std::size_t n, std::size_t classes, EmbeddingMatrix& h) {
  TextGraph tg;
  std::vector<Edge> edges;
  for (std::size_t v = 0; v < n; ++v) {
    tg.labels.push_back(static_cast<std::int64_t>(v % classes));
    tg.texts.push_back("x");
    if (v + classes < n) edges.emplace_back(v, v + classes);
  }
  tg.graph = CsrGraph::from_edges(n, edges);
  for (std::size_t v = 0; v < n; ++v) {
    if (v % 10 < 6) tg.splits.train.push_back(static_cast<NodeId>(v));
    else if (v % 10 < 8) tg.splits.val.push_back(static_cast<NodeId>(v));
    else tg.splits.test.push_back(static_cast<NodeId>(v));
  }
  h = EmbeddingMatrix{n, classes, std::vector<double>(n * classes, 0.0), "shallow-baseline"};
  for (std::size_t v = 0; v < n; ++v) h.values[v * classes + v % classes] = 1.0;
  return tg;
}

}  // namespace

TEST_CASE("backbone names parse") {
  CHECK(parse_backbone("gcn") == Backbone::gcn);
  CHECK(backbone_name(Backbone::sage) == "sage");
  CHECK_THROWS_AS(parse_backbone("gat"), ConfigError);
}

TEST_CASE("gcn layer with identity adjacency and weights returns the input") {
  Rng rng(1);
  const auto h = oracle::random_tensor({4, 3}, rng, false);
  const auto eye = CsrMatrix::identity(3);
  auto w = DiffTensor::from({3, 3}, eye.to_dense());
  const auto out = gcn_layer(h, CsrMatrix::identity(4), w, false);
  for (std::size_t i = 0; i < 12; ++i) CHECK(out.at(i) == h.at(i));

  // Identity adjacency reduces to a dense layer bit for bit.
  const auto wr = oracle::random_tensor({3, 5}, rng, false);
  const auto dense = matmul(h, wr);
  const auto via_gcn = gcn_layer(h, CsrMatrix::identity(4), wr, false);
  for (std::size_t i = 0; i < 20; ++i) CHECK(via_gcn.at(i) == dense.at(i));
}

TEST_CASE("gcn layer on a single edge swaps rows") {
  const auto a = normalized_adjacency(CsrGraph::from_edges(2, {{0, 1}}), false);
  const auto h = DiffTensor::from({2, 2}, {1, 2, 3, 4});
  const auto w = DiffTensor::from({2, 2}, {1, 0, 0, 1});
  CHECK(rows_of(gcn_layer(h, a, w, false)) == Mat{{3, 4}, {1, 2}});
}

TEST_CASE("gcn layer matches the dense triple product") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const auto sg = oracle::random_graph(5, 0.5, rng);
    const auto g = CsrGraph::from_edges(5, sg.edges);
    const auto h = oracle::random_tensor({5, 3}, rng, false), w = oracle::random_tensor({3, 4}, rng, false);
    Mat adj(5, std::vector<double>(5, 0.0));
    for (auto [u, v] : sg.edges) adj[u][v] = adj[v][u] = 1.0;
    for (bool act : {false, true}) {
      Mat expected = oracle::dense_matmul(oracle::dense_matmul(oracle::dense_normalized_adjacency(adj, true), rows_of(h)),
                                          rows_of(w));
      if (act) expected = relu(expected);
      const Mat got = rows_of(gcn_layer(h, normalized_adjacency(g, true), w, act));
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(got[i][j] - expected[i][j]) < 1e-12);
    }
  }
  Rng rng(1);
  CHECK_THROWS_AS(gcn_layer(oracle::random_tensor({5, 3}, rng, false), CsrMatrix::identity(4),
                            oracle::random_tensor({3, 3}, rng, false), false),
                  DimensionError);
}

TEST_CASE("sage layer: isolated node uses only its own term") {
  Rng rng(2);
  const auto g = CsrGraph::from_edges(3, {{0, 1}});
  const auto h = oracle::random_tensor({3, 2}, rng, false);
  const auto ws = oracle::random_tensor({2, 2}, rng, false), wn = oracle::random_tensor({2, 2}, rng, false);
  const auto out = rows_of(sage_layer(h, g, ws, wn, false));
  const auto self = rows_of(matmul(h, ws));
  CHECK(out[2] == self[2]);
}

TEST_CASE("sage layer on a regular graph with identical features gives identical rows") {
  std::vector<Edge> ring;
  for (NodeId v = 0; v < 6; ++v) ring.emplace_back(v, (v + 1) % 6);
  const auto g = CsrGraph::from_edges(6, ring);
  const auto h = DiffTensor::full({6, 3}, 0.7);
  Rng rng(3);
  const auto out = rows_of(sage_layer(h, g, oracle::random_tensor({3, 2}, rng, false),
                                      oracle::random_tensor({3, 2}, rng, false), true));
  for (std::size_t v = 1; v < 6; ++v) CHECK(out[v] == out[0]);
}

TEST_CASE("sage layer matches a per-node loop") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const auto sg = oracle::random_graph(6, 0.4, rng);
    const auto g = CsrGraph::from_edges(6, sg.edges);
    const auto h = oracle::random_tensor({6, 3}, rng, false);
    const auto ws = oracle::random_tensor({3, 2}, rng, false), wn = oracle::random_tensor({3, 2}, rng, false);
    const Mat H = rows_of(h), WS = rows_of(ws), WN = rows_of(wn);
    const Mat got = rows_of(sage_layer(h, g, ws, wn, true));
    for (std::size_t v = 0; v < 6; ++v) {
      std::vector<double> mean(3, 0.0);
      for (long u : sg.adj[v])
        for (std::size_t c = 0; c < 3; ++c) mean[c] += H[u][c] / static_cast<double>(sg.adj[v].size());
      for (std::size_t j = 0; j < 2; ++j) {
        double s = 0;
        for (std::size_t c = 0; c < 3; ++c) s += H[v][c] * WS[c][j] + mean[c] * WN[c][j];
        CHECK(std::abs(got[v][j] - std::max(0.0, s)) < 1e-12);
      }
    }
  }
}

TEST_CASE("dropout zeroes and rescales") {
  Rng rng(4);
  const auto x = DiffTensor::full({1000}, 1.0);
  const auto y = dropout(x, 0.5, rng);
  std::size_t zeros = 0;
  for (double v : y.data()) {
    CHECK((v == 0.0 || v == 2.0));
    if (v == 0.0) ++zeros;
  }
  CHECK(zeros > 400);
  CHECK(zeros < 600);
  const auto same = dropout(x, 0.0, rng);
  for (double v : same.data()) CHECK(v == 1.0);
}

TEST_CASE("gnn config and model validation") {
  GnnConfig c;
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = GnnConfig{};
  c.layers = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = GnnConfig{};
  const GnnModel m(c, 4, 3, 1);
  CHECK(m.layers().size() == 2);
  const auto ops = GraphOperators::from(CsrGraph::from_edges(5, {}));
  CHECK(m.forward(DiffTensor::zeros({5, 4}), ops).shape() == Shape{5, 3});
  CHECK_THROWS_AS(m.forward(DiffTensor::zeros({5, 6}), ops), DimensionError);
}

TEST_CASE("separable one-hot features reach train accuracy 1 within 50 epochs") {
  EmbeddingMatrix h;
  const auto tg = one_hot_graph(120, 4, h);
  NodeClassConfig cfg;
  cfg.epochs = 50;
  cfg.patience = 0;
  cfg.seed = 5;
  const auto r = train_node_classifier(h, tg, cfg);
  CHECK(r.log.size() == 50);
  bool reached = false;
  for (const auto& row : r.log) reached = reached || row.train_acc == 1.0;
  CHECK(reached);
  for (std::size_t i = 0; i < r.log.size(); ++i) CHECK(r.log[i].epoch == i + 1);
}

TEST_CASE("node classifier keeps the best validation weights") {
  SyntheticGraphSpec s;
  s.num_nodes = 150;
  s.class_token_fraction = 0.5;
  const auto tg = generate_synthetic(s);
  const auto h = gaussian_embeddings(150, 8, 3);
  for (Backbone b : {Backbone::mlp, Backbone::gcn, Backbone::sage}) {
    NodeClassConfig cfg;
    cfg.model.backbone = b;
    cfg.model.hidden = 16;
    cfg.epochs = 40;
    cfg.patience = 10;
    cfg.seed = 2;
    const auto r = train_node_classifier(h, tg, cfg);
    CHECK(r.log.size() <= 40);
    const auto ops = GraphOperators::from(tg.graph);
    const auto pred = predict_classes(r.model, h.as_tensor(), ops);
    std::vector<std::int64_t> p, t;
    for (NodeId v : tg.splits.val) {
      p.push_back(pred[v]);
      t.push_back(tg.labels[v]);
    }
    const double val = metrics::accuracy(p, t);
    CHECK(val == r.best_val_acc);
    for (const auto& row : r.log) CHECK(val >= row.val_acc - 1e-12);
  }
}

TEST_CASE("node classifier configuration errors") {
  EmbeddingMatrix h;
  auto tg = one_hot_graph(40, 2, h);
  NodeClassConfig cfg;
  auto empty = tg;
  empty.splits.train.clear();
  CHECK_THROWS_AS(train_node_classifier(h, empty, cfg), ConfigError);
  cfg.epochs = 0;
  CHECK_THROWS_AS(train_node_classifier(h, tg, cfg), ConfigError);
}

TEST_CASE("argmax is invariant to positive logit scaling") {
  const auto tg_h = [] {
    EmbeddingMatrix h;
    auto tg = one_hot_graph(30, 3, h);
    return std::make_pair(tg, h);
  }();
  GnnConfig c;
  c.layers = 1;
  GnnModel m(c, 3, 3, 7);
  const auto ops = GraphOperators::from(tg_h.first.graph);
  const auto before = predict_classes(m, tg_h.second.as_tensor(), ops);
  for (auto& layer : m.layers()) {
    for (std::size_t i = 0; i < layer.w.numel(); ++i) layer.w.mutable_data()[i] *= 3.5;
    for (std::size_t i = 0; i < layer.b.numel(); ++i) layer.b.mutable_data()[i] *= 3.5;
  }
  CHECK(predict_classes(m, tg_h.second.as_tensor(), ops) == before);
}

TEST_CASE("link scores: zero embeddings give one half, closed form, symmetry, range") {
  GnnConfig c;
  c.layers = 1;
  const auto ops = GraphOperators::from(CsrGraph::from_edges(3, {}));
  const std::vector<Edge> pairs{{0, 1}, {1, 2}, {2, 0}, {1, 0}};

  LinkPredictor zero(GnnModel(c, 3, 3, 1), LinkScorer::dot, 1);
  zero_all(zero.parameters());
  const auto x = DiffTensor::from({3, 3}, {1, 2, 0, -1, 0.5, 3, 0, -2, 1});
  for (double s : predict_links(zero, x, ops, pairs)) CHECK(s == 0.5);

  LinkPredictor p(GnnModel(c, 3, 3, 1), LinkScorer::dot, 1);
  set_values(p.encoder.layers()[0].w, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  set_values(p.encoder.layers()[0].b, {0, 0, 0});
  const auto got = predict_links(p, x, ops, pairs);
  const double d01 = 1 * -1 + 2 * 0.5 + 0 * 3, d12 = -1 * 0 + 0.5 * -2 + 3 * 1, d20 = 0 * 1 + -2 * 2 + 1 * 0;
  CHECK(std::abs(got[0] - 1.0 / (1.0 + std::exp(-d01))) < 1e-15);
  CHECK(std::abs(got[1] - 1.0 / (1.0 + std::exp(-d12))) < 1e-15);
  CHECK(std::abs(got[2] - 1.0 / (1.0 + std::exp(-d20))) < 1e-15);
  CHECK(got[3] == got[0]);

  set_values(p.encoder.layers()[0].w, {100, 0, 0, 0, 100, 0, 0, 0, 100});
  for (double s : predict_links(p, x, ops, pairs)) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  const std::vector<Edge> bad{{0, 3}};
  CHECK_THROWS_AS(predict_links(p, x, ops, bad), IndexError);
}

TEST_CASE("both scorers are symmetric on random pairs") {
  Rng rng(6);
  const auto x = oracle::random_tensor({10, 4}, rng, false);
  const auto ops = GraphOperators::from(CsrGraph::from_edges(10, {{0, 1}, {2, 3}, {3, 4}}));
  std::vector<Edge> fwd, rev;
  for (int i = 0; i < 20; ++i) {
    const auto u = static_cast<NodeId>(rng.below(10)), v = static_cast<NodeId>(rng.below(10));
    fwd.emplace_back(u, v);
    rev.emplace_back(v, u);
  }
  for (LinkScorer kind : {LinkScorer::dot, LinkScorer::mlp}) {
    GnnConfig c;
    c.backbone = Backbone::gcn;
    c.hidden = 8;
    const LinkPredictor p(GnnModel(c, 4, 8, 3), kind, 3);
    const auto a = predict_links(p, x, ops, fwd), b = predict_links(p, x, ops, rev);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-15);
  }
}

TEST_CASE("uninformative predictions give BCE of ln 2") {
  const auto l = bce_logits(DiffTensor::zeros({6}), std::vector<double>{1, 0, 1, 1, 0, 0});
  CHECK(std::abs(l.item() - std::log(2.0)) < 1e-15);
}

TEST_CASE("link predictor logs every iteration and keeps its best weights") {
  SyntheticGraphSpec s;
  s.num_nodes = 120;
  s.intra_class_edge_prob = 0.15;
  const auto tg = generate_synthetic(s);
  const auto split = build_link_split(tg.graph, {0.7, 0.2, 0.1}, 1);
  const auto h = gaussian_embeddings(120, 8, 1);
  LinkPredConfig cfg;
  cfg.model.hidden = 16;
  cfg.epochs = 3;
  cfg.batch_size = 32;
  cfg.adam.base_lr = 1e-2;
  cfg.seed = 4;
  const auto r = train_link_predictor(h, split, cfg);
  const std::size_t per_epoch = (split.train_pos.size() + 31) / 32;
  REQUIRE(r.log.size() == 3 * per_epoch);
  for (std::size_t i = 0; i < r.log.size(); ++i) CHECK(r.log[i].iter == i + 1);

  const auto ops = GraphOperators::from(split.train_graph());
  const double val = link_auc(r.predictor, h.as_tensor(), ops, split.val_pos, split.val_neg);
  CHECK(val == r.best_val_auc);
  for (const auto& row : r.log) CHECK(val >= row.val_auc - 1e-12);

  cfg.log_every_iter = false;
  CHECK(train_link_predictor(h, split, cfg).log.size() == 3);
}

TEST_CASE("embedding files round-trip and reject bad values") {
  auto m = gaussian_embeddings(5, 3, 2);
  CHECK(m.provenance == "gaussian");
  const auto path = std::filesystem::temp_directory_path() / "nodegae_embeddings.txt";
  save_embeddings(path, m);
  CHECK(load_embeddings(path) == m);
  m.values[4] = NAN;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}
