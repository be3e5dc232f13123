#include "nodegae/downstream/training.hpp"

#include <cmath>
#include <limits>

#include "nodegae/diffcore/ops.hpp"
#include "nodegae/errors.hpp"
#include "nodegae/evalmetrics/metrics.hpp"

namespace nodegae {

namespace {

std::vector<std::vector<double>> snapshot_of(const std::vector<DiffTensor>& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.emplace_back(p.data().begin(), p.data().end());
  return out;
}

void restore_into(const std::vector<DiffTensor>& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    DiffTensor p = params[i];
    std::copy(values[i].begin(), values[i].end(), p.mutable_data().begin());
  }
}

double subset_accuracy(const std::vector<std::int64_t>& pred, const TextGraph& tg, const std::vector<NodeId>& ids) {
  std::vector<std::int64_t> p, t;
  for (NodeId v : ids) {
    if (tg.labels[v] < 0) continue;
    p.push_back(pred[v]);
    t.push_back(tg.labels[v]);
  }
  return t.empty() ? 0.0 : metrics::accuracy(p, t);
}

void check_rows(const EmbeddingMatrix& h, std::size_t num_nodes) {
  h.validate();
  if (h.rows != num_nodes) {
    throw DimensionError("embeddings have " + std::to_string(h.rows) + " rows but the graph has " +
                         std::to_string(num_nodes) + " nodes");
  }
}

}  // namespace

void NodeClassConfig::validate() const {
  model.validate();
  if (epochs == 0) throw ConfigError("node classification: epochs must be positive");
  if (!(adam.base_lr > 0.0)) throw ConfigError("node classification: learning rate must be positive");
}

std::vector<std::int64_t> predict_classes(const GnnModel& model, const DiffTensor& x, const GraphOperators& ops) {
  NoGradGuard no_grad;
  const DiffTensor logits = model.forward(x, ops);
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  const auto data = logits.data();
  std::vector<std::int64_t> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (data[r * c + j] > data[r * c + best]) best = j;
    }
    out[r] = static_cast<std::int64_t>(best);
  }
  return out;
}

NodeClassResult train_node_classifier(const EmbeddingMatrix& h, const TextGraph& tg, const NodeClassConfig& cfg) {
  cfg.validate();
  check_rows(h, tg.num_nodes());
  std::vector<std::int64_t> train_ids, train_labels;
  for (NodeId v : tg.splits.train) {
    if (tg.labels[v] < 0) continue;
    train_ids.push_back(v);
    train_labels.push_back(tg.labels[v]);
  }
  if (train_ids.empty()) throw ConfigError("node classification: train split has no labeled nodes");
  if (tg.splits.val.empty()) throw ConfigError("node classification: validation split is empty");
  const std::size_t classes = tg.num_classes();
  if (classes < 2) throw ConfigError("node classification: need at least two classes");

  const DiffTensor x = h.as_tensor();
  const GraphOperators ops = GraphOperators::from(tg.graph, cfg.model.gcn_self_loops);
  NodeClassResult result{GnnModel(cfg.model, h.cols, classes, cfg.seed), {}, 0, -1.0, 0.0};
  GnnModel& model = result.model;
  auto params = model.parameters();
  AdamState adam(cfg.adam);
  Rng rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
  std::vector<std::vector<double>> best_weights = model.snapshot();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const DiffTensor logits = model.forward(x, ops, &rng);
    const DiffTensor loss = cross_entropy_logits(embedding_lookup(logits, train_ids), train_labels);
    loss.backward();
    adam_step(params, adam);

    const auto pred = predict_classes(model, x, ops);
    EpochLog row{epoch, loss.item(), subset_accuracy(pred, tg, tg.splits.train), subset_accuracy(pred, tg, tg.splits.val),
                 subset_accuracy(pred, tg, tg.splits.test)};
    result.log.push_back(row);
    if (row.val_acc > result.best_val_acc) {
      result.best_val_acc = row.val_acc;
      result.best_epoch = epoch;
      result.test_acc = row.test_acc;
      best_weights = model.snapshot();
    }
    if (epoch - result.best_epoch >= cfg.patience && cfg.patience > 0) break;
  }
  model.restore(best_weights);
  return result;
}

LinkPredictor::LinkPredictor(GnnModel enc, LinkScorer kind, std::uint64_t seed) : encoder(std::move(enc)), scorer(kind) {
  if (scorer != LinkScorer::mlp) return;
  const std::size_t d = encoder.out_dim();
  const std::size_t hidden = encoder.config().hidden;
  Rng rng(seed);
  auto init = [&rng](std::size_t in, std::size_t out) {
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::vector<double> v(in * out);
    for (double& x : v) x = (2.0 * rng.uniform() - 1.0) * a;
    return DiffTensor::from({in, out}, std::move(v), true);
  };
  mlp_w1 = init(2 * d, hidden);
  mlp_b1 = DiffTensor::zeros({hidden}, true);
  mlp_w2 = init(hidden, 1);
}

std::vector<DiffTensor> LinkPredictor::parameters() const {
  auto out = encoder.parameters();
  if (scorer == LinkScorer::mlp) out.insert(out.end(), {mlp_w1, mlp_b1, mlp_w2});
  return out;
}

DiffTensor link_logits(const LinkPredictor& p, const DiffTensor& z, std::span<const Edge> pairs) {
  if (pairs.empty()) throw ContractError("link_logits: no pairs");
  const auto n = static_cast<NodeId>(z.dim(0));
  std::vector<std::int64_t> us, vs;
  for (const auto& [u, v] : pairs) {
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw IndexError("link_logits: pair (" + std::to_string(u) + ", " + std::to_string(v) + ") outside " +
                       std::to_string(n) + " nodes");
    }
    us.push_back(u);
    vs.push_back(v);
  }
  const DiffTensor zu = embedding_lookup(z, us);
  const DiffTensor zv = embedding_lookup(z, vs);
  if (p.scorer == LinkScorer::dot) return sum_lastaxis(mul(zu, zv));
  auto score = [&p](const DiffTensor& a, const DiffTensor& b) {
    const std::vector<DiffTensor> parts{a, b};
    return matmul(relu(add(matmul(concat(parts, 1), p.mlp_w1), p.mlp_b1)), p.mlp_w2);
  };
  return reshape(scale(add(score(zu, zv), score(zv, zu)), 0.5), {pairs.size()});
}

std::vector<double> predict_links(const LinkPredictor& p, const DiffTensor& x, const GraphOperators& ops,
                                  std::span<const Edge> pairs) {
  NoGradGuard no_grad;
  const DiffTensor logits = link_logits(p, p.encoder.forward(x, ops), pairs);
  const double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (double l : logits.data()) out.push_back(std::clamp(1.0 / (1.0 + std::exp(-l)), lo, hi));
  return out;
}

double link_auc(const LinkPredictor& p, const DiffTensor& x, const GraphOperators& ops, std::span<const Edge> pos,
                std::span<const Edge> neg) {
  NoGradGuard no_grad;
  std::vector<Edge> pairs(pos.begin(), pos.end());
  pairs.insert(pairs.end(), neg.begin(), neg.end());
  const DiffTensor logits = link_logits(p, p.encoder.forward(x, ops), pairs);
  std::vector<int> labels(pos.size(), 1);
  labels.resize(pairs.size(), 0);
  return metrics::roc_auc(logits.data(), labels);
}

void LinkPredConfig::validate() const {
  model.validate();
  if (epochs == 0) throw ConfigError("link prediction: epochs must be positive");
  if (batch_size == 0) throw ConfigError("link prediction: batch_size must be positive");
  if (!(adam.base_lr > 0.0)) throw ConfigError("link prediction: learning rate must be positive");
}

LinkPredResult train_link_predictor(const EmbeddingMatrix& h, const LinkSplit& split, const LinkPredConfig& cfg) {
  cfg.validate();
  check_rows(h, split.num_nodes);
  if (split.train_pos.empty() || split.val_pos.empty() || split.val_neg.empty()) {
    throw ConfigError("link prediction: split needs train positives and validation pairs");
  }
  const DiffTensor x = h.as_tensor();
  const CsrGraph train_graph = split.train_graph();
  const GraphOperators ops = GraphOperators::from(train_graph, cfg.model.gcn_self_loops);
  LinkPredResult result{LinkPredictor(GnnModel(cfg.model, h.cols, cfg.model.hidden, cfg.seed), cfg.scorer, cfg.seed + 1),
                        {}, -1.0, 0.0};
  LinkPredictor& pred = result.predictor;
  auto params = pred.parameters();
  AdamState adam(cfg.adam);
  Rng rng(cfg.seed ^ 0x8CB92BA72F3D8DD7ULL);
  std::vector<std::vector<double>> best = snapshot_of(params);
  const auto n = split.num_nodes;

  std::vector<Edge> order = split.train_pos;
  std::size_t iter = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Edge> pairs(order.begin() + static_cast<std::ptrdiff_t>(start),
                              order.begin() + static_cast<std::ptrdiff_t>(end));
      const std::size_t n_pos = pairs.size();
      while (pairs.size() < 2 * n_pos) {
        const auto u = static_cast<NodeId>(rng.below(n));
        const auto v = static_cast<NodeId>(rng.below(n));
        if (u != v && !train_graph.has_edge(u, v)) pairs.emplace_back(u, v);
      }
      std::vector<double> labels(n_pos, 1.0);
      labels.resize(2 * n_pos, 0.0);
      const DiffTensor z = pred.encoder.forward(x, ops, &rng);
      const DiffTensor loss = bce_logits(link_logits(pred, z, pairs), labels);
      loss.backward();
      adam_step(params, adam);
      ++iter;

      const bool epoch_end = end == order.size();
      if (cfg.log_every_iter || epoch_end) {
        IterLog row{iter, epoch, loss.item(), link_auc(pred, x, ops, split.val_pos, split.val_neg)};
        result.log.push_back(row);
        if (row.val_auc > result.best_val_auc) {
          result.best_val_auc = row.val_auc;
          best = snapshot_of(params);
        }
      }
    }
  }
  restore_into(params, best);
  if (!split.test_pos.empty() && !split.test_neg.empty()) {
    result.test_auc = link_auc(pred, x, ops, split.test_pos, split.test_neg);
  }
  return result;
}

}  // namespace nodegae
