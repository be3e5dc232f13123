#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nodegae/diffcore/adam.hpp"
#include "nodegae/downstream/embeddings.hpp"
#include "nodegae/downstream/gnn.hpp"
#include "nodegae/graphstore/link_split.hpp"

namespace nodegae {

struct NodeClassConfig {
  GnnConfig model;
  AdamConfig adam{.base_lr = 1e-2, .clip_norm = 0.0};
  std::size_t epochs = 200;
  std::size_t patience = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

struct NodeClassResult {
  GnnModel model;  // weights from the best-validation epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  double test_acc = 0.0;  // at best_epoch
};

/// Full-batch cross-entropy training on the train split. Stops after
/// `patience` epochs without a validation improvement.
NodeClassResult train_node_classifier(const EmbeddingMatrix& h, const TextGraph& tg, const NodeClassConfig& cfg);

/// Argmax class per node from eval-mode logits (ties go to the lower class).
std::vector<std::int64_t> predict_classes(const GnnModel& model, const DiffTensor& x, const GraphOperators& ops);

enum class LinkScorer { dot, mlp };

/// Pair scorer on top of node embeddings. The mlp variant scores the
/// concatenation [z_u, z_v] and averages both orders so it stays symmetric.
struct LinkPredictor {
  GnnModel encoder;
  LinkScorer scorer = LinkScorer::dot;
  DiffTensor mlp_w1, mlp_b1, mlp_w2;  // [2d, hidden], [hidden], [hidden, 1]

  LinkPredictor(GnnModel enc, LinkScorer kind, std::uint64_t seed);
  std::vector<DiffTensor> parameters() const;
};

/// Raw score logits [pairs] for node embeddings z [n, d].
DiffTensor link_logits(const LinkPredictor& p, const DiffTensor& z, std::span<const Edge> pairs);

/// Logistic scores clamped strictly inside (0, 1). Throws IndexError for
/// node ids outside the embedding matrix.
std::vector<double> predict_links(const LinkPredictor& p, const DiffTensor& x, const GraphOperators& ops,
                                  std::span<const Edge> pairs);

struct LinkPredConfig {
  GnnConfig model;
  LinkScorer scorer = LinkScorer::dot;
  AdamConfig adam{.base_lr = 1e-4, .clip_norm = 0.0};
  std::size_t epochs = 10;
  std::size_t batch_size = 64;  // positive edges per optimizer step
  // Validation ROC-AUC after every optimizer step instead of every epoch.
  bool log_every_iter = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IterLog {
  std::size_t iter = 0;  // optimizer steps so far
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;
};

struct LinkPredResult {
  LinkPredictor predictor;  // weights from the best-validation evaluation
  std::vector<IterLog> log;
  double best_val_auc = 0.0;
  double test_auc = 0.0;
};

/// BCE on train positives plus an equal number of fresh uniformly drawn
/// non-edges per step. Message passing uses the train graph only.
LinkPredResult train_link_predictor(const EmbeddingMatrix& h, const LinkSplit& split, const LinkPredConfig& cfg);

/// ROC-AUC of eval-mode scores on positives vs negatives.
double link_auc(const LinkPredictor& p, const DiffTensor& x, const GraphOperators& ops, std::span<const Edge> pos,
                std::span<const Edge> neg);

}  // namespace nodegae
