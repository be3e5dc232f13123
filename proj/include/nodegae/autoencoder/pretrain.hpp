#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nodegae/autoencoder/losses.hpp"
#include "nodegae/autoencoder/model.hpp"
#include "nodegae/diffcore/adam.hpp"
#include "nodegae/downstream/embeddings.hpp"
#include "nodegae/graphstore/graph.hpp"

namespace nodegae {

struct PretrainConfig {
  AdamConfig adam{.base_lr = 1e-4, .warmup_steps = 1000};
  InfoNCEConfig infonce;
  std::size_t steps = 2000;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  // Reconstruction metrics every eval_every steps on the first eval_docs
  // nodes; 0 disables.
  std::size_t eval_every = 0;
  std::size_t eval_docs = 8;

  void validate() const;
};

/// Encoded documents plus the hop sets used to draw positives.
struct PretrainData {
  std::vector<TokenSequence> docs;  // unpadded, one per node
  HopIndex hops;

  PretrainData(std::vector<TokenSequence> docs, const CsrGraph& graph, std::size_t max_hop);
  std::size_t num_nodes() const { return docs.size(); }
};

/// Encodes every node text with `vocab`, truncated to max_len.
std::vector<TokenSequence> encode_corpus(const TextGraph& tg, const Vocabulary& vocab, std::size_t max_len);

/// Graph-attached losses for one batch; infonce is undefined when disabled.
struct PretrainLoss {
  DiffTensor lm;
  DiffTensor infonce;
  DiffTensor total;
};

/// The combined objective without the optimizer step. Draws positives from rng.
PretrainLoss pretrain_loss(std::span<const NodeId> batch, const PretrainData& data, const AutoencoderModel& model,
                           const InfoNCEConfig& cfg, Rng& rng);

struct StepLosses {
  double lm = 0.0;
  double infonce = 0.0;
  double total = 0.0;
};

/// One optimizer step on the given anchors. Each anchor gets one positive per
/// hop with non-zero weight; negatives are the other anchors in the batch.
/// Throws ContractError for batches smaller than 2.
StepLosses pretrain_step(std::span<const NodeId> batch, const PretrainData& data, AutoencoderModel& model,
                         AdamState& adam, const InfoNCEConfig& cfg, Rng& rng);

/// Anchors for a 1-based step: consecutive slices of a per-epoch permutation
/// derived from the seed. Batches never straddle epochs.
std::vector<NodeId> batch_for_step(std::size_t num_nodes, std::size_t batch_size, std::uint64_t seed,
                                   std::size_t step);

struct LossRow {
  std::size_t step = 0;
  StepLosses losses;
};

struct ReconstructionRow {
  std::size_t step = 0;
  double bleu = 0.0;
  double rouge_l = 0.0;
  double token_f1 = 0.0;
};

/// Corpus BLEU and mean ROUGE-L / token F1 of greedy reconstructions of the
/// given documents.
ReconstructionRow reconstruction_metrics(std::span<const TokenSequence> docs, const AutoencoderModel& model);

struct PretrainState {
  AutoencoderModel model;
  AdamState adam;
  std::size_t step = 0;  // completed steps

  void save_to(Checkpoint& ckpt) const;
  static PretrainState from_checkpoint(const Checkpoint& ckpt, const AdamConfig& adam_cfg);
};

struct PretrainLog {
  std::vector<LossRow> losses;
  std::vector<ReconstructionRow> reconstruction;
};

/// Runs steps state.step+1 .. cfg.steps. The per-step randomness depends only
/// on (seed, step), so resuming from a saved state continues the same run.
PretrainLog run_pretraining(PretrainState& state, const PretrainData& data, const PretrainConfig& cfg,
                            const std::function<void(const LossRow&)>& on_step = {});

/// Row i is encode_node(docs[i]) with recording off.
EmbeddingMatrix extract_embeddings(std::span<const TokenSequence> docs, const AutoencoderModel& model,
                                   std::string provenance = "nodegae");

/// The vocabulary travels with the model checkpoint.
void put_vocabulary(Checkpoint& ckpt, const Vocabulary& vocab);
Vocabulary vocabulary_from(const Checkpoint& ckpt);

}  // namespace nodegae
