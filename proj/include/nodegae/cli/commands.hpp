#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nodegae/autoencoder/model.hpp"
#include "nodegae/autoencoder/pretrain.hpp"
#include "nodegae/downstream/training.hpp"
#include "nodegae/textcorpus/synthetic.hpp"

namespace nodegae::cli {

namespace fs = std::filesystem;

/// Every knob of both stages. Each command reads the subset it needs and
/// validates it before touching the filesystem.
struct RunConfig {
  // dataset
  fs::path data_dir;
  fs::path out_dir;
  SyntheticGraphSpec synthetic;

  // stage 1
  AutoencoderConfig model;
  double tau = 0.5;
  std::vector<double> alphas{1.0, 0.1};
  bool normalize = true;
  double pretrain_lr = 1e-3;
  std::size_t warmup_steps = 100;
  double clip_norm = 1.0;
  std::size_t pretrain_steps = 2000;
  std::size_t batch_size = 16;
  std::uint64_t pretrain_seed = 1;
  std::size_t eval_every = 200;
  std::size_t eval_docs = 8;
  fs::path resume;
  // Pretrain on the link-split train graph so held-out edges never serve as
  // InfoNCE positives.
  bool train_edges_only = false;

  // embedding
  fs::path checkpoint;
  fs::path embeddings;
  std::string embed_kind = "nodegae";  // nodegae | random | gaussian
  std::uint64_t embed_seed = 1;

  // stage 2
  std::string task = "nodecls";  // nodecls | linkpred
  std::vector<std::string> backbones{"mlp"};
  std::size_t hidden = 64;
  std::size_t layers = 2;
  double dropout = 0.5;
  bool gcn_self_loops = true;
  double nodecls_lr = 1e-2;
  double linkpred_lr = 1e-4;
  std::size_t epochs = 0;  // 0: task default (200 nodecls, 100 linkpred)
  std::size_t patience = 50;
  std::size_t link_batch_size = 64;
  std::string scorer = "dot";
  bool log_every_iter = false;
  std::size_t repeats = 10;
  std::uint64_t train_seed = 1;
  std::uint64_t link_seed = 1;

  PretrainConfig pretrain_config() const;
  NodeClassConfig nodecls_config(Backbone b, std::uint64_t seed) const;
  LinkPredConfig linkpred_config(Backbone b, std::uint64_t seed) const;
};

/// Writes nodes.tsv, edges.tsv and splits.txt into out_dir.
void cmd_generate(const RunConfig& cfg);

/// Trains on data_dir and writes model.ckpt, pretrain_metrics.csv and
/// reconstruction.csv into out_dir.
void cmd_pretrain(const RunConfig& cfg);

/// Writes the |V| x d embedding file to cfg.embeddings.
void cmd_embed(const RunConfig& cfg);

/// Runs cfg.repeats seeded trainings per backbone and writes report.txt,
/// results.csv and per-repeat metric logs into out_dir.
void cmd_train(const RunConfig& cfg);

/// Pretrains with and without InfoNCE under identical seeds, trains every
/// backbone on both, and writes ablation.csv and report.txt into out_dir.
void cmd_ablate(const RunConfig& cfg);

/// CLI entry point: parses argv, dispatches, and maps failures to exit codes
/// (0 ok, 1 configuration error, 2 runtime error).
int run(int argc, const char* const* argv);

}  // namespace nodegae::cli
