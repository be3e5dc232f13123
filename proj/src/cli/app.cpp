#include <iostream>

#include <CLI11.hpp>

#include "nodegae/cli/commands.hpp"
#include "nodegae/errors.hpp"

namespace nodegae::cli {

namespace {

void add_data(CLI::App* sub, RunConfig& c) { sub->add_option("--data", c.data_dir, "Dataset directory (nodes.tsv, edges.tsv, splits.txt)"); }

void add_out(CLI::App* sub, RunConfig& c) { sub->add_option("--out", c.out_dir, "Output directory"); }

void add_model(CLI::App* sub, RunConfig& c) {
  auto& m = c.model;
  sub->add_option("--vocab-size", m.vocab_size, "Vocabulary cap including reserved ids")->capture_default_str();
  sub->add_option("--max-len", m.max_len, "Tokens per document including EOS")->capture_default_str();
  sub->add_option("--d-enc", m.d_enc)->capture_default_str();
  sub->add_option("--d-dec", m.d_dec)->capture_default_str();
  sub->add_option("--heads", m.heads)->capture_default_str();
  sub->add_option("--enc-layers", m.enc_layers)->capture_default_str();
  sub->add_option("--dec-layers", m.dec_layers)->capture_default_str();
  sub->add_option("--ffn-mult", m.ffn_mult)->capture_default_str();
  sub->add_option("--proj-len", m.proj_len, "Decoder memory slots s")->capture_default_str();
}

void add_pretrain(CLI::App* sub, RunConfig& c) {
  add_model(sub, c);
  sub->add_option("--tau", c.tau, "InfoNCE temperature")->capture_default_str();
  sub->add_option("--alphas", c.alphas, "Per-hop InfoNCE weights")->delimiter(',')->capture_default_str();
  sub->add_option_function<double>("--alpha1", [&c](double a) { c.alphas.at(0) = a; }, "Hop-1 weight");
  sub->add_option_function<double>(
      "--alpha2",
      [&c](double a) {
        if (c.alphas.size() < 2) c.alphas.resize(2, 0.0);
        c.alphas[1] = a;
      },
      "Hop-2 weight");
  sub->add_flag("--no-normalize{false}", c.normalize, "Use raw dot products in InfoNCE");
  sub->add_option("--lr", c.pretrain_lr)->capture_default_str();
  sub->add_option("--warmup", c.warmup_steps, "Linear warmup steps")->capture_default_str();
  sub->add_option("--clip", c.clip_norm, "Global gradient-norm clip (<= 0 disables)")->capture_default_str();
  sub->add_option("--steps", c.pretrain_steps)->capture_default_str();
  sub->add_option("--batch-size", c.batch_size)->capture_default_str();
  sub->add_option("--seed", c.pretrain_seed)->capture_default_str();
  sub->add_option("--eval-every", c.eval_every, "Reconstruction metrics interval (0 disables)")->capture_default_str();
  sub->add_option("--eval-docs", c.eval_docs)->capture_default_str();
  sub->add_flag("--train-edges-only", c.train_edges_only, "Pretrain on the link-prediction train graph");
  sub->add_option("--link-seed", c.link_seed, "Seed of the link split")->capture_default_str();
}

void add_train(CLI::App* sub, RunConfig& c) {
  sub->add_option("--task", c.task, "nodecls or linkpred")->capture_default_str();
  sub->add_option("--backbone", c.backbones, "mlp, gcn, sage (comma-separated)")->delimiter(',')->capture_default_str();
  sub->add_option("--hidden", c.hidden)->capture_default_str();
  sub->add_option("--layers", c.layers)->capture_default_str();
  sub->add_option("--dropout", c.dropout)->capture_default_str();
  sub->add_flag("--no-self-loops{false}", c.gcn_self_loops, "GCN normalization without self-loops");
  sub->add_option("--nodecls-lr", c.nodecls_lr)->capture_default_str();
  sub->add_option("--linkpred-lr", c.linkpred_lr)->capture_default_str();
  sub->add_option("--epochs", c.epochs, "0 picks the task default");
  sub->add_option("--patience", c.patience)->capture_default_str();
  sub->add_option("--link-batch-size", c.link_batch_size)->capture_default_str();
  sub->add_option("--scorer", c.scorer, "Link scorer: dot or mlp")->capture_default_str();
  sub->add_flag("--log-every-iter", c.log_every_iter, "Validation ROC-AUC after every optimizer step");
  sub->add_option("--repeats", c.repeats)->capture_default_str();
  sub->add_option("--train-seed", c.train_seed)->capture_default_str();
  if (!sub->get_option_no_throw("--link-seed")) sub->add_option("--link-seed", c.link_seed)->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv) {
  RunConfig c;
  CLI::App app{"Node-level graph autoencoder: dataset generation, pretraining, embedding and downstream training"};
  app.set_config("--config", "", "TOML/INI file with option values");
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a synthetic textual graph");
  add_out(gen, c);
  auto& s = c.synthetic;
  gen->add_option("--nodes", s.num_nodes)->capture_default_str();
  gen->add_option("--classes", s.num_classes)->capture_default_str();
  gen->add_option("--keywords", s.keywords_per_class, "Keywords per class")->capture_default_str();
  gen->add_option("--shared-pool", s.shared_pool_size)->capture_default_str();
  gen->add_option("--doc-min", s.doc_length_min)->capture_default_str();
  gen->add_option("--doc-max", s.doc_length_max)->capture_default_str();
  gen->add_option("--class-token-fraction", s.class_token_fraction)->capture_default_str();
  gen->add_option("--intra", s.intra_class_edge_prob)->capture_default_str();
  gen->add_option("--inter", s.inter_class_edge_prob)->capture_default_str();
  gen->add_option("--seed", s.seed)->capture_default_str();

  auto* pre = app.add_subcommand("pretrain", "Train the autoencoder");
  add_data(pre, c);
  add_out(pre, c);
  add_pretrain(pre, c);
  pre->add_option("--resume", c.resume, "Continue from a checkpoint written by pretrain");

  auto* emb = app.add_subcommand("embed", "Extract node embeddings");
  add_data(emb, c);
  emb->add_option("--checkpoint", c.checkpoint);
  emb->add_option("--output", c.embeddings, "Embedding file to write");
  emb->add_option("--kind", c.embed_kind, "nodegae, random (untrained encoder) or gaussian")->capture_default_str();
  emb->add_option("--seed", c.embed_seed, "Seed for random and gaussian kinds")->capture_default_str();
  emb->add_option("--d-enc", c.model.d_enc, "Width of gaussian embeddings without a checkpoint")->capture_default_str();

  auto* trn = app.add_subcommand("train", "Train downstream models on frozen embeddings");
  add_data(trn, c);
  add_out(trn, c);
  trn->add_option("--embeddings", c.embeddings);
  add_train(trn, c);

  auto* abl = app.add_subcommand("ablate", "Compare pretraining with and without InfoNCE");
  add_data(abl, c);
  add_out(abl, c);
  add_pretrain(abl, c);
  add_train(abl, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) cmd_generate(c);
    if (*pre) cmd_pretrain(c);
    if (*emb) cmd_embed(c);
    if (*trn) cmd_train(c);
    if (*abl) cmd_ablate(c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace nodegae::cli
