#include "nodegae/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include "nodegae/errors.hpp"
#include "nodegae/graphstore/link_split.hpp"
#include "nodegae/textcorpus/textgraph_io.hpp"

namespace nodegae::cli {

namespace {

constexpr std::array<double, 3> kLinkRatios{0.7, 0.2, 0.1};

std::string num(double v, const char* fmt = "%.17g") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::ofstream open_out(const fs::path& path, bool append = false) {
  std::ofstream os(path, append ? std::ios::app : std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void require_dir_arg(const fs::path& p, const char* flag) {
  if (p.empty()) throw ConfigError(std::string(flag) + " is required");
}

void require_existing(const fs::path& p, const char* flag) {
  if (p.empty()) throw ConfigError(std::string(flag) + " is required");
  if (!fs::exists(p)) throw ConfigError(std::string(flag) + ": " + p.string() + " does not exist");
}

void require_dataset(const fs::path& dir) {
  require_existing(dir, "--data");
  const auto paths = DatasetPaths::in_dir(dir);
  for (const auto& p : {paths.nodes, paths.edges, paths.splits}) {
    if (!fs::exists(p)) throw ConfigError("--data: missing " + p.string());
  }
}

struct TrainingPlan {
  std::vector<Backbone> backbones;
  std::size_t epochs = 0;
};

TrainingPlan validate_training(const RunConfig& cfg) {
  if (cfg.task != "nodecls" && cfg.task != "linkpred") {
    throw ConfigError("--task must be nodecls or linkpred, got '" + cfg.task + "'");
  }
  if (cfg.scorer != "dot" && cfg.scorer != "mlp") throw ConfigError("--scorer must be dot or mlp");
  if (cfg.repeats == 0) throw ConfigError("--repeats must be at least 1");
  if (cfg.backbones.empty()) throw ConfigError("--backbone needs at least one value");
  TrainingPlan plan;
  for (const auto& b : cfg.backbones) plan.backbones.push_back(parse_backbone(b));
  for (Backbone b : plan.backbones) {
    if (cfg.task == "nodecls") {
      cfg.nodecls_config(b, 0).validate();
    } else {
      cfg.linkpred_config(b, 0).validate();
    }
  }
  return plan;
}

void validate_pretraining(const RunConfig& cfg) {
  cfg.model.validate();
  cfg.pretrain_config().validate();
  if (cfg.pretrain_steps == 0) throw ConfigError("--steps must be positive");
}

struct RepeatOutcome {
  std::uint64_t seed = 0;
  double best_val = 0.0;
  double test = 0.0;
  std::size_t best_at = 0;
};

struct BackboneSummary {
  Backbone backbone;
  std::vector<RepeatOutcome> runs;
  double mean = 0.0;
  double stddev = 0.0;
};

void summarize(BackboneSummary& s) {
  const double n = static_cast<double>(s.runs.size());
  double sum = 0.0;
  for (const auto& r : s.runs) sum += r.test;
  s.mean = sum / n;
  double sq = 0.0;
  for (const auto& r : s.runs) sq += (r.test - s.mean) * (r.test - s.mean);
  s.stddev = std::sqrt(sq / n);
}

/// Trains every repeat of one backbone; when log_dir is set, writes per-repeat
/// metric logs there.
BackboneSummary train_backbone(const RunConfig& cfg, Backbone b, const EmbeddingMatrix& h, const TextGraph& tg,
                               const LinkSplit* split, const fs::path& log_dir) {
  BackboneSummary out{b, {}, 0.0, 0.0};
  const std::string name(backbone_name(b));
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t seed = cfg.train_seed + r;
    const std::string stem = name + "_r" + std::to_string(r + 1);
    if (cfg.task == "nodecls") {
      const auto res = train_node_classifier(h, tg, cfg.nodecls_config(b, seed));
      out.runs.push_back({seed, res.best_val_acc, res.test_acc, res.best_epoch});
      if (!log_dir.empty()) {
        auto os = open_out(log_dir / (stem + ".csv"));
        os << "epoch_or_iter,split,metric_name,value\n";
        for (const auto& e : res.log) {
          os << e.epoch << ",train,loss," << num(e.train_loss) << '\n';
          os << e.epoch << ",train,accuracy," << num(e.train_acc) << '\n';
          os << e.epoch << ",val,accuracy," << num(e.val_acc) << '\n';
          os << e.epoch << ",test,accuracy," << num(e.test_acc) << '\n';
        }
      }
    } else {
      const auto res = train_link_predictor(h, *split, cfg.linkpred_config(b, seed));
      std::size_t best_at = 0;
      for (const auto& it : res.log) {
        if (it.val_auc == res.best_val_auc) {
          best_at = it.iter;
          break;
        }
      }
      out.runs.push_back({seed, res.best_val_auc, res.test_auc, best_at});
      if (!log_dir.empty()) {
        auto os = open_out(log_dir / (stem + ".csv"));
        os << "epoch_or_iter,split,metric_name,value\n";
        for (const auto& it : res.log) {
          os << it.iter << ",train,loss," << num(it.train_loss) << '\n';
          os << it.iter << ",val,roc_auc," << num(it.val_auc) << '\n';
        }
        if (cfg.log_every_iter) {
          auto curve = open_out(log_dir / (stem + "_val_auc_curve.csv"));
          curve << "iter,val_roc_auc\n";
          for (const auto& it : res.log) curve << it.iter << ',' << num(it.val_auc) << '\n';
        }
      }
    }
  }
  summarize(out);
  return out;
}

const char* metric_name(const RunConfig& cfg) { return cfg.task == "nodecls" ? "test_accuracy" : "test_roc_auc"; }

struct PretrainOutcome {
  PretrainState state;
  PretrainLog log;
  Vocabulary vocab;
};

CsrGraph pretrain_graph(const RunConfig& cfg, const TextGraph& tg, bool train_edges_only) {
  if (!train_edges_only) return tg.graph;
  return build_link_split(tg.graph, kLinkRatios, cfg.link_seed).train_graph();
}

PretrainOutcome pretrain_on(const RunConfig& cfg, const TextGraph& tg, const std::vector<double>& alphas,
                            bool train_edges_only, const std::function<void(const LossRow&)>& on_step = {}) {
  PretrainConfig pc = cfg.pretrain_config();
  pc.infonce.alphas = alphas;
  std::optional<PretrainState> state;
  Vocabulary vocab;
  if (!cfg.resume.empty()) {
    const Checkpoint ckpt = load_checkpoint(cfg.resume);
    vocab = vocabulary_from(ckpt);
    state.emplace(PretrainState::from_checkpoint(ckpt, pc.adam));
  } else {
    vocab = build_vocab(tg.texts, cfg.model.vocab_size);
    AutoencoderConfig mc = cfg.model;
    mc.vocab_size = vocab.size();
    state.emplace(PretrainState{AutoencoderModel(mc, cfg.pretrain_seed), AdamState(pc.adam), 0});
  }
  if (state->model.config().vocab_size != vocab.size()) {
    throw DimensionError("checkpoint vocabulary has " + std::to_string(vocab.size()) + " entries but the model expects " +
                         std::to_string(state->model.config().vocab_size));
  }
  const PretrainData data(encode_corpus(tg, vocab, state->model.config().max_len), pretrain_graph(cfg, tg, train_edges_only),
                          alphas.size());
  PretrainLog log = run_pretraining(*state, data, pc, on_step);
  return {std::move(*state), std::move(log), std::move(vocab)};
}

}  // namespace

PretrainConfig RunConfig::pretrain_config() const {
  PretrainConfig pc;
  pc.adam.base_lr = pretrain_lr;
  pc.adam.warmup_steps = warmup_steps;
  pc.adam.clip_norm = clip_norm;
  pc.infonce.tau = tau;
  pc.infonce.alphas = alphas;
  pc.infonce.normalize = normalize;
  pc.steps = pretrain_steps;
  pc.batch_size = batch_size;
  pc.seed = pretrain_seed;
  pc.eval_every = eval_every;
  pc.eval_docs = eval_docs;
  return pc;
}

NodeClassConfig RunConfig::nodecls_config(Backbone b, std::uint64_t seed) const {
  NodeClassConfig c;
  c.model = {b, hidden, layers, dropout, gcn_self_loops};
  c.adam.base_lr = nodecls_lr;
  c.epochs = epochs > 0 ? epochs : 200;
  c.patience = patience;
  c.seed = seed;
  return c;
}

LinkPredConfig RunConfig::linkpred_config(Backbone b, std::uint64_t seed) const {
  LinkPredConfig c;
  c.model = {b, hidden, layers, dropout, gcn_self_loops};
  c.scorer = scorer == "mlp" ? LinkScorer::mlp : LinkScorer::dot;
  c.adam.base_lr = linkpred_lr;
  c.epochs = epochs > 0 ? epochs : 100;
  c.batch_size = link_batch_size;
  c.log_every_iter = log_every_iter;
  c.seed = seed;
  return c;
}

void cmd_generate(const RunConfig& cfg) {
  require_dir_arg(cfg.out_dir, "--out");
  cfg.synthetic.validate();
  const TextGraph tg = generate_synthetic(cfg.synthetic);
  fs::create_directories(cfg.out_dir);
  save_textgraph(tg, DatasetPaths::in_dir(cfg.out_dir));
}

void cmd_pretrain(const RunConfig& cfg) {
  require_dataset(cfg.data_dir);
  require_dir_arg(cfg.out_dir, "--out");
  if (!cfg.resume.empty()) require_existing(cfg.resume, "--resume");
  validate_pretraining(cfg);

  const TextGraph tg = load_textgraph(DatasetPaths::in_dir(cfg.data_dir));
  fs::create_directories(cfg.out_dir);
  const fs::path loss_path = cfg.out_dir / "pretrain_metrics.csv";
  const bool append = !cfg.resume.empty() && fs::exists(loss_path);
  auto losses = open_out(loss_path, append);
  if (!append) losses << "step,lm_loss,infonce_loss,total\n";
  auto outcome = pretrain_on(cfg, tg, cfg.alphas, cfg.train_edges_only, [&losses](const LossRow& r) {
    losses << r.step << ',' << num(r.losses.lm) << ',' << num(r.losses.infonce) << ',' << num(r.losses.total) << '\n';
  });

  const fs::path recon_path = cfg.out_dir / "reconstruction.csv";
  const bool append_recon = !cfg.resume.empty() && fs::exists(recon_path);
  auto recon = open_out(recon_path, append_recon);
  if (!append_recon) recon << "step,bleu,rouge_l,token_f1\n";
  for (const auto& r : outcome.log.reconstruction) {
    recon << r.step << ',' << num(r.bleu) << ',' << num(r.rouge_l) << ',' << num(r.token_f1) << '\n';
  }

  Checkpoint ckpt;
  outcome.state.save_to(ckpt);
  put_vocabulary(ckpt, outcome.vocab);
  save_checkpoint(cfg.out_dir / "model.ckpt", ckpt);
}

void cmd_embed(const RunConfig& cfg) {
  require_dataset(cfg.data_dir);
  if (cfg.embeddings.empty()) throw ConfigError("--output is required");
  if (cfg.embed_kind != "nodegae" && cfg.embed_kind != "random" && cfg.embed_kind != "gaussian") {
    throw ConfigError("--kind must be nodegae, random or gaussian");
  }
  if (cfg.embed_kind != "gaussian" || !cfg.checkpoint.empty()) require_existing(cfg.checkpoint, "--checkpoint");

  const TextGraph tg = load_textgraph(DatasetPaths::in_dir(cfg.data_dir));
  EmbeddingMatrix m;
  if (cfg.checkpoint.empty()) {
    cfg.model.validate();
    m = gaussian_embeddings(tg.num_nodes(), cfg.model.d_enc, cfg.embed_seed);
  } else {
    const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
    const Vocabulary vocab = vocabulary_from(ckpt);
    const AutoencoderModel trained = AutoencoderModel::from_checkpoint(ckpt);
    if (trained.config().vocab_size != vocab.size()) {
      throw DimensionError("checkpoint vocabulary has " + std::to_string(vocab.size()) +
                           " entries but the model expects " + std::to_string(trained.config().vocab_size));
    }
    const auto docs = encode_corpus(tg, vocab, trained.config().max_len);
    if (cfg.embed_kind == "nodegae") {
      m = extract_embeddings(docs, trained, "nodegae");
    } else if (cfg.embed_kind == "random") {
      m = extract_embeddings(docs, AutoencoderModel(trained.config(), cfg.embed_seed), "random");
    } else {
      m = gaussian_embeddings(tg.num_nodes(), trained.config().d_enc, cfg.embed_seed);
    }
  }
  if (cfg.embeddings.has_parent_path()) fs::create_directories(cfg.embeddings.parent_path());
  save_embeddings(cfg.embeddings, m);
}

void cmd_train(const RunConfig& cfg) {
  require_dataset(cfg.data_dir);
  require_existing(cfg.embeddings, "--embeddings");
  require_dir_arg(cfg.out_dir, "--out");
  const TrainingPlan plan = validate_training(cfg);

  const TextGraph tg = load_textgraph(DatasetPaths::in_dir(cfg.data_dir));
  const EmbeddingMatrix h = load_embeddings(cfg.embeddings);
  if (h.rows != tg.num_nodes()) {
    throw DimensionError("embedding file has " + std::to_string(h.rows) + " rows but the graph has " +
                         std::to_string(tg.num_nodes()) + " nodes");
  }
  std::optional<LinkSplit> split;
  if (cfg.task == "linkpred") split = build_link_split(tg.graph, kLinkRatios, cfg.link_seed);

  fs::create_directories(cfg.out_dir / "logs");
  if (split) save_link_split(*split, cfg.out_dir / "link_split");
  std::vector<BackboneSummary> summaries;
  for (Backbone b : plan.backbones) {
    summaries.push_back(train_backbone(cfg, b, h, tg, split ? &*split : nullptr, cfg.out_dir / "logs"));
  }

  auto results = open_out(cfg.out_dir / "results.csv");
  results << "backbone,repeat,seed,best_val,best_at," << metric_name(cfg) << '\n';
  for (const auto& s : summaries) {
    for (std::size_t r = 0; r < s.runs.size(); ++r) {
      const auto& run = s.runs[r];
      results << backbone_name(s.backbone) << ',' << r + 1 << ',' << run.seed << ',' << num(run.best_val) << ','
              << run.best_at << ',' << num(run.test) << '\n';
    }
  }

  auto report = open_out(cfg.out_dir / "report.txt");
  report << "task: " << cfg.task << '\n';
  report << "embeddings: " << h.provenance << " (" << h.rows << " x " << h.cols << ")\n";
  report << "repeats: " << cfg.repeats << '\n';
  report << "metric: " << metric_name(cfg) << " (mean +- std over repeats)\n";
  for (const auto& s : summaries) {
    report << backbone_name(s.backbone) << ": " << num(s.mean, "%.4f") << " +- " << num(s.stddev, "%.4f") << '\n';
  }
}

void cmd_ablate(const RunConfig& cfg) {
  require_dataset(cfg.data_dir);
  require_dir_arg(cfg.out_dir, "--out");
  if (!cfg.resume.empty()) throw ConfigError("ablate always pretrains from scratch; drop --resume");
  validate_pretraining(cfg);
  const TrainingPlan plan = validate_training(cfg);
  const std::vector<double> off(cfg.alphas.size(), 0.0);
  if (cfg.alphas == off) throw ConfigError("ablate needs at least one non-zero hop weight");

  const TextGraph tg = load_textgraph(DatasetPaths::in_dir(cfg.data_dir));
  const bool link = cfg.task == "linkpred";
  std::optional<LinkSplit> split;
  if (link) split = build_link_split(tg.graph, kLinkRatios, cfg.link_seed);

  struct Variant {
    const char* name;
    std::vector<double> alphas;
    std::vector<BackboneSummary> results;
  };
  std::vector<Variant> variants{{"with_infonce", cfg.alphas, {}}, {"without_infonce", off, {}}};
  for (auto& v : variants) {
    const auto outcome = pretrain_on(cfg, tg, v.alphas, link || cfg.train_edges_only);
    const auto docs = encode_corpus(tg, outcome.vocab, outcome.state.model.config().max_len);
    const EmbeddingMatrix h = extract_embeddings(docs, outcome.state.model, "nodegae");
    for (Backbone b : plan.backbones) {
      v.results.push_back(train_backbone(cfg, b, h, tg, split ? &*split : nullptr, {}));
    }
  }

  fs::create_directories(cfg.out_dir);
  auto csv = open_out(cfg.out_dir / "ablation.csv");
  csv << "backbone,metric,with_infonce,without_infonce,delta\n";
  auto report = open_out(cfg.out_dir / "report.txt");
  report << "task: " << cfg.task << '\n';
  report << "repeats: " << cfg.repeats << '\n';
  report << "metric: " << metric_name(cfg) << " (mean over repeats)\n";
  for (std::size_t i = 0; i < plan.backbones.size(); ++i) {
    const double with = variants[0].results[i].mean;
    const double without = variants[1].results[i].mean;
    const std::string b(backbone_name(plan.backbones[i]));
    csv << b << ',' << metric_name(cfg) << ',' << num(with) << ',' << num(without) << ',' << num(with - without) << '\n';
    report << b << ": with " << num(with, "%.4f") << ", without " << num(without, "%.4f") << ", delta "
           << num(with - without, "%+.4f") << '\n';
  }
}

}  // namespace nodegae::cli
