#include "nodegae/autoencoder/pretrain.hpp"

#include <numeric>
#include <sstream>

#include "nodegae/diffcore/ops.hpp"
#include "nodegae/errors.hpp"
#include "nodegae/evalmetrics/metrics.hpp"

namespace nodegae {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed ^ (a * kGolden) ^ (b + 0x632BE59BD9B4E019ULL);
  x ^= x >> 31;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 29;
  return x;
}

metrics::Tokens content_tokens(const TokenSequence& seq) {
  metrics::Tokens out;
  for (TokenId t : seq.ids) {
    if (t == kEos) break;
    if (t == kPad || t == kBos) continue;
    out.push_back(std::to_string(t));
  }
  return out;
}

}  // namespace

void PretrainConfig::validate() const {
  infonce.validate();
  if (batch_size < 2) throw ConfigError("pretrain: batch_size must be at least 2");
  if (!(adam.base_lr > 0.0)) throw ConfigError("pretrain: learning rate must be positive");
  if (adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0) {
    throw ConfigError("pretrain: Adam betas must lie in [0,1)");
  }
  if (eval_every > 0 && eval_docs == 0) throw ConfigError("pretrain: eval_docs must be positive");
}

PretrainData::PretrainData(std::vector<TokenSequence> d, const CsrGraph& graph, std::size_t max_hop)
    : docs(std::move(d)), hops(graph, std::max<std::size_t>(max_hop, 1)) {
  if (docs.size() != graph.num_nodes()) throw ContractError("pretrain: one document per node required");
}

std::vector<TokenSequence> encode_corpus(const TextGraph& tg, const Vocabulary& vocab, std::size_t max_len) {
  std::vector<TokenSequence> docs;
  docs.reserve(tg.texts.size());
  for (const auto& text : tg.texts) docs.push_back(encode(text, vocab, max_len));
  return docs;
}

PretrainLoss pretrain_loss(std::span<const NodeId> batch, const PretrainData& data, const AutoencoderModel& model,
                           const InfoNCEConfig& cfg, Rng& rng) {
  if (batch.size() < 2) throw ContractError("pretrain_step: batch needs at least 2 anchors for in-batch negatives");
  cfg.validate();
  const std::size_t d = model.config().d_enc;

  std::vector<DiffTensor> anchor_rows;
  std::vector<DiffTensor> logits;
  std::vector<std::int64_t> targets;
  for (NodeId v : batch) {
    const TokenSequence& doc = data.docs.at(static_cast<std::size_t>(v));
    const DiffTensor h = encode_node(doc, model);
    anchor_rows.push_back(reshape(h, {1, d}));
    logits.push_back(decoder_logits(project(h, model), shifted_inputs(doc), model));
    targets.insert(targets.end(), doc.ids.begin(), doc.ids.end());
  }
  PretrainLoss out;
  out.lm = cross_entropy_logits(concat(logits, 0), targets, kPad);
  out.total = out.lm;
  if (cfg.enabled()) {
    std::vector<HopPositives> hops(cfg.num_hops());
    for (std::size_t k = 1; k <= cfg.num_hops(); ++k) {
      if (cfg.alphas[k - 1] == 0.0 || k > data.hops.max_hop()) continue;
      std::vector<DiffTensor> rows;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto pos = data.hops.sample(batch[i], k, rng);
        if (!pos) continue;
        hops[k - 1].anchor_rows.push_back(i);
        rows.push_back(reshape(encode_node(data.docs.at(static_cast<std::size_t>(*pos)), model), {1, d}));
      }
      if (!rows.empty()) hops[k - 1].embeddings = concat(rows, 0);
    }
    out.infonce = batch_infonce(concat(anchor_rows, 0), hops, cfg);
    out.total = add(out.lm, out.infonce);
  }
  return out;
}

StepLosses pretrain_step(std::span<const NodeId> batch, const PretrainData& data, AutoencoderModel& model,
                         AdamState& adam, const InfoNCEConfig& cfg, Rng& rng) {
  const PretrainLoss loss = pretrain_loss(batch, data, model, cfg, rng);
  StepLosses out;
  out.lm = loss.lm.item();
  out.infonce = loss.infonce.defined() ? loss.infonce.item() : 0.0;
  out.total = loss.total.item();
  loss.total.backward();
  auto params = model.parameters();
  adam_step(params, adam);
  return out;
}

std::vector<NodeId> batch_for_step(std::size_t num_nodes, std::size_t batch_size, std::uint64_t seed,
                                   std::size_t step) {
  if (step == 0) throw ContractError("batch_for_step: steps are 1-based");
  const std::size_t b = std::min(batch_size, num_nodes);
  const std::size_t per_epoch = num_nodes / b;
  const std::size_t epoch = (step - 1) / per_epoch;
  const std::size_t slot = (step - 1) % per_epoch;
  std::vector<NodeId> order(num_nodes);
  std::iota(order.begin(), order.end(), NodeId{0});
  Rng rng(mix(seed, epoch, 1));
  rng.shuffle(order);
  return {order.begin() + static_cast<std::ptrdiff_t>(slot * b), order.begin() + static_cast<std::ptrdiff_t>((slot + 1) * b)};
}

ReconstructionRow reconstruction_metrics(std::span<const TokenSequence> docs, const AutoencoderModel& model) {
  ReconstructionRow row;
  std::vector<std::pair<metrics::Tokens, metrics::Tokens>> pairs;
  for (const auto& doc : docs) {
    auto ref = content_tokens(doc);
    if (ref.empty()) continue;
    auto cand = content_tokens(reconstruct(doc, model, doc.ids.size()));
    if (!cand.empty()) {
      row.rouge_l += metrics::rouge_l(cand, ref);
      row.token_f1 += metrics::token_f1(cand, ref);
      pairs.emplace_back(std::move(cand), std::move(ref));
    }
  }
  if (!pairs.empty()) row.bleu = metrics::corpus_bleu(pairs);
  if (!docs.empty()) {
    row.rouge_l /= static_cast<double>(docs.size());
    row.token_f1 /= static_cast<double>(docs.size());
  }
  return row;
}

void PretrainState::save_to(Checkpoint& ckpt) const {
  model.save_to(ckpt);
  ckpt.metadata["train.step"] = std::to_string(step);
  ckpt.metadata["adam.step_count"] = std::to_string(adam.step_count);
  const auto named = model.named_parameters();
  for (std::size_t i = 0; i < named.size() && i < adam.first_moment.size(); ++i) {
    const std::size_t n = adam.first_moment[i].size();
    ckpt.tensors["adam.m." + named[i].first] = TensorRecord{{n}, adam.first_moment[i]};
    ckpt.tensors["adam.v." + named[i].first] = TensorRecord{{n}, adam.second_moment[i]};
  }
}

PretrainState PretrainState::from_checkpoint(const Checkpoint& ckpt, const AdamConfig& adam_cfg) {
  PretrainState state{AutoencoderModel::from_checkpoint(ckpt), AdamState(adam_cfg), 0};
  state.step = std::stoull(ckpt.meta("train.step"));
  state.adam.step_count = std::stoull(ckpt.meta("adam.step_count"));
  if (state.adam.step_count > 0) {
    for (const auto& [name, t] : state.model.named_parameters()) {
      auto m = ckpt.tensors.find("adam.m." + name);
      auto v = ckpt.tensors.find("adam.v." + name);
      if (m == ckpt.tensors.end() || v == ckpt.tensors.end()) {
        throw IngestionError("checkpoint: missing optimizer moments for '" + name + "'");
      }
      if (m->second.data.size() != t.numel() || v->second.data.size() != t.numel()) {
        throw DimensionError("checkpoint: optimizer moments for '" + name + "' have the wrong size");
      }
      state.adam.first_moment.push_back(m->second.data);
      state.adam.second_moment.push_back(v->second.data);
    }
  }
  return state;
}

PretrainLog run_pretraining(PretrainState& state, const PretrainData& data, const PretrainConfig& cfg,
                            const std::function<void(const LossRow&)>& on_step) {
  cfg.validate();
  state.adam.config = cfg.adam;
  PretrainLog log;
  const std::size_t n_eval = std::min(cfg.eval_docs, data.num_nodes());
  const std::span<const TokenSequence> eval_docs(data.docs.data(), n_eval);
  while (state.step < cfg.steps) {
    const std::size_t step = state.step + 1;
    const auto batch = batch_for_step(data.num_nodes(), cfg.batch_size, cfg.seed, step);
    Rng rng(mix(cfg.seed, step, 2));
    LossRow row{step, pretrain_step(batch, data, state.model, state.adam, cfg.infonce, rng)};
    state.step = step;
    log.losses.push_back(row);
    if (on_step) on_step(row);
    if (cfg.eval_every > 0 && (step % cfg.eval_every == 0 || step == cfg.steps)) {
      ReconstructionRow r = reconstruction_metrics(eval_docs, state.model);
      r.step = step;
      log.reconstruction.push_back(r);
    }
  }
  return log;
}

EmbeddingMatrix extract_embeddings(std::span<const TokenSequence> docs, const AutoencoderModel& model,
                                   std::string provenance) {
  NoGradGuard no_grad;
  const std::size_t d = model.config().d_enc;
  EmbeddingMatrix m{docs.size(), d, {}, std::move(provenance)};
  m.values.reserve(docs.size() * d);
  for (const auto& doc : docs) {
    const DiffTensor h = encode_node(doc, model);
    m.values.insert(m.values.end(), h.data().begin(), h.data().end());
  }
  return m;
}

void put_vocabulary(Checkpoint& ckpt, const Vocabulary& vocab) {
  std::string joined;
  for (const auto& t : vocab.tokens()) {
    joined += t;
    joined.push_back('\n');
  }
  ckpt.metadata["vocab"] = joined;
}

Vocabulary vocabulary_from(const Checkpoint& ckpt) {
  std::vector<std::string> tokens;
  std::istringstream is(ckpt.meta("vocab"));
  std::string line;
  while (std::getline(is, line)) tokens.push_back(line);
  return Vocabulary::from_tokens(std::move(tokens));
}

}  // namespace nodegae
