#include "nodegae/autoencoder/model.hpp"

#include <cmath>
#include <numeric>

#include "nodegae/diffcore/ops.hpp"
#include "nodegae/errors.hpp"

namespace nodegae {

namespace {

constexpr double kMaskValue = -1e30;

DiffTensor normal_param(Shape shape, double stddev, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal() * stddev;
  return DiffTensor::from(std::move(shape), std::move(v), true);
}

DiffTensor const_param(Shape shape, double value) { return DiffTensor::full(std::move(shape), value, true); }

LayerNormWeights make_ln(std::size_t d) { return {const_param({d}, 1.0), const_param({d}, 0.0)}; }

AttentionWeights make_attention(std::size_t d, double out_scale, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  return {normal_param({d, d}, s, rng), normal_param({d, d}, s, rng), normal_param({d, d}, s, rng),
          normal_param({d, d}, s * out_scale, rng)};
}

FeedForwardWeights make_ffn(std::size_t d, std::size_t hidden, double out_scale, Rng& rng) {
  return {normal_param({d, hidden}, 1.0 / std::sqrt(static_cast<double>(d)), rng), const_param({hidden}, 0.0),
          normal_param({hidden, d}, out_scale / std::sqrt(static_cast<double>(hidden)), rng), const_param({d}, 0.0)};
}

void push_ln(NamedParams& out, const std::string& prefix, const LayerNormWeights& ln) {
  out.emplace_back(prefix + ".gain", ln.gain);
  out.emplace_back(prefix + ".bias", ln.bias);
}

void push_attention(NamedParams& out, const std::string& prefix, const AttentionWeights& a) {
  out.emplace_back(prefix + ".wq", a.wq);
  out.emplace_back(prefix + ".wk", a.wk);
  out.emplace_back(prefix + ".wv", a.wv);
  out.emplace_back(prefix + ".wo", a.wo);
}

void push_ffn(NamedParams& out, const std::string& prefix, const FeedForwardWeights& f) {
  out.emplace_back(prefix + ".w1", f.w1);
  out.emplace_back(prefix + ".b1", f.b1);
  out.emplace_back(prefix + ".w2", f.w2);
  out.emplace_back(prefix + ".b2", f.b2);
}

DiffTensor layer_norm(const DiffTensor& x, const LayerNormWeights& w) {
  return add(mul(layernorm_lastdim(x), w.gain), w.bias);
}

DiffTensor feed_forward(const DiffTensor& x, const FeedForwardWeights& w) {
  return add(matmul(gelu(add(matmul(x, w.w1), w.b1)), w.w2), w.b2);
}

// Multi-head attention; `mask` (additive, [Lq, Lk]) may be undefined.
DiffTensor attention(const DiffTensor& xq, const DiffTensor& xkv, const AttentionWeights& w, std::size_t heads,
                     const DiffTensor& mask) {
  const DiffTensor q = matmul(xq, w.wq);
  const DiffTensor k = matmul(xkv, w.wk);
  const DiffTensor v = matmul(xkv, w.wv);
  const std::size_t d = q.dim(1);
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<DiffTensor> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const DiffTensor qh = heads == 1 ? q : slice_lastdim(q, h * dh, dh);
    const DiffTensor kh = heads == 1 ? k : slice_lastdim(k, h * dh, dh);
    const DiffTensor vh = heads == 1 ? v : slice_lastdim(v, h * dh, dh);
    DiffTensor scores = scale(matmul(qh, transpose_last2(kh)), inv_sqrt);
    if (mask.defined()) scores = add(scores, mask);
    outs.push_back(matmul(softmax_lastdim(scores), vh));
  }
  const DiffTensor merged = heads == 1 ? outs[0] : concat(outs, 1);
  return matmul(merged, w.wo);
}

DiffTensor embed(const DiffTensor& tok, const DiffTensor& pos, std::span<const TokenId> ids) {
  std::vector<std::int64_t> positions(ids.size());
  std::iota(positions.begin(), positions.end(), std::int64_t{0});
  return add(embedding_lookup(tok, ids), embedding_lookup(pos, positions));
}

void check_length(std::size_t len, const AutoencoderConfig& cfg, const char* what) {
  if (len == 0) throw ContractError(std::string(what) + ": empty token sequence");
  if (len > cfg.max_len) {
    throw DimensionError(std::string(what) + ": sequence of length " + std::to_string(len) + " exceeds max_len " +
                         std::to_string(cfg.max_len));
  }
}

}  // namespace

void AutoencoderConfig::validate() const {
  if (vocab_size <= kNumReserved) throw ConfigError("autoencoder: vocab_size must exceed the reserved ids");
  if (max_len == 0 || d_enc == 0 || d_dec == 0 || heads == 0 || ffn_mult == 0 || proj_len == 0) {
    throw ConfigError("autoencoder: sizes must be positive");
  }
  if (enc_layers == 0 || dec_layers == 0) throw ConfigError("autoencoder: need at least one encoder and decoder layer");
  if (d_enc % heads != 0 || d_dec % heads != 0) {
    throw ConfigError("autoencoder: d_enc and d_dec must be divisible by heads");
  }
}

void AutoencoderConfig::to_metadata(Checkpoint& ckpt) const {
  auto& m = ckpt.metadata;
  m["model.vocab_size"] = std::to_string(vocab_size);
  m["model.max_len"] = std::to_string(max_len);
  m["model.d_enc"] = std::to_string(d_enc);
  m["model.d_dec"] = std::to_string(d_dec);
  m["model.heads"] = std::to_string(heads);
  m["model.enc_layers"] = std::to_string(enc_layers);
  m["model.dec_layers"] = std::to_string(dec_layers);
  m["model.ffn_mult"] = std::to_string(ffn_mult);
  m["model.proj_len"] = std::to_string(proj_len);
}

AutoencoderConfig AutoencoderConfig::from_metadata(const Checkpoint& ckpt) {
  auto get = [&](const char* key) { return static_cast<std::size_t>(std::stoull(ckpt.meta(key))); };
  AutoencoderConfig c;
  c.vocab_size = get("model.vocab_size");
  c.max_len = get("model.max_len");
  c.d_enc = get("model.d_enc");
  c.d_dec = get("model.d_dec");
  c.heads = get("model.heads");
  c.enc_layers = get("model.enc_layers");
  c.dec_layers = get("model.dec_layers");
  c.ffn_mult = get("model.ffn_mult");
  c.proj_len = get("model.proj_len");
  c.validate();
  return c;
}

AutoencoderModel::AutoencoderModel(const AutoencoderConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const auto& c = config_;
  const double enc_out = 1.0 / std::sqrt(2.0 * static_cast<double>(c.enc_layers));
  const double dec_out = 1.0 / std::sqrt(3.0 * static_cast<double>(c.dec_layers));

  encoder_.tok_emb = normal_param({c.vocab_size, c.d_enc}, 0.5, rng);
  encoder_.pos_emb = normal_param({c.max_len, c.d_enc}, 0.1, rng);
  for (std::size_t l = 0; l < c.enc_layers; ++l) {
    EncoderBlock b;
    b.ln_attn = make_ln(c.d_enc);
    b.attn = make_attention(c.d_enc, enc_out, rng);
    b.ln_ffn = make_ln(c.d_enc);
    b.ffn = make_ffn(c.d_enc, c.d_enc * c.ffn_mult, enc_out, rng);
    encoder_.blocks.push_back(std::move(b));
  }
  encoder_.ln_final = make_ln(c.d_enc);

  projection_.w1 = normal_param({c.d_enc, c.d_enc}, 1.0 / std::sqrt(static_cast<double>(c.d_enc)), rng);
  projection_.w2 = normal_param({c.proj_len * c.d_dec, c.d_enc}, 1.0 / std::sqrt(static_cast<double>(c.d_enc)), rng);

  decoder_.tok_emb = normal_param({c.vocab_size, c.d_dec}, 0.5, rng);
  decoder_.pos_emb = normal_param({c.max_len, c.d_dec}, 0.1, rng);
  decoder_.ln_memory = make_ln(c.d_dec);
  for (std::size_t l = 0; l < c.dec_layers; ++l) {
    DecoderBlock b;
    b.ln_self = make_ln(c.d_dec);
    b.self_attn = make_attention(c.d_dec, dec_out, rng);
    b.ln_cross = make_ln(c.d_dec);
    b.cross_attn = make_attention(c.d_dec, dec_out, rng);
    b.ln_ffn = make_ln(c.d_dec);
    b.ffn = make_ffn(c.d_dec, c.d_dec * c.ffn_mult, dec_out, rng);
    decoder_.blocks.push_back(std::move(b));
  }
  decoder_.ln_final = make_ln(c.d_dec);
  decoder_.out_w = normal_param({c.d_dec, c.vocab_size}, 1.0 / std::sqrt(static_cast<double>(c.d_dec)), rng);
  decoder_.out_b = const_param({c.vocab_size}, 0.0);
}

NamedParams AutoencoderModel::named_parameters() const {
  NamedParams out;
  out.emplace_back("enc.tok_emb", encoder_.tok_emb);
  out.emplace_back("enc.pos_emb", encoder_.pos_emb);
  for (std::size_t l = 0; l < encoder_.blocks.size(); ++l) {
    const auto& b = encoder_.blocks[l];
    const std::string p = "enc.block" + std::to_string(l);
    push_ln(out, p + ".ln_attn", b.ln_attn);
    push_attention(out, p + ".attn", b.attn);
    push_ln(out, p + ".ln_ffn", b.ln_ffn);
    push_ffn(out, p + ".ffn", b.ffn);
  }
  push_ln(out, "enc.ln_final", encoder_.ln_final);
  out.emplace_back("proj.w1", projection_.w1);
  out.emplace_back("proj.w2", projection_.w2);
  out.emplace_back("dec.tok_emb", decoder_.tok_emb);
  out.emplace_back("dec.pos_emb", decoder_.pos_emb);
  push_ln(out, "dec.ln_memory", decoder_.ln_memory);
  for (std::size_t l = 0; l < decoder_.blocks.size(); ++l) {
    const auto& b = decoder_.blocks[l];
    const std::string p = "dec.block" + std::to_string(l);
    push_ln(out, p + ".ln_self", b.ln_self);
    push_attention(out, p + ".self_attn", b.self_attn);
    push_ln(out, p + ".ln_cross", b.ln_cross);
    push_attention(out, p + ".cross_attn", b.cross_attn);
    push_ln(out, p + ".ln_ffn", b.ln_ffn);
    push_ffn(out, p + ".ffn", b.ffn);
  }
  push_ln(out, "dec.ln_final", decoder_.ln_final);
  out.emplace_back("dec.out_w", decoder_.out_w);
  out.emplace_back("dec.out_b", decoder_.out_b);
  return out;
}

std::vector<DiffTensor> AutoencoderModel::parameters() const {
  std::vector<DiffTensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::size_t AutoencoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : parameters()) n += t.numel();
  return n;
}

void AutoencoderModel::save_to(Checkpoint& ckpt) const {
  config_.to_metadata(ckpt);
  for (const auto& [name, t] : named_parameters()) ckpt.put(name, t);
}

AutoencoderModel AutoencoderModel::from_checkpoint(const Checkpoint& ckpt) {
  AutoencoderModel model(AutoencoderConfig::from_metadata(ckpt), 0);
  for (auto& [name, t] : model.named_parameters()) ckpt.restore(name, t);
  return model;
}

DiffTensor encoder_hidden(const AutoencoderModel& model, std::span<const TokenId> ids) {
  const auto& cfg = model.config();
  check_length(ids.size(), cfg, "encoder");
  const auto& enc = model.encoder();
  const std::size_t len = ids.size();

  DiffTensor mask;
  if (std::find(ids.begin(), ids.end(), kPad) != ids.end()) {
    std::vector<double> m(len * len, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t j = 0; j < len; ++j) {
        if (ids[j] == kPad) m[i * len + j] = kMaskValue;
      }
    }
    mask = DiffTensor::from({len, len}, std::move(m));
  }

  DiffTensor x = embed(enc.tok_emb, enc.pos_emb, ids);
  for (const auto& b : enc.blocks) {
    const DiffTensor xa = layer_norm(x, b.ln_attn);
    x = add(x, attention(xa, xa, b.attn, cfg.heads, mask));
    x = add(x, feed_forward(layer_norm(x, b.ln_ffn), b.ffn));
  }
  return layer_norm(x, enc.ln_final);
}

DiffTensor encode_node(const TokenSequence& tokens, const AutoencoderModel& model) {
  const std::size_t len = tokens.ids.size();
  const std::size_t valid = static_cast<std::size_t>(
      std::count_if(tokens.ids.begin(), tokens.ids.end(), [](TokenId t) { return t != kPad; }));
  if (valid == 0) throw ContractError("encode_node: sequence has no non-pad tokens");
  const DiffTensor hidden = encoder_hidden(model, tokens.ids);
  std::vector<double> w(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    if (tokens.ids[i] != kPad) w[i] = 1.0 / static_cast<double>(valid);
  }
  const DiffTensor pooled = matmul(DiffTensor::from({1, len}, std::move(w)), hidden);
  return reshape(pooled, {model.config().d_enc});
}

DiffTensor project(const DiffTensor& h, const AutoencoderModel& model) {
  const auto& cfg = model.config();
  if (h.numel() != cfg.d_enc) {
    throw DimensionError("project: latent of shape " + shape_str(h.shape()) + " but d_enc is " +
                         std::to_string(cfg.d_enc));
  }
  const auto& p = model.projection();
  const DiffTensor col = reshape(h, {cfg.d_enc, 1});
  const DiffTensor hidden = relu(matmul(p.w1, col));
  return reshape(matmul(p.w2, hidden), {cfg.proj_len, cfg.d_dec});
}

DiffTensor decoder_logits(const DiffTensor& memory, std::span<const TokenId> input_ids, const AutoencoderModel& model) {
  const auto& cfg = model.config();
  check_length(input_ids.size(), cfg, "decoder");
  if (memory.rank() != 2 || memory.dim(1) != cfg.d_dec) {
    throw DimensionError("decoder: memory of shape " + shape_str(memory.shape()) + " but d_dec is " +
                         std::to_string(cfg.d_dec));
  }
  const auto& dec = model.decoder();
  const std::size_t len = input_ids.size();

  DiffTensor causal;
  if (len > 1) {
    std::vector<double> m(len * len, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t j = i + 1; j < len; ++j) m[i * len + j] = kMaskValue;
    }
    causal = DiffTensor::from({len, len}, std::move(m));
  }

  const DiffTensor mem = layer_norm(memory, dec.ln_memory);
  DiffTensor x = embed(dec.tok_emb, dec.pos_emb, input_ids);
  for (const auto& b : dec.blocks) {
    const DiffTensor xs = layer_norm(x, b.ln_self);
    x = add(x, attention(xs, xs, b.self_attn, cfg.heads, causal));
    x = add(x, attention(layer_norm(x, b.ln_cross), mem, b.cross_attn, cfg.heads, DiffTensor()));
    x = add(x, feed_forward(layer_norm(x, b.ln_ffn), b.ffn));
  }
  return add(matmul(layer_norm(x, dec.ln_final), dec.out_w), dec.out_b);
}

std::vector<TokenId> shifted_inputs(const TokenSequence& target) {
  std::vector<TokenId> in;
  in.reserve(target.ids.size());
  in.push_back(kBos);
  for (std::size_t i = 0; i + 1 < target.ids.size(); ++i) in.push_back(target.ids[i]);
  return in;
}

DiffTensor reconstruction_logits(const TokenSequence& tokens, const AutoencoderModel& model) {
  const DiffTensor memory = project(encode_node(tokens, model), model);
  return decoder_logits(memory, shifted_inputs(tokens), model);
}

TokenSequence reconstruct(const TokenSequence& tokens, const AutoencoderModel& model, std::size_t max_gen_len) {
  NoGradGuard no_grad;
  const auto& cfg = model.config();
  const DiffTensor memory = project(encode_node(tokens, model), model);
  const std::size_t limit = std::min(max_gen_len, cfg.max_len);
  std::vector<TokenId> inputs{kBos};
  TokenSequence out;
  while (out.ids.size() < limit) {
    const DiffTensor logits = decoder_logits(memory, inputs, model);
    const auto row = logits.data().subspan((inputs.size() - 1) * cfg.vocab_size, cfg.vocab_size);
    TokenId best = kUnk;
    for (TokenId t = kUnk; static_cast<std::size_t>(t) < cfg.vocab_size; ++t) {
      if (t == kBos) continue;
      if (row[t] > row[best]) best = t;
    }
    out.ids.push_back(best);
    if (best == kEos) break;
    inputs.push_back(best);
  }
  return out;
}

}  // namespace nodegae
