#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nodegae/diffcore/checkpoint.hpp"
#include "nodegae/diffcore/tensor.hpp"
#include "nodegae/rng.hpp"
#include "nodegae/textcorpus/vocabulary.hpp"

namespace nodegae {

struct AutoencoderConfig {
  std::size_t vocab_size = 2048;
  std::size_t max_len = 64;
  std::size_t d_enc = 64;
  std::size_t d_dec = 64;
  std::size_t heads = 4;
  std::size_t enc_layers = 2;
  std::size_t dec_layers = 2;
  std::size_t ffn_mult = 4;
  std::size_t proj_len = 4;  // s: number of decoder memory slots

  /// Throws ConfigError on inconsistent sizes.
  void validate() const;

  void to_metadata(Checkpoint& ckpt) const;
  static AutoencoderConfig from_metadata(const Checkpoint& ckpt);
};

using NamedParams = std::vector<std::pair<std::string, DiffTensor>>;

struct AttentionWeights {
  DiffTensor wq, wk, wv, wo;  // [d, d]
};

struct LayerNormWeights {
  DiffTensor gain, bias;  // [d]
};

struct FeedForwardWeights {
  DiffTensor w1, b1;  // [d, ffn], [ffn]
  DiffTensor w2, b2;  // [ffn, d], [d]
};

struct EncoderBlock {
  LayerNormWeights ln_attn;
  AttentionWeights attn;
  LayerNormWeights ln_ffn;
  FeedForwardWeights ffn;
};

struct DecoderBlock {
  LayerNormWeights ln_self;
  AttentionWeights self_attn;
  LayerNormWeights ln_cross;
  AttentionWeights cross_attn;
  LayerNormWeights ln_ffn;
  FeedForwardWeights ffn;
};

/// Pre-layernorm transformer encoder; the node latent is the mean of the
/// final hidden states over non-pad positions.
struct EncoderStack {
  DiffTensor tok_emb;  // [vocab, d_enc]
  DiffTensor pos_emb;  // [max_len, d_enc]
  std::vector<EncoderBlock> blocks;
  LayerNormWeights ln_final;
};

/// W2 relu(W1 h), reshaped to proj_len x d_dec.
struct ProjectionHead {
  DiffTensor w1;  // [d_enc, d_enc]
  DiffTensor w2;  // [proj_len * d_dec, d_enc]
};

/// Causal transformer decoder cross-attending to the projected memory slots.
struct DecoderStack {
  DiffTensor tok_emb;  // [vocab, d_dec]
  DiffTensor pos_emb;  // [max_len, d_dec]
  LayerNormWeights ln_memory;
  std::vector<DecoderBlock> blocks;
  LayerNormWeights ln_final;
  DiffTensor out_w;  // [d_dec, vocab]
  DiffTensor out_b;  // [vocab]
};

class AutoencoderModel {
 public:
  AutoencoderModel(const AutoencoderConfig& config, std::uint64_t seed);

  const AutoencoderConfig& config() const { return config_; }
  EncoderStack& encoder() { return encoder_; }
  const EncoderStack& encoder() const { return encoder_; }
  ProjectionHead& projection() { return projection_; }
  const ProjectionHead& projection() const { return projection_; }
  const DecoderStack& decoder() const { return decoder_; }

  /// Stable, checkpoint-facing names in a fixed order.
  NamedParams named_parameters() const;
  std::vector<DiffTensor> parameters() const;
  std::size_t parameter_count() const;

  void save_to(Checkpoint& ckpt) const;
  /// Builds a model with the checkpoint's config and copies its weights.
  static AutoencoderModel from_checkpoint(const Checkpoint& ckpt);

 private:
  AutoencoderConfig config_;
  EncoderStack encoder_;
  ProjectionHead projection_;
  DecoderStack decoder_;
};

/// Final-layer hidden states [L, d_enc] for the given ids (PAD keys masked).
DiffTensor encoder_hidden(const AutoencoderModel& model, std::span<const TokenId> ids);

/// Latent h [d_enc]. Throws ContractError when every position is PAD.
DiffTensor encode_node(const TokenSequence& tokens, const AutoencoderModel& model);

/// reshape(W2 relu(W1 h), proj_len, d_dec).
DiffTensor project(const DiffTensor& h, const AutoencoderModel& model);

/// Logits [L, vocab] for decoder inputs `input_ids` given memory [s, d_dec].
DiffTensor decoder_logits(const DiffTensor& memory, std::span<const TokenId> input_ids,
                          const AutoencoderModel& model);

/// Teacher-forcing inputs for a target: BOS followed by target[0..n-2].
std::vector<TokenId> shifted_inputs(const TokenSequence& target);

/// Full reconstruction path for one document: logits [L, vocab] aligned with
/// target positions.
DiffTensor reconstruction_logits(const TokenSequence& tokens, const AutoencoderModel& model);

/// Greedy decoding from BOS conditioned on project(encode_node(tokens)).
/// Stops after EOS (which is kept) or max_gen_len tokens.
TokenSequence reconstruct(const TokenSequence& tokens, const AutoencoderModel& model, std::size_t max_gen_len);

}  // namespace nodegae
