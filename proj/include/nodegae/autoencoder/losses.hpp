#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nodegae/diffcore/tensor.hpp"
#include "nodegae/textcorpus/vocabulary.hpp"

namespace nodegae {

struct InfoNCEConfig {
  double tau = 0.5;
  std::vector<double> alphas{1.0, 0.1};  // alphas[k-1] weights hop k
  // L2-normalize embeddings before the dot products.
  bool normalize = true;

  std::size_t num_hops() const { return alphas.size(); }
  bool enabled() const;
  /// Throws ConfigError unless tau > 0 and every alpha >= 0.
  void validate() const;
};

/// Mean token NLL of `target` under [L, vocab] logits from teacher forcing.
/// PAD targets are ignored; logits rows past the target length are ignored.
DiffTensor lm_loss(const DiffTensor& logits, const TokenSequence& target);

/// Multi-hop InfoNCE for one anchor. positives[k-1] is the hop-k positive or
/// nullopt when the anchor has nothing at that distance; such hops add 0.
DiffTensor infonce_loss(const DiffTensor& anchor, std::span<const std::optional<DiffTensor>> positives,
                        std::span<const DiffTensor> negatives, const InfoNCEConfig& cfg);

/// Positives for one hop across a batch: rows of `embeddings` pair with the
/// anchors listed in anchor_rows.
struct HopPositives {
  std::vector<std::size_t> anchor_rows;
  DiffTensor embeddings;  // [anchor_rows.size(), d]
};

/// Batched form over anchors [B, d] where each anchor's negatives are the other
/// B-1 anchors. Equals the mean over anchors of infonce_loss.
DiffTensor batch_infonce(const DiffTensor& anchors, std::span<const HopPositives> hops, const InfoNCEConfig& cfg);

}  // namespace nodegae
