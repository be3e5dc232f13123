#include "nodegae/autoencoder/losses.hpp"

#include <algorithm>

#include "nodegae/diffcore/ops.hpp"
#include "nodegae/errors.hpp"

namespace nodegae {

namespace {

DiffTensor as_row(const DiffTensor& v) {
  if (v.rank() == 2 && v.dim(0) == 1) return v;
  if (v.rank() != 1) throw DimensionError("infonce_loss: expected a vector, got " + shape_str(v.shape()));
  return reshape(v, {1, v.dim(0)});
}

DiffTensor prepare(const DiffTensor& rows, bool normalize) { return normalize ? l2_normalize_lastdim(rows) : rows; }

}  // namespace

bool InfoNCEConfig::enabled() const {
  return std::any_of(alphas.begin(), alphas.end(), [](double a) { return a != 0.0; });
}

void InfoNCEConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("infonce: tau must be positive");
  for (double a : alphas) {
    if (!(a >= 0.0)) throw ConfigError("infonce: hop weights must be non-negative");
  }
}

DiffTensor lm_loss(const DiffTensor& logits, const TokenSequence& target) {
  if (logits.rank() != 2 || logits.dim(0) < target.ids.size()) {
    throw DimensionError("lm_loss: logits " + shape_str(logits.shape()) + " shorter than target of " +
                         std::to_string(target.ids.size()));
  }
  std::vector<std::int64_t> targets(target.ids.begin(), target.ids.end());
  targets.resize(logits.dim(0), kPad);
  return cross_entropy_logits(logits, targets, kPad);
}

DiffTensor infonce_loss(const DiffTensor& anchor, std::span<const std::optional<DiffTensor>> positives,
                        std::span<const DiffTensor> negatives, const InfoNCEConfig& cfg) {
  cfg.validate();
  if (positives.size() > cfg.num_hops()) throw ConfigError("infonce_loss: more positive hops than weights");
  const DiffTensor a = prepare(as_row(anchor), cfg.normalize);
  const std::size_t d = a.dim(1);
  std::vector<DiffTensor> neg_rows;
  for (const auto& n : negatives) {
    neg_rows.push_back(as_row(n));
    if (neg_rows.back().dim(1) != d) throw DimensionError("infonce_loss: negative dimension differs from anchor");
  }
  const std::vector<std::int64_t> target{0};
  DiffTensor total;
  for (std::size_t k = 0; k < positives.size(); ++k) {
    if (!positives[k] || cfg.alphas[k] == 0.0) continue;
    std::vector<DiffTensor> candidates{as_row(*positives[k])};
    if (candidates[0].dim(1) != d) throw DimensionError("infonce_loss: positive dimension differs from anchor");
    candidates.insert(candidates.end(), neg_rows.begin(), neg_rows.end());
    const DiffTensor stacked = prepare(concat(candidates, 0), cfg.normalize);
    const DiffTensor logits = scale(matmul(a, transpose_last2(stacked)), 1.0 / cfg.tau);
    const DiffTensor term = scale(cross_entropy_logits(logits, target), cfg.alphas[k]);
    total = total.defined() ? add(total, term) : term;
  }
  return total.defined() ? total : DiffTensor::scalar(0.0);
}

DiffTensor batch_infonce(const DiffTensor& anchors, std::span<const HopPositives> hops, const InfoNCEConfig& cfg) {
  cfg.validate();
  if (anchors.rank() != 2) throw DimensionError("batch_infonce: anchors must be [B, d], got " + shape_str(anchors.shape()));
  if (hops.size() > cfg.num_hops()) throw ConfigError("batch_infonce: more positive hops than weights");
  const std::size_t batch = anchors.dim(0);
  const DiffTensor a = prepare(anchors, cfg.normalize);
  DiffTensor sim_flat;
  if (batch > 1) sim_flat = reshape(matmul(a, transpose_last2(a)), {batch * batch, 1});

  DiffTensor total;
  for (std::size_t k = 0; k < hops.size(); ++k) {
    const auto& hop = hops[k];
    const std::size_t n = hop.anchor_rows.size();
    if (n == 0 || cfg.alphas[k] == 0.0) continue;
    if (hop.embeddings.rank() != 2 || hop.embeddings.dim(0) != n || hop.embeddings.dim(1) != anchors.dim(1)) {
      throw DimensionError("batch_infonce: hop positives of shape " + shape_str(hop.embeddings.shape()));
    }
    std::vector<std::int64_t> rows;
    for (std::size_t r : hop.anchor_rows) {
      if (r >= batch) throw IndexError("batch_infonce: anchor row out of range");
      rows.push_back(static_cast<std::int64_t>(r));
    }
    const DiffTensor p = prepare(hop.embeddings, cfg.normalize);
    const DiffTensor pos = reshape(sum_lastaxis(mul(embedding_lookup(a, rows), p)), {n, 1});
    DiffTensor logits = pos;
    if (batch > 1) {
      std::vector<std::int64_t> neg_idx;
      neg_idx.reserve(n * (batch - 1));
      for (std::int64_t i : rows) {
        for (std::size_t j = 0; j < batch; ++j) {
          if (static_cast<std::size_t>(i) != j) neg_idx.push_back(i * static_cast<std::int64_t>(batch) + static_cast<std::int64_t>(j));
        }
      }
      const DiffTensor neg = reshape(embedding_lookup(sim_flat, neg_idx), {n, batch - 1});
      const std::vector<DiffTensor> parts{pos, neg};
      logits = concat(parts, 1);
    }
    const std::vector<std::int64_t> targets(n, 0);
    const double weight = cfg.alphas[k] * static_cast<double>(n) / static_cast<double>(batch);
    const DiffTensor term = scale(cross_entropy_logits(scale(logits, 1.0 / cfg.tau), targets), weight);
    total = total.defined() ? add(total, term) : term;
  }
  return total.defined() ? total : DiffTensor::scalar(0.0);
}

}  // namespace nodegae
