#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nodegae::metrics {

using Tokens = std::vector<std::string>;

/// Fraction of positions where pred == truth. Throws MetricError on length
/// mismatch or empty input.
double accuracy(std::span<const std::int64_t> pred, std::span<const std::int64_t> truth);

/// Rank-based (Mann-Whitney) ROC-AUC with midranks for ties. Labels are
/// 0/1; throws MetricError unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Corpus BLEU over (candidate, reference) pairs: clipped n-gram precisions
/// for n = 1..4 combined geometrically with uniform weights, times the
/// brevity penalty. A zero unigram match count yields exactly 0. For n >= 2,
/// an order with no matches uses (0 + 1) / (count + 1).
double corpus_bleu(const std::vector<std::pair<Tokens, Tokens>>& pairs);
double bleu(const Tokens& candidate, const Tokens& reference);

/// ROUGE-L F-measure (beta = 1) from the longest common subsequence.
double rouge_l(const Tokens& candidate, const Tokens& reference);
/// ROUGE-1 F-measure from clipped unigram overlap.
double rouge_1(const Tokens& candidate, const Tokens& reference);

/// Bag-of-tokens F1 with multiset intersection.
double token_f1(const Tokens& candidate, const Tokens& reference);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

/// Whitespace split, for quick use on plain strings.
Tokens split_tokens(const std::string& text);

}  // namespace nodegae::metrics
