#include "nodegae/evalmetrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "nodegae/errors.hpp"

namespace nodegae::metrics {

namespace {

void require_nonempty(const char* name, const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) {
    throw MetricError(std::string(name) + ": candidate and reference must be non-empty");
  }
}

std::map<Tokens, std::size_t> ngram_counts(const Tokens& tokens, std::size_t n) {
  std::map<Tokens, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

std::size_t multiset_overlap(const Tokens& a, const Tokens& b) {
  const auto ca = ngram_counts(a, 1);
  const auto cb = ngram_counts(b, 1);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : ca) {
    auto it = cb.find(gram);
    if (it != cb.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

double f_measure(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double accuracy(std::span<const std::int64_t> pred, std::span<const std::int64_t> truth) {
  if (pred.size() != truth.size()) throw MetricError("accuracy: length mismatch");
  if (pred.empty()) throw MetricError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw MetricError("roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of (1-based) midranks of positives.
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricError("roc_auc: both classes must be present");
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double corpus_bleu(const std::vector<std::pair<Tokens, Tokens>>& pairs) {
  if (pairs.empty()) throw MetricError("bleu: no sentence pairs");
  constexpr std::size_t kMaxOrder = 4;
  std::size_t matches[kMaxOrder] = {};
  std::size_t totals[kMaxOrder] = {};
  std::size_t cand_len = 0, ref_len = 0;
  for (const auto& [cand, ref] : pairs) {
    require_nonempty("bleu", cand, ref);
    cand_len += cand.size();
    ref_len += ref.size();
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      const auto cc = ngram_counts(cand, n);
      const auto rc = ngram_counts(ref, n);
      for (const auto& [gram, count] : cc) {
        totals[n - 1] += count;
        auto it = rc.find(gram);
        if (it != rc.end()) matches[n - 1] += std::min(count, it->second);
      }
    }
  }
  if (matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    double p;
    if (n == 0 || matches[n] > 0) {
      p = static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
    } else {
      p = 1.0 / static_cast<double>(totals[n] + 1);
    }
    log_sum += std::log(p) / static_cast<double>(kMaxOrder);
  }
  const double bp = cand_len >= ref_len ? 1.0
                                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return std::min(1.0, bp * std::exp(log_sum));
}

double bleu(const Tokens& candidate, const Tokens& reference) {
  return corpus_bleu({{candidate, reference}});
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Tokens& candidate, const Tokens& reference) {
  require_nonempty("rouge_l", candidate, reference);
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  return f_measure(lcs / static_cast<double>(candidate.size()), lcs / static_cast<double>(reference.size()));
}

double rouge_1(const Tokens& candidate, const Tokens& reference) {
  require_nonempty("rouge_1", candidate, reference);
  const double overlap = static_cast<double>(multiset_overlap(candidate, reference));
  return f_measure(overlap / static_cast<double>(candidate.size()), overlap / static_cast<double>(reference.size()));
}

double token_f1(const Tokens& candidate, const Tokens& reference) {
  require_nonempty("token_f1", candidate, reference);
  const double overlap = static_cast<double>(multiset_overlap(candidate, reference));
  return f_measure(overlap / static_cast<double>(candidate.size()), overlap / static_cast<double>(reference.size()));
}

Tokens split_tokens(const std::string& text) {
  Tokens out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace nodegae::metrics
