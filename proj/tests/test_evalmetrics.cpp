#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nodegae/errors.hpp"
#include "nodegae/evalmetrics/metrics.hpp"
#include "nodegae/rng.hpp"
#include "support/oracles.hpp"

using namespace nodegae;
using metrics::split_tokens;
using metrics::Tokens;

namespace {

// Clipped n-gram matches by greedy pairing with used flags.
std::pair<std::size_t, std::size_t> brute_ngram(const Tokens& cand, const Tokens& ref, std::size_t n) {
  if (cand.size() < n) return {0, 0};
  const std::size_t total = cand.size() - n + 1;
  std::vector<bool> used(ref.size() >= n ? ref.size() - n + 1 : 0, false);
  std::size_t matched = 0;
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = 0; j < used.size(); ++j) {
      if (used[j]) continue;
      bool eq = true;
      for (std::size_t k = 0; k < n && eq; ++k) eq = cand[i + k] == ref[j + k];
      if (eq) {
        used[j] = true;
        ++matched;
        break;
      }
    }
  }
  return {matched, total};
}

double brute_bleu(const Tokens& cand, const Tokens& ref) {
  double logp = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto [m, t] = brute_ngram(cand, ref, n);
    if (n == 1 && m == 0) return 0.0;
    const double p = m > 0 ? static_cast<double>(m) / t : 1.0 / (t + 1.0);
    logp += std::log(p) / 4.0;
  }
  const double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(logp);
}

}  // namespace

TEST_CASE("accuracy examples") {
  const std::vector<std::int64_t> a{1, 2, 2, 3}, b{1, 2, 3, 3}, c{0, 0, 0, 0};
  CHECK(metrics::accuracy(a, a) == 1.0);
  CHECK(metrics::accuracy(a, c) == 0.0);
  CHECK(metrics::accuracy(a, b) == 0.75);
  CHECK_THROWS_AS(metrics::accuracy(a, std::vector<std::int64_t>{1}), MetricError);
  CHECK_THROWS_AS(metrics::accuracy(std::vector<std::int64_t>{}, std::vector<std::int64_t>{}), MetricError);
}

TEST_CASE("roc_auc examples") {
  const std::vector<int> labels{0, 0, 1, 1};
  CHECK(metrics::roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, labels) == 1.0);
  CHECK(metrics::roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, labels) == 0.5);
  CHECK_THROWS_AS(metrics::roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), MetricError);
}

TEST_CASE("roc_auc matches the pairwise oracle, with and without ties") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    std::vector<double> scores(30);
    std::vector<int> labels(30);
    for (std::size_t i = 0; i < 30; ++i) {
      scores[i] = seed % 2 ? rng.normal() : static_cast<double>(rng.below(5));
      labels[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2));
    }
    CHECK(std::abs(metrics::roc_auc(scores, labels) - oracle::pairwise_auc(scores, labels)) < 1e-12);
  }
}

TEST_CASE("roc_auc of negated scores is the complement on tie-free input") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    std::vector<double> s(25), neg(25);
    std::vector<int> y(25);
    for (std::size_t i = 0; i < 25; ++i) {
      s[i] = rng.normal();
      neg[i] = -s[i];
      y[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2));
    }
    CHECK(std::abs(metrics::roc_auc(s, y) + metrics::roc_auc(neg, y) - 1.0) < 1e-12);
  }
}

TEST_CASE("metrics are invariant to example order") {
  Rng rng(77);
  std::vector<std::size_t> perm(20);
  for (std::size_t i = 0; i < 20; ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<double> s(20), sp(20);
  std::vector<int> y(20), yp(20);
  std::vector<std::int64_t> p(20), t(20), pp(20), tp(20);
  for (std::size_t i = 0; i < 20; ++i) {
    s[i] = rng.normal();
    y[i] = static_cast<int>(i % 2);
    p[i] = static_cast<std::int64_t>(rng.below(3));
    t[i] = static_cast<std::int64_t>(rng.below(3));
  }
  for (std::size_t i = 0; i < 20; ++i) {
    sp[i] = s[perm[i]];
    yp[i] = y[perm[i]];
    pp[i] = p[perm[i]];
    tp[i] = t[perm[i]];
  }
  CHECK(metrics::roc_auc(s, y) == doctest::Approx(metrics::roc_auc(sp, yp)).epsilon(1e-15));
  CHECK(metrics::accuracy(p, t) == metrics::accuracy(pp, tp));
}

TEST_CASE("bleu examples") {
  const auto ref = split_tokens("the cat sat on a mat with the red hat");
  CHECK(metrics::bleu(ref, ref) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(metrics::bleu(split_tokens("x y z"), split_tokens("a b c d")) == 0.0);

  // Hand count: unigrams 10/10, bigrams 5/9, trigrams 2/8, 4-grams 1/7.
  const auto cand = split_tokens("the cat sat on the mat with a red hat");
  const double expected = std::pow(1.0 * (5.0 / 9.0) * (2.0 / 8.0) * (1.0 / 7.0), 0.25);
  CHECK(std::abs(metrics::bleu(cand, ref) - expected) < 1e-12);
  CHECK(std::abs(metrics::bleu(cand, ref) - brute_bleu(cand, ref)) < 1e-12);

  CHECK_THROWS_AS(metrics::bleu({}, ref), MetricError);
  CHECK_THROWS_AS(metrics::corpus_bleu({}), MetricError);
}

TEST_CASE("bleu matches the n-gram oracle on random 10-token pairs") {
  const std::vector<std::string> words{"a", "b", "c", "d", "e"};
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    Tokens cand(10), ref(7 + rng.below(7));
    for (auto& w : cand) w = words[rng.below(words.size())];
    for (auto& w : ref) w = words[rng.below(words.size())];
    const double got = metrics::bleu(cand, ref);
    CHECK(std::abs(got - brute_bleu(cand, ref)) < 1e-12);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("corpus bleu pools counts across pairs") {
  const auto a = split_tokens("a b c d"), b = split_tokens("a b x d");
  const double pooled = metrics::corpus_bleu({{a, a}, {b, a}});
  // unigrams 7/8, bigrams 4/6, trigrams 2/4, 4-grams 1/2.
  const double expected = std::pow((7.0 / 8.0) * (4.0 / 6.0) * (2.0 / 4.0) * (1.0 / 2.0), 0.25);
  CHECK(std::abs(pooled - expected) < 1e-12);
}

TEST_CASE("rouge-l examples") {
  const auto x = split_tokens("a b c d");
  CHECK(metrics::rouge_l(x, x) == 1.0);
  CHECK(metrics::rouge_l(x, split_tokens("e f")) == 0.0);
  CHECK(metrics::lcs_length(x, split_tokens("a c d e")) == 3);
  CHECK(metrics::rouge_l(x, split_tokens("a c d e")) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(metrics::rouge_1(split_tokens("a a b"), split_tokens("a b b")) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(metrics::rouge_l(x, {}), MetricError);
}

TEST_CASE("token f1 examples") {
  const auto x = split_tokens("a a b");
  CHECK(metrics::token_f1(x, x) == 1.0);
  CHECK(metrics::token_f1(x, split_tokens("c")) == 0.0);
  CHECK(metrics::token_f1(x, split_tokens("a b b")) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(metrics::token_f1({}, x), MetricError);
}
