#include "nodegae/textcorpus/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nodegae/errors.hpp"

namespace nodegae {

namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u"};

// Deterministic pronounceable word for an index; distinct indices give
// distinct words because the prefix encodes the index in base 70.
std::string make_word(std::size_t index, const char* suffix) {
  std::string w;
  do {
    const std::size_t syllable = index % 70;
    w += kOnsets[syllable / 5];
    w += kVowels[syllable % 5];
    index /= 70;
  } while (index > 0);
  return w + suffix;
}

}  // namespace

void SyntheticGraphSpec::validate() const {
  if (num_nodes == 0) throw ConfigError("synthetic: num_nodes must be positive");
  if (num_classes == 0) throw ConfigError("synthetic: num_classes must be positive");
  if (keywords_per_class == 0) throw ConfigError("synthetic: keywords_per_class must be positive");
  if (doc_length_min == 0 || doc_length_min > doc_length_max) {
    throw ConfigError("synthetic: need 1 <= doc_length_min <= doc_length_max");
  }
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(class_token_fraction) || !prob(intra_class_edge_prob) || !prob(inter_class_edge_prob)) {
    throw ConfigError("synthetic: probabilities must lie in [0,1]");
  }
  if (class_token_fraction < 1.0 && shared_pool_size == 0) {
    throw ConfigError("synthetic: shared_pool_size must be positive when class_token_fraction < 1");
  }
  if (intra_class_edge_prob < inter_class_edge_prob) {
    throw ConfigError("synthetic: intra_class_edge_prob must not be below inter_class_edge_prob");
  }
}

TextGraph generate_synthetic(const SyntheticGraphSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  TextGraph tg;
  const std::size_t n = spec.num_nodes;

  tg.labels.resize(n);
  for (auto& y : tg.labels) y = static_cast<std::int64_t>(rng.below(spec.num_classes));

  const std::size_t span = spec.doc_length_max - spec.doc_length_min + 1;
  tg.texts.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t len = spec.doc_length_min + rng.below(span);
    std::string doc;
    for (std::size_t t = 0; t < len; ++t) {
      std::string word;
      if (rng.uniform() < spec.class_token_fraction) {
        const std::size_t k = rng.below(spec.keywords_per_class);
        word = make_word(static_cast<std::size_t>(tg.labels[v]) * spec.keywords_per_class + k, "x");
      } else {
        word = make_word(rng.below(spec.shared_pool_size), "");
      }
      if (!doc.empty()) doc.push_back(' ');
      doc += word;
    }
    tg.texts[v] = std::move(doc);
  }

  std::vector<Edge> edges;
  for (NodeId u = 0; static_cast<std::size_t>(u) < n; ++u) {
    for (NodeId v = u + 1; static_cast<std::size_t>(v) < n; ++v) {
      const double p = tg.labels[u] == tg.labels[v] ? spec.intra_class_edge_prob : spec.inter_class_edge_prob;
      if (rng.uniform() < p) edges.emplace_back(u, v);
    }
  }
  tg.graph = CsrGraph::from_edges(n, edges);

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::llround(0.54 * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(0.18 * static_cast<double>(n))));
  tg.splits.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  tg.splits.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                       order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  tg.splits.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  for (auto* s : {&tg.splits.train, &tg.splits.val, &tg.splits.test}) std::sort(s->begin(), s->end());
  return tg;
}

}  // namespace nodegae
