#include "nodegae/textcorpus/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "nodegae/errors.hpp"

namespace nodegae {

namespace {

const std::vector<std::string> kReserved = {"<pad>", "<unk>", "<bos>", "<eos>"};
constexpr std::string_view kUnkLiteral = "<unk>";

bool is_separator(unsigned char c) { return std::isspace(c) || std::ispunct(c); }

}  // namespace

TokenSequence pad(const TokenSequence& seq, std::size_t length) {
  TokenSequence out = seq;
  if (out.ids.size() < length) out.ids.resize(length, kPad);
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text.substr(i, kUnkLiteral.size()) == kUnkLiteral) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      out.emplace_back(kUnkLiteral);
      i += kUnkLiteral.size() - 1;
      continue;
    }
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80 && is_separator(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(kReserved) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : id_to_token_(std::move(tokens)) {
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    if (!token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i)).second) {
      throw ConfigError("vocabulary: duplicate token '" + id_to_token_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved || !std::equal(kReserved.begin(), kReserved.end(), tokens.begin())) {
    throw ConfigError("vocabulary: token list must start with the reserved tokens");
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t max_size) {
  if (max_size < kNumReserved + 1) throw ConfigError("build_vocab: max_size must be at least 5");
  if (texts.empty()) throw ConfigError("build_vocab: no texts");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& tok : tokenize(text)) {
      if (std::find(kReserved.begin(), kReserved.end(), tok) != kReserved.end()) continue;
      ++counts[std::move(tok)];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // counts is lexicographically ordered already, so a stable sort on count
  // breaks ties lexicographically.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = kReserved;
  for (std::size_t i = 0; i < ranked.size() && tokens.size() < max_size; ++i) tokens.push_back(ranked[i].first);
  return from_tokens(std::move(tokens));
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end() || it->second < static_cast<TokenId>(kNumReserved)) {
    return kUnk;
  }
  return it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw IndexError("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[id];
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.contains(std::string(token));
}

TokenSequence encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len == 0) throw ConfigError("encode: max_len must be >= 1");
  TokenSequence seq;
  for (const auto& tok : tokenize(text)) {
    if (seq.ids.size() + 1 >= max_len) break;
    seq.ids.push_back(vocab.id(tok));
  }
  seq.ids.push_back(kEos);
  return seq;
}

std::vector<std::string> decode_tokens(const TokenSequence& seq, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (TokenId id : seq.ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

std::string decode(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  for (const auto& tok : decode_tokens(seq, vocab)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

}  // namespace nodegae
