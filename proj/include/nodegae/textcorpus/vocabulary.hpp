#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nodegae {

using TokenId = std::int64_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kBos = 2;
inline constexpr TokenId kEos = 3;
inline constexpr std::size_t kNumReserved = 4;

/// Token ids for one document. Unpadded sequences end with EOS; pad() appends
/// PAD ids after it.
struct TokenSequence {
  std::vector<TokenId> ids;

  std::size_t size() const { return ids.size(); }
  bool operator==(const TokenSequence&) const = default;
};

TokenSequence pad(const TokenSequence& seq, std::size_t length);

/// Lowercases ASCII and splits on whitespace and ASCII punctuation, which is
/// discarded. The literal "<unk>" is kept as one token so decoded text
/// re-encodes to the same ids.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  Vocabulary();

  /// Keeps the max_size - 4 most frequent tokens (ties by lexicographic
  /// order) after the reserved PAD/UNK/BOS/EOS ids. Throws ConfigError when
  /// max_size < 5 or texts is empty.
  static Vocabulary build(const std::vector<std::string>& texts, std::size_t max_size);
  /// Restores from the id-ordered token list (reserved entries included).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return id_to_token_.size(); }
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

inline Vocabulary build_vocab(const std::vector<std::string>& texts, std::size_t max_size) {
  return Vocabulary::build(texts, max_size);
}

/// Maps tokens to ids (UNK when absent), keeps the first max_len - 1 and
/// appends EOS. max_len must be >= 1.
TokenSequence encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len);

/// Space-joined tokens up to the first EOS, skipping PAD and BOS.
std::string decode(const TokenSequence& seq, const Vocabulary& vocab);
/// Same as decode() but as a token list.
std::vector<std::string> decode_tokens(const TokenSequence& seq, const Vocabulary& vocab);

}  // namespace nodegae
