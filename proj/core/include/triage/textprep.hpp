#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace triage {

using TokenList = std::vector<std::string>;
using TokenId = std::int32_t;

/// Lowercases letters (Unicode simple case mapping) and replaces every digit
/// and symbol by a separator; runs of separators collapse to one space and the
/// result is trimmed. Idempotent.
std::string clean(std::string_view text);

/// Whitespace split, order preserved.
TokenList tokenize(std::string_view text);

/// clean() followed by tokenize().
TokenList preprocess(std::string_view text);

/// Token -> id map. Ids 0 and 1 are reserved for padding and out-of-vocabulary.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kOov = 1;
  static constexpr TokenId kFirstToken = 2;

  Vocabulary();

  /// Tokens take ids 2, 3, ... in the given order.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  /// Number of real tokens (size() - 2).
  std::size_t token_count() const noexcept { return tokens_.size() - kFirstToken; }

  TokenId lookup(std::string_view token) const;
  bool contains(std::string_view token) const { return lookup(token) != kOov; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  /// {"pad_id": 0, "oov_id": 1, "tokens": {token: id, ...}}
  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> index_;
};

/// Tokens with corpus frequency >= min_freq, ordered by (frequency desc, token asc).
Vocabulary build_vocab(std::span<const TokenList> corpus_tokens, std::size_t min_freq = 1);

struct TokenSequence {
  std::vector<TokenId> ids;  // exactly max_len entries
  std::size_t true_length = 0;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// Looks tokens up (unknown -> OOV), truncates to max_len and right-pads with PAD.
TokenSequence encode(std::span<const std::string> tokens, const Vocabulary& vocab,
                     std::size_t max_len = 200);

}  // namespace triage
