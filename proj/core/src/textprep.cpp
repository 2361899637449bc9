#include "triage/textprep.hpp"

#include <algorithm>
#include <locale>
#include <map>

#include <nlohmann/json.hpp>

#include "triage/error.hpp"

namespace triage {
namespace {

// Decodes one UTF-8 sequence starting at s[i]; returns U+FFFD and advances one
// byte on malformed input.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  int len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    ++i;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// glibc classifies non-ASCII decimal digits as alphabetic; these are the
// digit blocks of the scripts most likely to show up in clinical text.
bool is_unicode_digit(char32_t cp) {
  constexpr char32_t kZeros[] = {0x0660, 0x06F0, 0x07C0, 0x0966, 0x09E6, 0x0A66, 0x0AE6, 0x0B66,
                                 0x0BE6, 0x0C66, 0x0CE6, 0x0D66, 0x0E50, 0x0ED0, 0x0F20, 0x1040,
                                 0x17E0, 0x1810, 0xFF10};
  return std::any_of(std::begin(kZeros), std::end(kZeros),
                     [cp](char32_t zero) { return cp >= zero && cp <= zero + 9; });
}

const std::ctype<wchar_t>* unicode_ctype() {
  static const std::ctype<wchar_t>* facet = []() -> const std::ctype<wchar_t>* {
    try {
      static const std::locale loc("C.UTF-8");
      return &std::use_facet<std::ctype<wchar_t>>(loc);
    } catch (const std::runtime_error&) {
      return nullptr;
    }
  }();
  return facet;
}

// Returns the lowercased letter, or 0 when cp is not a letter.
char32_t letter_lower(char32_t cp) {
  if (cp < 0x80) {
    if (cp >= 'A' && cp <= 'Z') return cp + ('a' - 'A');
    if (cp >= 'a' && cp <= 'z') return cp;
    return 0;
  }
  if (cp == 0xFFFD || is_unicode_digit(cp)) return 0;
  const auto* ct = unicode_ctype();
  if (ct == nullptr) return 0;
  const auto wc = static_cast<wchar_t>(cp);
  if (!ct->is(std::ctype_base::alpha, wc)) return 0;
  return static_cast<char32_t>(ct->tolower(wc));
}

}  // namespace

std::string clean(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size();) {
    const char32_t lower = letter_lower(decode_utf8(text, i));
    if (lower == 0) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    append_utf8(out, lower);
  }
  return out;
}

TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

TokenList preprocess(std::string_view text) { return tokenize(clean(text)); }

Vocabulary::Vocabulary() : tokens_{"<pad>", "<oov>"} {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : Vocabulary() {
  tokens_.reserve(tokens.size() + kFirstToken);
  for (auto& t : tokens) {
    const auto id = static_cast<TokenId>(tokens_.size());
    if (!index_.emplace(t, id).second) throw ValidationError("duplicate vocabulary token '" + t + "'");
    tokens_.push_back(std::move(t));
  }
}

TokenId Vocabulary::lookup(std::string_view token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kOov : it->second;
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json tokens = nlohmann::json::object();
  for (std::size_t id = kFirstToken; id < tokens_.size(); ++id) tokens[tokens_[id]] = id;
  return {{"pad_id", kPad}, {"oov_id", kOov}, {"tokens", std::move(tokens)}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (j.value("pad_id", -1) != kPad || j.value("oov_id", -1) != kOov) {
    throw ValidationError("vocabulary must reserve id 0 for PAD and 1 for OOV");
  }
  const auto& map = j.at("tokens");
  std::vector<std::string> ordered(map.size());
  std::vector<bool> filled(map.size(), false);
  for (const auto& [token, id_json] : map.items()) {
    const auto id = id_json.get<std::int64_t>();
    const auto slot = id - kFirstToken;
    if (slot < 0 || slot >= static_cast<std::int64_t>(ordered.size()) || filled[slot]) {
      throw ValidationError("vocabulary ids must be contiguous from 2");
    }
    ordered[slot] = token;
    filled[slot] = true;
  }
  return Vocabulary(std::move(ordered));
}

Vocabulary build_vocab(std::span<const TokenList> corpus_tokens, std::size_t min_freq) {
  if (min_freq < 1) throw ValidationError("min_freq must be at least 1");
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : corpus_tokens) {
    for (const auto& t : doc) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : freq) {
    if (count >= min_freq) kept.emplace_back(token, count);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [token, count] : kept) tokens.push_back(std::move(token));
  return Vocabulary(std::move(tokens));
}

TokenSequence encode(std::span<const std::string> tokens, const Vocabulary& vocab,
                     std::size_t max_len) {
  if (max_len < 1) throw ValidationError("max_len must be at least 1");
  TokenSequence seq;
  seq.true_length = std::min(tokens.size(), max_len);
  seq.ids.assign(max_len, Vocabulary::kPad);
  for (std::size_t i = 0; i < seq.true_length; ++i) seq.ids[i] = vocab.lookup(tokens[i]);
  return seq;
}

}  // namespace triage
