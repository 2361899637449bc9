#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "triage/error.hpp"
#include "triage/textprep.hpp"

namespace triage {
namespace {

std::vector<TokenList> abc_docs() { return {{"a", "b", "a"}, {"b", "c"}}; }

TEST(Clean, RemovesSymbols) {
  EXPECT_EQ(clean("The #,tooth is horizontally oriented ."), "the tooth is horizontally oriented");
}

TEST(Clean, RemovesDigits) { EXPECT_EQ(clean("32 yrs old man"), "yrs old man"); }

TEST(Clean, EmptyInput) { EXPECT_EQ(clean(""), ""); }

TEST(Clean, TableOneLabelThreeReport) {
  EXPECT_EQ(clean("**The #, tooth is horizontally oriented . Direct contact (with preserving cortex)"),
            "the tooth is horizontally oriented direct contact with preserving cortex");
}

TEST(Clean, SymbolsBetweenLettersSeparateWords) {
  EXPECT_EQ(clean("thinning&loss"), "thinning loss");
  EXPECT_EQ(clean("tooth#q"), "tooth q");
}

TEST(Clean, LowercasesNonAsciiLetters) { EXPECT_EQ(clean("ÉCOLE Ärzte"), "école ärzte"); }

TEST(Clean, IsIdempotent) {
  for (const char* text : {"CBCT of the #,tooth: 3.5mm (left)", "  a\tb\n\nc  ", "", "***"}) {
    const std::string once = clean(text);
    EXPECT_EQ(clean(once), once) << text;
  }
}

TEST(Tokenize, SplitsOnWhitespace) {
  EXPECT_EQ(tokenize("the tooth"), (TokenList{"the", "tooth"}));
  EXPECT_EQ(tokenize("  the \t tooth\n"), (TokenList{"the", "tooth"}));
}

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(BuildVocab, FrequencyThenLexicographicOrder) {
  const auto docs = abc_docs();
  const Vocabulary vocab = build_vocab(docs, 1);
  EXPECT_EQ(vocab.size(), 5u);
  EXPECT_EQ(vocab.lookup("a"), 2);
  EXPECT_EQ(vocab.lookup("b"), 3);
  EXPECT_EQ(vocab.lookup("c"), 4);
}

TEST(BuildVocab, MinFrequencyFilters) {
  const auto docs = abc_docs();
  const Vocabulary vocab = build_vocab(docs, 2);
  EXPECT_EQ(vocab.token_count(), 2u);
  EXPECT_EQ(vocab.lookup("a"), 2);
  EXPECT_EQ(vocab.lookup("b"), 3);
  EXPECT_FALSE(vocab.contains("c"));
}

TEST(BuildVocab, EmptyCorpusKeepsReservedIds) {
  const Vocabulary vocab = build_vocab(std::vector<TokenList>{});
  EXPECT_EQ(vocab.size(), 2u);
  EXPECT_EQ(vocab.lookup("anything"), Vocabulary::kOov);
}

TEST(BuildVocab, IdsAreUniqueAndDense) {
  const std::vector<TokenList> docs{preprocess("CBCT of the tooth shows the lesion of the jaw")};
  const Vocabulary vocab = build_vocab(docs);
  for (TokenId id = Vocabulary::kFirstToken; id < static_cast<TokenId>(vocab.size()); ++id) {
    EXPECT_EQ(vocab.lookup(vocab.token(id)), id);
  }
}

TEST(Vocabulary, JsonRoundTrip) {
  const auto docs = abc_docs();
  const Vocabulary vocab = build_vocab(docs);
  const auto j = vocab.to_json();
  EXPECT_EQ(j.at("pad_id"), 0);
  EXPECT_EQ(j.at("oov_id"), 1);
  EXPECT_EQ(j.at("tokens").at("c"), 4);
  EXPECT_EQ(Vocabulary::from_json(j), vocab);
}

TEST(Encode, LooksUpAndPads) {
  const auto docs = abc_docs();
  const Vocabulary vocab = build_vocab(docs);
  const TokenList doc{"a", "b"};
  const auto seq = encode(doc, vocab, 4);
  EXPECT_EQ(seq.ids, (std::vector<TokenId>{2, 3, 0, 0}));
  EXPECT_EQ(seq.true_length, 2u);
}

TEST(Encode, UnknownTokenIsOov) {
  const auto docs = abc_docs();
  const TokenList doc{"zzz"};
  EXPECT_EQ(encode(doc, build_vocab(docs), 4).ids, (std::vector<TokenId>{1, 0, 0, 0}));
}

TEST(Encode, Truncates) {
  const auto docs = abc_docs();
  const TokenList doc(300, "b");
  const auto seq = encode(doc, build_vocab(docs), 200);
  EXPECT_EQ(seq.ids.size(), 200u);
  EXPECT_EQ(seq.true_length, 200u);
  for (TokenId id : seq.ids) EXPECT_NE(id, Vocabulary::kPad);
}

TEST(Encode, RejectsZeroLength) {
  const auto docs = abc_docs();
  const TokenList doc{"a"};
  EXPECT_THROW(encode(doc, build_vocab(docs), 0), ValidationError);
}

}  // namespace
}  // namespace triage
