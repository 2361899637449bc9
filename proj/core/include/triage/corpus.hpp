#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace triage {

/// Four-level severity scheme, or the merged emergency / non-emergency scheme.
enum class LabelScheme { four_class, two_class };

std::string_view to_string(LabelScheme scheme) noexcept;
LabelScheme parse_scheme(std::string_view name);

/// Number of labels in a scheme: 4 or 2. Labels are always 1..n.
int label_count(LabelScheme scheme) noexcept;

/// Severity 1 (extremely critical) through 4 (no identified risk).
/// Under the two-class scheme, 1 is emergency and 2 non-emergency.
struct Document {
  std::string id;
  std::string raw_text;
  std::string body_text;
  int label = 0;

  friend bool operator==(const Document&, const Document&) = default;
};

struct LabeledCorpus {
  std::vector<Document> documents;
  LabelScheme scheme = LabelScheme::four_class;

  std::size_t size() const noexcept { return documents.size(); }
  bool empty() const noexcept { return documents.empty(); }
  std::vector<int> labels() const;
  /// Histogram over labels present in the corpus.
  std::map<int, std::size_t> label_counts() const;

  friend bool operator==(const LabeledCorpus&, const LabeledCorpus&) = default;
};

/// Throws ValidationError on duplicate ids or out-of-scheme labels.
void validate(const LabeledCorpus& corpus);

enum class CorpusFormat { jsonl, csv };

CorpusFormat format_from_path(const std::filesystem::path& path);

/// Parses records in file order. Malformed lines raise ParseError carrying the
/// 1-based line number; bad labels raise ParseError at that line as well.
LabeledCorpus read_corpus(std::istream& in, CorpusFormat format,
                          LabelScheme scheme = LabelScheme::four_class);
LabeledCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                          LabelScheme scheme = LabelScheme::four_class);

/// JSON Lines: {"id": ..., "text": ..., "label": ...}, LF-terminated. The raw
/// text is written; bodies are re-extracted on load.
void write_corpus(std::ostream& out, const LabeledCorpus& corpus,
                  CorpusFormat format = CorpusFormat::jsonl);
void save_corpus(const std::filesystem::path& path, const LabeledCorpus& corpus,
                 CorpusFormat format = CorpusFormat::jsonl);

/// Drops the record header (leading "Date:", "Patient's name:" and "Dear ..."
/// lines). When a header was present, the body starts at the first line
/// mentioning CBCT. Text without header lines is returned unchanged.
std::string extract_body(std::string_view raw_text);

/// {1,2} -> 1 (emergency), {3,4} -> 2 (non-emergency).
LabeledCorpus merge_labels(const LabeledCorpus& corpus);
int merged_label(int four_class_label);

using ClassWeights = std::array<double, 4>;

/// Largest-remainder apportionment of n over the weights. Remainder ties go
/// to the lower label.
std::array<std::size_t, 4> allocate_counts(std::size_t n, const ClassWeights& weights);

/// Seeded synthetic report corpus. Documents are generated class by class and
/// then interleaved with a seeded shuffle; ids are "syn-00001"... in output order.
LabeledCorpus synth_corpus(std::size_t n, std::uint64_t seed,
                           const ClassWeights& weights = {0.15, 0.25, 0.35, 0.25});

/// Key terms of each severity's phrase bank (label 1..4).
std::span<const std::string_view> severity_terms(int label);

}  // namespace triage
