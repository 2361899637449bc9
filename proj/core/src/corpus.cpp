#include "triage/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "triage/error.hpp"

namespace triage {

using json = nlohmann::json;

std::string_view to_string(LabelScheme scheme) noexcept {
  return scheme == LabelScheme::two_class ? "two_class" : "four_class";
}

LabelScheme parse_scheme(std::string_view name) {
  if (name == "two_class" || name == "two" || name == "2") return LabelScheme::two_class;
  if (name == "four_class" || name == "four" || name == "4") return LabelScheme::four_class;
  throw ValidationError("unknown label scheme '" + std::string(name) + "'");
}

int label_count(LabelScheme scheme) noexcept {
  return scheme == LabelScheme::two_class ? 2 : 4;
}

std::vector<int> LabeledCorpus::labels() const {
  std::vector<int> out;
  out.reserve(documents.size());
  for (const auto& d : documents) out.push_back(d.label);
  return out;
}

std::map<int, std::size_t> LabeledCorpus::label_counts() const {
  std::map<int, std::size_t> counts;
  for (const auto& d : documents) ++counts[d.label];
  return counts;
}

void validate(const LabeledCorpus& corpus) {
  const int max_label = label_count(corpus.scheme);
  std::set<std::string_view> seen;
  for (const auto& d : corpus.documents) {
    if (d.label < 1 || d.label > max_label) {
      throw ValidationError("document '" + d.id + "' has label " + std::to_string(d.label) +
                            " outside 1.." + std::to_string(max_label));
    }
    if (!seen.insert(d.id).second) throw ValidationError("duplicate document id '" + d.id + "'");
  }
}

CorpusFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
}

namespace {

Document make_document(std::string id, std::string text, int label, int max_label,
                       std::size_t line) {
  if (label < 1 || label > max_label) {
    throw ParseError(line, "label " + std::to_string(label) + " outside 1.." +
                               std::to_string(max_label));
  }
  if (text.empty()) throw ParseError(line, "empty text");
  Document doc;
  doc.id = std::move(id);
  doc.body_text = extract_body(text);
  if (doc.body_text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ParseError(line, "record has no report body");
  }
  doc.raw_text = std::move(text);
  doc.label = label;
  return doc;
}

void read_jsonl(std::istream& in, LabeledCorpus& corpus) {
  const int max_label = label_count(corpus.scheme);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(line_no, "expected a JSON object");
    for (const char* key : {"id", "text", "label"}) {
      if (!record.contains(key)) throw ParseError(line_no, std::string("missing key '") + key + "'");
    }
    const auto& id = record["id"];
    if (!id.is_string() && !id.is_number_integer()) throw ParseError(line_no, "id must be a string");
    if (!record["text"].is_string()) throw ParseError(line_no, "text must be a string");
    if (!record["label"].is_number_integer()) throw ParseError(line_no, "label must be an integer");
    corpus.documents.push_back(make_document(id.is_string() ? id.get<std::string>() : id.dump(),
                                             record["text"].get<std::string>(),
                                             record["label"].get<int>(), max_label, line_no));
  }
}

// RFC 4180 records; quoted fields may span lines.
bool next_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no,
                     std::size_t& record_line) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  record_line = line_no + 1;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line_no;
      fields.push_back(std::move(field));
      return true;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (in_quotes) throw ParseError(record_line, "unterminated quoted field");
  if (!any) return false;
  ++line_no;
  fields.push_back(std::move(field));
  return true;
}

void read_csv(std::istream& in, LabeledCorpus& corpus) {
  const int max_label = label_count(corpus.scheme);
  std::vector<std::string> fields;
  std::size_t line_no = 0;
  std::size_t record_line = 0;
  if (!next_csv_record(in, fields, line_no, record_line)) return;
  if (fields != std::vector<std::string>{"id", "text", "label"}) {
    throw ParseError(record_line, "expected header 'id,text,label'");
  }
  while (next_csv_record(in, fields, line_no, record_line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 3) {
      throw ParseError(record_line, "expected 3 fields, found " + std::to_string(fields.size()));
    }
    int label = 0;
    std::size_t used = 0;
    try {
      label = std::stoi(fields[2], &used);
    } catch (const std::exception&) {
      throw ParseError(record_line, "label is not an integer");
    }
    if (used != fields[2].size()) throw ParseError(record_line, "label is not an integer");
    corpus.documents.push_back(
        make_document(std::move(fields[0]), std::move(fields[1]), label, max_label, record_line));
  }
}

std::string csv_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

LabeledCorpus read_corpus(std::istream& in, CorpusFormat format, LabelScheme scheme) {
  LabeledCorpus corpus;
  corpus.scheme = scheme;
  if (format == CorpusFormat::jsonl) {
    read_jsonl(in, corpus);
  } else {
    read_csv(in, corpus);
  }
  validate(corpus);
  return corpus;
}

LabeledCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                          LabelScheme scheme) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file '" + path.string() + "'");
  return read_corpus(in, format, scheme);
}

void write_corpus(std::ostream& out, const LabeledCorpus& corpus, CorpusFormat format) {
  if (format == CorpusFormat::csv) {
    out << "id,text,label\n";
    for (const auto& d : corpus.documents) {
      out << csv_quote(d.id) << ',' << csv_quote(d.raw_text) << ',' << d.label << '\n';
    }
    return;
  }
  for (const auto& d : corpus.documents) {
    json record = json::object();
    record["id"] = d.id;
    record["text"] = d.raw_text;
    record["label"] = d.label;
    out << record.dump() << '\n';
  }
}

void save_corpus(const std::filesystem::path& path, const LabeledCorpus& corpus,
                 CorpusFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file '" + path.string() + "'");
  write_corpus(out, corpus, format);
}

namespace {

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string_view trim_left(std::string_view s) {
  const auto pos = s.find_first_not_of(" \t\r");
  return pos == std::string_view::npos ? std::string_view{} : s.substr(pos);
}

bool is_header_line(std::string_view line) {
  line = trim_left(line);
  return starts_with(line, "Date:") || starts_with(line, "Patient's name:") ||
         starts_with(line, "Patient\xE2\x80\x99s name:") || starts_with(line, "Dear");
}

bool is_blank(std::string_view line) { return trim_left(line).empty(); }

}  // namespace

std::string extract_body(std::string_view raw_text) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0;;) {
    const auto end = raw_text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(raw_text.substr(start));
      break;
    }
    lines.push_back(raw_text.substr(start, end - start));
    start = end + 1;
  }

  std::size_t first = 0;
  bool header = false;
  while (first < lines.size() && (is_header_line(lines[first]) || is_blank(lines[first]))) {
    header = header || is_header_line(lines[first]);
    ++first;
  }
  if (!header) return std::string(raw_text);

  for (std::size_t i = first; i < lines.size(); ++i) {
    if (lines[i].find("CBCT") != std::string_view::npos) {
      first = i;
      break;
    }
  }
  std::string body;
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (i > first) body += '\n';
    body += lines[i];
  }
  return body;
}

int merged_label(int four_class_label) {
  if (four_class_label < 1 || four_class_label > 4) {
    throw ValidationError("label " + std::to_string(four_class_label) + " outside 1..4");
  }
  return four_class_label <= 2 ? 1 : 2;
}

LabeledCorpus merge_labels(const LabeledCorpus& corpus) {
  if (corpus.scheme != LabelScheme::four_class) {
    throw ValidationError("corpus is already in the two-class scheme");
  }
  LabeledCorpus merged = corpus;
  merged.scheme = LabelScheme::two_class;
  for (auto& d : merged.documents) d.label = merged_label(d.label);
  return merged;
}

std::array<std::size_t, 4> allocate_counts(std::size_t n, const ClassWeights& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("class weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("class weights must sum to 1 (got " + std::to_string(total) + ")");
  }
  std::array<std::size_t, 4> counts{};
  std::array<double, 4> remainder{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    const double quota = weights[c] * static_cast<double>(n);
    // Guard against quotas like 300.0000000001 or 299.9999999999.
    const double nearest = std::round(quota);
    const double floor_q = std::abs(quota - nearest) < 1e-9 ? nearest : std::floor(quota);
    counts[c] = static_cast<std::size_t>(floor_q);
    remainder[c] = quota - floor_q;
    assigned += counts[c];
  }
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 4, ++assigned) ++counts[order[i]];
  return counts;
}

}  // namespace triage
