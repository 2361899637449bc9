// Synthetic CBCT report generator.
//
// Each severity has a phrase bank of findings. A document of severity c
// affirms one or two findings from bank c, may affirm milder pathology, and
// rules out pathology from the other banks ("no evidence of ..."). Severity is
// therefore carried by which findings are affirmed rather than by which words
// occur, so bag-of-words models see overlapping classes while models of local
// word order can separate them. Normal findings (bank 4) are never negated
// and only appear in normal reports.

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "triage/corpus.hpp"
#include "triage/error.hpp"
#include "triage/random.hpp"

namespace triage {
namespace {

struct Finding {
  std::string_view text;  // may contain {side}, {plate}, {jaw}, {n}
};

constexpr std::string_view kTerms1[] = {"malignant",  "expansion",   "destruction", "osteolytic",
                                        "chondrosarcoma", "fibroma", "metastatic",  "carcinoma",
                                        "perforation", "infiltration"};
constexpr std::string_view kTerms2[] = {"displacement", "resorption", "impacted", "supernumerary",
                                        "cyst",         "blunting",   "continuity", "infection",
                                        "abscess",      "fracture"};
constexpr std::string_view kTerms3[] = {"horizontally", "thinning",  "contact",   "hypercementosis",
                                        "pneumatization", "thickening", "proximity", "narrowing",
                                        "sclerosis",    "dilaceration"};
constexpr std::string_view kTerms4[] = {"normal",  "measurements", "adequate",     "intact",
                                        "symmetric", "healthy",    "sufficient",   "unremarkable",
                                        "regular", "preserved"};

// Finding i of bank b contains term i of that bank.
constexpr Finding kBank1[] = {
    {"malignant lesion in the {side} {jaw}"},
    {"considerable expansion of the {plate} cortical plate"},
    {"destruction of the {plate} cortex"},
    {"osteolytic lesion with ill defined borders"},
    {"features of chondrosarcoma in the {jaw}"},
    {"features of ossifying fibroma"},
    {"metastatic involvement of the {jaw}"},
    {"carcinoma invading the {jaw}"},
    {"perforation of the {plate} cortex by the lesion"},
    {"infiltration of the surrounding soft tissue"},
};
constexpr Finding kBank2[] = {
    {"displacement of tooth #{n}"},
    {"resorption of the adjacent root"},
    {"impacted canine near the incisive foramen"},
    {"supernumerary tooth in the palatal region"},
    {"cyst around the crown of tooth #{n}"},
    {"blunting of the root apex of tooth #{n}"},
    {"continuity loss of the palatal cortex"},
    {"infection around the apex of tooth #{n}"},
    {"abscess in the {side} {jaw}"},
    {"fracture of the root of tooth #{n}"},
};
constexpr Finding kBank3[] = {
    {"horizontally oriented third molar"},
    {"thinning of the {plate} cortical plate"},
    {"contact between the root and the IAN canal"},
    {"hypercementosis of the root of tooth #{n}"},
    {"pneumatization of the maxillary sinus floor"},
    {"thickening of the sinus mucosa"},
    {"proximity of the root to the canal"},
    {"narrowing of the alveolar ridge"},
    {"sclerosis of the interradicular bone"},
    {"dilaceration of the root of tooth #{n}"},
};
constexpr Finding kBank4[] = {
    {"normal trabecular bone pattern"},
    {"measurements for implant placement on the sheets"},
    {"adequate bone height for implant placement"},
    {"intact cortical borders"},
    {"symmetric condyles in both joints"},
    {"healthy periodontal ligament space"},
    {"sufficient bone width in the {side} edentulous area"},
    {"unremarkable paranasal sinuses"},
    {"regular lamina dura around the teeth"},
    {"preserved alveolar crest height"},
};

std::span<const Finding> bank(int label) {
  switch (label) {
    case 1: return kBank1;
    case 2: return kBank2;
    case 3: return kBank3;
    default: return kBank4;
  }
}

constexpr std::string_view kAffirm[] = {
    "There is {f}.",
    "{F} is evident.",
    "{F} is noticed.",
    "The images show {f}.",
    "{F} is seen.",
};
constexpr std::string_view kNegate[] = {
    "There is no evidence of {f}.",
    "No {f} is seen.",
    "No sign of {f} is noticed.",
    "The images show no {f}.",
};
constexpr std::string_view kFiller[] = {
    "The inferior alveolar nerve canal passes through the apical aspect of the tooth.",
    "Images were reviewed in axial, coronal and sagittal planes.",
    "Please correlate with clinical findings.",
    "The field of view includes both jaws.",
    "The maxillary sinus is visible in the images.",
    "Further evaluation is left to the treating dentist.",
};
constexpr std::string_view kSide[] = {"left", "right"};
constexpr std::string_view kPlate[] = {"lingual", "buccal", "palatal"};
constexpr std::string_view kJaw[] = {"mandible", "maxilla"};
constexpr std::string_view kArea[] = {"proposed area", "mandible", "maxilla",
                                      "mandibular second premolar tooth", "anterior maxilla"};
constexpr std::string_view kNames[] = {"Ahmadi", "Karimi", "Rahimi", "Moradi", "Hosseini", "Jafari"};

template <typename T, std::size_t N>
const T& pick(Rng& rng, const T (&items)[N]) {
  return items[rng.below(N)];
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string fill_finding(std::string_view pattern, Rng& rng) {
  std::string s(pattern);
  replace_all(s, "{side}", pick(rng, kSide));
  replace_all(s, "{plate}", pick(rng, kPlate));
  replace_all(s, "{jaw}", pick(rng, kJaw));
  replace_all(s, "{n}", std::to_string(11 + 10 * rng.below(4) + rng.below(8)));
  return s;
}

std::string sentence(std::string_view tmpl, const std::string& finding) {
  std::string s(tmpl);
  std::string capital = finding;
  if (!capital.empty()) capital[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(capital[0])));
  replace_all(s, "{f}", finding);
  replace_all(s, "{F}", capital);
  return s;
}

// Distinct finding indices from one bank.
std::vector<std::size_t> choose(Rng& rng, std::size_t bank_size, std::size_t count) {
  std::vector<std::size_t> idx(bank_size);
  for (std::size_t i = 0; i < bank_size; ++i) idx[i] = i;
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(std::min(count, bank_size));
  return idx;
}

std::string make_report(int label, Rng& rng) {
  std::vector<std::string> sentences;

  for (auto i : choose(rng, bank(label).size(), 1 + rng.below(2))) {
    sentences.push_back(sentence(pick(rng, kAffirm), fill_finding(bank(label)[i].text, rng)));
  }
  // Milder co-occurring pathology.
  for (int milder = label + 1; milder <= 3; ++milder) {
    if (rng.uniform() < 0.25) {
      const auto& f = bank(milder)[rng.below(bank(milder).size())];
      sentences.push_back(sentence(pick(rng, kAffirm), fill_finding(f.text, rng)));
    }
  }
  // Ruled-out pathology from the other banks.
  const auto negations = rng.below(3);
  for (std::uint64_t k = 0; k < negations; ++k) {
    int other = 1 + static_cast<int>(rng.below(label == 4 ? 3 : 2));
    if (label != 4 && other >= label) ++other;
    const auto& f = bank(other)[rng.below(bank(other).size())];
    sentences.push_back(sentence(pick(rng, kNegate), fill_finding(f.text, rng)));
  }
  for (std::uint64_t k = rng.below(3); k > 0; --k) sentences.emplace_back(pick(rng, kFiller));
  rng.shuffle(std::span<std::string>(sentences));

  std::string text;
  if (rng.uniform() < 0.7) {
    char date[32];
    std::snprintf(date, sizeof date, "Date: %d.%d.%d\n", 95 + static_cast<int>(rng.below(5)),
                  1 + static_cast<int>(rng.below(12)), 1 + static_cast<int>(rng.below(28)));
    text += date;
    text += "Patient's name: ";
    text += rng.below(2) ? "Mr. " : "Mrs. ";
    text += pick(rng, kNames);
    text += "\nDear Dr. ";
    text += pick(rng, kNames);
    text += "\n";
  }
  text += "CBCT image of the ";
  text += pick(rng, kArea);
  text += " was prepared for the patient who is a ";
  text += std::to_string(18 + rng.below(60));
  text += rng.below(2) ? " yrs old man" : " yrs old woman";
  text += ", based on your order. As you see on the images:\n";
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    text += sentences[i];
    text += (i + 1 < sentences.size()) ? " " : "";
  }
  return text;
}

}  // namespace

std::span<const std::string_view> severity_terms(int label) {
  switch (label) {
    case 1: return kTerms1;
    case 2: return kTerms2;
    case 3: return kTerms3;
    case 4: return kTerms4;
    default: throw ValidationError("severity label " + std::to_string(label) + " outside 1..4");
  }
}

LabeledCorpus synth_corpus(std::size_t n, std::uint64_t seed, const ClassWeights& weights) {
  if (n < 4) throw ValidationError("synthetic corpus needs at least 4 documents");
  const auto counts = allocate_counts(n, weights);

  std::vector<int> labels;
  labels.reserve(n);
  for (int c = 0; c < 4; ++c) labels.insert(labels.end(), counts[c], c + 1);
  Rng order_rng(derive_seed(seed, "synth.order"));
  order_rng.shuffle(std::span<int>(labels));

  LabeledCorpus corpus;
  corpus.scheme = LabelScheme::four_class;
  corpus.documents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "synth.doc", i));
    Document doc;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i + 1);
    doc.id = id;
    doc.label = labels[i];
    doc.raw_text = make_report(doc.label, rng);
    doc.body_text = extract_body(doc.raw_text);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace triage
