#ifndef RELCNN_CORPUS_HPP_
#define RELCNN_CORPUS_HPP_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace relcnn {

enum class ConceptType { Problem = 0, Treatment = 1, Test = 2 };
inline constexpr int kNumConceptTypes = 3;

// Order matches the confusion-matrix layout used throughout (TrP block, TeP
// block, PP block, negatives last within each block).
enum class RelationType {
  TrIP = 0, TrWP, TrCP, TrAP, TrNAP, NTrP,
  TeRP, TeCP, NTeP,
  PIP, NPP,
};
inline constexpr int kNumRelationTypes = 11;

enum class Category { TrP = 0, TeP = 1, PP = 2 };
inline constexpr int kNumCategories = 3;

Category category_of(RelationType t);
bool is_positive(RelationType t);
RelationType negative_type(Category c);
std::span<const RelationType> members(Category c);
std::span<const RelationType> all_relation_types();

std::string_view to_string(RelationType t);
std::string_view to_string(ConceptType t);
std::string_view to_string(Category c);
RelationType parse_relation_type(std::string_view s);
ConceptType parse_concept_type(std::string_view s);

/// Category of an unordered concept-type pair, if the pair forms one.
std::optional<Category> category_for(ConceptType a, ConceptType b);

/// Reserved single-token stand-in for a concept span, e.g. "__problem__".
std::string_view placeholder(ConceptType t);

class CorpusError : public std::runtime_error {
 public:
  enum class Source { Unknown, Concepts, Relations };

  explicit CorpusError(const std::string& what, int line = 0, Source source = Source::Unknown)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        detail_(what), line_(line), source_(source) {}
  int line() const { return line_; }
  Source source() const { return source_; }
  // Message without the line prefix.
  const std::string& detail() const { return detail_; }

 private:
  std::string detail_;
  int line_;
  Source source_;
};

/// A typed span of a tokenized sentence. Indices are 1-based and inclusive.
struct Concept {
  std::vector<std::string> tokens;
  int start = 1;
  int end = 1;
  ConceptType ctype = ConceptType::Problem;

  int length() const { return end - start + 1; }
  bool operator==(const Concept&) const = default;
};

/// One sentence with the concept pair under classification. concept1 always
/// starts before concept2.
struct RelationInstance {
  std::string id;
  std::vector<std::string> tokens;
  Concept concept1;
  Concept concept2;
  RelationType gold = RelationType::NPP;

  Category category() const { return category_of(gold); }
  bool operator==(const RelationInstance&) const = default;
};

/// Throws CorpusError if span, ordering, or category invariants fail.
void validate(const RelationInstance& inst);

/// Builds an instance from a token list and two spans, ordering the pair by
/// start position and filling concept tokens from the sentence.
RelationInstance make_instance(std::string id, std::vector<std::string> tokens, int start_a,
                               int end_a, ConceptType type_a, int start_b, int end_b,
                               ConceptType type_b, RelationType gold);

/// The pair's spans collapsed to placeholder tokens. p1/p2 are 1-based.
struct ReplacedInstance {
  std::vector<std::string> tokens;
  int p1 = 1;
  int p2 = 2;
  RelationInstance original;
};

// Tokenization rules, applied in order:
//   1. split on whitespace;
//   2. from each chunk detach leading then trailing ASCII punctuation, one
//      character per token; the remaining core is kept whole, so internal
//      hyphens, dots and slashes stay ("b.i.d", "2015-03-04");
//   3. lowercase ASCII letters;
//   4. replace every maximal run of ASCII digits with a single "0".
// Placeholders begin and end with '_' (punctuation), so no tokenized corpus
// word can equal one. The function is idempotent on its own output.
std::vector<std::string> tokenize_normalize(std::string_view sentence);

ReplacedInstance replace_concepts(const RelationInstance& inst);

/// A tokenized sentence and every concept annotated in it.
struct Sentence {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Concept> concepts;
};

struct ParsedDocument {
  std::vector<Sentence> sentences;
  std::vector<RelationInstance> positives;
};

// Annotation formats follow the i2b2 line layout: one sentence per line of the
// record text, whitespace-separated tokens, line numbers 1-based and token
// offsets 0-based.
//   concept:  c="<text>" <line>:<tok> <line>:<tok>||t="<problem|treatment|test>"
//   relation: c="<text>" <line>:<tok> <line>:<tok>||r="<TYPE>"||c="<text>" <line>:<tok> <line>:<tok>
// Raw tokens are re-tokenized with tokenize_normalize and concept boundaries
// realigned to the resulting token positions.
ParsedDocument parse_document(std::string_view doc_id, std::string_view text,
                              std::string_view concept_file, std::string_view relation_file);

std::vector<RelationInstance> parse_annotations(std::string_view text,
                                                std::string_view concept_file,
                                                std::string_view relation_file);

/// Every category-compatible intra-sentence pair without a positive
/// annotation, labeled with its category's negative type.
std::vector<RelationInstance> generate_negatives(std::span<const Sentence> sentences,
                                                 std::span<const RelationInstance> positives);

struct CorpusStats {
  std::size_t instances = 0;
  std::size_t concepts = 0;
  std::map<int, std::size_t> concept_length_histogram;
  std::array<std::size_t, kNumConceptTypes> concept_count_by_type{};
  std::array<double, kNumConceptTypes> mean_length_by_type{};
  double mean_length = 0.0;
  // Distance = number of tokens strictly between the two concepts.
  std::array<std::map<int, std::size_t>, kNumRelationTypes> distance_histogram{};
  std::array<std::size_t, kNumRelationTypes> relation_counts{};
};

/// Concepts shared by several instances of one sentence are counted once.
CorpusStats corpus_stats(std::span<const RelationInstance> instances);
nlohmann::json to_json(const CorpusStats& stats);

nlohmann::json to_json(const RelationInstance& inst);
RelationInstance instance_from_json(const nlohmann::json& j);

// JSON-lines instance files, one record per line.
void write_instances(std::ostream& out, std::span<const RelationInstance> instances);
std::vector<RelationInstance> read_instances(std::istream& in);

/// i2b2-format rendering of one record, inverse of parse_document for
/// already-normalized sentences.
struct I2b2Record {
  std::string text;
  std::string concepts;
  std::string relations;
};
I2b2Record to_i2b2(std::span<const Sentence> sentences,
                   std::span<const RelationInstance> positives);

}  // namespace relcnn

#endif  // RELCNN_CORPUS_HPP_
