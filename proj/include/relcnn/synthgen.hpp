#ifndef RELCNN_SYNTHGEN_HPP_
#define RELCNN_SYNTHGEN_HPP_

// Synthetic corpora whose label is a function of which signal n-gram appears
// and in which segment relative to the concept pair. With one signal and two
// placements the n-gram content is identical across labels, so only features
// that know where the n-gram sits can separate them.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "relcnn/corpus.hpp"

namespace relcnn {

enum class Placement { BeforeC1 = 0, Between = 1, AfterC2 = 2 };

std::string_view to_string(Placement p);
Placement parse_placement(std::string_view s);

struct SynthSpec {
  int vocab_size = 200;  // filler words
  int sentences_per_type = 100;
  int min_length = 20;
  int max_length = 30;
  int concepts_per_sentence = 2;  // the pair plus third-party problem concepts
  std::vector<Placement> placements = {Placement::BeforeC1, Placement::AfterC2};
  int signals = 1;
  int ngram = 4;        // signal length; use the model's window size
  int min_segment = 4;  // filler tokens in each segment, >= ngram
  Category category = Category::TeP;
  double noise = 0.0;   // probability that the gold label is replaced by another
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument when the layout cannot fit.
  void validate() const;
  int label_count() const { return signals * static_cast<int>(placements.size()); }
  /// Label assigned to (signal, placement index) by construction.
  RelationType label_for(int signal, int placement_index) const;
};

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

struct SynthRecord {
  std::string id;
  int signal = 0;
  Placement placement = Placement::BeforeC1;
  int signal_start = 1;  // 1-based token index of the n-gram's first token
  RelationType planted = RelationType::NPP;  // label implied by the signal
  RelationType gold = RelationType::NPP;     // label written to the corpus
  std::vector<std::pair<int, int>> extra_concepts;  // third-party problem spans

  bool operator==(const SynthRecord&) const = default;
};

using SynthLedger = std::vector<SynthRecord>;

struct SynthCorpus {
  std::vector<RelationInstance> instances;
  SynthLedger ledger;
};

std::vector<std::string> signal_ngram(const SynthSpec& spec, int signal);

SynthCorpus generate(const SynthSpec& spec);

/// One sentence per instance with the pair and any third-party concepts.
std::vector<Sentence> synth_sentences(const SynthCorpus& corpus);

class SynthCheckError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SelfCheckReport {
  std::size_t checked = 0;
  std::size_t rule_correct = 0;
  double rule_accuracy = 0.0;  // fraction in [0, 1]
  bool round_trip_ok = false;
};

/// Verifies the ledger against the corpus and scores the rule-based
/// classifier that reads (signal, placement) off the ledger. Throws
/// SynthCheckError naming the instance on any inconsistency, or when
/// spec.noise == 0 and the rule is not perfect.
SelfCheckReport self_check(const SynthSpec& spec, std::span<const RelationInstance> corpus,
                           std::span<const SynthRecord> ledger);

nlohmann::json to_json(const SynthRecord& r);
SynthRecord synth_record_from_json(const nlohmann::json& j);
void write_ledger(std::ostream& out, std::span<const SynthRecord> ledger);
SynthLedger read_ledger(std::istream& in);

}  // namespace relcnn

#endif  // RELCNN_SYNTHGEN_HPP_
