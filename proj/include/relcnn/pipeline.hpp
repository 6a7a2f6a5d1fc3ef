#ifndef RELCNN_PIPELINE_HPP_
#define RELCNN_PIPELINE_HPP_

// File-level plumbing shared by the command-line tool and end-to-end tests.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "relcnn/corpus.hpp"
#include "relcnn/encoding.hpp"
#include "relcnn/model.hpp"

namespace relcnn {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "relcnn 0.1.0";

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p);
/// Creates parent directories as needed.
void write_file(const fs::path& p, std::string_view bytes);
std::string hex64(std::uint64_t v);
std::uint64_t file_hash(const fs::path& p);

struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;

  /// Hashes every input; written before any output exists.
  nlohmann::json to_json() const;
  void write(const fs::path& p) const;
};

// One record per document: <dir>/txt/<name>.txt, <dir>/concept/<name>.con and
// <dir>/rel/<name>.rel, or the three files side by side in <dir>.
struct RecordFiles {
  std::string name;
  fs::path text, concepts, relations;
};
std::vector<RecordFiles> find_records(const fs::path& dir);

/// Parses every record and adds the negative pairs; documents in name order,
/// each contributing its positives then its negatives.
std::vector<RelationInstance> load_i2b2_dir(const fs::path& dir);

std::vector<RelationInstance> load_instances(const fs::path& p);
void save_instances(const fs::path& p, std::span<const RelationInstance> instances);
Vocab load_vocab(const fs::path& p);
void save_vocab(const fs::path& p, const Vocab& vocab);
Checkpoint load_checkpoint_file(const fs::path& p);
void save_checkpoint_file(const fs::path& p, const Checkpoint& ckpt);

struct PredictionRecord {
  std::string id;
  RelationType label = RelationType::NPP;
  std::array<double, kNumRelationTypes> probabilities{};
};

nlohmann::json to_json(const PredictionRecord& r);
PredictionRecord prediction_from_json(const nlohmann::json& j);
void save_predictions(const fs::path& p, std::span<const PredictionRecord> preds);
std::vector<PredictionRecord> load_predictions(const fs::path& p);

/// Throws PipelineError when the checkpoint was trained on another vocabulary.
std::vector<PredictionRecord> predict_instances(std::span<const RelationInstance> instances,
                                                const Checkpoint& ckpt, const Vocab& vocab);

/// Gold and predicted labels paired by instance id. Every gold id needs
/// exactly one prediction and vice versa.
std::pair<std::vector<RelationType>, std::vector<RelationType>> align_predictions(
    std::span<const RelationInstance> gold, std::span<const PredictionRecord> preds);

}  // namespace relcnn

#endif  // RELCNN_PIPELINE_HPP_
