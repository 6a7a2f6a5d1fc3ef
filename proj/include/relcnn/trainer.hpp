#ifndef RELCNN_TRAINER_HPP_
#define RELCNN_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "relcnn/encoding.hpp"
#include "relcnn/model.hpp"

namespace relcnn {

struct TrainConfig {
  int epochs = 60;
  int batch_size = 1;
  std::uint64_t seed = 1;
  double dev_fraction = 0.2;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;      // mean over the epoch's SGD steps
  double train_accuracy = 0.0;  // percent, inference mode after the epoch
  double dev_accuracy = 0.0;
  double dev_micro_f1 = 0.0;
  bool operator==(const EpochStats&) const = default;
};

struct TrainRecord {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_score = 0.0;
  // Model selection uses dev micro-F1, or train micro-F1 when dev is empty.
  bool selected_on_dev = true;
  double wall_seconds = 0.0;

  /// Equality ignores wall time.
  bool operator==(const TrainRecord& o) const {
    return epochs == o.epochs && best_epoch == o.best_epoch && best_score == o.best_score &&
           selected_on_dev == o.selected_on_dev;
  }
};

nlohmann::json to_json(const TrainRecord& record);

struct TrainResult {
  ModelParams params;
  TrainRecord record;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seed-deterministic random split of indices [0, n): round(fraction * n) go
/// to dev. Both parts keep ascending order. Throws if either part is empty.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dev_indices(
    std::size_t n, double fraction, std::uint64_t seed);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_dev(std::span<const T> items, double fraction,
                                                    std::uint64_t seed) {
  const auto [train_idx, dev_idx] = split_dev_indices(items.size(), fraction, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t i : train_idx) out.first.push_back(items[i]);
  for (std::size_t i : dev_idx) out.second.push_back(items[i]);
  return out;
}

/// Glorot initialization drawn from derive_seed(seed, 0).
ModelParams initial_params(const HyperParams& hp, const Vocab& vocab, std::uint64_t seed);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Plain SGD at a constant learning rate. Each epoch reshuffles the training
/// set, steps once per `batch_size` samples, then scores train and dev in
/// inference mode. Returns the parameters of the best-scoring epoch (earliest
/// on ties). Throws TrainingDiverged on a non-finite loss or parameter.
TrainResult train(std::span<const EncodedInstance> train_set, std::span<const EncodedInstance> dev_set,
                  const HyperParams& hp, const TrainConfig& cfg, ModelParams initial,
                  const EpochCallback& on_epoch = {});

std::vector<RelationType> predict_labels(std::span<const EncodedInstance> data,
                                         const ModelParams& params, const HyperParams& hp);

// ---- grid search ----------------------------------------------------------

struct HyperGrid {
  std::vector<int> position_dims = {5, 10, 20, 30};
  std::vector<int> filters = {100, 200, 300, 400};
  std::vector<double> learning_rates = {0.01, 0.025, 0.05, 0.075, 0.1};
  std::vector<double> l2s = {0.00005, 0.0001, 0.0005, 0.001};
  std::vector<std::vector<int>> window_sets = {{4}};

  std::size_t size() const;
  /// Cell `index` in nested order d_p, d_c, lr, beta, windows (last fastest).
  HyperParams cell(const HyperParams& base, std::size_t index) const;
};

/// The tuned grid; the selected cell is (d_p, d_c, lr, beta) = (10, 200, 0.075, 0.0005).
HyperGrid reference_grid();
HyperGrid grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HyperGrid& grid);

struct GridCell {
  std::size_t index = 0;
  HyperParams hp;
  bool failed = false;
  std::string failure;
  double dev_micro_f1 = 0.0;
  int best_epoch = 0;
};

/// Trains every cell (the first `limit` when nonzero) on `threads` workers and
/// returns cells ranked by dev micro-F1 descending, ties in grid order, failed
/// cells last.
std::vector<GridCell> grid_search(std::span<const EncodedInstance> train_set,
                                  std::span<const EncodedInstance> dev_set, const Vocab& vocab,
                                  const HyperParams& base, const HyperGrid& grid,
                                  const TrainConfig& cfg, std::size_t limit = 0, int threads = 1);

std::string grid_results_csv(std::span<const GridCell> cells);

}  // namespace relcnn

#endif  // RELCNN_TRAINER_HPP_
