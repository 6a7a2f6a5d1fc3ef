#ifndef RELCNN_EVALUATOR_HPP_
#define RELCNN_EVALUATOR_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"
#include "relcnn/corpus.hpp"

namespace relcnn {

/// Counts and percentages (0-100). Zero denominators give 0.
struct PRF {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static PRF from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
};

/// confusion[gold][pred], rows and columns in RelationType order.
using ConfusionMatrix = std::array<std::array<std::size_t, kNumRelationTypes>, kNumRelationTypes>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

struct BootstrapCI {
  Interval precision;
  Interval recall;
  Interval f1;
  int resamples = 0;
  std::uint64_t seed = 0;
};

struct EvalReport {
  std::size_t instances = 0;
  std::array<PRF, kNumRelationTypes> per_type{};  // meaningful for positive types
  std::array<std::size_t, kNumRelationTypes> support{};
  PRF micro;                                      // pooled over the 8 positive types
  std::array<PRF, kNumCategories> per_category{};  // pooled within each category
  ConfusionMatrix confusion{};
  std::optional<BootstrapCI> ci;
};

/// Throws std::invalid_argument on length mismatch.
EvalReport evaluate(std::span<const RelationType> gold, std::span<const RelationType> pred);
ConfusionMatrix confusion(std::span<const RelationType> gold, std::span<const RelationType> pred);

/// Micro P/R/F1 over positive types from a confusion matrix alone.
PRF micro_from_confusion(const ConfusionMatrix& cm);

/// Percentile bootstrap over test instances. Resample r draws its indices
/// from Rng(derive_seed(seed, r)), so resamples are independent of order.
BootstrapCI bootstrap_ci(std::span<const RelationType> gold, std::span<const RelationType> pred,
                         int resamples = 1000, std::uint64_t seed = 0);

/// Linear-interpolated percentile of sorted data, q in [0, 1].
double percentile(std::span<const double> sorted, double q);

nlohmann::json to_json(const EvalReport& report);
std::string format_report(const EvalReport& report);
/// Blank cells for zeros.
std::string format_confusion(const ConfusionMatrix& cm);

}  // namespace relcnn

#endif  // RELCNN_EVALUATOR_HPP_
