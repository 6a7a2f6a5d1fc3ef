#ifndef RELCNN_MODEL_HPP_
#define RELCNN_MODEL_HPP_

// CNN relation classifier: word + two position embeddings per token, windowed
// convolution with relu, max- or three-segment multi-pooling around the
// concept pair, concept type/content features, linear class scores, and the
// plain or category-constrained softmax loss. Gradients are hand-derived.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "relcnn/corpus.hpp"
#include "relcnn/encoding.hpp"
#include "relcnn/numeric.hpp"

namespace relcnn {

/// Embedding tables are row-per-entry, stored row-major.
using Table = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Pooling { Max, Multi };
enum class LossKind { Softmax, CategoryConstraint };

std::string_view to_string(Pooling p);
std::string_view to_string(LossKind l);
Pooling parse_pooling(std::string_view s);
LossKind parse_loss(std::string_view s);

struct HyperParams {
  int word_dim = 50;        // d_w
  int position_dim = 10;    // d_p
  int ctype_dim = 5;        // d_ct
  int filters = 200;        // d_c, per window size
  std::vector<int> windows = {4};
  int classes = kNumRelationTypes;
  double dropout = 0.5;
  Pooling pooling = Pooling::Multi;
  LossKind loss = LossKind::Softmax;
  double l2 = 0.0005;       // beta
  double learning_rate = 0.075;
  bool shared_position_table = true;
  EncoderConfig encoder;

  int input_dim() const { return word_dim + 2 * position_dim; }
  int concept_feature_dim() const { return 2 * ctype_dim + 2 * encoder.concept_len * word_dim; }
  int segments() const { return pooling == Pooling::Multi ? 3 : 1; }
  int pooled_dim() const { return static_cast<int>(windows.size()) * segments() * filters; }
  int feature_dim() const { return pooled_dim() + concept_feature_dim(); }
  int max_window() const;

  void validate() const;
  bool operator==(const HyperParams&) const = default;
};

nlohmann::json to_json(const HyperParams& hp);
HyperParams hyper_params_from_json(const nlohmann::json& j);

struct FilterBank {
  int window = 4;
  Matrix weight;  // d_c x (d_x * window)
  Vector bias;    // d_c
};

struct ModelParams {
  Table word;       // |V^w| x d_w
  Table position;   // |V^p| x d_p, first distance channel (both when shared)
  Table position2;  // second distance channel; empty when shared
  std::vector<FilterBank> conv;
  Table ctype;      // |V^ct| x d_ct
  Matrix classes;   // m x feature_dim
  // Bumped on every in-place update; traces remember it to detect staleness.
  std::uint64_t generation = 0;

  /// Glorot-initialized tables and filters, zero biases.
  static ModelParams init(const HyperParams& hp, int vocab_size, int position_count, Rng& rng);

  const Table& second_position() const { return position2.size() ? position2 : position; }

  /// Mutable views over every parameter block, in a fixed order.
  std::vector<std::span<double>> blocks();
  std::vector<std::string> block_names() const;

  bool all_finite() const;
  bool same_values(const ModelParams& other) const;
};

// ---- forward pieces -------------------------------------------------------

/// Per-token vectors x_i' = [word; pos1; pos2] as columns (d_x x n). The
/// sentence is padded with <pad> to at least `min_len` tokens.
Matrix word_representation(const EncodedInstance& enc, const ModelParams& params,
                           const HyperParams& hp, int min_len);

/// Column j stacks token columns j..j+k-1 of E: (d_x*k) x (n-k+1).
Matrix window_concat(const Matrix& token_columns, int k);

/// X for a single window size k, padding short sentences to k tokens.
Matrix embed_sentence(const EncodedInstance& enc, const ModelParams& params,
                      const HyperParams& hp, int k);

/// Z = relu(W X + b).
Matrix convolve(const Matrix& X, const FilterBank& bank);

/// Column-wise max of Z over each segment, concatenated. Empty segments
/// contribute zeros and record -1 in `argmax` (0-based column otherwise).
Vector pool(const Matrix& Z, std::span<const SegmentRange> segments,
            std::vector<int>* argmax = nullptr);

/// [ct1; ct2; content1 (L_c rows of W_w); content2].
Vector concept_features(const EncodedInstance& enc, const ModelParams& params,
                        const HyperParams& hp);

/// s = W_classes * (rc .* mask); an empty mask means inference.
Vector score(const Vector& rc, const ModelParams& params, const Vector& mask = Vector());

/// beta * sum of squared entries of W_w, W_wp, W_conv, W_ct and W_classes
/// (only the rows of `category` when given). Biases are not regularized.
double l2_penalty(const ModelParams& params, const HyperParams& hp,
                  std::optional<Category> category = std::nullopt);

double loss_softmax(const Vector& scores, RelationType gold, const ModelParams& params,
                    const HyperParams& hp);
double loss_constrained(const Vector& scores, RelationType gold, Category category,
                        const ModelParams& params, const HyperParams& hp);

// ---- full passes ----------------------------------------------------------

struct WindowTrace {
  int window = 0;
  Matrix X;
  Matrix Z;
  std::vector<int> argmax;  // per segment per filter
};

struct ForwardTrace {
  const ModelParams* params = nullptr;
  std::uint64_t generation = 0;
  Matrix tokens;  // E, d_x x padded length
  std::vector<int> token_ids, pos1_ids, pos2_ids;  // padded
  std::vector<WindowTrace> windows;
  Vector pooled;    // r_x
  Vector concept_part;   // cf_x
  Vector features;  // rc
  Vector mask;      // empty at inference
  Vector scores;    // s
};

/// Forward pass; dropout is applied only when `dropout_rng` is given.
ForwardTrace forward(const EncodedInstance& enc, const ModelParams& params,
                     const HyperParams& hp, Rng* dropout_rng = nullptr);

/// Loss selected by hp.loss for a completed trace.
double trace_loss(const ForwardTrace& trace, const EncodedInstance& enc,
                  const ModelParams& params, const HyperParams& hp);

/// Full objective (inference mode forward + loss), for gradient checking.
double objective(const EncodedInstance& enc, const ModelParams& params, const HyperParams& hp);

/// Gradient of the data term of the loss. Word-table rows are sparse. The
/// L2 term is carried separately as per-row weights so SGD can apply it as
/// weight decay; dense() folds it in.
struct Gradients {
  std::map<int, Vector> word_rows;
  Table position;
  Table position2;
  std::vector<FilterBank> conv;
  Table ctype;
  Matrix classes;
  Vector class_l2_weight;  // number of samples whose loss regularizes each class row
  double table_l2_weight = 0.0;  // number of samples (all other matrices)
  double loss = 0.0;
  int samples = 0;

  static Gradients zeros_like(const ModelParams& params);
  void add(const Gradients& other);

  /// Dense per-block gradient (same order as ModelParams::blocks) of the
  /// summed loss including the L2 term.
  std::vector<std::vector<double>> dense(const ModelParams& params, const HyperParams& hp) const;
};

class StaleTraceError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Backpropagates the loss of `trace`. Throws StaleTraceError if the
/// parameters changed since the trace was recorded.
Gradients backward(const ForwardTrace& trace, const EncodedInstance& enc,
                   const ModelParams& params, const HyperParams& hp);

/// params -= lr * (grad / samples + 2 beta W * l2_weight / samples).
void sgd_step(ModelParams& params, const Gradients& grads, const HyperParams& hp);

struct Prediction {
  RelationType label = RelationType::NPP;
  Vector probabilities;
};

/// Argmax over all classes; ties go to the lowest class index.
Prediction predict(const EncodedInstance& enc, const ModelParams& params, const HyperParams& hp);

// ---- checkpoints ----------------------------------------------------------

struct Checkpoint {
  HyperParams hp;
  std::uint64_t vocab_hash = 0;
  ModelParams params;
};

/// JSON document; every double is written as a hexfloat so reloads are
/// bit-exact.
void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& in);

/// Overwrites rows of the word table from a word2vec-style text file
/// ("word v1 ... vd" per line, optional "count dim" header). Returns the
/// number of vocabulary words found.
int load_word_embeddings(std::istream& in, const Vocab& vocab, ModelParams& params);

}  // namespace relcnn

#endif  // RELCNN_MODEL_HPP_
