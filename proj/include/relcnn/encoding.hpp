#ifndef RELCNN_ENCODING_HPP_
#define RELCNN_ENCODING_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relcnn/corpus.hpp"

namespace relcnn {

struct EncoderConfig {
  int max_distance = 60;  // position clip radius
  int concept_len = 5;    // concept contents padded/truncated to this many tokens
  int min_word_freq = 1;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

/// Word and position vocabularies. Word ids are dense from 0: <pad>=0,
/// <unk>=1, then the three placeholders, then corpus words in byte order.
/// Position id of a signed distance d is d + max_distance after clipping.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kNumSpecial = 5;

  Vocab() = default;
  static Vocab build(std::span<const RelationInstance> train, const EncoderConfig& cfg);

  int word_id(std::string_view token) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  int word_count() const { return static_cast<int>(words_.size()); }

  int max_distance() const { return max_distance_; }
  int position_count() const { return 2 * max_distance_ + 1; }
  int position_id(int distance) const;

  /// Versioned text format: header lines, then one `<token>\t<id>` per line.
  void save(std::ostream& out) const;
  static Vocab load(std::istream& in);

  /// FNV-1a over the serialized form.
  std::uint64_t hash() const;

  bool operator==(const Vocab& other) const {
    return words_ == other.words_ && max_distance_ == other.max_distance_;
  }

 private:
  void add(std::string token);

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  int max_distance_ = 60;
};

inline int concept_type_id(ConceptType t) { return static_cast<int>(t); }

/// Index-space view of a replaced instance. p1/p2 are 1-based.
struct EncodedInstance {
  std::vector<int> token_ids;
  std::vector<int> pos1_ids;
  std::vector<int> pos2_ids;
  std::array<int, 2> ctype_ids{};
  std::array<std::vector<int>, 2> concept_content_ids;
  int p1 = 1;
  int p2 = 2;
  RelationType gold = RelationType::NPP;
  Category category = Category::PP;

  int length() const { return static_cast<int>(token_ids.size()); }
};

EncodedInstance encode(const ReplacedInstance& inst, const Vocab& vocab, const EncoderConfig& cfg);
EncodedInstance encode(const RelationInstance& inst, const Vocab& vocab, const EncoderConfig& cfg);
std::vector<EncodedInstance> encode_all(std::span<const RelationInstance> instances,
                                        const Vocab& vocab, const EncoderConfig& cfg);

/// 1-based inclusive column range over the convolution output.
struct SegmentRange {
  int first = 1;
  int last = 0;

  bool empty() const { return first > last; }
  int size() const { return empty() ? 0 : last - first + 1; }
  bool operator==(const SegmentRange&) const = default;
};

/// Column ranges [1, p1-1], [p1, p2-1], [p2, n-k+1], clamped to the n-k+1
/// available columns. Throws std::invalid_argument unless 1 <= p1 < p2.
std::array<SegmentRange, 3> segment_bounds(int p1, int p2, int n, int k);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace relcnn

#endif  // RELCNN_ENCODING_HPP_
