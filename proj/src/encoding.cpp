#include "relcnn/encoding.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace relcnn {

namespace {

constexpr std::string_view kVocabMagic = "relcnn-vocab";
constexpr int kVocabVersion = 1;

std::string read_field(std::istream& in, std::string_view expected_key) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("vocab: truncated header");
  const auto tab = line.find('\t');
  if (tab == std::string::npos || line.substr(0, tab) != expected_key) {
    throw std::runtime_error("vocab: expected header field '" + std::string(expected_key) + "'");
  }
  return line.substr(tab + 1);
}

}  // namespace

void EncoderConfig::validate() const {
  if (max_distance < 1 || concept_len < 1 || min_word_freq < 1) {
    throw std::invalid_argument("EncoderConfig: max_distance, concept_len and min_word_freq must be >= 1");
  }
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Vocab::add(std::string token) {
  if (index_.count(token)) return;
  index_.emplace(token, static_cast<int>(words_.size()));
  words_.push_back(std::move(token));
}

Vocab Vocab::build(std::span<const RelationInstance> train, const EncoderConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("build_vocab: empty training corpus");
  std::map<std::string, int> freq;
  for (const RelationInstance& inst : train) {
    for (const std::string& t : inst.tokens) ++freq[t];
  }
  Vocab v;
  v.max_distance_ = cfg.max_distance;
  v.add("<pad>");
  v.add("<unk>");
  v.add(std::string(placeholder(ConceptType::Problem)));
  v.add(std::string(placeholder(ConceptType::Treatment)));
  v.add(std::string(placeholder(ConceptType::Test)));
  for (const auto& [word, count] : freq) {
    if (count >= cfg.min_word_freq) v.add(word);
  }
  return v;
}

int Vocab::word_id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

int Vocab::position_id(int distance) const {
  return std::clamp(distance, -max_distance_, max_distance_) + max_distance_;
}

void Vocab::save(std::ostream& out) const {
  out << kVocabMagic << '\t' << kVocabVersion << '\n';
  out << "max_distance\t" << max_distance_ << '\n';
  out << "words\t" << words_.size() << '\n';
  for (std::size_t i = 0; i < words_.size(); ++i) out << words_[i] << '\t' << i << '\n';
}

Vocab Vocab::load(std::istream& in) {
  const int version = std::stoi(read_field(in, kVocabMagic));
  if (version != kVocabVersion) {
    throw std::runtime_error("vocab: unsupported version " + std::to_string(version));
  }
  Vocab v;
  v.max_distance_ = std::stoi(read_field(in, "max_distance"));
  const auto count = std::stoul(read_field(in, "words"));
  std::string line;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("vocab: truncated word list");
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw std::runtime_error("vocab: malformed entry at word " + std::to_string(i));
    if (std::stoul(line.substr(tab + 1)) != i) {
      throw std::runtime_error("vocab: ids must be dense and ordered (entry " + std::to_string(i) + ")");
    }
    std::string token = line.substr(0, tab);
    if (v.index_.count(token)) throw std::runtime_error("vocab: duplicate token '" + token + "'");
    v.add(std::move(token));
  }
  if (v.words_.size() < kNumSpecial || v.words_[kPad] != "<pad>" || v.words_[kUnk] != "<unk>") {
    throw std::runtime_error("vocab: missing reserved entries");
  }
  return v;
}

std::uint64_t Vocab::hash() const {
  std::ostringstream s;
  save(s);
  return fnv1a(s.str());
}

EncodedInstance encode(const ReplacedInstance& inst, const Vocab& vocab, const EncoderConfig& cfg) {
  EncodedInstance e;
  const int n = static_cast<int>(inst.tokens.size());
  e.p1 = inst.p1;
  e.p2 = inst.p2;
  e.gold = inst.original.gold;
  e.category = category_of(e.gold);
  e.token_ids.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    e.token_ids.push_back(vocab.word_id(inst.tokens[static_cast<std::size_t>(i - 1)]));
    e.pos1_ids.push_back(vocab.position_id(i - inst.p1));
    e.pos2_ids.push_back(vocab.position_id(i - inst.p2));
  }
  const Concept* concepts[2] = {&inst.original.concept1, &inst.original.concept2};
  for (std::size_t c = 0; c < 2; ++c) {
    e.ctype_ids[c] = concept_type_id(concepts[c]->ctype);
    auto& ids = e.concept_content_ids[c];
    ids.assign(static_cast<std::size_t>(cfg.concept_len), Vocab::kPad);
    const std::size_t take = std::min(concepts[c]->tokens.size(), ids.size());
    for (std::size_t j = 0; j < take; ++j) ids[j] = vocab.word_id(concepts[c]->tokens[j]);
  }
  return e;
}

EncodedInstance encode(const RelationInstance& inst, const Vocab& vocab, const EncoderConfig& cfg) {
  return encode(replace_concepts(inst), vocab, cfg);
}

std::vector<EncodedInstance> encode_all(std::span<const RelationInstance> instances,
                                        const Vocab& vocab, const EncoderConfig& cfg) {
  std::vector<EncodedInstance> out;
  out.reserve(instances.size());
  for (const RelationInstance& inst : instances) out.push_back(encode(inst, vocab, cfg));
  return out;
}

std::array<SegmentRange, 3> segment_bounds(int p1, int p2, int n, int k) {
  if (k < 1) throw std::invalid_argument("segment_bounds: window size must be >= 1");
  if (p1 < 1 || p1 >= p2) {
    throw std::invalid_argument("segment_bounds: need 1 <= p1 < p2, got p1=" + std::to_string(p1) +
                                " p2=" + std::to_string(p2));
  }
  const int cols = n - k + 1;
  auto clamp = [cols](int first, int last) {
    return SegmentRange{std::max(first, 1), std::min(last, cols)};
  };
  return {clamp(1, p1 - 1), clamp(p1, p2 - 1), clamp(p2, cols)};
}

}  // namespace relcnn
