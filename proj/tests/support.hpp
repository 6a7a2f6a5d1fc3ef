#ifndef RELCNN_TESTS_SUPPORT_HPP_
#define RELCNN_TESTS_SUPPORT_HPP_

// Fixtures shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "relcnn/corpus.hpp"
#include "relcnn/encoding.hpp"
#include "relcnn/model.hpp"
#include "relcnn/numeric.hpp"

namespace relcnn::testing {

inline const std::vector<std::string>& toy_words() {
  static const std::vector<std::string> w = {"the", "pain", "was", "given", "for", "after",
                                             "scan", "showed", "mass", "and"};
  return w;
}

inline ConceptType other_type(Category c) {
  if (c == Category::TrP) return ConceptType::Treatment;
  if (c == Category::TeP) return ConceptType::Test;
  return ConceptType::Problem;
}

// Random sentence of n in [min_n, max_n] toy words with a compatible concept pair.
inline RelationInstance random_instance(Rng& rng, Category cat, int min_n, int max_n,
                                        std::string id = "toy") {
  const int n = min_n + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n - min_n + 1)));
  std::vector<std::string> tokens;
  for (int i = 0; i < n; ++i) tokens.push_back(toy_words()[rng.below(toy_words().size())]);
  // Two disjoint spans of length 1..2 inside [1, n].
  const int l1 = 1 + static_cast<int>(rng.below(2));
  const int l2 = 1 + static_cast<int>(rng.below(2));
  const int s1 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - l1 - l2 + 1)));
  const int gap = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - l1 - l2 - s1 + 2)));
  const int s2 = s1 + l1 + gap;
  ConceptType a = ConceptType::Problem;
  ConceptType b = other_type(cat);
  if (rng.bernoulli(0.5)) std::swap(a, b);
  const auto labels = members(cat);
  const RelationType gold = labels[rng.below(labels.size())];
  return make_instance(std::move(id), std::move(tokens), s1, s1 + l1 - 1, a, s2, s2 + l2 - 1, b, gold);
}

inline Vocab toy_vocab(int max_distance = 5) {
  EncoderConfig cfg;
  cfg.max_distance = max_distance;
  RelationInstance all = make_instance("v", toy_words(), 1, 1, ConceptType::Problem, 2, 2,
                                       ConceptType::Test, RelationType::TeRP);
  return Vocab::build(std::span<const RelationInstance>(&all, 1), cfg);
}

inline HyperParams toy_hp(Pooling pooling, LossKind loss) {
  HyperParams hp;
  hp.word_dim = 4;
  hp.position_dim = 2;
  hp.ctype_dim = 2;
  hp.filters = 3;
  hp.windows = {2};
  hp.pooling = pooling;
  hp.loss = loss;
  hp.l2 = 0.01;
  hp.dropout = 0.5;
  hp.encoder.max_distance = 5;
  hp.encoder.concept_len = 2;
  return hp;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;  // block[index] of the worst coordinate
  std::size_t coordinates = 0;
};

// Analytic gradient (inference-mode forward) against central differences of
// the full objective, per coordinate.
inline GradCheck gradient_check(const EncodedInstance& enc, ModelParams& params,
                                const HyperParams& hp, double epsilon, double floor) {
  const ForwardTrace tr = forward(enc, params, hp);
  const auto analytic = backward(tr, enc, params, hp).dense(params, hp);
  const auto blocks = params.blocks();
  const auto names = params.block_names();
  const auto numeric = finite_diff_grad([&] { return objective(enc, params, hp); },
                                        std::span<const std::span<double>>(blocks), epsilon);
  GradCheck out;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      ++out.coordinates;
      const double e = relative_error(analytic[b][i], numeric[b][i], floor);
      if (e > out.max_rel_error) {
        out.max_rel_error = e;
        out.worst = names[b] + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

struct NormFixture {
  std::string input;
  std::vector<std::string> expected;
};

// Lowercasing, digit-run collapsing and punctuation detachment.
inline const std::vector<NormFixture>& normalization_fixtures() {
  static const std::vector<NormFixture> f = {
      {"Dose 325mg BID.", {"dose", "0mg", "bid", "."}},
      {"2015-03-04", {"0-0-0"}},
      {"HELLO World", {"hello", "world"}},
      {"BP 120/80", {"bp", "0/0"}},
      {"(aspirin).", {"(", "aspirin", ")", "."}},
      {"pain,", {"pain", ","}},
      {"X-Ray", {"x-ray"}},
      {"Temp 98.6F", {"temp", "0.0f"}},
      {"q4h", {"q0h"}},
      {"CT scan...", {"ct", "scan", ".", ".", "."}},
      {"\"Quoted\"", {"\"", "quoted", "\""}},
      {"  multiple   spaces  ", {"multiple", "spaces"}},
      {"", {}},
      {"A1C 7.2%", {"a0c", "0.0", "%"}},
      {"MRI:", {"mri", ":"}},
      {"12", {"0"}},
      {"Mg2+", {"mg0", "+"}},
      {"O'Neil", {"o'neil"}},
      {"10mg/kg", {"0mg/kg"}},
      {"Tab\tSeparated\r\nLINE", {"tab", "separated", "line"}},
  };
  return f;
}

inline const std::string& steroids_sentence() {
  static const std::string s =
      "she was treated with steroids for this swelling at the outside hospital , and these were "
      "continued .";
  return s;
}

// Treatment "steroids" (token 5) and problem "this swelling" (tokens 7-8).
inline RelationInstance steroids_instance() {
  return make_instance("steroids", tokenize_normalize(steroids_sentence()), 5, 5, ConceptType::Treatment,
                       7, 8, ConceptType::Problem, RelationType::TrAP);
}

struct MetricFixture {
  std::vector<RelationType> gold, pred;
  double precision, recall, f1;  // percent, worked by hand
};

inline const std::vector<MetricFixture>& metric_fixtures() {
  using R = RelationType;
  static const std::vector<MetricFixture> f = {
      // tp 1 fp 0 fn 1
      {{R::TrAP, R::TeRP}, {R::TrAP, R::NTeP}, 100.0, 50.0, 66.7},
      // only negatives: nothing to count
      {{R::NTrP, R::NPP}, {R::NTrP, R::NPP}, 0.0, 0.0, 0.0},
      // tp 1 fp 2 fn 2
      {{R::TrAP, R::TrAP, R::TrAP, R::NTrP}, {R::TrAP, R::TrCP, R::NTrP, R::TrAP}, 33.3, 33.3, 33.3},
      // tp 1 fp 2 fn 1
      {{R::PIP, R::PIP, R::NPP, R::NPP, R::NPP}, {R::PIP, R::NPP, R::PIP, R::PIP, R::NPP}, 33.3, 50.0, 40.0},
      // tp 0 fp 0 fn 4
      {{R::TeRP, R::TeCP, R::TeRP, R::TeCP}, {R::NTeP, R::NTeP, R::NTeP, R::NTeP}, 0.0, 0.0, 0.0},
      // tp 0 fp 2 fn 0
      {{R::NTeP, R::NTeP, R::NTeP}, {R::TeRP, R::TeRP, R::NTeP}, 0.0, 0.0, 0.0},
      // every positive type once, all right
      {{R::TrIP, R::TrWP, R::TrCP, R::TrAP, R::TrNAP, R::TeRP, R::TeCP, R::PIP},
       {R::TrIP, R::TrWP, R::TrCP, R::TrAP, R::TrNAP, R::TeRP, R::TeCP, R::PIP}, 100.0, 100.0, 100.0},
      // tp 2 fp 1 fn 2
      {{R::TrIP, R::TrWP, R::TrCP, R::TrAP}, {R::TrWP, R::TrWP, R::TrCP, R::NTrP}, 66.7, 50.0, 57.1},
      // tp 2 fp 2 fn 1
      {{R::TeRP, R::TeRP, R::TeRP, R::NTeP, R::NTeP}, {R::TeRP, R::TeRP, R::TeCP, R::TeRP, R::NTeP}, 50.0, 66.7, 57.1},
      // tp 5 fp 2 fn 1
      {{R::TrAP, R::TrAP, R::TrAP, R::TrAP, R::TrAP, R::TrAP, R::NTrP, R::NTrP, R::NTrP, R::NTrP},
       {R::TrAP, R::TrAP, R::TrAP, R::TrAP, R::TrAP, R::NTrP, R::TrAP, R::TrAP, R::NTrP, R::NTrP}, 71.4, 83.3, 76.9},
  };
  return f;
}

inline double round1(double x) { return std::round(x * 10.0) / 10.0; }

}  // namespace relcnn::testing

#endif  // RELCNN_TESTS_SUPPORT_HPP_
