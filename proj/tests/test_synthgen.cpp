#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "relcnn/model.hpp"
#include "relcnn/synthgen.hpp"

using namespace relcnn;

namespace {

SynthSpec small_spec(std::uint64_t seed = 1) {
  SynthSpec s;
  s.sentences_per_type = 50;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("generation is seed-deterministic") {
  const SynthCorpus a = generate(small_spec(4));
  const SynthCorpus b = generate(small_spec(4));
  CHECK(a.instances == b.instances);
  CHECK(a.ledger == b.ledger);
  CHECK(generate(small_spec(5)).instances != a.instances);
}

TEST_CASE("exact label counts and valid instances") {
  const SynthSpec spec = small_spec();
  const SynthCorpus c = generate(spec);
  REQUIRE(c.instances.size() == 100);
  std::map<RelationType, int> counts;
  for (std::size_t i = 0; i < c.instances.size(); ++i) {
    const RelationInstance& inst = c.instances[i];
    CHECK_NOTHROW(validate(inst));
    CHECK(inst.id == "synth:" + std::to_string(i));
    ++counts[inst.gold];
    CHECK(static_cast<int>(inst.tokens.size()) >= spec.min_length);
    CHECK(static_cast<int>(inst.tokens.size()) <= spec.max_length);
    // Every segment has room for the signal window.
    const ReplacedInstance r = replace_concepts(inst);
    CHECK(r.p1 - 1 >= spec.min_segment);
    CHECK(r.p2 - r.p1 - 1 >= spec.min_segment);
    CHECK(static_cast<int>(r.tokens.size()) - r.p2 >= spec.min_segment);
  }
  CHECK(counts[RelationType::TeRP] == 50);
  CHECK(counts[RelationType::TeCP] == 50);
}

TEST_CASE("label follows placement") {
  const SynthSpec spec = small_spec();
  const SynthCorpus c = generate(spec);
  for (std::size_t i = 0; i < c.instances.size(); ++i) {
    const SynthRecord& rec = c.ledger[i];
    const RelationInstance& inst = c.instances[i];
    if (rec.placement == Placement::BeforeC1) {
      CHECK(inst.gold == RelationType::TeRP);
      CHECK(rec.signal_start + spec.ngram - 1 < inst.concept1.start);
    } else {
      CHECK(inst.gold == RelationType::TeCP);
      CHECK(rec.signal_start > inst.concept2.end);
    }
  }
}

TEST_CASE("self check passes on a fresh corpus") {
  const SynthSpec spec = small_spec();
  const SynthCorpus c = generate(spec);
  const SelfCheckReport rep = self_check(spec, c.instances, c.ledger);
  CHECK(rep.checked == 100);
  CHECK(rep.rule_accuracy == 1.0);
  CHECK(rep.round_trip_ok);
}

TEST_CASE("self check names a corrupted instance") {
  const SynthSpec spec = small_spec();
  SynthCorpus c = generate(spec);
  c.instances[17].gold = c.instances[17].gold == RelationType::TeRP ? RelationType::TeCP : RelationType::TeRP;
  try {
    self_check(spec, c.instances, c.ledger);
    FAIL("expected SynthCheckError");
  } catch (const SynthCheckError& e) {
    CHECK(std::string(e.what()).find("synth:17") != std::string::npos);
  }
  SynthCorpus d = generate(spec);
  d.ledger[3].signal_start += 1;
  CHECK_THROWS_AS(self_check(spec, d.instances, d.ledger), SynthCheckError);
}

TEST_CASE("label noise matches the requested rate") {
  SynthSpec spec = small_spec(9);
  spec.sentences_per_type = 1000;
  spec.noise = 0.2;
  const SynthCorpus c = generate(spec);
  const SelfCheckReport rep = self_check(spec, c.instances, c.ledger);
  // n = 2000: a 4-sigma binomial band around 0.8 is +-0.036.
  const double sigma = std::sqrt(0.2 * 0.8 / 2000.0);
  CHECK(std::abs(rep.rule_accuracy - 0.8) < 4 * sigma);
  for (std::size_t i = 0; i < c.instances.size(); ++i) {
    CHECK(category_of(c.instances[i].gold) == Category::TeP);
  }
}

TEST_CASE("infeasible specs are rejected") {
  SynthSpec s;
  s.min_segment = 2;  // shorter than the 4-token signal
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SynthSpec{};
  s.max_length = 12;
  s.min_length = 10;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SynthSpec{};
  s.signals = 2;  // four labels, TeP has three
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SynthSpec{};
  s.placements = {Placement::Between, Placement::Between};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SynthSpec{};
  s.noise = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("three placements, several signals and third-party concepts") {
  SynthSpec s = small_spec(3);
  s.category = Category::TrP;
  s.placements = {Placement::BeforeC1, Placement::Between, Placement::AfterC2};
  s.signals = 2;
  s.concepts_per_sentence = 3;
  s.sentences_per_type = 10;
  const SynthCorpus c = generate(s);
  CHECK(c.instances.size() == 60);
  const auto sentences = synth_sentences(c);
  for (std::size_t i = 0; i < c.instances.size(); ++i) {
    CHECK(c.ledger[i].extra_concepts.size() == 1);
    CHECK(sentences[i].concepts.size() == 3);
  }
  CHECK(self_check(s, c.instances, c.ledger).rule_accuracy == 1.0);
  CHECK(signal_ngram(s, 0) != signal_ngram(s, 1));
}

TEST_CASE("spec and ledger serialization") {
  SynthSpec s = small_spec(12);
  s.placements = {Placement::Between, Placement::AfterC2};
  const SynthSpec back = synth_spec_from_json(to_json(s));
  CHECK(to_json(back) == to_json(s));
  const SynthCorpus c = generate(s);
  std::stringstream buf;
  write_ledger(buf, c.ledger);
  CHECK(read_ledger(buf) == c.ledger);
}

TEST_CASE("global max pooling cannot see placement") {
  // An oracle filter matched to the signal n-gram, with unit-norm word
  // vectors, peaks exactly on the signal window wherever it sits. Its global
  // max is therefore the same for both labels while the segment holding the
  // max tracks the label.
  const SynthSpec spec = small_spec(6);
  const SynthCorpus c = generate(spec);
  const Vocab vocab = Vocab::build(c.instances, EncoderConfig{});
  HyperParams hp;
  hp.word_dim = 16;
  hp.position_dim = 2;
  hp.filters = 1;
  hp.windows = {spec.ngram};
  Rng rng(1);
  ModelParams params = ModelParams::init(hp, vocab.word_count(), vocab.position_count(), rng);
  params.word.rowwise().normalize();
  const int dx = hp.input_dim();
  FilterBank oracle;
  oracle.window = spec.ngram;
  oracle.weight = Matrix::Zero(1, dx * spec.ngram);
  oracle.bias = Vector::Zero(1);
  const auto gram = signal_ngram(spec, 0);
  for (int t = 0; t < spec.ngram; ++t) {
    oracle.weight.block(0, t * dx, 1, hp.word_dim) = params.word.row(vocab.word_id(gram[static_cast<std::size_t>(t)]));
  }
  double global = -1.0;
  for (std::size_t i = 0; i < c.instances.size(); ++i) {
    const EncodedInstance e = encode(c.instances[i], vocab, hp.encoder);
    const Matrix Z = convolve(embed_sentence(e, params, hp, spec.ngram), oracle);
    const std::array<SegmentRange, 1> whole = {SegmentRange{1, static_cast<int>(Z.cols())}};
    const double m = pool(Z, whole)(0);
    if (global < 0) global = m;
    CHECK(std::abs(m - global) < 1e-12);
    const auto segs = segment_bounds(e.p1, e.p2, e.length(), spec.ngram);
    std::vector<int> arg;
    const Vector multi = pool(Z, segs, &arg);
    const int peak = static_cast<int>(argmax(multi));
    CHECK(peak == (c.ledger[i].placement == Placement::BeforeC1 ? 0 : 2));
  }
  CHECK(global == doctest::Approx(spec.ngram));
}

}
