#include <set>

#include "doctest.h"
#include "relcnn/evaluator.hpp"
#include "relcnn/synthgen.hpp"
#include "relcnn/trainer.hpp"
#include "support.hpp"

using namespace relcnn;
namespace rt = relcnn::testing;

namespace {

struct SmallTask {
  Vocab vocab;
  HyperParams hp;
  std::vector<EncodedInstance> train, dev;

  explicit SmallTask(std::uint64_t seed) {
    SynthSpec spec;
    spec.sentences_per_type = 20;
    spec.vocab_size = 30;
    spec.ngram = 2;
    spec.min_segment = 2;
    spec.min_length = 10;
    spec.max_length = 14;
    spec.seed = seed;
    const SynthCorpus c = generate(spec);
    const auto [tr, dv] = split_dev<RelationInstance>(c.instances, 0.25, seed);
    vocab = Vocab::build(tr, EncoderConfig{});
    hp.word_dim = 8;
    hp.position_dim = 3;
    hp.ctype_dim = 2;
    hp.filters = 6;
    hp.windows = {2};
    hp.encoder.concept_len = 2;
    hp.learning_rate = 0.05;
    train = encode_all(tr, vocab, hp.encoder);
    dev = encode_all(dv, vocab, hp.encoder);
  }
};

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("dev split sizes and determinism") {
  const auto [train, dev] = split_dev_indices(10, 0.2, 5);
  CHECK(train.size() == 8);
  CHECK(dev.size() == 2);
  std::set<std::size_t> all(train.begin(), train.end());
  all.insert(dev.begin(), dev.end());
  CHECK(all.size() == 10);
  CHECK(std::is_sorted(dev.begin(), dev.end()));
  CHECK(split_dev_indices(10, 0.2, 5) == split_dev_indices(10, 0.2, 5));
  CHECK(split_dev_indices(100, 0.2, 5) != split_dev_indices(100, 0.2, 6));
  CHECK_THROWS_AS(split_dev_indices(3, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_dev_indices(10, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_dev_indices(1, 0.5, 1), std::invalid_argument);
}

TEST_CASE("zero epochs returns the initialization") {
  SmallTask t(1);
  TrainConfig cfg;
  cfg.epochs = 0;
  const ModelParams init = initial_params(t.hp, t.vocab, 3);
  const TrainResult r = train(t.train, t.dev, t.hp, cfg, init);
  CHECK(r.record.best_epoch == 0);
  CHECK(r.record.epochs.empty());
  CHECK(r.params.same_values(init));
}

TEST_CASE("training is deterministic under a seed") {
  SmallTask t(2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 11;
  const TrainResult a = train(t.train, t.dev, t.hp, cfg, initial_params(t.hp, t.vocab, cfg.seed));
  const TrainResult b = train(t.train, t.dev, t.hp, cfg, initial_params(t.hp, t.vocab, cfg.seed));
  CHECK(a.record == b.record);
  CHECK(a.params.same_values(b.params));
  cfg.seed = 12;
  const TrainResult c = train(t.train, t.dev, t.hp, cfg, initial_params(t.hp, t.vocab, cfg.seed));
  CHECK_FALSE(a.params.same_values(c.params));
}

TEST_CASE("training reduces the loss and selects the best epoch") {
  SmallTask t(3);
  TrainConfig cfg;
  cfg.epochs = 8;
  std::vector<EpochStats> seen;
  const TrainResult r = train(t.train, t.dev, t.hp, cfg, initial_params(t.hp, t.vocab, 1),
                              [&](const EpochStats& s) { seen.push_back(s); });
  REQUIRE(seen.size() == 8);
  CHECK(seen.back().train_loss < seen.front().train_loss);
  double best = -1;
  int best_epoch = 0;
  for (const auto& s : seen) {
    if (s.dev_micro_f1 > best) {
      best = s.dev_micro_f1;
      best_epoch = s.epoch;
    }
  }
  CHECK(r.record.best_epoch == best_epoch);
  CHECK(r.record.best_score == best);
  CHECK(r.record.selected_on_dev);
  // The returned parameters reproduce the selected epoch's dev score.
  const auto pred = predict_labels(t.dev, r.params, t.hp);
  std::vector<RelationType> gold;
  for (const auto& e : t.dev) gold.push_back(e.gold);
  CHECK(evaluate(gold, pred).micro.f1 == best);
}

TEST_CASE("empty dev set selects on training micro-F1") {
  SmallTask t(4);
  TrainConfig cfg;
  cfg.epochs = 2;
  const TrainResult r = train(t.train, {}, t.hp, cfg, initial_params(t.hp, t.vocab, 1));
  CHECK_FALSE(r.record.selected_on_dev);
  CHECK(r.record.best_epoch >= 1);
}

TEST_CASE("mini-batches") {
  SmallTask t(5);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  CHECK_NOTHROW(train(t.train, t.dev, t.hp, cfg, initial_params(t.hp, t.vocab, 1)));
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("divergence is reported") {
  SmallTask t(6);
  t.hp.learning_rate = 1e30;
  TrainConfig cfg;
  cfg.epochs = 2;
  CHECK_THROWS_AS(train(t.train, t.dev, t.hp, cfg, initial_params(t.hp, t.vocab, 1)), TrainingDiverged);
}

TEST_CASE("reference grid") {
  const HyperGrid g = reference_grid();
  CHECK(g.size() == 4 * 4 * 5 * 4);
  HyperParams base;
  bool found = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const HyperParams hp = g.cell(base, i);
    if (hp.position_dim == 10 && hp.filters == 200 && hp.learning_rate == 0.075 && hp.l2 == 0.0005) found = true;
  }
  CHECK(found);
  // Last axis varies fastest.
  CHECK(g.cell(base, 0).l2 == 0.00005);
  CHECK(g.cell(base, 1).l2 == 0.0001);
  CHECK(g.cell(base, 4).learning_rate == 0.025);
  CHECK_THROWS_AS(g.cell(base, g.size()), std::out_of_range);
  CHECK(grid_from_json(to_json(g)).size() == g.size());
}

TEST_CASE("grid search ranks cells and records divergent ones") {
  SmallTask t(7);
  HyperGrid g;
  g.position_dims = {3};
  g.filters = {6};
  g.learning_rates = {0.05, 1e30};
  g.l2s = {0.0005};
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto cells = grid_search(t.train, t.dev, t.vocab, t.hp, g, cfg, 0, 2);
  REQUIRE(cells.size() == 2);
  CHECK_FALSE(cells[0].failed);
  CHECK(cells[1].failed);
  CHECK(cells[1].failure.find("non-finite") != std::string::npos);
  const std::string csv = grid_results_csv(cells);
  CHECK(csv.find("failed") != std::string::npos);
  // Threads do not change results.
  const auto serial = grid_search(t.train, t.dev, t.vocab, t.hp, g, cfg, 0, 1);
  CHECK(serial[0].dev_micro_f1 == cells[0].dev_micro_f1);
}

}
