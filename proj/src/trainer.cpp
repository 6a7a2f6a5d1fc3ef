#include "relcnn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "relcnn/evaluator.hpp"

namespace relcnn {

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw std::invalid_argument("TrainConfig: dev_fraction must lie in (0, 1)");
  }
}

nlohmann::json to_json(const TrainRecord& record) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const EpochStats& e : record.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"dev_accuracy", e.dev_accuracy},
                      {"dev_micro_f1", e.dev_micro_f1}});
  }
  return {{"epochs", epochs},
          {"best_epoch", record.best_epoch},
          {"best_score", record.best_score},
          {"selected_on", record.selected_on_dev ? "dev_micro_f1" : "train_micro_f1"},
          {"wall_seconds", record.wall_seconds}};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dev_indices(
    std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split_dev: fraction must lie in (0, 1)");
  }
  if (n < 2) throw std::invalid_argument("split_dev: need at least 2 instances");
  const auto dev_n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (dev_n == 0 || dev_n >= n) {
    throw std::invalid_argument("split_dev: fraction " + std::to_string(fraction) + " of " +
                                std::to_string(n) + " leaves an empty part");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<std::size_t> dev(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(dev_n));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(dev_n), idx.end());
  std::sort(dev.begin(), dev.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(dev)};
}

ModelParams initial_params(const HyperParams& hp, const Vocab& vocab, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0));
  return ModelParams::init(hp, vocab.word_count(), vocab.position_count(), rng);
}

std::vector<RelationType> predict_labels(std::span<const EncodedInstance> data,
                                         const ModelParams& params, const HyperParams& hp) {
  std::vector<RelationType> out;
  out.reserve(data.size());
  for (const EncodedInstance& e : data) out.push_back(predict(e, params, hp).label);
  return out;
}

namespace {

struct Scores {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
};

Scores score_set(std::span<const EncodedInstance> data, const ModelParams& params,
                 const HyperParams& hp) {
  if (data.empty()) return {};
  std::vector<RelationType> gold;
  gold.reserve(data.size());
  for (const EncodedInstance& e : data) gold.push_back(e.gold);
  const auto pred = predict_labels(data, params, hp);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += gold[i] == pred[i];
  return {100.0 * static_cast<double>(hits) / static_cast<double>(gold.size()),
          evaluate(gold, pred).micro.f1};
}

}  // namespace

TrainResult train(std::span<const EncodedInstance> train_set, std::span<const EncodedInstance> dev_set,
                  const HyperParams& hp, const TrainConfig& cfg, ModelParams initial,
                  const EpochCallback& on_epoch) {
  hp.validate();
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw std::invalid_argument("train: bad epoch or batch settings");
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult best{initial, {}};
  best.record.selected_on_dev = !dev_set.empty();
  ModelParams params = std::move(initial);
  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  Rng dropout_rng(derive_seed(cfg.seed, 2));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  bool have_best = false;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    Gradients batch;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const EncodedInstance& e = train_set[order[pos]];
      const ForwardTrace tr = forward(e, params, hp, &dropout_rng);
      Gradients g = backward(tr, e, params, hp);
      if (!std::isfinite(g.loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " step " << pos
            << " (learning rate " << hp.learning_rate << " too high?)";
        throw TrainingDiverged(msg.str());
      }
      loss_sum += g.loss;
      ++steps;
      if (batch.samples == 0) {
        batch = std::move(g);
      } else {
        batch.add(g);
      }
      if (batch.samples == cfg.batch_size || pos + 1 == order.size()) {
        sgd_step(params, batch, hp);
        batch = Gradients{};
        if (!params.all_finite()) {
          std::ostringstream msg;
          msg << "non-finite parameters at epoch " << epoch << " step " << pos
              << " (learning rate " << hp.learning_rate << " too high?)";
          throw TrainingDiverged(msg.str());
        }
      }
    }

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = steps ? loss_sum / static_cast<double>(steps) : 0.0;
    const Scores tr_scores = score_set(train_set, params, hp);
    st.train_accuracy = tr_scores.accuracy;
    const Scores dev_scores = score_set(dev_set, params, hp);
    st.dev_accuracy = dev_scores.accuracy;
    st.dev_micro_f1 = dev_scores.micro_f1;
    best.record.epochs.push_back(st);
    if (on_epoch) on_epoch(st);

    const double selection = dev_set.empty() ? tr_scores.micro_f1 : dev_scores.micro_f1;
    if (!have_best || selection > best.record.best_score) {
      have_best = true;
      best.record.best_score = selection;
      best.record.best_epoch = epoch;
      best.params = params;
    }
  }
  best.record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

std::size_t HyperGrid::size() const {
  return position_dims.size() * filters.size() * learning_rates.size() * l2s.size() *
         window_sets.size();
}

HyperParams HyperGrid::cell(const HyperParams& base, std::size_t index) const {
  if (index >= size()) throw std::out_of_range("HyperGrid::cell: index past end of grid");
  HyperParams hp = base;
  std::size_t i = index;
  hp.windows = window_sets[i % window_sets.size()];
  i /= window_sets.size();
  hp.l2 = l2s[i % l2s.size()];
  i /= l2s.size();
  hp.learning_rate = learning_rates[i % learning_rates.size()];
  i /= learning_rates.size();
  hp.filters = filters[i % filters.size()];
  i /= filters.size();
  hp.position_dim = position_dims[i];
  return hp;
}

HyperGrid reference_grid() { return HyperGrid{}; }

HyperGrid grid_from_json(const nlohmann::json& j) {
  HyperGrid g;
  g.position_dims = j.value("position_dim", g.position_dims);
  g.filters = j.value("filters", g.filters);
  g.learning_rates = j.value("learning_rate", g.learning_rates);
  g.l2s = j.value("l2", g.l2s);
  g.window_sets = j.value("windows", g.window_sets);
  if (g.size() == 0) throw std::invalid_argument("grid: every axis needs at least one value");
  return g;
}

nlohmann::json to_json(const HyperGrid& g) {
  return {{"position_dim", g.position_dims},
          {"filters", g.filters},
          {"learning_rate", g.learning_rates},
          {"l2", g.l2s},
          {"windows", g.window_sets}};
}

std::vector<GridCell> grid_search(std::span<const EncodedInstance> train_set,
                                  std::span<const EncodedInstance> dev_set, const Vocab& vocab,
                                  const HyperParams& base, const HyperGrid& grid,
                                  const TrainConfig& cfg, std::size_t limit, int threads) {
  const std::size_t total = limit ? std::min(limit, grid.size()) : grid.size();
  std::vector<GridCell> cells(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      GridCell& c = cells[i];
      c.index = i;
      c.hp = grid.cell(base, i);
      try {
        TrainResult r = train(train_set, dev_set, c.hp, cfg, initial_params(c.hp, vocab, cfg.seed));
        c.dev_micro_f1 = r.record.best_score;
        c.best_epoch = r.record.best_epoch;
      } catch (const TrainingDiverged& e) {
        c.failed = true;
        c.failure = e.what();
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(total)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  std::stable_sort(cells.begin(), cells.end(), [](const GridCell& a, const GridCell& b) {
    if (a.failed != b.failed) return !a.failed;
    return a.dev_micro_f1 > b.dev_micro_f1;
  });
  return cells;
}

std::string grid_results_csv(std::span<const GridCell> cells) {
  std::ostringstream out;
  out << "rank,cell,position_dim,filters,learning_rate,l2,windows,dev_micro_f1,best_epoch,status\n";
  for (std::size_t r = 0; r < cells.size(); ++r) {
    const GridCell& c = cells[r];
    std::string windows;
    for (std::size_t i = 0; i < c.hp.windows.size(); ++i) {
      windows += (i ? " " : "") + std::to_string(c.hp.windows[i]);
    }
    out << r + 1 << ',' << c.index << ',' << c.hp.position_dim << ',' << c.hp.filters << ','
        << c.hp.learning_rate << ',' << c.hp.l2 << ",\"" << windows << "\"," << c.dev_micro_f1
        << ',' << c.best_epoch << ',' << (c.failed ? "failed" : "ok") << '\n';
  }
  return out.str();
}

}  // namespace relcnn
