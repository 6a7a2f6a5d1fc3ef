// relcnn: command-line driver for preprocessing, training and evaluation.
// Data goes to files; progress and errors go to stderr.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "relcnn/corpus.hpp"
#include "relcnn/encoding.hpp"
#include "relcnn/evaluator.hpp"
#include "relcnn/model.hpp"
#include "relcnn/pipeline.hpp"
#include "relcnn/synthgen.hpp"
#include "relcnn/trainer.hpp"

using namespace relcnn;

namespace {

// Flag-bound mirrors of HyperParams/TrainConfig; enums stay strings until parsed.
struct ModelFlags {
  HyperParams hp;
  TrainConfig cfg;
  std::string pooling = "multi";
  std::string loss = "softmax";
  bool separate_positions = false;

  void add_to(CLI::App* sub) {
    sub->add_option("--word-dim", hp.word_dim, "word embedding size")->capture_default_str();
    sub->add_option("--position-dim", hp.position_dim, "position embedding size")->capture_default_str();
    sub->add_option("--ctype-dim", hp.ctype_dim, "concept-type embedding size")->capture_default_str();
    sub->add_option("--filters", hp.filters, "convolution filters per window size")->capture_default_str();
    sub->add_option("--windows", hp.windows, "window sizes, one filter bank each")->capture_default_str();
    sub->add_option("--dropout", hp.dropout, "dropout rate on the final features")->capture_default_str();
    sub->add_option("--pooling", pooling, "max or multi")
        ->check(CLI::IsMember({"max", "multi"}))
        ->capture_default_str();
    sub->add_option("--loss", loss, "softmax or constrained")
        ->check(CLI::IsMember({"softmax", "constrained"}))
        ->capture_default_str();
    sub->add_option("--l2", hp.l2, "L2 coefficient")->capture_default_str();
    sub->add_option("--lr", hp.learning_rate, "SGD learning rate")->capture_default_str();
    sub->add_flag("--separate-position-tables", separate_positions,
                  "learn one position table per concept");
    sub->add_option("--concept-len", hp.encoder.concept_len, "concept tokens kept as features")
        ->capture_default_str();
    sub->add_option("--epochs", cfg.epochs)->capture_default_str();
    sub->add_option("--batch-size", cfg.batch_size)->capture_default_str();
    sub->add_option("--dev-fraction", cfg.dev_fraction, "held-out share when no --dev file is given")
        ->capture_default_str();
  }

  void finish(const Vocab& vocab) {
    hp.pooling = parse_pooling(pooling);
    hp.loss = parse_loss(loss);
    hp.shared_position_table = !separate_positions;
    hp.encoder.max_distance = vocab.max_distance();
    hp.validate();
    cfg.validate();
  }
};

struct Datasets {
  std::vector<EncodedInstance> train, dev;
};

// Encodes train and dev; without a dev file the dev part is split off train.
Datasets prepare_data(const std::string& train_path, const std::string& dev_path, bool no_dev,
                      const Vocab& vocab, const HyperParams& hp, const TrainConfig& cfg) {
  Datasets d;
  auto train = load_instances(train_path);
  std::vector<RelationInstance> dev;
  if (!dev_path.empty()) {
    dev = load_instances(dev_path);
  } else if (!no_dev) {
    auto parts = split_dev<RelationInstance>(train, cfg.dev_fraction, derive_seed(cfg.seed, 3));
    train = std::move(parts.first);
    dev = std::move(parts.second);
  }
  if (train.empty()) throw PipelineError("training set " + train_path + " is empty");
  d.train = encode_all(train, vocab, hp.encoder);
  d.dev = encode_all(dev, vocab, hp.encoder);
  return d;
}

void print_epoch(const EpochStats& s) {
  std::fprintf(stderr, "epoch %3d  loss %.4f  train acc %5.1f  dev acc %5.1f  dev F1 %5.1f\n", s.epoch,
               s.train_loss, s.train_accuracy, s.dev_accuracy, s.dev_micro_f1);
}

nlohmann::json train_config_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs}, {"batch_size", cfg.batch_size}, {"dev_fraction", cfg.dev_fraction}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept-pair relation classification with a convolutional network"};
  app.set_config("--config", "", "TOML/INI file; subcommand options go in [subcommand] sections");
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
  };

  // ---- preprocess
  auto* pre = app.add_subcommand("preprocess", "parse annotated records into an instance file and vocabulary");
  std::vector<std::string> pre_inputs;
  std::string pre_out;
  EncoderConfig enc_cfg;
  pre->add_option("--input", pre_inputs, "record directories (txt/ concept/ rel/, or flat)")->required();
  pre->add_option("--out", pre_out, "output directory")->required();
  pre->add_option("--max-distance", enc_cfg.max_distance, "position clip radius")->capture_default_str();
  pre->add_option("--min-word-freq", enc_cfg.min_word_freq)->capture_default_str();
  add_seed(pre);

  // ---- synth
  auto* syn = app.add_subcommand("synth", "generate a synthetic corpus with a ground-truth ledger");
  std::string syn_spec, syn_out;
  syn->add_option("--spec", syn_spec, "generator spec JSON (defaults when omitted)");
  syn->add_option("--out", syn_out, "output directory")->required();
  add_seed(syn);

  // ---- train
  auto* tr = app.add_subcommand("train", "train a model with best-epoch selection");
  ModelFlags tr_flags;
  std::string tr_train, tr_dev, tr_vocab, tr_out, tr_embed;
  bool tr_no_dev = false;
  tr->add_option("--train", tr_train, "training instances (JSON lines)")->required();
  tr->add_option("--dev", tr_dev, "dev instances; split from --train when omitted");
  tr->add_flag("--no-dev", tr_no_dev, "select the epoch on training micro-F1");
  EncoderConfig tr_enc;
  tr->add_option("--vocab", tr_vocab, "vocabulary file; built from --train when omitted");
  tr->add_option("--max-distance", tr_enc.max_distance, "position clip radius for a built vocabulary")
      ->capture_default_str();
  tr->add_option("--min-word-freq", tr_enc.min_word_freq)->capture_default_str();
  tr->add_option("--embeddings", tr_embed, "word2vec text file to initialize word vectors");
  tr->add_option("--out", tr_out, "output directory")->required();
  tr_flags.add_to(tr);
  add_seed(tr);

  // ---- gridsearch
  auto* gs = app.add_subcommand("gridsearch", "train every cell of a hyperparameter grid");
  ModelFlags gs_flags;
  std::string gs_train, gs_dev, gs_vocab, gs_grid, gs_out;
  std::size_t gs_limit = 0;
  int gs_threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  gs->add_option("--train", gs_train)->required();
  gs->add_option("--dev", gs_dev, "dev instances; split from --train when omitted");
  gs->add_option("--vocab", gs_vocab)->required();
  gs->add_option("--grid", gs_grid, "grid JSON (the reference grid when omitted)");
  gs->add_option("--limit", gs_limit, "train only the first N cells");
  gs->add_option("--threads", gs_threads)->capture_default_str();
  gs->add_option("--out", gs_out, "output directory")->required();
  gs_flags.add_to(gs);
  add_seed(gs);

  // ---- predict
  auto* pr = app.add_subcommand("predict", "label instances with a trained checkpoint");
  std::string pr_ckpt, pr_vocab, pr_input, pr_out;
  pr->add_option("--checkpoint", pr_ckpt)->required();
  pr->add_option("--vocab", pr_vocab, "vocabulary the checkpoint was trained with")->required();
  pr->add_option("--input", pr_input, "instances (JSON lines)")->required();
  pr->add_option("--out", pr_out, "predictions (JSON lines)")->required();
  add_seed(pr);

  // ---- eval
  auto* ev = app.add_subcommand("eval", "score predictions against gold labels");
  std::string ev_gold, ev_pred, ev_out;
  int ev_boot = 0;
  ev->add_option("--gold", ev_gold, "gold instances (JSON lines)")->required();
  ev->add_option("--pred", ev_pred, "predictions (JSON lines)")->required();
  ev->add_option("--out", ev_out, "output directory")->required();
  ev->add_option("--bootstrap", ev_boot, "bootstrap resamples for confidence intervals (0 = off)");
  add_seed(ev);

  // ---- stats
  auto* st = app.add_subcommand("stats", "distribution report for an instance file");
  std::string st_input, st_out;
  st->add_option("--input", st_input, "instances (JSON lines)")->required();
  st->add_option("--out", st_out, "report JSON")->required();
  add_seed(st);

  CLI11_PARSE(app, argc, argv);

  try {
    RunManifest m;
    m.seeds["seed"] = seed;

    if (pre->parsed()) {
      enc_cfg.validate();
      const fs::path out(pre_out);
      m.command = "preprocess";
      m.config = {{"max_distance", enc_cfg.max_distance}, {"min_word_freq", enc_cfg.min_word_freq}};
      std::vector<RecordFiles> records;
      for (const auto& dir : pre_inputs) {
        for (RecordFiles& r : find_records(dir)) {
          m.inputs.insert(m.inputs.end(), {r.text, r.concepts, r.relations});
        }
      }
      m.outputs = {out / "instances.jsonl", out / "vocab.txt", out / "stats.json"};
      m.write(out / "manifest.json");
      std::vector<RelationInstance> all;
      for (const auto& dir : pre_inputs) {
        auto part = load_i2b2_dir(dir);
        all.insert(all.end(), part.begin(), part.end());
      }
      const Vocab vocab = Vocab::build(all, enc_cfg);
      save_instances(out / "instances.jsonl", all);
      save_vocab(out / "vocab.txt", vocab);
      write_file(out / "stats.json", to_json(corpus_stats(all)).dump(2) + "\n");
      std::fprintf(stderr, "%zu instances, %d words\n", all.size(), vocab.word_count());

    } else if (syn->parsed()) {
      SynthSpec spec = syn_spec.empty() ? SynthSpec{} : synth_spec_from_json(nlohmann::json::parse(read_file(syn_spec)));
      if (syn->count("--seed") || syn_spec.empty()) spec.seed = seed;
      spec.validate();
      const fs::path out(syn_out);
      m.command = "synth";
      m.config = to_json(spec);
      m.seeds["seed"] = spec.seed;
      if (!syn_spec.empty()) m.inputs.push_back(syn_spec);
      m.outputs = {out / "corpus.jsonl", out / "ledger.jsonl", out / "records" / "txt" / "synth.txt",
                   out / "records" / "concept" / "synth.con", out / "records" / "rel" / "synth.rel"};
      m.write(out / "manifest.json");
      const SynthCorpus corpus = generate(spec);
      const SelfCheckReport rep = self_check(spec, corpus.instances, corpus.ledger);
      save_instances(out / "corpus.jsonl", corpus.instances);
      std::ostringstream ledger;
      write_ledger(ledger, corpus.ledger);
      write_file(out / "ledger.jsonl", ledger.str());
      std::vector<RelationInstance> positives;
      for (const RelationInstance& inst : corpus.instances) {
        if (is_positive(inst.gold)) positives.push_back(inst);
      }
      const I2b2Record rec = to_i2b2(synth_sentences(corpus), positives);
      write_file(out / "records" / "txt" / "synth.txt", rec.text);
      write_file(out / "records" / "concept" / "synth.con", rec.concepts);
      write_file(out / "records" / "rel" / "synth.rel", rec.relations);
      std::fprintf(stderr, "%zu instances, rule accuracy %.4f\n", rep.checked, rep.rule_accuracy);

    } else if (tr->parsed()) {
      const Vocab vocab = tr_vocab.empty() ? Vocab::build(load_instances(tr_train), tr_enc) : load_vocab(tr_vocab);
      tr_flags.cfg.seed = seed;
      tr_flags.finish(vocab);
      const fs::path out(tr_out);
      m.command = "train";
      m.config = {{"hyper", to_json(tr_flags.hp)}, {"train", train_config_json(tr_flags.cfg)},
                  {"no_dev", tr_no_dev}};
      m.seeds = {{"seed", seed}, {"init", derive_seed(seed, 0)}, {"shuffle", derive_seed(seed, 1)},
                 {"dropout", derive_seed(seed, 2)}, {"dev_split", derive_seed(seed, 3)}};
      m.inputs = {tr_train};
      if (!tr_vocab.empty()) m.inputs.emplace_back(tr_vocab);
      if (!tr_dev.empty()) m.inputs.emplace_back(tr_dev);
      if (!tr_embed.empty()) m.inputs.emplace_back(tr_embed);
      m.outputs = {out / "checkpoint.json", out / "metrics.json"};
      if (tr_vocab.empty()) {
        m.config["vocab"] = {{"max_distance", tr_enc.max_distance}, {"min_word_freq", tr_enc.min_word_freq}};
        m.outputs.push_back(out / "vocab.txt");
      }
      m.write(out / "manifest.json");
      if (tr_vocab.empty()) save_vocab(out / "vocab.txt", vocab);

      const Datasets d = prepare_data(tr_train, tr_dev, tr_no_dev, vocab, tr_flags.hp, tr_flags.cfg);
      ModelParams init = initial_params(tr_flags.hp, vocab, seed);
      if (!tr_embed.empty()) {
        std::istringstream in(read_file(tr_embed));
        const int found = load_word_embeddings(in, vocab, init);
        std::fprintf(stderr, "pretrained vectors for %d of %d words\n", found, vocab.word_count());
      }
      std::fprintf(stderr, "%zu train / %zu dev instances\n", d.train.size(), d.dev.size());
      const TrainResult r = train(d.train, d.dev, tr_flags.hp, tr_flags.cfg, std::move(init), print_epoch);
      save_checkpoint_file(out / "checkpoint.json", Checkpoint{tr_flags.hp, vocab.hash(), r.params});
      write_file(out / "metrics.json", to_json(r.record).dump(2) + "\n");
      std::fprintf(stderr, "best epoch %d, micro-F1 %.1f\n", r.record.best_epoch, r.record.best_score);

    } else if (gs->parsed()) {
      const Vocab vocab = load_vocab(gs_vocab);
      gs_flags.cfg.seed = seed;
      gs_flags.finish(vocab);
      const HyperGrid grid = gs_grid.empty() ? reference_grid() : grid_from_json(nlohmann::json::parse(read_file(gs_grid)));
      const fs::path out(gs_out);
      m.command = "gridsearch";
      m.config = {{"base", to_json(gs_flags.hp)}, {"train", train_config_json(gs_flags.cfg)},
                  {"grid", to_json(grid)}, {"limit", gs_limit}};
      m.inputs = {gs_train, gs_vocab};
      if (!gs_dev.empty()) m.inputs.emplace_back(gs_dev);
      if (!gs_grid.empty()) m.inputs.emplace_back(gs_grid);
      m.outputs = {out / "grid.csv"};
      m.write(out / "manifest.json");
      const Datasets d = prepare_data(gs_train, gs_dev, false, vocab, gs_flags.hp, gs_flags.cfg);
      const auto cells = grid_search(d.train, d.dev, vocab, gs_flags.hp, grid, gs_flags.cfg, gs_limit, gs_threads);
      write_file(out / "grid.csv", grid_results_csv(cells));
      if (!cells.empty() && !cells.front().failed) {
        std::fprintf(stderr, "best cell %zu: dev micro-F1 %.1f\n", cells.front().index, cells.front().dev_micro_f1);
      }

    } else if (pr->parsed()) {
      m.command = "predict";
      m.inputs = {pr_ckpt, pr_vocab, pr_input};
      m.outputs = {pr_out};
      m.write(fs::path(pr_out + ".manifest.json"));
      const Checkpoint ckpt = load_checkpoint_file(pr_ckpt);
      const Vocab vocab = load_vocab(pr_vocab);
      const auto preds = predict_instances(load_instances(pr_input), ckpt, vocab);
      save_predictions(pr_out, preds);
      std::fprintf(stderr, "%zu predictions\n", preds.size());

    } else if (ev->parsed()) {
      const fs::path out(ev_out);
      m.command = "eval";
      m.config = {{"bootstrap", ev_boot}};
      m.inputs = {ev_gold, ev_pred};
      m.outputs = {out / "report.json", out / "report.txt"};
      m.write(out / "manifest.json");
      const auto gold = load_instances(ev_gold);
      const auto [g, p] = align_predictions(gold, load_predictions(ev_pred));
      EvalReport rep = evaluate(g, p);
      if (ev_boot > 0) rep.ci = bootstrap_ci(g, p, ev_boot, seed);
      write_file(out / "report.json", to_json(rep).dump(2) + "\n");
      write_file(out / "report.txt", format_report(rep));
      std::fprintf(stderr, "micro P %.1f R %.1f F1 %.1f\n", rep.micro.precision, rep.micro.recall, rep.micro.f1);

    } else if (st->parsed()) {
      m.command = "stats";
      m.inputs = {st_input};
      m.outputs = {st_out};
      m.write(fs::path(st_out + ".manifest.json"));
      write_file(st_out, to_json(corpus_stats(load_instances(st_input))).dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
