#include "relcnn/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace relcnn {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw PipelineError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, std::string_view bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw PipelineError("cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw PipelineError("write failed for " + p.string());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t file_hash(const fs::path& p) { return fnv1a(read_file(p)); }

nlohmann::json RunManifest::to_json() const {
  nlohmann::json in = nlohmann::json::array();
  for (const fs::path& p : inputs) {
    in.push_back({{"path", p.string()}, {"fnv1a", hex64(file_hash(p))}});
  }
  nlohmann::json out = nlohmann::json::array();
  for (const fs::path& p : outputs) out.push_back(p.string());
  return {{"command", command}, {"config", config}, {"seeds", seeds},
          {"inputs", in},       {"outputs", out},   {"version", kToolVersion}};
}

void RunManifest::write(const fs::path& p) const { write_file(p, to_json().dump(2) + "\n"); }

std::vector<RecordFiles> find_records(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw PipelineError(dir.string() + " is not a directory");
  const bool split = fs::is_directory(dir / "txt");
  const fs::path text_dir = split ? dir / "txt" : dir;
  std::vector<RecordFiles> out;
  for (const auto& entry : fs::directory_iterator(text_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    RecordFiles r;
    r.name = entry.path().stem().string();
    r.text = entry.path();
    r.concepts = split ? dir / "concept" / (r.name + ".con") : dir / (r.name + ".con");
    r.relations = split ? dir / "rel" / (r.name + ".rel") : dir / (r.name + ".rel");
    for (const fs::path& p : {r.concepts, r.relations}) {
      if (!fs::is_regular_file(p)) throw PipelineError("record " + r.name + ": missing " + p.string());
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw PipelineError("no .txt records found in " + text_dir.string());
  std::sort(out.begin(), out.end(),
            [](const RecordFiles& a, const RecordFiles& b) { return a.name < b.name; });
  return out;
}

std::vector<RelationInstance> load_i2b2_dir(const fs::path& dir) {
  std::vector<RelationInstance> out;
  for (const RecordFiles& r : find_records(dir)) {
    ParsedDocument doc;
    try {
      doc = parse_document(r.name, read_file(r.text), read_file(r.concepts), read_file(r.relations));
    } catch (const CorpusError& e) {
      const fs::path& where = e.source() == CorpusError::Source::Relations ? r.relations : r.concepts;
      throw PipelineError(where.string() + ":" + std::to_string(e.line()) + ": " + e.detail());
    }
    const auto negatives = generate_negatives(doc.sentences, doc.positives);
    out.insert(out.end(), doc.positives.begin(), doc.positives.end());
    out.insert(out.end(), negatives.begin(), negatives.end());
  }
  return out;
}

std::vector<RelationInstance> load_instances(const fs::path& p) {
  std::istringstream in(read_file(p));
  try {
    return read_instances(in);
  } catch (const std::exception& e) {
    throw PipelineError(p.string() + ": " + e.what());
  }
}

void save_instances(const fs::path& p, std::span<const RelationInstance> instances) {
  std::ostringstream out;
  write_instances(out, instances);
  write_file(p, out.str());
}

Vocab load_vocab(const fs::path& p) {
  std::istringstream in(read_file(p));
  try {
    return Vocab::load(in);
  } catch (const std::exception& e) {
    throw PipelineError(p.string() + ": " + e.what());
  }
}

void save_vocab(const fs::path& p, const Vocab& vocab) {
  std::ostringstream out;
  vocab.save(out);
  write_file(p, out.str());
}

Checkpoint load_checkpoint_file(const fs::path& p) {
  std::istringstream in(read_file(p));
  try {
    return load_checkpoint(in);
  } catch (const std::exception& e) {
    throw PipelineError(p.string() + ": " + e.what());
  }
}

void save_checkpoint_file(const fs::path& p, const Checkpoint& ckpt) {
  std::ostringstream out;
  save_checkpoint(out, ckpt);
  write_file(p, out.str());
}

nlohmann::json to_json(const PredictionRecord& r) {
  nlohmann::json probs = nlohmann::json::object();
  for (RelationType t : all_relation_types()) {
    probs[std::string(to_string(t))] = r.probabilities[static_cast<std::size_t>(t)];
  }
  return {{"id", r.id}, {"label", std::string(to_string(r.label))}, {"probabilities", probs}};
}

PredictionRecord prediction_from_json(const nlohmann::json& j) {
  PredictionRecord r;
  r.id = j.at("id").get<std::string>();
  r.label = parse_relation_type(j.at("label").get<std::string>());
  if (j.contains("probabilities")) {
    for (RelationType t : all_relation_types()) {
      r.probabilities[static_cast<std::size_t>(t)] =
          j.at("probabilities").value(std::string(to_string(t)), 0.0);
    }
  }
  return r;
}

void save_predictions(const fs::path& p, std::span<const PredictionRecord> preds) {
  std::string out;
  for (const PredictionRecord& r : preds) out += to_json(r).dump() + "\n";
  write_file(p, out);
}

std::vector<PredictionRecord> load_predictions(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<PredictionRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw PipelineError(p.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<PredictionRecord> predict_instances(std::span<const RelationInstance> instances,
                                                const Checkpoint& ckpt, const Vocab& vocab) {
  if (vocab.hash() != ckpt.vocab_hash) {
    throw PipelineError("vocabulary hash " + hex64(vocab.hash()) +
                        " does not match the checkpoint's " + hex64(ckpt.vocab_hash));
  }
  std::vector<PredictionRecord> out;
  out.reserve(instances.size());
  for (const RelationInstance& inst : instances) {
    const Prediction p = predict(encode(inst, vocab, ckpt.hp.encoder), ckpt.params, ckpt.hp);
    PredictionRecord r;
    r.id = inst.id;
    r.label = p.label;
    for (Eigen::Index i = 0; i < p.probabilities.size(); ++i) {
      r.probabilities[static_cast<std::size_t>(i)] = p.probabilities(i);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::pair<std::vector<RelationType>, std::vector<RelationType>> align_predictions(
    std::span<const RelationInstance> gold, std::span<const PredictionRecord> preds) {
  std::map<std::string, RelationType> by_id;
  for (const PredictionRecord& r : preds) {
    if (!by_id.emplace(r.id, r.label).second) throw PipelineError("duplicate prediction for " + r.id);
  }
  std::pair<std::vector<RelationType>, std::vector<RelationType>> out;
  for (const RelationInstance& inst : gold) {
    const auto it = by_id.find(inst.id);
    if (it == by_id.end()) throw PipelineError("no prediction for " + inst.id);
    out.first.push_back(inst.gold);
    out.second.push_back(it->second);
    by_id.erase(it);
  }
  if (!by_id.empty()) throw PipelineError("prediction for unknown instance " + by_id.begin()->first);
  return out;
}

}  // namespace relcnn
