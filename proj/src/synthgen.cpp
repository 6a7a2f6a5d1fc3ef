#include "relcnn/synthgen.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "relcnn/numeric.hpp"

namespace relcnn {

namespace {

// Letters-only spelling of i so generated words survive digit normalization.
std::string letters(int i) {
  std::string s;
  do {
    s.push_back(static_cast<char>('a' + i % 26));
    i /= 26;
  } while (i > 0);
  return s;
}

std::string filler_word(int i) { return "w" + letters(i); }
std::string concept_word(int i) { return "c" + letters(i); }
constexpr int kConceptWords = 40;
constexpr int kMaxConceptLen = 3;

struct Item {
  std::vector<std::string> tokens;
  enum Kind { Filler, Signal, Extra } kind = Filler;
};

std::vector<std::string> concept_tokens(Rng& rng, int len) {
  std::vector<std::string> t;
  for (int i = 0; i < len; ++i) t.push_back(concept_word(static_cast<int>(rng.below(kConceptWords))));
  return t;
}

void insert_item(std::vector<Item>& seg, Item item, Rng& rng) {
  const auto at = static_cast<std::ptrdiff_t>(rng.below(seg.size() + 1));
  seg.insert(seg.begin() + at, std::move(item));
}

std::pair<ConceptType, ConceptType> pair_types(Category c, Rng& rng) {
  ConceptType other = ConceptType::Problem;
  if (c == Category::TeP) other = ConceptType::Test;
  if (c == Category::TrP) other = ConceptType::Treatment;
  if (rng.bernoulli(0.5)) return {other, ConceptType::Problem};
  return {ConceptType::Problem, other};
}

}  // namespace

std::string_view to_string(Placement p) {
  switch (p) {
    case Placement::BeforeC1: return "before_c1";
    case Placement::Between: return "between";
    case Placement::AfterC2: return "after_c2";
  }
  return "?";
}

Placement parse_placement(std::string_view s) {
  if (s == "before_c1") return Placement::BeforeC1;
  if (s == "between") return Placement::Between;
  if (s == "after_c2") return Placement::AfterC2;
  throw std::invalid_argument("unknown placement '" + std::string(s) + "'");
}

void SynthSpec::validate() const {
  auto reject = [](const std::string& why) { throw std::invalid_argument("SynthSpec: " + why); };
  if (vocab_size < 1 || sentences_per_type < 1 || signals < 1 || ngram < 1) {
    reject("vocab_size, sentences_per_type, signals and ngram must be >= 1");
  }
  if (placements.empty()) reject("at least one placement is required");
  if (std::set<Placement>(placements.begin(), placements.end()).size() != placements.size()) {
    reject("placements must be distinct");
  }
  if (label_count() > static_cast<int>(members(category).size())) {
    reject(std::to_string(label_count()) + " signal/placement labels exceed the " +
           std::to_string(members(category).size()) + " types of category " +
           std::string(to_string(category)));
  }
  if (concepts_per_sentence < 2) reject("concepts_per_sentence must be >= 2");
  if (min_segment < ngram) {
    reject("min_segment " + std::to_string(min_segment) + " is too short for a signal of " +
           std::to_string(ngram) + " tokens");
  }
  if (min_length > max_length) reject("min_length exceeds max_length");
  const int needed = 2 + 3 * min_segment + ngram + (concepts_per_sentence - 2);
  if (max_length < needed) {
    reject("max_length " + std::to_string(max_length) + " cannot fit the layout (needs " +
           std::to_string(needed) + ")");
  }
  if (!(noise >= 0.0 && noise < 1.0)) reject("noise must lie in [0, 1)");
}

RelationType SynthSpec::label_for(int signal, int placement_index) const {
  return members(category)[static_cast<std::size_t>(signal * static_cast<int>(placements.size()) +
                                                    placement_index)];
}

std::vector<std::string> signal_ngram(const SynthSpec& spec, int signal) {
  std::vector<std::string> out;
  for (int t = 0; t < spec.ngram; ++t) out.push_back("s" + letters(signal * spec.ngram + t));
  return out;
}

SynthCorpus generate(const SynthSpec& spec) {
  spec.validate();
  SynthCorpus corpus;
  const int n_place = static_cast<int>(spec.placements.size());
  std::uint64_t stream = 0;
  for (int signal = 0; signal < spec.signals; ++signal) {
    for (int pi = 0; pi < n_place; ++pi) {
      for (int rep = 0; rep < spec.sentences_per_type; ++rep) {
        Rng rng(derive_seed(spec.seed, stream++));
        const Placement place = spec.placements[static_cast<std::size_t>(pi)];
        const auto [type1, type2] = pair_types(spec.category, rng);
        const int extras = spec.concepts_per_sentence - 2;

        // Concept lengths shrink if the drawn sentence length is tight.
        int l1 = 1 + static_cast<int>(rng.below(kMaxConceptLen));
        int l2 = 1 + static_cast<int>(rng.below(kMaxConceptLen));
        const int target = spec.min_length +
                           static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_length - spec.min_length + 1)));
        const int fixed = 3 * spec.min_segment + spec.ngram + extras;
        while (fixed + l1 + l2 > std::max(target, spec.max_length) && (l1 > 1 || l2 > 1)) {
          (l1 >= l2 ? l1 : l2) -= 1;
        }
        int slack = std::max(0, target - fixed - l1 - l2);

        std::array<std::vector<Item>, 3> segs;
        std::array<int, 3> fill{spec.min_segment, spec.min_segment, spec.min_segment};
        for (; slack > 0; --slack) ++fill[static_cast<std::size_t>(rng.below(3))];
        for (std::size_t s = 0; s < 3; ++s) {
          for (int i = 0; i < fill[s]; ++i) {
            segs[s].push_back({{filler_word(static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.vocab_size))))}, Item::Filler});
          }
        }
        insert_item(segs[static_cast<std::size_t>(place)], {signal_ngram(spec, signal), Item::Signal}, rng);
        for (int e = 0; e < extras; ++e) {
          insert_item(segs[static_cast<std::size_t>(rng.below(3))], {concept_tokens(rng, 1), Item::Extra}, rng);
        }

        std::vector<std::string> tokens;
        SynthRecord rec;
        rec.signal = signal;
        rec.placement = place;
        auto emit = [&](const std::vector<Item>& seg) {
          for (const Item& it : seg) {
            const int start = static_cast<int>(tokens.size()) + 1;
            if (it.kind == Item::Signal) rec.signal_start = start;
            if (it.kind == Item::Extra) {
              rec.extra_concepts.emplace_back(start, start + static_cast<int>(it.tokens.size()) - 1);
            }
            tokens.insert(tokens.end(), it.tokens.begin(), it.tokens.end());
          }
        };
        emit(segs[0]);
        const int c1 = static_cast<int>(tokens.size()) + 1;
        const auto t1 = concept_tokens(rng, l1);
        tokens.insert(tokens.end(), t1.begin(), t1.end());
        emit(segs[1]);
        const int c2 = static_cast<int>(tokens.size()) + 1;
        const auto t2 = concept_tokens(rng, l2);
        tokens.insert(tokens.end(), t2.begin(), t2.end());
        emit(segs[2]);

        rec.planted = spec.label_for(signal, pi);
        rec.gold = rec.planted;
        if (spec.noise > 0.0 && rng.bernoulli(spec.noise)) {
          std::vector<RelationType> others;
          for (RelationType t : members(spec.category)) {
            if (t != rec.planted) others.push_back(t);
          }
          rec.gold = others[static_cast<std::size_t>(rng.below(others.size()))];
        }
        corpus.instances.push_back(make_instance("", std::move(tokens), c1, c1 + l1 - 1, type1, c2,
                                                 c2 + l2 - 1, type2, rec.gold));
        corpus.ledger.push_back(std::move(rec));
      }
    }
  }

  std::vector<std::size_t> order(corpus.instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffler(derive_seed(spec.seed, ~0ULL));
  shuffler.shuffle(order);
  SynthCorpus out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.instances.push_back(std::move(corpus.instances[order[i]]));
    out.ledger.push_back(std::move(corpus.ledger[order[i]]));
    out.instances.back().id = out.ledger.back().id = "synth:" + std::to_string(i);
  }
  return out;
}

std::vector<Sentence> synth_sentences(const SynthCorpus& corpus) {
  std::vector<Sentence> out;
  for (std::size_t i = 0; i < corpus.instances.size(); ++i) {
    const RelationInstance& inst = corpus.instances[i];
    Sentence s;
    s.id = inst.id;
    s.tokens = inst.tokens;
    s.concepts = {inst.concept1, inst.concept2};
    if (i < corpus.ledger.size()) {
      for (const auto& [a, b] : corpus.ledger[i].extra_concepts) {
        Concept c;
        c.start = a;
        c.end = b;
        c.ctype = ConceptType::Problem;
        c.tokens.assign(inst.tokens.begin() + (a - 1), inst.tokens.begin() + b);
        s.concepts.push_back(std::move(c));
      }
    }
    std::sort(s.concepts.begin(), s.concepts.end(),
              [](const Concept& x, const Concept& y) { return x.start < y.start; });
    out.push_back(std::move(s));
  }
  return out;
}

SelfCheckReport self_check(const SynthSpec& spec, std::span<const RelationInstance> corpus,
                           std::span<const SynthRecord> ledger) {
  if (corpus.size() != ledger.size()) {
    throw SynthCheckError("self_check: corpus has " + std::to_string(corpus.size()) +
                          " instances but ledger has " + std::to_string(ledger.size()));
  }
  SelfCheckReport rep;
  const int n_place = static_cast<int>(spec.placements.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const RelationInstance& inst = corpus[i];
    const SynthRecord& rec = ledger[i];
    auto fail = [&](const std::string& why) {
      throw SynthCheckError("self_check: instance " + inst.id + ": " + why);
    };
    if (inst.id != rec.id) fail("ledger entry is for " + rec.id);
    try {
      validate(inst);
    } catch (const CorpusError& e) {
      fail(e.what());
    }
    if (inst.gold != rec.gold) {
      fail("label " + std::string(to_string(inst.gold)) + " disagrees with ledger " +
           std::string(to_string(rec.gold)));
    }
    const auto gram = signal_ngram(spec, rec.signal);
    const int start = rec.signal_start;
    const int end = start + spec.ngram - 1;
    if (start < 1 || end > static_cast<int>(inst.tokens.size()) ||
        !std::equal(gram.begin(), gram.end(), inst.tokens.begin() + (start - 1))) {
      fail("planted n-gram not found at token " + std::to_string(start));
    }
    Placement actual = Placement::Between;
    if (end < inst.concept1.start) {
      actual = Placement::BeforeC1;
    } else if (start > inst.concept2.end) {
      actual = Placement::AfterC2;
    } else if (!(start > inst.concept1.end && end < inst.concept2.start)) {
      fail("planted n-gram overlaps a concept");
    }
    if (actual != rec.placement) fail("n-gram sits " + std::string(to_string(actual)) + ", ledger says " + std::string(to_string(rec.placement)));

    // Rule-based classifier: (signal, placement) -> label table.
    const auto pit = std::find(spec.placements.begin(), spec.placements.end(), actual);
    if (pit == spec.placements.end()) fail("placement not in spec");
    const RelationType rule = spec.label_for(rec.signal, static_cast<int>(pit - spec.placements.begin()));
    if (rule != rec.planted) fail("ledger planted label disagrees with the construction rule");
    rep.rule_correct += rule == inst.gold;
    ++rep.checked;
    (void)n_place;
  }
  rep.rule_accuracy = rep.checked ? static_cast<double>(rep.rule_correct) / static_cast<double>(rep.checked) : 1.0;
  if (spec.noise == 0.0 && rep.rule_correct != rep.checked) {
    throw SynthCheckError("self_check: rule-based classifier below 100% on a noise-free corpus");
  }

  std::stringstream buf;
  write_instances(buf, corpus);
  const auto back = read_instances(buf);
  rep.round_trip_ok = std::equal(back.begin(), back.end(), corpus.begin(), corpus.end());
  if (!rep.round_trip_ok) throw SynthCheckError("self_check: instance file round-trip changed the corpus");
  return rep;
}

nlohmann::json to_json(const SynthSpec& s) {
  std::vector<std::string> places;
  for (Placement p : s.placements) places.emplace_back(to_string(p));
  return {{"vocab_size", s.vocab_size},
          {"sentences_per_type", s.sentences_per_type},
          {"min_length", s.min_length},
          {"max_length", s.max_length},
          {"concepts_per_sentence", s.concepts_per_sentence},
          {"placements", places},
          {"signals", s.signals},
          {"ngram", s.ngram},
          {"min_segment", s.min_segment},
          {"category", std::string(to_string(s.category))},
          {"noise", s.noise},
          {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  s.vocab_size = j.value("vocab_size", s.vocab_size);
  s.sentences_per_type = j.value("sentences_per_type", s.sentences_per_type);
  s.min_length = j.value("min_length", s.min_length);
  s.max_length = j.value("max_length", s.max_length);
  s.concepts_per_sentence = j.value("concepts_per_sentence", s.concepts_per_sentence);
  if (j.contains("placements")) {
    s.placements.clear();
    for (const auto& p : j.at("placements")) s.placements.push_back(parse_placement(p.get<std::string>()));
  }
  s.signals = j.value("signals", s.signals);
  s.ngram = j.value("ngram", s.ngram);
  s.min_segment = j.value("min_segment", std::max(s.min_segment, s.ngram));
  if (j.contains("category")) {
    const auto c = j.at("category").get<std::string>();
    if (c == "TrP") s.category = Category::TrP;
    else if (c == "TeP") s.category = Category::TeP;
    else if (c == "PP") s.category = Category::PP;
    else throw std::invalid_argument("SynthSpec: unknown category '" + c + "'");
  }
  s.noise = j.value("noise", s.noise);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

nlohmann::json to_json(const SynthRecord& r) {
  return {{"id", r.id},
          {"signal", r.signal},
          {"placement", std::string(to_string(r.placement))},
          {"signal_start", r.signal_start},
          {"planted", std::string(to_string(r.planted))},
          {"gold", std::string(to_string(r.gold))},
          {"extra_concepts", r.extra_concepts}};
}

SynthRecord synth_record_from_json(const nlohmann::json& j) {
  SynthRecord r;
  r.id = j.at("id").get<std::string>();
  r.signal = j.at("signal").get<int>();
  r.placement = parse_placement(j.at("placement").get<std::string>());
  r.signal_start = j.at("signal_start").get<int>();
  r.planted = parse_relation_type(j.at("planted").get<std::string>());
  r.gold = parse_relation_type(j.at("gold").get<std::string>());
  r.extra_concepts = j.value("extra_concepts", r.extra_concepts);
  return r;
}

void write_ledger(std::ostream& out, std::span<const SynthRecord> ledger) {
  for (const SynthRecord& r : ledger) out << to_json(r).dump() << '\n';
}

SynthLedger read_ledger(std::istream& in) {
  SynthLedger out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(synth_record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace relcnn
