#include "relcnn/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>
#include <utility>

namespace relcnn {

namespace {

constexpr std::array<RelationType, 6> kTrP = {RelationType::TrIP, RelationType::TrWP,
                                              RelationType::TrCP, RelationType::TrAP,
                                              RelationType::TrNAP, RelationType::NTrP};
constexpr std::array<RelationType, 3> kTeP = {RelationType::TeRP, RelationType::TeCP,
                                              RelationType::NTeP};
constexpr std::array<RelationType, 2> kPP = {RelationType::PIP, RelationType::NPP};
constexpr std::array<RelationType, 11> kAll = {
    RelationType::TrIP, RelationType::TrWP, RelationType::TrCP, RelationType::TrAP,
    RelationType::TrNAP, RelationType::NTrP, RelationType::TeRP, RelationType::TeCP,
    RelationType::NTeP, RelationType::PIP, RelationType::NPP};
constexpr std::array<std::string_view, 11> kRelationNames = {
    "TrIP", "TrWP", "TrCP", "TrAP", "TrNAP", "NTrP", "TeRP", "TeCP", "NTeP", "PIP", "NPP"};

bool is_punct(unsigned char c) { return c < 128 && std::ispunct(c); }
bool is_space(unsigned char c) { return c < 128 && std::isspace(c); }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

std::string normalize_core(std::string_view core) {
  std::string out;
  out.reserve(core.size());
  for (std::size_t i = 0; i < core.size();) {
    const auto c = static_cast<unsigned char>(core[i]);
    if (is_digit(c)) {
      out.push_back('0');
      while (i < core.size() && is_digit(static_cast<unsigned char>(core[i]))) ++i;
      continue;
    }
    out.push_back(c < 128 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    ++i;
  }
  return out;
}

void tokenize_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t lo = 0;
  std::size_t hi = chunk.size();
  while (lo < hi && is_punct(static_cast<unsigned char>(chunk[lo]))) {
    out.emplace_back(1, chunk[lo]);
    ++lo;
  }
  std::vector<std::string> trailing;
  while (hi > lo && is_punct(static_cast<unsigned char>(chunk[hi - 1]))) {
    trailing.emplace_back(1, chunk[hi - 1]);
    --hi;
  }
  if (hi > lo) out.push_back(normalize_core(chunk.substr(lo, hi - lo)));
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) parts.push_back(s.substr(i, j - i));
    i = j;
  }
  return parts;
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < s.size()) lines.push_back(s.substr(start));
      break;
    }
    std::string_view line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  return lines;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return is_space(static_cast<unsigned char>(c)); });
}

// A sentence line after re-tokenization, with the raw-token -> token map.
struct AlignedLine {
  std::vector<std::string> tokens;
  std::vector<int> first;  // 1-based first token of raw token j
  std::vector<int> last;   // 1-based last token of raw token j
};

AlignedLine align_line(std::string_view line) {
  AlignedLine a;
  for (std::string_view raw : split_whitespace(line)) {
    const int before = static_cast<int>(a.tokens.size());
    tokenize_chunk(raw, a.tokens);
    a.first.push_back(before + 1);
    a.last.push_back(static_cast<int>(a.tokens.size()));
  }
  return a;
}

struct RawSpan {
  int line;
  int tok_start;
  int tok_end;
  auto operator<=>(const RawSpan&) const = default;
};

RawSpan parse_span(const std::smatch& m, std::size_t base, int file_line) {
  const int l1 = std::stoi(m[base].str());
  const int t1 = std::stoi(m[base + 1].str());
  const int l2 = std::stoi(m[base + 2].str());
  const int t2 = std::stoi(m[base + 3].str());
  if (l1 != l2) throw CorpusError("concept spans a line boundary", file_line);
  if (t1 > t2) throw CorpusError("concept end precedes start", file_line);
  return {l1, t1, t2};
}

Concept realign(const RawSpan& span, ConceptType type, const std::vector<AlignedLine>& lines,
                int file_line) {
  if (span.line < 1 || span.line > static_cast<int>(lines.size())) {
    throw CorpusError("line offset " + std::to_string(span.line) + " out of range", file_line);
  }
  const AlignedLine& al = lines[static_cast<std::size_t>(span.line - 1)];
  const int raw_count = static_cast<int>(al.first.size());
  if (span.tok_start < 0 || span.tok_end >= raw_count) {
    throw CorpusError("token offset out of range on text line " + std::to_string(span.line),
                      file_line);
  }
  Concept c;
  c.start = al.first[static_cast<std::size_t>(span.tok_start)];
  c.end = al.last[static_cast<std::size_t>(span.tok_end)];
  c.ctype = type;
  c.tokens.assign(al.tokens.begin() + (c.start - 1), al.tokens.begin() + c.end);
  return c;
}

bool overlaps(const Concept& a, const Concept& b) {
  return !(a.end < b.start || b.end < a.start);
}

std::string span_id(const Concept& c) {
  return std::to_string(c.start) + "-" + std::to_string(c.end);
}

std::string pair_id(const std::string& sentence_id, const Concept& a, const Concept& b) {
  return sentence_id + ":" + span_id(a) + ":" + span_id(b);
}

}  // namespace

Category category_of(RelationType t) {
  const int i = static_cast<int>(t);
  if (i <= static_cast<int>(RelationType::NTrP)) return Category::TrP;
  if (i <= static_cast<int>(RelationType::NTeP)) return Category::TeP;
  return Category::PP;
}

bool is_positive(RelationType t) {
  return t != RelationType::NTrP && t != RelationType::NTeP && t != RelationType::NPP;
}

RelationType negative_type(Category c) {
  switch (c) {
    case Category::TrP: return RelationType::NTrP;
    case Category::TeP: return RelationType::NTeP;
    case Category::PP: return RelationType::NPP;
  }
  throw std::invalid_argument("negative_type: bad category");
}

std::span<const RelationType> members(Category c) {
  switch (c) {
    case Category::TrP: return kTrP;
    case Category::TeP: return kTeP;
    case Category::PP: return kPP;
  }
  throw std::invalid_argument("members: bad category");
}

std::span<const RelationType> all_relation_types() { return kAll; }

std::string_view to_string(RelationType t) { return kRelationNames.at(static_cast<std::size_t>(t)); }

std::string_view to_string(ConceptType t) {
  switch (t) {
    case ConceptType::Problem: return "problem";
    case ConceptType::Treatment: return "treatment";
    case ConceptType::Test: return "test";
  }
  return "?";
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::TrP: return "TrP";
    case Category::TeP: return "TeP";
    case Category::PP: return "PP";
  }
  return "?";
}

RelationType parse_relation_type(std::string_view s) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (kRelationNames[i] == s) return kAll[i];
  }
  throw CorpusError("unknown relation label \"" + std::string(s) + "\"");
}

ConceptType parse_concept_type(std::string_view s) {
  if (s == "problem") return ConceptType::Problem;
  if (s == "treatment") return ConceptType::Treatment;
  if (s == "test") return ConceptType::Test;
  throw CorpusError("unknown concept type \"" + std::string(s) + "\"");
}

std::optional<Category> category_for(ConceptType a, ConceptType b) {
  using CT = ConceptType;
  if (a == CT::Problem && b == CT::Problem) return Category::PP;
  if ((a == CT::Problem && b == CT::Treatment) || (a == CT::Treatment && b == CT::Problem))
    return Category::TrP;
  if ((a == CT::Problem && b == CT::Test) || (a == CT::Test && b == CT::Problem))
    return Category::TeP;
  return std::nullopt;
}

std::string_view placeholder(ConceptType t) {
  switch (t) {
    case ConceptType::Problem: return "__problem__";
    case ConceptType::Treatment: return "__treatment__";
    case ConceptType::Test: return "__test__";
  }
  return "__unknown__";
}

void validate(const RelationInstance& inst) {
  const int n = static_cast<int>(inst.tokens.size());
  for (const Concept* c : {&inst.concept1, &inst.concept2}) {
    if (c->start < 1 || c->end > n || c->start > c->end) {
      throw CorpusError("instance " + inst.id + ": concept span [" + span_id(*c) +
                        "] outside sentence of " + std::to_string(n) + " tokens");
    }
    if (static_cast<int>(c->tokens.size()) != c->length()) {
      throw CorpusError("instance " + inst.id + ": concept token count disagrees with span");
    }
  }
  if (inst.concept1.start >= inst.concept2.start) {
    throw CorpusError("instance " + inst.id + ": concept1 must start before concept2");
  }
  if (overlaps(inst.concept1, inst.concept2)) {
    throw CorpusError("instance " + inst.id + ": concept spans overlap");
  }
  const auto cat = category_for(inst.concept1.ctype, inst.concept2.ctype);
  if (!cat || *cat != category_of(inst.gold)) {
    throw CorpusError("instance " + inst.id + ": label " + std::string(to_string(inst.gold)) +
                      " does not fit concept types " + std::string(to_string(inst.concept1.ctype)) +
                      "/" + std::string(to_string(inst.concept2.ctype)));
  }
}

RelationInstance make_instance(std::string id, std::vector<std::string> tokens, int start_a,
                               int end_a, ConceptType type_a, int start_b, int end_b,
                               ConceptType type_b, RelationType gold) {
  if (start_b < start_a) {
    std::swap(start_a, start_b);
    std::swap(end_a, end_b);
    std::swap(type_a, type_b);
  }
  RelationInstance inst;
  inst.id = std::move(id);
  inst.tokens = std::move(tokens);
  inst.gold = gold;
  const int n = static_cast<int>(inst.tokens.size());
  auto fill = [&](Concept& c, int s, int e, ConceptType t) {
    c.start = s;
    c.end = e;
    c.ctype = t;
    if (s >= 1 && e <= n && s <= e) c.tokens.assign(inst.tokens.begin() + (s - 1), inst.tokens.begin() + e);
  };
  fill(inst.concept1, start_a, end_a, type_a);
  fill(inst.concept2, start_b, end_b, type_b);
  validate(inst);
  return inst;
}

std::vector<std::string> tokenize_normalize(std::string_view sentence) {
  std::vector<std::string> out;
  for (std::string_view chunk : split_whitespace(sentence)) tokenize_chunk(chunk, out);
  return out;
}

ReplacedInstance replace_concepts(const RelationInstance& inst) {
  const Concept& c1 = inst.concept1;
  const Concept& c2 = inst.concept2;
  ReplacedInstance r;
  r.original = inst;
  const auto begin = inst.tokens.begin();
  r.tokens.reserve(inst.tokens.size());
  r.tokens.insert(r.tokens.end(), begin, begin + (c1.start - 1));
  r.tokens.emplace_back(placeholder(c1.ctype));
  r.p1 = static_cast<int>(r.tokens.size());
  r.tokens.insert(r.tokens.end(), begin + c1.end, begin + (c2.start - 1));
  r.tokens.emplace_back(placeholder(c2.ctype));
  r.p2 = static_cast<int>(r.tokens.size());
  r.tokens.insert(r.tokens.end(), begin + c2.end, inst.tokens.end());
  return r;
}

ParsedDocument parse_document(std::string_view doc_id, std::string_view text,
                              std::string_view concept_file, std::string_view relation_file) {
  static const std::regex concept_re(
      R"re(^c="(.*)" (\d+):(\d+) (\d+):(\d+)\|\|t="([^"]*)"\s*$)re");
  static const std::regex relation_re(
      R"re(^c="(.*)" (\d+):(\d+) (\d+):(\d+)\|\|r="([^"]*)"\|\|c="(.*)" (\d+):(\d+) (\d+):(\d+)\s*$)re");

  std::vector<AlignedLine> lines;
  for (std::string_view line : split_lines(text)) lines.push_back(align_line(line));

  // Concepts per text line, keyed by raw span for relation lookup.
  std::map<RawSpan, Concept> by_span;
  std::map<int, std::vector<RawSpan>> spans_by_line;
  const auto concept_lines = split_lines(concept_file);
  try {
    for (std::size_t i = 0; i < concept_lines.size(); ++i) {
      const int file_line = static_cast<int>(i) + 1;
      if (blank(concept_lines[i])) continue;
      const std::string line(concept_lines[i]);
      std::smatch m;
      if (!std::regex_match(line, m, concept_re)) {
        throw CorpusError("malformed concept annotation", file_line);
      }
      const RawSpan span = parse_span(m, 2, file_line);
      ConceptType type;
      try {
        type = parse_concept_type(m[6].str());
      } catch (const CorpusError& e) {
        throw CorpusError(e.what(), file_line);
      }
      Concept c = realign(span, type, lines, file_line);
      if (by_span.emplace(span, std::move(c)).second) spans_by_line[span.line].push_back(span);
    }
  } catch (const CorpusError& e) {
    throw CorpusError(e.detail(), e.line(), CorpusError::Source::Concepts);
  }

  ParsedDocument doc;
  std::map<int, std::size_t> sentence_index;
  for (auto& [line_no, spans] : spans_by_line) {
    std::sort(spans.begin(), spans.end());
    Sentence s;
    s.id = std::string(doc_id) + ":" + std::to_string(line_no);
    s.tokens = lines[static_cast<std::size_t>(line_no - 1)].tokens;
    for (const RawSpan& sp : spans) s.concepts.push_back(by_span.at(sp));
    std::stable_sort(s.concepts.begin(), s.concepts.end(),
                     [](const Concept& a, const Concept& b) {
                       return std::tie(a.start, a.end) < std::tie(b.start, b.end);
                     });
    sentence_index[line_no] = doc.sentences.size();
    doc.sentences.push_back(std::move(s));
  }

  std::set<std::string> seen;
  std::vector<int> positive_lines;
  const auto relation_lines = split_lines(relation_file);
  try {
    for (std::size_t i = 0; i < relation_lines.size(); ++i) {
      const int file_line = static_cast<int>(i) + 1;
      if (blank(relation_lines[i])) continue;
      const std::string line(relation_lines[i]);
      std::smatch m;
      if (!std::regex_match(line, m, relation_re)) {
        throw CorpusError("malformed relation annotation", file_line);
      }
      const RawSpan a = parse_span(m, 2, file_line);
      const RawSpan b = parse_span(m, 8, file_line);
      RelationType label;
      try {
        label = parse_relation_type(m[6].str());
      } catch (const CorpusError& e) {
        throw CorpusError(e.what(), file_line);
      }
      if (a.line != b.line) throw CorpusError("relation crosses sentences", file_line);
      const auto ca = by_span.find(a);
      const auto cb = by_span.find(b);
      if (ca == by_span.end() || cb == by_span.end()) {
        // Distinguish bad offsets from spans that were never annotated.
        realign(a, ConceptType::Problem, lines, file_line);
        realign(b, ConceptType::Problem, lines, file_line);
        throw CorpusError("relation references an unannotated concept", file_line);
      }
      const Sentence& s = doc.sentences[sentence_index.at(a.line)];
      const Concept& x = ca->second;
      const Concept& y = cb->second;
      if (overlaps(x, y)) throw CorpusError("relation between overlapping concepts", file_line);
      const Concept& first = x.start < y.start ? x : y;
      const Concept& second = x.start < y.start ? y : x;
      const std::string id = pair_id(s.id, first, second);
      if (!seen.insert(id).second) continue;
      try {
        doc.positives.push_back(make_instance(id, s.tokens, first.start, first.end, first.ctype,
                                              second.start, second.end, second.ctype, label));
        positive_lines.push_back(a.line);
      } catch (const CorpusError& e) {
        throw CorpusError(e.what(), file_line);
      }
    }
  } catch (const CorpusError& e) {
    throw CorpusError(e.detail(), e.line(), CorpusError::Source::Relations);
  }
  std::vector<std::size_t> order(doc.positives.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto key = [&](std::size_t i) {
    const RelationInstance& r = doc.positives[i];
    return std::make_tuple(positive_lines[i], r.concept1.start, r.concept2.start);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  std::vector<RelationInstance> sorted;
  sorted.reserve(order.size());
  for (std::size_t i : order) sorted.push_back(std::move(doc.positives[i]));
  doc.positives = std::move(sorted);
  return doc;
}

std::vector<RelationInstance> parse_annotations(std::string_view text,
                                                std::string_view concept_file,
                                                std::string_view relation_file) {
  return parse_document("doc", text, concept_file, relation_file).positives;
}

std::vector<RelationInstance> generate_negatives(std::span<const Sentence> sentences,
                                                 std::span<const RelationInstance> positives) {
  // Annotated pairs are keyed by sentence tokens plus both spans.
  std::set<std::tuple<std::vector<std::string>, int, int, int, int>> annotated;
  for (const RelationInstance& p : positives) {
    annotated.emplace(p.tokens, p.concept1.start, p.concept1.end, p.concept2.start,
                      p.concept2.end);
  }
  std::vector<RelationInstance> out;
  for (const Sentence& s : sentences) {
    std::vector<Concept> cs = s.concepts;
    std::stable_sort(cs.begin(), cs.end(), [](const Concept& a, const Concept& b) {
      return std::tie(a.start, a.end) < std::tie(b.start, b.end);
    });
    for (std::size_t i = 0; i < cs.size(); ++i) {
      for (std::size_t j = i + 1; j < cs.size(); ++j) {
        const Concept& a = cs[i];
        const Concept& b = cs[j];
        if (a.start == b.start || overlaps(a, b)) continue;
        const auto cat = category_for(a.ctype, b.ctype);
        if (!cat) continue;
        if (annotated.count({s.tokens, a.start, a.end, b.start, b.end})) continue;
        out.push_back(make_instance(pair_id(s.id, a, b), s.tokens, a.start, a.end, a.ctype,
                                    b.start, b.end, b.ctype, negative_type(*cat)));
      }
    }
  }
  return out;
}

CorpusStats corpus_stats(std::span<const RelationInstance> instances) {
  CorpusStats st;
  st.instances = instances.size();
  std::set<std::tuple<std::vector<std::string>, int, int>> seen;
  std::array<std::size_t, kNumConceptTypes> length_sum{};
  std::size_t total_len = 0;
  for (const RelationInstance& inst : instances) {
    for (const Concept* c : {&inst.concept1, &inst.concept2}) {
      if (!seen.emplace(inst.tokens, c->start, c->end).second) continue;
      const auto t = static_cast<std::size_t>(c->ctype);
      ++st.concept_length_histogram[c->length()];
      ++st.concept_count_by_type[t];
      length_sum[t] += static_cast<std::size_t>(c->length());
      total_len += static_cast<std::size_t>(c->length());
      ++st.concepts;
    }
    const auto r = static_cast<std::size_t>(inst.gold);
    ++st.relation_counts[r];
    ++st.distance_histogram[r][inst.concept2.start - inst.concept1.end - 1];
  }
  for (std::size_t t = 0; t < kNumConceptTypes; ++t) {
    if (st.concept_count_by_type[t] > 0) {
      st.mean_length_by_type[t] =
          static_cast<double>(length_sum[t]) / static_cast<double>(st.concept_count_by_type[t]);
    }
  }
  if (st.concepts > 0) st.mean_length = static_cast<double>(total_len) / static_cast<double>(st.concepts);
  return st;
}

nlohmann::json to_json(const CorpusStats& st) {
  using nlohmann::json;
  auto hist = [](const std::map<int, std::size_t>& h) {
    json j = json::object();
    for (const auto& [k, v] : h) j[std::to_string(k)] = v;
    return j;
  };
  json j;
  j["instances"] = st.instances;
  j["concepts"] = st.concepts;
  j["mean_concept_length"] = st.mean_length;
  j["concept_length_histogram"] = hist(st.concept_length_histogram);
  for (int t = 0; t < kNumConceptTypes; ++t) {
    const auto name = std::string(to_string(static_cast<ConceptType>(t)));
    j["concepts_by_type"][name] = {{"count", st.concept_count_by_type[static_cast<std::size_t>(t)]},
                                   {"mean_length", st.mean_length_by_type[static_cast<std::size_t>(t)]}};
  }
  // Table layout: one row per relation type grouped by category.
  json rows = json::array();
  for (RelationType r : all_relation_types()) {
    const auto i = static_cast<std::size_t>(r);
    rows.push_back({{"relation", std::string(to_string(r))},
                    {"category", std::string(to_string(category_of(r)))},
                    {"count", st.relation_counts[i]},
                    {"distance_histogram", hist(st.distance_histogram[i])}});
  }
  j["relations"] = rows;
  return j;
}

nlohmann::json to_json(const RelationInstance& inst) {
  auto concept_json = [](const Concept& c) {
    return nlohmann::json{{"start", c.start}, {"end", c.end}, {"type", std::string(to_string(c.ctype))}};
  };
  return {{"id", inst.id},
          {"tokens", inst.tokens},
          {"concept1", concept_json(inst.concept1)},
          {"concept2", concept_json(inst.concept2)},
          {"label", std::string(to_string(inst.gold))}};
}

RelationInstance instance_from_json(const nlohmann::json& j) {
  try {
    const auto& a = j.at("concept1");
    const auto& b = j.at("concept2");
    return make_instance(j.value("id", std::string{}), j.at("tokens").get<std::vector<std::string>>(),
                         a.at("start").get<int>(), a.at("end").get<int>(),
                         parse_concept_type(a.at("type").get<std::string>()),
                         b.at("start").get<int>(), b.at("end").get<int>(),
                         parse_concept_type(b.at("type").get<std::string>()),
                         parse_relation_type(j.at("label").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError(std::string("bad instance record: ") + e.what());
  }
}

void write_instances(std::ostream& out, std::span<const RelationInstance> instances) {
  for (const RelationInstance& inst : instances) out << to_json(inst).dump() << '\n';
}

std::vector<RelationInstance> read_instances(std::istream& in) {
  std::vector<RelationInstance> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    try {
      out.push_back(instance_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(std::string("invalid JSON: ") + e.what(), line_no);
    } catch (const CorpusError& e) {
      throw CorpusError(e.what(), line_no);
    }
  }
  return out;
}

I2b2Record to_i2b2(std::span<const Sentence> sentences,
                   std::span<const RelationInstance> positives) {
  // Each sentence token becomes one raw token, so raw offset = index - 1.
  I2b2Record rec;
  std::ostringstream text, con, rel;
  auto span_text = [](int line, const Concept& c) {
    return "c=\"" + [&] {
      std::string s;
      for (std::size_t i = 0; i < c.tokens.size(); ++i) s += (i ? " " : "") + c.tokens[i];
      return s;
    }() + "\" " + std::to_string(line) + ":" + std::to_string(c.start - 1) + " " +
           std::to_string(line) + ":" + std::to_string(c.end - 1);
  };
  std::vector<bool> used(positives.size(), false);
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    const Sentence& s = sentences[si];
    const int line = static_cast<int>(si) + 1;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) text << (i ? " " : "") << s.tokens[i];
    text << '\n';
    for (const Concept& c : s.concepts) {
      con << span_text(line, c) << "||t=\"" << to_string(c.ctype) << "\"\n";
    }
    auto has = [&](const Concept& c) {
      return std::any_of(s.concepts.begin(), s.concepts.end(), [&](const Concept& d) {
        return d.start == c.start && d.end == c.end && d.ctype == c.ctype;
      });
    };
    for (std::size_t p = 0; p < positives.size(); ++p) {
      const RelationInstance& r = positives[p];
      if (used[p] || r.tokens != s.tokens || !has(r.concept1) || !has(r.concept2)) continue;
      used[p] = true;
      rel << span_text(line, r.concept1) << "||r=\"" << to_string(r.gold) << "\"||"
          << span_text(line, r.concept2) << '\n';
    }
  }
  rec.text = text.str();
  rec.concepts = con.str();
  rec.relations = rel.str();
  return rec;
}

}  // namespace relcnn
