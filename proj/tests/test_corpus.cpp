#include <sstream>

#include "doctest.h"
#include "relcnn/corpus.hpp"
#include "support.hpp"

using namespace relcnn;
using relcnn::testing::steroids_instance;
using relcnn::testing::normalization_fixtures;

namespace {

const char* kText =
    "Patient denies chest pain .\n"
    "She was treated with steroids for this swelling at the outside hospital , and these were continued .\n"
    "CT scan showed a mass and edema .\n";

const char* kConcepts =
    "c=\"chest pain\" 1:2 1:3||t=\"problem\"\n"
    "c=\"steroids\" 2:4 2:4||t=\"treatment\"\n"
    "c=\"this swelling\" 2:6 2:7||t=\"problem\"\n"
    "c=\"ct scan\" 3:0 3:1||t=\"test\"\n"
    "c=\"a mass\" 3:3 3:4||t=\"problem\"\n"
    "c=\"edema\" 3:6 3:6||t=\"problem\"\n";

const char* kRelations =
    "c=\"steroids\" 2:4 2:4||r=\"TrAP\"||c=\"this swelling\" 2:6 2:7\n"
    "c=\"ct scan\" 3:0 3:1||r=\"TeRP\"||c=\"a mass\" 3:3 3:4\n";

std::string error_of(const std::string& con, const std::string& rel, const std::string& text = kText) {
  try {
    parse_document("d", text, con, rel);
  } catch (const CorpusError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("normalization fixtures") {
  for (const auto& f : normalization_fixtures()) {
    CAPTURE(f.input);
    CHECK(tokenize_normalize(f.input) == f.expected);
  }
}

TEST_CASE("tokenizer is idempotent") {
  for (const auto& f : normalization_fixtures()) {
    std::string joined;
    for (const auto& t : f.expected) joined += t + " ";
    CAPTURE(f.input);
    CHECK(tokenize_normalize(joined) == f.expected);
  }
}

TEST_CASE("placeholder text in raw input cannot collide with placeholders") {
  const auto toks = tokenize_normalize("__problem__");
  CHECK(std::find(toks.begin(), toks.end(), "__problem__") == toks.end());
}

TEST_CASE("steroids example replacement") {
  const RelationInstance inst = steroids_instance();
  REQUIRE(inst.tokens.size() == 18);
  const ReplacedInstance r = replace_concepts(inst);
  std::string joined;
  for (std::size_t i = 0; i < r.tokens.size(); ++i) joined += (i ? " " : "") + r.tokens[i];
  CHECK(joined ==
        "she was treated with __treatment__ for __problem__ at the outside hospital , and these "
        "were continued .");
  CHECK(r.p1 == 5);
  CHECK(r.p2 == 7);
  CHECK(r.tokens.size() == 17);
}

TEST_CASE("replacement of adjacent concepts and sentence edges") {
  const RelationInstance inst = make_instance("x", {"a", "b", "c"}, 1, 1, ConceptType::Test, 2, 3,
                                              ConceptType::Problem, RelationType::TeRP);
  const ReplacedInstance r = replace_concepts(inst);
  CHECK(r.tokens == std::vector<std::string>{"__test__", "__problem__"});
  CHECK(r.p1 == 1);
  CHECK(r.p2 == 2);
}

TEST_CASE("make_instance orders the pair and validate rejects bad instances") {
  const RelationInstance inst = make_instance("x", {"a", "b", "c", "d"}, 3, 4, ConceptType::Problem,
                                              1, 1, ConceptType::Treatment, RelationType::TrAP);
  CHECK(inst.concept1.start == 1);
  CHECK(inst.concept1.ctype == ConceptType::Treatment);
  CHECK(inst.concept2.tokens == std::vector<std::string>{"c", "d"});
  CHECK_THROWS_AS(make_instance("x", {"a", "b"}, 1, 2, ConceptType::Problem, 2, 2,
                                ConceptType::Test, RelationType::TeRP),
                  CorpusError);
  CHECK_THROWS_AS(make_instance("x", {"a", "b"}, 1, 1, ConceptType::Problem, 2, 2,
                                ConceptType::Test, RelationType::TrAP),
                  CorpusError);
  CHECK_THROWS_AS(make_instance("x", {"a", "b"}, 1, 1, ConceptType::Problem, 2, 3,
                                ConceptType::Test, RelationType::TeRP),
                  CorpusError);
}

TEST_CASE("category table") {
  CHECK(category_of(RelationType::TrNAP) == Category::TrP);
  CHECK(category_of(RelationType::NTeP) == Category::TeP);
  CHECK(category_of(RelationType::PIP) == Category::PP);
  CHECK(members(Category::TrP).size() == 6);
  CHECK(members(Category::TeP).size() == 3);
  CHECK(members(Category::PP).size() == 2);
  int positives = 0;
  for (RelationType t : all_relation_types()) positives += is_positive(t);
  CHECK(positives == 8);
  CHECK(category_for(ConceptType::Test, ConceptType::Treatment) == std::nullopt);
  CHECK(category_for(ConceptType::Test, ConceptType::Problem) == Category::TeP);
  CHECK(parse_relation_type("TrWP") == RelationType::TrWP);
  CHECK_THROWS_AS(parse_relation_type("TrXP"), CorpusError);
}

TEST_CASE("parse annotated record") {
  const ParsedDocument doc = parse_document("d", kText, kConcepts, kRelations);
  REQUIRE(doc.positives.size() == 2);
  const RelationInstance& a = doc.positives[0];
  CHECK(a.gold == RelationType::TrAP);
  CHECK(a.concept1.start == 5);
  CHECK(a.concept1.end == 5);
  CHECK(a.concept2.start == 7);
  CHECK(a.concept2.end == 8);
  CHECK(a.tokens.front() == "she");
  CHECK(a.id == "d:2:5-5:7-8");
  CHECK(doc.positives[1].gold == RelationType::TeRP);
  CHECK(doc.positives[1].concept1.tokens == std::vector<std::string>{"ct", "scan"});
  CHECK(doc.sentences.size() == 3);
}

TEST_CASE("concept spans are realigned to normalized tokens") {
  const ParsedDocument doc =
      parse_document("d", "Dose 325mg given (orally).\n",
                     "c=\"325mg\" 1:1 1:1||t=\"treatment\"\nc=\"(orally).\" 1:3 1:3||t=\"problem\"\n", "");
  REQUIRE(doc.sentences.size() == 1);
  const auto& cs = doc.sentences[0].concepts;
  REQUIRE(cs.size() == 2);
  CHECK(cs[0].tokens == std::vector<std::string>{"0mg"});
  CHECK(cs[1].tokens == std::vector<std::string>{"(", "orally", ")", "."});
  CHECK(cs[1].start == 4);
}

TEST_CASE("annotation errors carry the file line") {
  CHECK(error_of("c=\"x\" 1:2||t=\"problem\"\n", "") == "line 1: malformed concept annotation");
  CHECK(error_of(std::string(kConcepts) + "c=\"x\" 1:2 2:3||t=\"problem\"\n", "") ==
        "line 7: concept spans a line boundary");
  CHECK(error_of("c=\"x\" 1:40 1:41||t=\"problem\"\n", "").rfind("line 1: ", 0) == 0);
  CHECK(error_of("c=\"x\" 9:0 9:0||t=\"problem\"\n", "").rfind("line 1: ", 0) == 0);
  CHECK(error_of("c=\"x\" 1:2 1:3||t=\"disease\"\n", "").rfind("line 1: ", 0) == 0);
  CHECK(error_of(kConcepts, "\nc=\"ct scan\" 3:0 3:1||r=\"TeXP\"||c=\"a mass\" 3:3 3:4\n")
            .rfind("line 2: ", 0) == 0);
  CHECK(error_of(kConcepts, "c=\"ct scan\" 3:0 3:1||r=\"TeRP\"||c=\"showed\" 3:2 3:2\n") ==
        "line 1: relation references an unannotated concept");
  // TrAP between a test and a problem.
  CHECK(error_of(kConcepts, "c=\"ct scan\" 3:0 3:1||r=\"TrAP\"||c=\"a mass\" 3:3 3:4\n")
            .rfind("line 1: ", 0) == 0);
}

TEST_CASE("error source identifies the annotation file") {
  try {
    parse_document("d", kText, kConcepts, "garbage\n");
    FAIL("expected CorpusError");
  } catch (const CorpusError& e) {
    CHECK(e.source() == CorpusError::Source::Relations);
    CHECK(e.line() == 1);
  }
  try {
    parse_document("d", kText, "garbage\n", "");
    FAIL("expected CorpusError");
  } catch (const CorpusError& e) {
    CHECK(e.source() == CorpusError::Source::Concepts);
  }
}

TEST_CASE("duplicate relations are kept once") {
  const std::string rel = std::string(kRelations) + kRelations;
  CHECK(parse_document("d", kText, kConcepts, rel).positives.size() == 2);
}

TEST_CASE("negatives: every compatible unannotated pair") {
  const ParsedDocument doc = parse_document("d", kText, kConcepts, kRelations);
  const auto neg = generate_negatives(doc.sentences, doc.positives);
  // Line 3 has three concepts, C(3,2) - 1 annotated pair.
  REQUIRE(neg.size() == 2);
  CHECK(neg[0].gold == RelationType::NTeP);
  CHECK(neg[0].concept1.tokens == std::vector<std::string>{"ct", "scan"});
  CHECK(neg[0].concept2.tokens == std::vector<std::string>{"edema"});
  CHECK(neg[1].gold == RelationType::NPP);
  for (const auto& n : neg) CHECK_NOTHROW(validate(n));
}

TEST_CASE("negatives skip overlapping and incompatible pairs") {
  Sentence s;
  s.id = "s:1";
  s.tokens = {"a", "b", "c", "d"};
  Concept c1{{"a", "b"}, 1, 2, ConceptType::Problem};
  Concept c2{{"b"}, 2, 2, ConceptType::Problem};
  Concept c3{{"d"}, 4, 4, ConceptType::Test};
  Concept c4{{"c"}, 3, 3, ConceptType::Treatment};
  s.concepts = {c1, c2, c4, c3};
  const auto neg = generate_negatives(std::span<const Sentence>(&s, 1), {});
  // Pairs: (c1,c4) TrP, (c1,c3) TeP, (c2,c4) TrP, (c2,c3) TeP; c1/c2 overlap; c4/c3 incompatible.
  CHECK(neg.size() == 4);
}

TEST_CASE("stats on the steroids instance") {
  const RelationInstance inst = steroids_instance();
  const CorpusStats st = corpus_stats(std::span<const RelationInstance>(&inst, 1));
  CHECK(st.instances == 1);
  CHECK(st.concepts == 2);
  CHECK(st.concept_length_histogram.at(1) == 1);
  CHECK(st.concept_length_histogram.at(2) == 1);
  CHECK(st.distance_histogram[static_cast<std::size_t>(RelationType::TrAP)].at(1) == 1);
  CHECK(st.mean_length == doctest::Approx(1.5));
  const auto j = to_json(st);
  CHECK(j.contains("concept_length_histogram"));
}

TEST_CASE("instance JSON lines round trip") {
  const ParsedDocument doc = parse_document("d", kText, kConcepts, kRelations);
  std::stringstream buf;
  write_instances(buf, doc.positives);
  const auto back = read_instances(buf);
  CHECK(back == doc.positives);
}

TEST_CASE("instance file errors name the line") {
  std::stringstream buf("{\"id\":\"x\"}\n");
  try {
    read_instances(buf);
    FAIL("expected error");
  } catch (const CorpusError& e) {
    CHECK(e.line() == 1);
  }
}

TEST_CASE("rendering back to the annotated format and parsing again") {
  const ParsedDocument doc = parse_document("d", kText, kConcepts, kRelations);
  const I2b2Record rec = to_i2b2(doc.sentences, doc.positives);
  const ParsedDocument again = parse_document("d", rec.text, rec.concepts, rec.relations);
  REQUIRE(again.positives.size() == doc.positives.size());
  for (std::size_t i = 0; i < doc.positives.size(); ++i) {
    CHECK(again.positives[i].tokens == doc.positives[i].tokens);
    CHECK(again.positives[i].concept1 == doc.positives[i].concept1);
    CHECK(again.positives[i].concept2 == doc.positives[i].concept2);
    CHECK(again.positives[i].gold == doc.positives[i].gold);
  }
}

}
