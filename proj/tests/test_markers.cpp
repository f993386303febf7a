#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "dvrisk/error.hpp"
#include "dvrisk/markers.hpp"
#include "dvrisk/random.hpp"
#include "dvrisk/textprep.hpp"

using namespace dvrisk;
using namespace dvrisk::markers;

namespace {

corpus::Report report(std::string narrative, std::string id = "R1", std::string case_id = "C1",
                      std::string date = "2019-01-01") {
  corpus::Report r;
  r.report_id = std::move(id);
  r.case_id = std::move(case_id);
  r.registered_at = parse_date(date);
  r.femicide_date = parse_date("2020-01-01");
  r.narrative = std::move(narrative);
  return r;
}

std::vector<std::string> names(const std::vector<MarkerHit>& hits) {
  std::vector<std::string> out;
  for (const auto& h : hits) out.push_back(h.marker);
  return out;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::InvalidArgument;
}

MarkerEntry entry(std::string name, std::vector<std::string> stems, std::optional<std::string> parent = {}) {
  MarkerEntry e;
  e.canonical_name = std::move(name);
  e.stems = std::move(stems);
  e.specializes = std::move(parent);
  return e;
}

}  // namespace

TEST_CASE("shipped lexicon matches the reference marker frequencies") {
  const auto& lex = MarkerLexicon::default_lexicon();
  CHECK(lex.entries().size() == 24);
  const std::vector<std::pair<std::string, int>> table{
      {"Verbal Offense", 29}, {"Physical Violence", 21}, {"Death Threat", 15},    {"Discussion", 14},
      {"Threat", 13},         {"Jealousy", 8},           {"Physical Fight", 7},   {"Punches", 7},
      {"Physical Threat", 4}, {"Object Damage", 4},      {"Break Deny", 4},       {"Hair Pull", 3},
      {"Kick", 3},            {"Stalk", 3},              {"Biting", 3},           {"Strangling", 3},
      {"Slap", 2},            {"Push", 2},               {"Sexual Harassment", 2}, {"Residence Invasion", 2},
      {"Possessive Control", 2}, {"Relationship Persistence", 1}, {"Rape", 1}};
  int total = 0;
  for (const auto& [name, freq] : table) {
    const auto* e = lex.find(name);
    REQUIRE_MESSAGE(e != nullptr, name);
    REQUIRE(e->paper_frequency.has_value());
    CHECK(*e->paper_frequency == freq);
    total += freq;
  }
  CHECK(total == 153);
  REQUIRE(lex.contains(kFemicide));
  CHECK(lex.find("Femicide")->severity_rank == 30);
  CHECK(lex.find("Punches")->specializes == "Physical Violence");
  CHECK(lex.find("Death Threat")->specializes == "Threat");
  CHECK(lex.is_ancestor("Physical Violence", "Punches"));
  CHECK_FALSE(lex.is_ancestor("Punches", "Physical Violence"));
  for (const auto& e : lex.entries()) {
    if (e.severity_rank) {
      CHECK(*e.severity_rank >= 0);
      CHECK(*e.severity_rank <= 30);
    }
  }
  CHECK(MarkerLexicon::from_json(lex.to_json()).entries().size() == 24);
}

TEST_CASE("lexicon validation") {
  auto femicide = entry("Femicide", {"feminicíd"});
  CHECK(kind_of([&] { MarkerLexicon({femicide, entry("Kick", {"chut"}), entry("Kick", {"pontap"})}); }) ==
        ErrorKind::DuplicateMarker);
  CHECK(kind_of([&] { MarkerLexicon({femicide, entry("Kick", {})}); }) == ErrorKind::EmptyStems);
  CHECK(kind_of([&] { MarkerLexicon({femicide, entry("A", {"aa"}, "B"), entry("B", {"bb"}, "A")}); }) ==
        ErrorKind::CyclicSpecialization);
  CHECK(kind_of([&] { MarkerLexicon({femicide, entry("A", {"aa"}, "Nope")}); }) == ErrorKind::UnknownMarker);
  CHECK(kind_of([&] { MarkerLexicon({femicide, entry("A", {"Chut"})}); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([&] { MarkerLexicon({femicide, entry("A", {"aa"}), entry("B", {"aa"})}); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([&] { MarkerLexicon({entry("A", {"aa"})}); }) == ErrorKind::InvalidSpec);
  // Overlap is fine along a specialization link.
  CHECK_NOTHROW(MarkerLexicon({femicide, entry("A", {"aa"}), entry("B", {"aa", "bb"}, "A")}));
  CHECK(kind_of([] {
          MarkerLexicon::from_json(R"([{"name":"Femicide","stems":["feminicíd"]},{"name":"Kick","stems":["chut"]},
                                       {"name":"Kick","stems":["pontap"]}])");
        }) == ErrorKind::DuplicateMarker);
  CHECK(kind_of([] { load_lexicon("/nonexistent/lexicon.json"); }) == ErrorKind::IoFailure);
}

TEST_CASE("death threat is recognised through co-occurrence") {
  const auto& lex = MarkerLexicon::default_lexicon();
  // Tokens: ele a ameaçou de morte; "ameaçou" matches both Threat and Death
  // Threat ("morte" is two tokens away), and the broad Threat collapses.
  auto hits = extract_markers(report("ele a ameaçou de morte"), lex);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].marker == "Death Threat");
  CHECK(hits[0].char_offset == 6);
  CHECK(hits[0].matched_text == "ameaçou");
  CHECK(hits[0].source == HitSource::StemMatch);

  CHECK(names(extract_markers(report("ele a ameaçou por telefone"), lex)) == std::vector<std::string>{"Threat"});
  // "morte" five tokens away is outside the window.
  CHECK(names(extract_markers(report("ameaçou a vítima por telefone sobre morte"), lex)) ==
        std::vector<std::string>{"Threat"});
}

TEST_CASE("extraction basics") {
  const auto& lex = MarkerLexicon::default_lexicon();
  CHECK(extract_markers(report("Os fatos ocorreram durante a noite."), lex).empty());

  auto hits = extract_markers(report("O autor esmurrou a vítima e depois a agrediu."), lex);
  CHECK(names(hits) == std::vector<std::string>{"Punches", "Physical Violence"});
  CHECK(hits[0].matched_text == "esmurrou");
  CHECK(hits[1].matched_text == "agrediu");
  CHECK(hits[0].char_offset < hits[1].char_offset);

  // Case-insensitive and symbol-insensitive; offsets point into the original text.
  const std::string text = "Relato: XINGOU-a e QUEBROU o celular!";
  hits = extract_markers(report(text), lex);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].marker == "Verbal Offense");
  CHECK(text.substr(hits[0].char_offset, 6) == "XINGOU");
  CHECK(hits[1].marker == "Object Damage");
}

TEST_CASE("manual annotations merge in offset order") {
  const auto& lex = MarkerLexicon::default_lexicon();
  auto r = report("Ele xingou a vítima. Disse que acabaria com a vida dela. Depois a empurrou.");
  r.manual_annotations = {{"Death Threat", 22}};
  auto hits = extract_markers(r, lex);
  REQUIRE(hits.size() == 3);
  CHECK(names(hits) == std::vector<std::string>{"Verbal Offense", "Death Threat", "Push"});
  CHECK(hits[1].source == HitSource::ManualAnnotation);
  CHECK(hits[1].matched_text == "Disse");

  r.manual_annotations = {{"Not A Marker", 0}};
  CHECK(kind_of([&] { extract_markers(r, lex); }) == ErrorKind::UnknownAnnotationMarker);
}

TEST_CASE("extraction is independent of lexicon entry order") {
  const auto& lex = MarkerLexicon::default_lexicon();
  std::vector<MarkerEntry> entries(lex.entries().begin(), lex.entries().end());
  const auto r = report(
      "O companheiro ameaçou matar a vítima, deu tapas e chutou a porta. Depois ameaçou com uma faca, "
      "puxou os cabelos e a agrediu. Estava com ciúmes e a perseguia.");
  const auto expected = extract_markers(r, lex);
  CHECK(expected.size() >= 7);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(std::span<MarkerEntry>(entries));
    CHECK(extract_markers(r, MarkerLexicon(entries)) == expected);
  }
}

TEST_CASE("every stem hit's text starts with one of the marker's stems") {
  const auto& lex = MarkerLexicon::default_lexicon();
  const auto r = report(
      "Ele a XINGOU, Agrediu, deu SOCOS, ameaçou de morte, quebrou a TV, mordeu, estrangulou, invadiu e estuprou.");
  const auto hits = extract_markers(r, lex);
  CHECK(hits.size() >= 8);
  for (const auto& h : hits) {
    const auto folded = textprep::normalize(h.matched_text);
    REQUIRE(folded.size() == 1);
    const auto* e = lex.find(h.marker);
    CHECK(std::any_of(e->stems.begin(), e->stems.end(),
                      [&](const std::string& s) { return folded[0].rfind(s, 0) == 0; }));
  }
}

TEST_CASE("build_sequences") {
  const auto& lex = MarkerLexicon::default_lexicon();
  auto a = report("Houve uma discussão e ele a xingou.", "R2", "C1", "2019-01-01");
  auto terminal = report("Vítima encontrada sem vida; registrado como feminicídio.", "R3", "C1", "2019-05-01");
  terminal.is_femicide_report = true;
  auto quiet = report("Registro de ocorrência.", "R4", "C2", "2019-01-01");
  auto quiet_end = report("Feminicídio.", "R5", "C2", "2019-02-01");
  quiet_end.is_femicide_report = true;
  auto open_case = report("Ele a empurrou.", "R6", "C3", "2019-03-01");
  auto earlier = report("Ele a xingou.", "R7", "C3", "2018-03-01");

  auto seqs = build_sequences({terminal, a, quiet, quiet_end, open_case, earlier}, lex);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].case_id == "C1");
  CHECK(seqs[0].events == std::vector<std::string>{"Discussion", "Verbal Offense", "Femicide"});
  CHECK(seqs[0].terminal_femicide);
  CHECK(seqs[1].case_id == "C3");
  CHECK(seqs[1].events == std::vector<std::string>{"Verbal Offense", "Push"});
  CHECK_FALSE(seqs[1].terminal_femicide);

  CHECK(sequences_from_json(sequences_to_json(seqs)) == seqs);
  CHECK(build_sequences({}, lex).empty());

  auto freq = event_frequencies(seqs);
  CHECK(freq.front() == std::pair<std::string, std::size_t>{"Verbal Offense", 2});
}

TEST_CASE("sequences equal concatenated per-report hits") {
  const auto& lex = MarkerLexicon::default_lexicon();
  std::vector<corpus::Report> reports{report("Ele a xingou e a agrediu.", "R1", "C1", "2019-01-01"),
                                      report("Deu um murro e ameaçou matar.", "R2", "C1", "2019-02-01"),
                                      report("Ela foi estuprada.", "R3", "C1", "2019-01-01")};
  auto seqs = build_sequences(reports, lex);
  REQUIRE(seqs.size() == 1);
  std::vector<std::string> expected;
  for (int idx : {0, 2, 1}) {
    for (const auto& h : extract_markers(reports[static_cast<std::size_t>(idx)], lex)) expected.push_back(h.marker);
  }
  CHECK(seqs[0].events == expected);
}

TEST_CASE("sequence JSON validation") {
  CHECK(kind_of([] { sequences_from_json(R"([{"events": ["Femicide", "Kick"]}])"); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { sequences_from_json(R"([{"events": []}])"); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { sequences_from_json(R"({"nope": 1})"); }) == ErrorKind::InvalidSpec);
  auto ok = sequences_from_json(R"([{"case_id": "x", "events": ["Kick", "Femicide"]}])");
  CHECK(ok[0].terminal_femicide);
}
