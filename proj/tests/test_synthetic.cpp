#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <filesystem>
#include <map>

#include "dvrisk/corpus.hpp"
#include "dvrisk/error.hpp"
#include "dvrisk/markers.hpp"
#include "dvrisk/textprep.hpp"

using namespace dvrisk;
using namespace dvrisk::corpus;

namespace {

const markers::MarkerLexicon& lex() { return markers::MarkerLexicon::default_lexicon(); }

}  // namespace

TEST_CASE("reference corpus has the published shape") {
  const GeneratorConfig config;
  const auto reports = generate_synthetic_corpus(config, lex(), 42);
  CHECK(reports.size() == 157);
  std::size_t femicide = 0;
  std::map<std::string, int> per_case;
  for (const auto& r : reports) {
    femicide += r.is_femicide_report;
    if (r.is_femicide_report) ++per_case[r.case_id];
  }
  CHECK(femicide == 39);
  CHECK(per_case.size() == 39);
  for (const auto& [id, n] : per_case) CHECK(n == 1);

  const auto labeled = label_corpus(reports);
  CHECK(labeled.count(RiskLabel::HigherRisk) == 39);
  CHECK(labeled.count(RiskLabel::LowerRisk) == 79);
  CHECK(markers::build_sequences(reports, lex()).size() == 22);
}

TEST_CASE("generation is deterministic per seed") {
  const GeneratorConfig config;
  CHECK(generate_synthetic_corpus(config, lex(), 1) == generate_synthetic_corpus(config, lex(), 1));
  CHECK_FALSE(generate_synthetic_corpus(config, lex(), 1) == generate_synthetic_corpus(config, lex(), 2));
}

TEST_CASE("generated corpora survive a save/load round-trip") {
  for (std::uint64_t seed : {3u, 42u}) {
    const auto reports = generate_synthetic_corpus(GeneratorConfig{}, lex(), seed);
    const auto path = std::filesystem::temp_directory_path() / "dvrisk_generated.jsonl";
    save_reports(path, reports);
    CHECK(load_reports(path) == reports);
    std::filesystem::remove(path);
  }
}

TEST_CASE("extracted markers are exactly the planted markers") {
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    const auto corpus = generate_synthetic_corpus_detailed(GeneratorConfig{}, lex(), seed);
    for (std::size_t i = 0; i < corpus.reports.size(); ++i) {
      if (corpus.reports[i].is_femicide_report) continue;
      std::vector<std::string> found;
      for (const auto& h : markers::extract_markers(corpus.reports[i], lex())) found.push_back(h.marker);
      CAPTURE(corpus.reports[i].narrative);
      CHECK(found == corpus.planted[i]);
    }
  }
}

TEST_CASE("signal strength zero makes marker draws label independent") {
  GeneratorConfig config;
  config.higher_count = 6000;
  config.lower_count = 6000;
  config.femicide_count = 200;
  config.sequence_cases = 200;
  config.signal_strength = 0.0;
  const auto corpus = generate_synthetic_corpus_detailed(config, lex(), 5);
  const auto labeled = label_corpus(corpus.reports);

  std::map<std::string, std::array<double, 2>> counts;
  std::size_t item = 0, draws = 0;
  for (std::size_t i = 0; i < corpus.reports.size(); ++i) {
    if (corpus.reports[i].is_femicide_report) continue;
    const int label = static_cast<int>(labeled.items[item++].label);
    for (const auto& m : corpus.planted[i]) {
      counts[m][static_cast<std::size_t>(label)] += 1.0;
      ++draws;
    }
  }
  REQUIRE(draws >= 10000);

  // Pearson chi-squared test of independence on the marker x label table.
  double row_total[2] = {0, 0};
  for (const auto& [m, c] : counts) {
    row_total[0] += c[0];
    row_total[1] += c[1];
  }
  const double n = row_total[0] + row_total[1];
  double stat = 0.0;
  for (const auto& [m, c] : counts) {
    for (int l = 0; l < 2; ++l) {
      const double expected = (c[0] + c[1]) * row_total[l] / n;
      stat += (c[static_cast<std::size_t>(l)] - expected) * (c[static_cast<std::size_t>(l)] - expected) / expected;
    }
  }
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  const double p = boost::math::cdf(boost::math::complement(dist, stat));
  CHECK(p > 0.01);
}

TEST_CASE("full signal separates marker severity by label") {
  GeneratorConfig config;
  config.higher_count = 1000;
  config.lower_count = 1000;
  config.femicide_count = 100;
  config.sequence_cases = 100;
  const auto corpus = generate_synthetic_corpus_detailed(config, lex(), 9);
  const auto labeled = label_corpus(corpus.reports);
  std::size_t item = 0;
  for (std::size_t i = 0; i < corpus.reports.size(); ++i) {
    if (corpus.reports[i].is_femicide_report) continue;
    const bool higher = labeled.items[item++].label == RiskLabel::HigherRisk;
    for (const auto& m : corpus.planted[i]) {
      const auto rank = lex().find(m)->severity_rank;
      REQUIRE(rank.has_value());
      CHECK((*rank >= 15) == higher);
    }
  }
}

TEST_CASE("invalid generator specs") {
  auto kind = [](GeneratorConfig c) {
    try {
      generate_synthetic_corpus(c, lex(), 1);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  GeneratorConfig c;
  c.higher_count = 0;
  CHECK(kind(c) == ErrorKind::InvalidSpec);
  c = {};
  c.signal_strength = 1.5;
  CHECK(kind(c) == ErrorKind::InvalidSpec);
  c = {};
  c.signal_strength = -0.1;
  CHECK(kind(c) == ErrorKind::InvalidSpec);
  c = {};
  c.femicide_count = 0;
  CHECK(kind(c) == ErrorKind::InvalidSpec);
}

TEST_CASE("word frequencies of the reference corpus surface planted stems") {
  const auto reports = generate_synthetic_corpus(GeneratorConfig{}, lex(), 42);
  std::vector<textprep::TokenList> docs;
  std::map<std::string, std::size_t> recount;
  for (const auto& r : reports) {
    docs.push_back(textprep::preprocess(r.narrative, textprep::default_stopwords()));
    for (const auto& t : docs.back()) ++recount[t];
  }
  const auto freq = textprep::word_frequencies(docs);
  REQUIRE(freq.size() == recount.size());
  for (const auto& [token, count] : freq) CHECK(recount[token] == count);
  bool planted_in_top = false;
  for (std::size_t i = 0; i < 25 && i < freq.size(); ++i) {
    for (const char* stem : {"xing", "ameaç", "humilh", "insult", "ofend"}) {
      if (freq[i].first.rfind(stem, 0) == 0) planted_in_top = true;
    }
  }
  CHECK(planted_in_top);
}
