#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dvrisk/dates.hpp"

namespace dvrisk::markers {
class MarkerLexicon;
}

namespace dvrisk::corpus {

struct ManualAnnotation {
  std::string marker;
  /// Byte offset into the UTF-8 narrative.
  std::size_t offset = 0;

  bool operator==(const ManualAnnotation&) const = default;
};

/// One police-report record.
struct Report {
  std::string report_id;
  std::string case_id;
  Date registered_at;
  std::string narrative;
  std::optional<Date> femicide_date;
  bool is_femicide_report = false;
  std::vector<ManualAnnotation> manual_annotations;

  bool operator==(const Report&) const = default;
};

/// Numeric codes are part of the data format: 0 higher risk, 1 lower risk.
enum class RiskLabel : int { HigherRisk = 0, LowerRisk = 1 };

inline constexpr int kDefaultThresholdDays = 365;

struct LabeledItem {
  Report report;
  long days_to_femicide = 0;
  RiskLabel label = RiskLabel::LowerRisk;
};

struct LabeledCorpus {
  std::vector<LabeledItem> items;
  int threshold_days = kDefaultThresholdDays;

  std::size_t count(RiskLabel label) const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  double ratio = 0.7;

  bool operator==(const SplitIndices&) const = default;
};

/// Checks the Report invariants; throws MalformedRecord naming the field.
void validate_report(const Report& report);

std::vector<Report> parse_reports(std::istream& in);
std::vector<Report> load_reports(const std::filesystem::path& path);

std::string report_to_jsonl(const Report& report);
void write_reports(std::ostream& out, const std::vector<Report>& reports);
void save_reports(const std::filesystem::path& path, const std::vector<Report>& reports);

/// HigherRisk iff days < threshold (a report exactly at the threshold is LowerRisk).
RiskLabel label_for_days(long days, int threshold_days);

LabeledCorpus label_corpus(const std::vector<Report>& reports, int threshold_days = kDefaultThresholdDays);

SplitIndices split_corpus(const LabeledCorpus& corpus, double ratio, std::uint64_t seed);

/// Knobs of the synthetic generator. Defaults reproduce the reference corpus
/// shape: 39 higher-risk and 79 lower-risk reports spread over 39 cases, each
/// closed by a femicide report, 22 of which carry extractable markers.
struct GeneratorConfig {
  int higher_count = 39;
  int lower_count = 79;
  int femicide_count = 39;
  double signal_strength = 1.0;
  int sequence_cases = 22;
  std::uint64_t seed = 42;
};

GeneratorConfig generator_config_from_json(const std::string& json_text);
std::string generator_config_to_json(const GeneratorConfig& config);

struct SyntheticCorpus {
  std::vector<Report> reports;
  /// Marker names planted into each report, parallel to `reports`.
  std::vector<std::vector<std::string>> planted;
};

SyntheticCorpus generate_synthetic_corpus_detailed(const GeneratorConfig& config,
                                                   const markers::MarkerLexicon& lexicon, std::uint64_t seed);

std::vector<Report> generate_synthetic_corpus(const GeneratorConfig& config, const markers::MarkerLexicon& lexicon,
                                              std::uint64_t seed);

}  // namespace dvrisk::corpus
