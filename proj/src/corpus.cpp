#include "dvrisk/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "dvrisk/error.hpp"
#include "dvrisk/random.hpp"

namespace dvrisk::corpus {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(std::size_t line, const std::string& field, const std::string& why) {
  throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line) + ", field '" + field + "': " + why);
}

bool blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](char ch) { return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r'; });
}

const json& require(const json& record, const char* field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end()) malformed(line, field, "missing");
  return *it;
}

std::string require_string(const json& record, const char* field, std::size_t line) {
  const json& value = require(record, field, line);
  if (!value.is_string()) malformed(line, field, "expected string");
  return value.get<std::string>();
}

Date require_date(const json& value, const char* field, std::size_t line) {
  if (!value.is_string()) malformed(line, field, "expected YYYY-MM-DD string");
  try {
    return parse_date(value.get<std::string>());
  } catch (const Error& e) {
    malformed(line, field, e.what());
  }
}

Report report_from_json(const json& record, std::size_t line) {
  if (!record.is_object()) malformed(line, "<record>", "expected JSON object");
  Report report;
  report.report_id = require_string(record, "report_id", line);
  report.case_id = require_string(record, "case_id", line);
  report.registered_at = require_date(require(record, "registered_at", line), "registered_at", line);
  report.narrative = require_string(record, "narrative", line);
  if (auto it = record.find("femicide_date"); it != record.end() && !it->is_null()) {
    report.femicide_date = require_date(*it, "femicide_date", line);
  }
  const json& flag = require(record, "is_femicide_report", line);
  if (!flag.is_boolean()) malformed(line, "is_femicide_report", "expected boolean");
  report.is_femicide_report = flag.get<bool>();
  if (auto it = record.find("manual_annotations"); it != record.end() && !it->is_null()) {
    if (!it->is_array()) malformed(line, "manual_annotations", "expected array");
    for (const json& entry : *it) {
      if (!entry.is_object() || !entry.contains("marker") || !entry["marker"].is_string() ||
          !entry.contains("offset") || !entry["offset"].is_number_unsigned()) {
        malformed(line, "manual_annotations", "expected {marker: string, offset: non-negative integer}");
      }
      report.manual_annotations.push_back({entry["marker"].get<std::string>(), entry["offset"].get<std::size_t>()});
    }
  }
  try {
    validate_report(report);
  } catch (const Error& e) {
    throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line) + ", " + e.what());
  }
  return report;
}

}  // namespace

std::size_t LabeledCorpus::count(RiskLabel label) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [label](const LabeledItem& item) { return item.label == label; }));
}

void validate_report(const Report& report) {
  auto fail = [](const char* field, const std::string& why) {
    throw Error(ErrorKind::MalformedRecord, std::string("field '") + field + "': " + why);
  };
  if (report.report_id.empty()) fail("report_id", "must be non-empty");
  if (blank(report.narrative)) fail("narrative", "must be non-empty after trimming");
  if (report.femicide_date && report.registered_at > *report.femicide_date) {
    fail("registered_at", "after femicide_date");
  }
  std::size_t previous = 0;
  for (const auto& annotation : report.manual_annotations) {
    if (annotation.offset < previous) fail("manual_annotations", "offsets must be non-decreasing");
    if (annotation.offset > report.narrative.size()) fail("manual_annotations", "offset beyond narrative");
    previous = annotation.offset;
  }
}

std::vector<Report> parse_reports(std::istream& in) {
  std::vector<Report> reports;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      malformed(line, "<json>", e.what());
    }
    Report report = report_from_json(record, line);
    if (!seen.insert(report.report_id).second) {
      throw Error(ErrorKind::DuplicateReportId, "line " + std::to_string(line) + ": '" + report.report_id + "'");
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

std::vector<Report> load_reports(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  return parse_reports(in);
}

std::string report_to_jsonl(const Report& report) {
  nlohmann::ordered_json record;
  record["report_id"] = report.report_id;
  record["case_id"] = report.case_id;
  record["registered_at"] = format_date(report.registered_at);
  record["narrative"] = report.narrative;
  record["femicide_date"] = report.femicide_date ? json(format_date(*report.femicide_date)) : json(nullptr);
  record["is_femicide_report"] = report.is_femicide_report;
  auto annotations = nlohmann::ordered_json::array();
  for (const auto& a : report.manual_annotations) {
    nlohmann::ordered_json entry;
    entry["marker"] = a.marker;
    entry["offset"] = a.offset;
    annotations.push_back(std::move(entry));
  }
  record["manual_annotations"] = std::move(annotations);
  return record.dump();
}

void write_reports(std::ostream& out, const std::vector<Report>& reports) {
  for (const auto& report : reports) out << report_to_jsonl(report) << '\n';
}

void save_reports(const std::filesystem::path& path, const std::vector<Report>& reports) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  write_reports(out, reports);
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

RiskLabel label_for_days(long days, int threshold_days) {
  return days < threshold_days ? RiskLabel::HigherRisk : RiskLabel::LowerRisk;
}

LabeledCorpus label_corpus(const std::vector<Report>& reports, int threshold_days) {
  if (threshold_days <= 0) throw Error(ErrorKind::InvalidArgument, "threshold_days must be positive");
  LabeledCorpus corpus;
  corpus.threshold_days = threshold_days;
  for (const auto& report : reports) {
    if (report.is_femicide_report) continue;
    if (!report.femicide_date) throw Error(ErrorKind::MissingFemicideDate, report.report_id);
    const long days = days_between(report.registered_at, *report.femicide_date);
    corpus.items.push_back({report, days, label_for_days(days, threshold_days)});
  }
  return corpus;
}

SplitIndices split_corpus(const LabeledCorpus& corpus, double ratio, std::uint64_t seed) {
  if (corpus.items.empty()) throw Error(ErrorKind::EmptyCorpus, "cannot split an empty corpus");
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorKind::InvalidArgument, "split ratio must be in (0, 1)");
  std::vector<std::size_t> order(corpus.items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(order.size())));
  SplitIndices split;
  split.seed = seed;
  split.ratio = ratio;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

GeneratorConfig generator_config_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidSpec, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::InvalidSpec, "generator config must be a JSON object");
  GeneratorConfig config;
  auto read_int = [&](const char* key, int& out) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number_integer()) throw Error(ErrorKind::InvalidSpec, std::string(key) + " must be an integer");
    out = doc[key].get<int>();
  };
  read_int("higher_count", config.higher_count);
  read_int("lower_count", config.lower_count);
  read_int("femicide_count", config.femicide_count);
  read_int("sequence_cases", config.sequence_cases);
  if (doc.contains("signal_strength")) {
    if (!doc["signal_strength"].is_number()) throw Error(ErrorKind::InvalidSpec, "signal_strength must be a number");
    config.signal_strength = doc["signal_strength"].get<double>();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw Error(ErrorKind::InvalidSpec, "seed must be a non-negative integer");
    config.seed = doc["seed"].get<std::uint64_t>();
  }
  return config;
}

std::string generator_config_to_json(const GeneratorConfig& config) {
  nlohmann::ordered_json doc;
  doc["higher_count"] = config.higher_count;
  doc["lower_count"] = config.lower_count;
  doc["femicide_count"] = config.femicide_count;
  doc["signal_strength"] = config.signal_strength;
  doc["sequence_cases"] = config.sequence_cases;
  doc["seed"] = config.seed;
  return doc.dump();
}

}  // namespace dvrisk::corpus
