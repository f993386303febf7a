#include "dvrisk/markers.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dvrisk/error.hpp"
#include "dvrisk/resources.hpp"
#include "dvrisk/textprep.hpp"

namespace dvrisk::markers {

using nlohmann::json;

namespace {

bool starts_with(std::string_view token, std::string_view stem) { return token.substr(0, stem.size()) == stem; }

void check_stem(const MarkerEntry& entry, const std::string& stem) {
  const auto normalized = textprep::normalize(stem);
  if (normalized.size() != 1 || normalized.front() != stem) {
    throw Error(ErrorKind::InvalidSpec,
                "stem '" + stem + "' of '" + entry.canonical_name + "' must be a single lowercase symbol-free word");
  }
}

/// Surface patterns an entry can match: plain stems, or stem…cooccur pairs.
std::vector<std::string> pattern_keys(const MarkerEntry& entry) {
  std::vector<std::string> keys;
  for (const auto& stem : entry.stems) {
    if (entry.cooccur.empty()) {
      keys.push_back(stem);
    } else {
      for (const auto& other : entry.cooccur) keys.push_back(stem + "\x1f" + other);
    }
  }
  return keys;
}

}  // namespace

MarkerLexicon::MarkerLexicon(std::vector<MarkerEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& entry = entries_[i];
    if (entry.canonical_name.empty()) throw Error(ErrorKind::InvalidSpec, "marker with empty name");
    if (!index_.emplace(entry.canonical_name, i).second) {
      throw Error(ErrorKind::DuplicateMarker, entry.canonical_name);
    }
  }
  for (const auto& entry : entries_) {
    if (entry.stems.empty()) throw Error(ErrorKind::EmptyStems, entry.canonical_name);
    std::set<std::string> distinct;
    for (const auto& stem : entry.stems) {
      check_stem(entry, stem);
      if (!distinct.insert(stem).second) {
        throw Error(ErrorKind::InvalidSpec, "repeated stem '" + stem + "' in '" + entry.canonical_name + "'");
      }
    }
    for (const auto& stem : entry.cooccur) check_stem(entry, stem);
    if (entry.severity_rank && (*entry.severity_rank < 0 || *entry.severity_rank > 30)) {
      throw Error(ErrorKind::InvalidSpec, "severity_rank of '" + entry.canonical_name + "' outside 0-30");
    }
    if (entry.specializes && !index_.contains(*entry.specializes)) {
      throw Error(ErrorKind::UnknownMarker,
                  "'" + entry.canonical_name + "' specializes unknown marker '" + *entry.specializes + "'");
    }
  }
  for (const auto& entry : entries_) {
    std::set<std::string> visited{entry.canonical_name};
    const MarkerEntry* current = &entry;
    while (current->specializes) {
      if (!visited.insert(*current->specializes).second) {
        throw Error(ErrorKind::CyclicSpecialization, "cycle through '" + entry.canonical_name + "'");
      }
      current = &entries_[index_.at(*current->specializes)];
    }
  }
  std::map<std::string, std::string> owner;
  for (const auto& entry : entries_) {
    for (const auto& key : pattern_keys(entry)) {
      auto [it, inserted] = owner.emplace(key, entry.canonical_name);
      if (!inserted && !is_ancestor(it->second, entry.canonical_name) && !is_ancestor(entry.canonical_name, it->second)) {
        throw Error(ErrorKind::InvalidSpec,
                    "unrelated markers '" + it->second + "' and '" + entry.canonical_name + "' share a stem pattern");
      }
    }
  }
  if (!index_.contains(std::string(kFemicide))) {
    throw Error(ErrorKind::InvalidSpec, "lexicon must contain the terminal marker 'Femicide'");
  }
}

const MarkerEntry* MarkerLexicon::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

bool MarkerLexicon::is_ancestor(std::string_view ancestor, std::string_view name) const {
  const MarkerEntry* current = find(name);
  while (current && current->specializes) {
    if (*current->specializes == ancestor) return true;
    current = find(*current->specializes);
  }
  return false;
}

MarkerLexicon MarkerLexicon::from_json(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidSpec, std::string("lexicon JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorKind::InvalidSpec, "lexicon must be a JSON array");
  std::vector<MarkerEntry> entries;
  try {
    for (const auto& item : doc) {
      MarkerEntry entry;
      entry.canonical_name = item.at("name").get<std::string>();
      entry.stems = item.value("stems", std::vector<std::string>{});
      entry.cooccur = item.value("cooccur", std::vector<std::string>{});
      if (item.contains("severity_rank") && !item["severity_rank"].is_null()) {
        entry.severity_rank = item["severity_rank"].get<int>();
      }
      if (item.contains("specializes") && !item["specializes"].is_null()) {
        entry.specializes = item["specializes"].get<std::string>();
      }
      if (item.contains("paper_frequency") && !item["paper_frequency"].is_null()) {
        entry.paper_frequency = item["paper_frequency"].get<int>();
      }
      entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidSpec, std::string("lexicon entry: ") + e.what());
  }
  return MarkerLexicon(std::move(entries));
}

const MarkerLexicon& MarkerLexicon::default_lexicon() {
  static const MarkerLexicon lexicon = from_json(resources::default_lexicon_json());
  return lexicon;
}

std::string MarkerLexicon::to_json() const {
  auto doc = nlohmann::ordered_json::array();
  for (const auto& entry : entries_) {
    nlohmann::ordered_json item;
    item["name"] = entry.canonical_name;
    item["stems"] = entry.stems;
    if (!entry.cooccur.empty()) item["cooccur"] = entry.cooccur;
    if (entry.severity_rank) item["severity_rank"] = *entry.severity_rank;
    if (entry.specializes) item["specializes"] = *entry.specializes;
    if (entry.paper_frequency) item["paper_frequency"] = *entry.paper_frequency;
    doc.push_back(std::move(item));
  }
  return doc.dump(2);
}

MarkerLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return MarkerLexicon::from_json(buffer.str());
}

std::vector<MarkerHit> extract_markers(const corpus::Report& report, const MarkerLexicon& lexicon) {
  const auto tokens = textprep::normalize_with_offsets(report.narrative);
  std::vector<MarkerHit> hits;

  auto cooccurs = [&](std::size_t i, const MarkerEntry& entry) {
    const std::size_t lo = i >= kCooccurrenceWindow ? i - kCooccurrenceWindow : 0;
    const std::size_t hi = std::min(tokens.size() - 1, i + kCooccurrenceWindow);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j == i) continue;
      for (const auto& stem : entry.cooccur) {
        if (starts_with(tokens[j].text, stem)) return true;
      }
    }
    return false;
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::vector<const MarkerEntry*> matched;
    for (const auto& entry : lexicon.entries()) {
      const bool stem_hit = std::any_of(entry.stems.begin(), entry.stems.end(),
                                        [&](const std::string& stem) { return starts_with(tokens[i].text, stem); });
      if (stem_hit && (entry.cooccur.empty() || cooccurs(i, entry))) matched.push_back(&entry);
    }
    std::vector<std::string> names;
    for (const MarkerEntry* candidate : matched) {
      const bool superseded = std::any_of(matched.begin(), matched.end(), [&](const MarkerEntry* other) {
        return lexicon.is_ancestor(candidate->canonical_name, other->canonical_name);
      });
      if (!superseded) names.push_back(candidate->canonical_name);
    }
    std::sort(names.begin(), names.end());
    for (auto& name : names) {
      hits.push_back({std::move(name), tokens[i].offset,
                      report.narrative.substr(tokens[i].offset, tokens[i].length), HitSource::StemMatch});
    }
  }

  for (const auto& annotation : report.manual_annotations) {
    if (!lexicon.contains(annotation.marker)) {
      throw Error(ErrorKind::UnknownAnnotationMarker, annotation.marker);
    }
    std::string text;
    for (const auto& token : tokens) {
      if (token.offset == annotation.offset) {
        text = report.narrative.substr(token.offset, token.length);
        break;
      }
    }
    hits.push_back({annotation.marker, annotation.offset, std::move(text), HitSource::ManualAnnotation});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const MarkerHit& a, const MarkerHit& b) {
    if (a.char_offset != b.char_offset) return a.char_offset < b.char_offset;
    return a.source == HitSource::StemMatch && b.source == HitSource::ManualAnnotation;
  });
  return hits;
}

std::vector<EventSequence> build_sequences(const std::vector<corpus::Report>& reports, const MarkerLexicon& lexicon) {
  std::map<std::string, std::vector<const corpus::Report*>> cases;
  for (const auto& report : reports) cases[report.case_id].push_back(&report);

  std::vector<EventSequence> sequences;
  for (auto& [case_id, group] : cases) {
    std::sort(group.begin(), group.end(), [](const corpus::Report* a, const corpus::Report* b) {
      if (a->registered_at != b->registered_at) return a->registered_at < b->registered_at;
      return a->report_id < b->report_id;
    });
    EventSequence sequence{case_id, {}, false};
    for (const corpus::Report* report : group) {
      for (auto& hit : extract_markers(*report, lexicon)) {
        // The terminal is structural: it comes from is_femicide_report only.
        if (hit.marker != kFemicide) sequence.events.push_back(std::move(hit.marker));
      }
      sequence.terminal_femicide = sequence.terminal_femicide || report->is_femicide_report;
    }
    if (sequence.events.empty()) continue;
    if (sequence.terminal_femicide) sequence.events.emplace_back(kFemicide);
    sequences.push_back(std::move(sequence));
  }
  return sequences;
}

std::string sequences_to_json(std::span<const EventSequence> sequences) {
  nlohmann::ordered_json doc;
  auto list = nlohmann::ordered_json::array();
  for (const auto& sequence : sequences) {
    nlohmann::ordered_json item;
    item["case_id"] = sequence.case_id;
    item["events"] = sequence.events;
    item["terminal_femicide"] = sequence.terminal_femicide;
    list.push_back(std::move(item));
  }
  doc["sequences"] = std::move(list);
  return doc.dump(2);
}

std::vector<EventSequence> sequences_from_json(std::string_view json_text) {
  std::vector<EventSequence> sequences;
  try {
    const auto doc = json::parse(json_text);
    const json& list = doc.is_array() ? doc : doc.at("sequences");
    for (const auto& item : list) {
      EventSequence sequence;
      sequence.case_id = item.value("case_id", std::string{});
      sequence.events = item.at("events").get<std::vector<std::string>>();
      const bool ends_in_femicide = !sequence.events.empty() && sequence.events.back() == kFemicide;
      sequence.terminal_femicide = item.value("terminal_femicide", ends_in_femicide);
      sequences.push_back(std::move(sequence));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidSpec, std::string("sequences JSON: ") + e.what());
  }
  for (const auto& sequence : sequences) {
    if (sequence.events.empty()) throw Error(ErrorKind::InvalidSpec, "empty sequence '" + sequence.case_id + "'");
    for (std::size_t i = 0; i < sequence.events.size(); ++i) {
      const bool is_last = i + 1 == sequence.events.size();
      if (sequence.events[i] == kFemicide && !(is_last && sequence.terminal_femicide)) {
        throw Error(ErrorKind::InvalidSpec, "'Femicide' may only terminate a sequence ('" + sequence.case_id + "')");
      }
    }
    if (sequence.terminal_femicide && sequence.events.back() != kFemicide) {
      throw Error(ErrorKind::InvalidSpec, "terminal_femicide set but sequence does not end in 'Femicide'");
    }
  }
  return sequences;
}

std::vector<std::pair<std::string, std::size_t>> event_frequencies(std::span<const EventSequence> sequences) {
  std::map<std::string, std::size_t> counts;
  for (const auto& sequence : sequences) {
    for (const auto& event : sequence.events) ++counts[event];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

}  // namespace dvrisk::markers
