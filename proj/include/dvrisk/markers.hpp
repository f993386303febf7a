#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dvrisk/corpus.hpp"

namespace dvrisk::markers {

inline constexpr std::string_view kFemicide = "Femicide";

/// Tokens on either side of a primary stem match searched for a required
/// co-occurring stem ("ameaçou de morte").
inline constexpr std::size_t kCooccurrenceWindow = 3;

struct MarkerEntry {
  std::string canonical_name;
  std::vector<std::string> stems;
  /// When non-empty, a primary stem only matches if one of these stems starts
  /// a token within kCooccurrenceWindow positions.
  std::vector<std::string> cooccur;
  std::optional<int> severity_rank;
  std::optional<std::string> specializes;
  std::optional<int> paper_frequency;

  bool operator==(const MarkerEntry&) const = default;
};

/// Validated, immutable marker lexicon.
class MarkerLexicon {
 public:
  /// Throws DuplicateMarker, EmptyStems, CyclicSpecialization, UnknownMarker
  /// (dangling `specializes`) or InvalidSpec (malformed stems, overlapping
  /// patterns between unrelated entries, missing Femicide entry).
  explicit MarkerLexicon(std::vector<MarkerEntry> entries);

  static MarkerLexicon from_json(std::string_view json_text);
  /// The shipped lexicon (resources/lexicon_default.json).
  static const MarkerLexicon& default_lexicon();

  std::span<const MarkerEntry> entries() const { return entries_; }
  const MarkerEntry* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  /// True when `ancestor` is reachable from `name` by following `specializes`.
  bool is_ancestor(std::string_view ancestor, std::string_view name) const;

  std::string to_json() const;

 private:
  std::vector<MarkerEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

MarkerLexicon load_lexicon(const std::filesystem::path& path);

enum class HitSource { StemMatch, ManualAnnotation };

struct MarkerHit {
  std::string marker;
  std::size_t char_offset = 0;
  std::string matched_text;
  HitSource source = HitSource::StemMatch;

  bool operator==(const MarkerHit&) const = default;
};

/// Stem hits on the normalized narrative (stopwords kept) merged with the
/// report's manual annotations, in ascending offset order. When a broad marker
/// and one of its specializations match the same token only the
/// specialization is reported.
std::vector<MarkerHit> extract_markers(const corpus::Report& report, const MarkerLexicon& lexicon);

struct EventSequence {
  std::string case_id;
  std::vector<std::string> events;
  bool terminal_femicide = false;

  bool operator==(const EventSequence&) const = default;
};

/// One sequence per case, ordered by case id. Reports are taken by
/// registration date (ties by report id); cases without any marker event are
/// dropped; cases with a femicide report end in "Femicide".
std::vector<EventSequence> build_sequences(const std::vector<corpus::Report>& reports, const MarkerLexicon& lexicon);

std::string sequences_to_json(std::span<const EventSequence> sequences);
/// Accepts {"sequences": [...]} or a bare array; validates the terminal rule.
std::vector<EventSequence> sequences_from_json(std::string_view json_text);

/// Event counts over all sequences, descending by count then name.
std::vector<std::pair<std::string, std::size_t>> event_frequencies(std::span<const EventSequence> sequences);

}  // namespace dvrisk::markers
