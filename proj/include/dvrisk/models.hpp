#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dvrisk/corpus.hpp"
#include "dvrisk/markers.hpp"
#include "dvrisk/metrics.hpp"
#include "dvrisk/nn/sequence_model.hpp"
#include "dvrisk/textprep.hpp"

namespace dvrisk::models {

struct ClassifierConfig {
  std::size_t hidden_units = 100;
  std::size_t batch_size = 64;
  double dropout = 0.2;
  std::size_t epochs = 30;
  std::size_t embed_dim = 64;
  /// 0 selects textprep::default_max_len over the training split.
  std::size_t max_len = 0;
  double learning_rate = 0.001;
  std::uint64_t seed = 42;
  double split_ratio = 0.7;
  int threshold_days = corpus::kDefaultThresholdDays;
  std::size_t max_vocab = 20000;
  /// Inverse-frequency sample weights; off by default.
  bool class_weighting = false;
  double clip_norm = 5.0;
};

struct PredictorConfig {
  std::size_t hidden_units = 100;
  double dropout = 0.1;
  std::size_t epochs = 50;
  std::size_t embed_dim = 16;
  std::size_t batch_size = 8;
  double learning_rate = 0.001;
  std::uint64_t seed = 42;
  /// Stop once an epoch's mean loss is at or below this value; 0 disables.
  double stop_loss = 0.0;
  double clip_norm = 5.0;
};

/// Both parsers reject unknown keys and out-of-range values (InvalidArgument).
ClassifierConfig classifier_config_from_json(std::string_view json_text);
std::string to_json(const ClassifierConfig& config);
PredictorConfig predictor_config_from_json(std::string_view json_text);
std::string to_json(const PredictorConfig& config);

struct TrainRun {
  std::string task;
  std::string config_json;
  std::uint64_t seed = 0;
  std::optional<corpus::SplitIndices> split;
  std::vector<double> loss_history;
  Metrics metrics;
  /// Accuracy of always predicting the most frequent evaluated label.
  double majority_baseline = 0.0;
  std::string checkpoint;

  std::string to_json() const;
};

struct RiskPrediction {
  double probability_lower_risk = 0.0;
  corpus::RiskLabel label = corpus::RiskLabel::LowerRisk;
};

/// Frozen risk classifier with the preprocessing snapshot it was trained with.
struct RiskClassifier {
  ClassifierConfig config;
  textprep::StopList stopwords;
  textprep::Vocabulary vocabulary;
  std::size_t max_len = 1;
  nn::SequenceModel model;

  textprep::EncodedText encode(std::string_view narrative) const;
};

struct TrainedClassifier {
  RiskClassifier classifier;
  TrainRun run;
};

/// Split, fit the vocabulary on the training part only, train with shuffled
/// mini-batches and report held-out metrics.
TrainedClassifier train_risk_classifier(const corpus::LabeledCorpus& corpus, const ClassifierConfig& config);

/// LowerRisk iff probability >= 0.5. Throws EmptyNarrative.
RiskPrediction predict_risk(const RiskClassifier& classifier, std::string_view narrative);
corpus::RiskLabel label_for_probability(double probability_lower_risk);

Metrics evaluate(const RiskClassifier& classifier, std::span<const corpus::LabeledItem> items);

/// Closed marker vocabulary: input id 0 is PAD, markers take ids 1..K and
/// output class k - 1.
class MarkerVocabulary {
 public:
  MarkerVocabulary() = default;
  explicit MarkerVocabulary(std::vector<std::string> names);
  static MarkerVocabulary from_lexicon(const markers::MarkerLexicon& lexicon);
  /// Names in first-appearance order across the sequences.
  static MarkerVocabulary from_sequences(std::span<const markers::EventSequence> sequences);

  /// Throws UnknownMarker.
  std::int32_t id(std::string_view name) const;
  bool contains(std::string_view name) const { return index_.contains(std::string(name)); }
  const std::string& name_for_class(std::size_t cls) const { return names_.at(cls); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const MarkerVocabulary& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct PrefixSample {
  std::vector<std::string> prefix;
  std::string next;

  bool operator==(const PrefixSample&) const = default;
};

/// A sequence of n events yields (events[0..k), events[k]) for k = 1..n-1.
std::vector<PrefixSample> make_prefix_dataset(std::span<const markers::EventSequence> sequences);

struct Candidate {
  std::string marker;
  double probability = 0.0;
};

struct NextEventPredictor {
  PredictorConfig config;
  MarkerVocabulary vocabulary;
  nn::SequenceModel model;
};

struct TrainedPredictor {
  NextEventPredictor predictor;
  TrainRun run;
};

/// Trains on every prefix of every sequence; metrics are reported on the
/// training prefixes. Throws EmptyDataset, DivergedTraining.
TrainedPredictor train_next_event(std::span<const markers::EventSequence> sequences,
                                  const MarkerVocabulary& vocabulary, const PredictorConfig& config);

/// Candidates by descending probability (ties by marker id), at most top_k.
/// Throws EmptyPrefix, UnknownMarker, InvalidArgument (Femicide inside the prefix).
std::vector<Candidate> predict_next_event(const NextEventPredictor& predictor, std::span<const std::string> prefix,
                                          std::size_t top_k);

/// Checkpoints are single JSON documents; parameters are stored as shape plus
/// base64 little-endian float64, so save/load round-trips bit-exactly.
std::string checkpoint_to_json(const RiskClassifier& classifier, const TrainRun& run);
std::string checkpoint_to_json(const NextEventPredictor& predictor, const TrainRun& run);
RiskClassifier risk_classifier_from_json(std::string_view json_text);
NextEventPredictor next_event_predictor_from_json(std::string_view json_text);

RiskClassifier load_risk_checkpoint(const std::filesystem::path& path);
NextEventPredictor load_next_event_checkpoint(const std::filesystem::path& path);

/// Path of the TrainRun report written beside a checkpoint (foo.json -> foo.run.json).
std::filesystem::path run_report_path(const std::filesystem::path& checkpoint);

}  // namespace dvrisk::models
