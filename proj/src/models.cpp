#include "dvrisk/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dvrisk/base64.hpp"
#include "dvrisk/error.hpp"
#include "dvrisk/nn/optim.hpp"
#include "dvrisk/random.hpp"

namespace dvrisk::models {

using nlohmann::ordered_json;

namespace {

constexpr int kCheckpointVersion = 1;
constexpr std::size_t kMinClassifierItems = 10;

enum TrainStream : std::uint64_t { kInitStream = 11, kShuffleStream = 12, kDropoutStream = 13 };

ordered_json parse_object(std::string_view text, ErrorKind kind, const char* what) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(kind, std::string(what) + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw Error(kind, std::string(what) + " must be a JSON object");
  return doc;
}

template <typename T>
void read_field(const ordered_json& doc, const char* key, T& out) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::InvalidArgument, std::string("config field '") + key + "' has the wrong type");
  }
}

void reject_unknown(const ordered_json& doc, std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorKind::InvalidArgument, "unknown config field '" + key + "'");
    }
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, message);
}

void validate(const ClassifierConfig& c) {
  require(c.hidden_units > 0 && c.batch_size > 0 && c.epochs > 0 && c.embed_dim > 0,
          "hidden_units, batch_size, epochs and embed_dim must be positive");
  require(c.dropout >= 0.0 && c.dropout < 1.0, "dropout must be in [0, 1)");
  require(c.learning_rate > 0.0 && std::isfinite(c.learning_rate), "learning_rate must be positive");
  require(c.split_ratio > 0.0 && c.split_ratio < 1.0, "split_ratio must be in (0, 1)");
  require(c.threshold_days > 0, "threshold_days must be positive");
  require(c.max_vocab >= 3, "max_vocab must be at least 3");
  require(c.clip_norm > 0.0, "clip_norm must be positive");
}

void validate(const PredictorConfig& c) {
  require(c.hidden_units > 0 && c.batch_size > 0 && c.epochs > 0 && c.embed_dim > 0,
          "hidden_units, batch_size, epochs and embed_dim must be positive");
  require(c.dropout >= 0.0 && c.dropout < 1.0, "dropout must be in [0, 1)");
  require(c.learning_rate > 0.0 && std::isfinite(c.learning_rate), "learning_rate must be positive");
  require(c.stop_loss >= 0.0, "stop_loss must be non-negative");
  require(c.clip_norm > 0.0, "clip_norm must be positive");
}

ordered_json config_object(const ClassifierConfig& c) {
  ordered_json j;
  j["hidden_units"] = c.hidden_units;
  j["batch_size"] = c.batch_size;
  j["dropout"] = c.dropout;
  j["epochs"] = c.epochs;
  j["embed_dim"] = c.embed_dim;
  j["max_len"] = c.max_len;
  j["learning_rate"] = c.learning_rate;
  j["seed"] = c.seed;
  j["split_ratio"] = c.split_ratio;
  j["threshold_days"] = c.threshold_days;
  j["max_vocab"] = c.max_vocab;
  j["class_weighting"] = c.class_weighting;
  j["clip_norm"] = c.clip_norm;
  return j;
}

ordered_json config_object(const PredictorConfig& c) {
  ordered_json j;
  j["hidden_units"] = c.hidden_units;
  j["dropout"] = c.dropout;
  j["epochs"] = c.epochs;
  j["embed_dim"] = c.embed_dim;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["seed"] = c.seed;
  j["stop_loss"] = c.stop_loss;
  j["clip_norm"] = c.clip_norm;
  return j;
}

nn::TokenBatch make_batch(std::span<const std::vector<std::int32_t>> sequences) {
  nn::TokenBatch batch;
  batch.batch = sequences.size();
  std::size_t longest = 1;
  for (const auto& s : sequences) longest = std::max(longest, s.size());
  batch.time = longest;
  batch.ids.assign(batch.batch * batch.time, textprep::kPadId);
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    std::copy(sequences[b].begin(), sequences[b].end(), batch.ids.begin() + static_cast<long>(b * batch.time));
    batch.lengths.push_back(sequences[b].size());
  }
  return batch;
}

// Shared mini-batch loop: shuffles each epoch, clips, steps Adam and records
// the sample-weighted mean loss. Returns the loss history.
std::vector<double> fit(nn::SequenceModel& model, std::span<const std::vector<std::int32_t>> inputs,
                        std::span<const std::size_t> targets, std::span<const double> weights, std::size_t epochs,
                        std::size_t batch_size, double dropout, double learning_rate, double clip_norm,
                        double stop_loss, std::uint64_t seed) {
  const std::size_t n = inputs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffler(derive_seed(seed, kShuffleStream));
  const std::uint64_t dropout_base = derive_seed(seed, kDropoutStream);

  std::vector<nn::Tensor*> params = model.parameters();
  nn::AdamState adam = nn::AdamState::for_params(params, learning_rate);
  std::vector<nn::Tensor> grads;
  std::vector<double> history;
  std::uint64_t step = 0;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t end = std::min(n, start + batch_size);
      std::vector<std::vector<std::int32_t>> rows;
      std::vector<std::size_t> batch_targets;
      std::vector<double> batch_weights;
      for (std::size_t i = start; i < end; ++i) {
        rows.push_back(inputs[order[i]]);
        batch_targets.push_back(targets[order[i]]);
        if (!weights.empty()) batch_weights.push_back(weights[order[i]]);
      }
      const nn::TokenBatch batch = make_batch(rows);
      double loss = 0.0;
      try {
        loss = model.loss_and_gradients(batch, batch_targets, dropout, derive_seed(dropout_base, step), grads,
                                        batch_weights);
        if (!std::isfinite(loss)) throw Error(ErrorKind::DivergedTraining, "loss became non-finite");
        nn::clip_global_norm(grads, clip_norm);
        nn::adam_step(params, grads, adam);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::NonFiniteActivation || e.kind() == ErrorKind::NonFiniteUpdate) {
          throw Error(ErrorKind::DivergedTraining, std::string("epoch ") + std::to_string(epoch + 1) + ": " + e.what());
        }
        throw;
      }
      total += loss * static_cast<double>(end - start);
      ++step;
    }
    history.push_back(total / static_cast<double>(n));
    if (stop_loss > 0.0 && history.back() <= stop_loss) break;
  }
  return history;
}

ordered_json tensors_json(const nn::SequenceModel& model) {
  auto out = ordered_json::array();
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ordered_json p;
    p["name"] = nn::SequenceModel::parameter_names()[i];
    p["shape"] = params[i]->shape();
    p["data"] = encode_f64_le(params[i]->data());
    out.push_back(std::move(p));
  }
  return out;
}

ordered_json shape_json(const nn::ModelShape& s) {
  ordered_json j;
  j["vocab_size"] = s.vocab_size;
  j["embed_dim"] = s.embed_dim;
  j["hidden_units"] = s.hidden_units;
  j["output_size"] = s.output_size;
  j["head"] = s.head == nn::HeadKind::Sigmoid ? "sigmoid" : "softmax";
  return j;
}

template <typename T>
T checkpoint_get(const ordered_json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw Error(ErrorKind::InvalidCheckpoint, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::InvalidCheckpoint, std::string("field '") + key + "' has the wrong type");
  }
}

nn::SequenceModel model_from_json(const ordered_json& doc, nn::HeadKind expected_head) {
  const auto shape_doc = checkpoint_get<ordered_json>(doc, "shape");
  nn::ModelShape shape;
  shape.vocab_size = checkpoint_get<std::size_t>(shape_doc, "vocab_size");
  shape.embed_dim = checkpoint_get<std::size_t>(shape_doc, "embed_dim");
  shape.hidden_units = checkpoint_get<std::size_t>(shape_doc, "hidden_units");
  shape.output_size = checkpoint_get<std::size_t>(shape_doc, "output_size");
  const auto head = checkpoint_get<std::string>(shape_doc, "head");
  if (head != "sigmoid" && head != "softmax") throw Error(ErrorKind::InvalidCheckpoint, "unknown head '" + head + "'");
  shape.head = head == "sigmoid" ? nn::HeadKind::Sigmoid : nn::HeadKind::Softmax;
  if (shape.head != expected_head) throw Error(ErrorKind::InvalidCheckpoint, "checkpoint has the wrong head kind");
  if (shape.vocab_size == 0 || shape.embed_dim == 0 || shape.hidden_units == 0 || shape.output_size == 0 ||
      (shape.head == nn::HeadKind::Sigmoid && shape.output_size != 1)) {
    throw Error(ErrorKind::InvalidCheckpoint, "invalid model shape");
  }

  std::vector<nn::Tensor> tensors;
  const auto params = checkpoint_get<ordered_json>(doc, "parameters");
  if (!params.is_array()) throw Error(ErrorKind::InvalidCheckpoint, "'parameters' must be an array");
  for (const auto& p : params) {
    auto dims = checkpoint_get<std::vector<std::size_t>>(p, "shape");
    auto data = decode_f64_le(checkpoint_get<std::string>(p, "data"));
    try {
      tensors.emplace_back(std::move(dims), std::move(data));
    } catch (const Error& e) {
      throw Error(ErrorKind::InvalidCheckpoint, e.what());
    }
  }
  return nn::model_from_parts(shape, std::move(tensors));
}

ordered_json open_checkpoint(std::string_view text, std::string_view task) {
  ordered_json doc = parse_object(text, ErrorKind::InvalidCheckpoint, "checkpoint");
  if (checkpoint_get<std::string>(doc, "format") != "dvrisk-checkpoint") {
    throw Error(ErrorKind::InvalidCheckpoint, "not a dvrisk checkpoint");
  }
  if (checkpoint_get<int>(doc, "version") != kCheckpointVersion) {
    throw Error(ErrorKind::InvalidCheckpoint, "unsupported checkpoint version");
  }
  const auto found = checkpoint_get<std::string>(doc, "task");
  if (found != task) {
    throw Error(ErrorKind::InvalidCheckpoint, "expected a " + std::string(task) + " checkpoint, got " + found);
  }
  return doc;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double majority_rate(std::span<const std::size_t> truth, std::size_t classes) {
  if (truth.empty()) return 0.0;
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t t : truth) ++counts[t];
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) / static_cast<double>(truth.size());
}

std::size_t label_code(corpus::RiskLabel label) { return static_cast<std::size_t>(label); }

}  // namespace

ClassifierConfig classifier_config_from_json(std::string_view json_text) {
  const auto doc = parse_object(json_text, ErrorKind::InvalidArgument, "classifier config");
  reject_unknown(doc, {"hidden_units", "batch_size", "dropout", "epochs", "embed_dim", "max_len", "learning_rate",
                       "seed", "split_ratio", "threshold_days", "max_vocab", "class_weighting", "clip_norm"});
  ClassifierConfig c;
  read_field(doc, "hidden_units", c.hidden_units);
  read_field(doc, "batch_size", c.batch_size);
  read_field(doc, "dropout", c.dropout);
  read_field(doc, "epochs", c.epochs);
  read_field(doc, "embed_dim", c.embed_dim);
  read_field(doc, "max_len", c.max_len);
  read_field(doc, "learning_rate", c.learning_rate);
  read_field(doc, "seed", c.seed);
  read_field(doc, "split_ratio", c.split_ratio);
  read_field(doc, "threshold_days", c.threshold_days);
  read_field(doc, "max_vocab", c.max_vocab);
  read_field(doc, "class_weighting", c.class_weighting);
  read_field(doc, "clip_norm", c.clip_norm);
  validate(c);
  return c;
}

std::string to_json(const ClassifierConfig& config) { return config_object(config).dump(2); }

PredictorConfig predictor_config_from_json(std::string_view json_text) {
  const auto doc = parse_object(json_text, ErrorKind::InvalidArgument, "predictor config");
  reject_unknown(doc, {"hidden_units", "dropout", "epochs", "embed_dim", "batch_size", "learning_rate", "seed",
                       "stop_loss", "clip_norm"});
  PredictorConfig c;
  read_field(doc, "hidden_units", c.hidden_units);
  read_field(doc, "dropout", c.dropout);
  read_field(doc, "epochs", c.epochs);
  read_field(doc, "embed_dim", c.embed_dim);
  read_field(doc, "batch_size", c.batch_size);
  read_field(doc, "learning_rate", c.learning_rate);
  read_field(doc, "seed", c.seed);
  read_field(doc, "stop_loss", c.stop_loss);
  read_field(doc, "clip_norm", c.clip_norm);
  validate(c);
  return c;
}

std::string to_json(const PredictorConfig& config) { return config_object(config).dump(2); }

std::string TrainRun::to_json() const {
  ordered_json doc;
  doc["task"] = task;
  doc["config"] = ordered_json::parse(config_json);
  doc["seed"] = seed;
  if (split) {
    ordered_json s;
    s["seed"] = split->seed;
    s["ratio"] = split->ratio;
    s["train"] = split->train;
    s["test"] = split->test;
    doc["split"] = std::move(s);
  } else {
    doc["split"] = nullptr;
  }
  doc["epochs_run"] = loss_history.size();
  doc["loss_history"] = loss_history;
  doc["metrics"] = ordered_json::parse(metrics_to_json(metrics));
  doc["majority_baseline"] = majority_baseline;
  doc["checkpoint"] = checkpoint;
  return doc.dump(2) + "\n";
}

corpus::RiskLabel label_for_probability(double probability_lower_risk) {
  return probability_lower_risk >= 0.5 ? corpus::RiskLabel::LowerRisk : corpus::RiskLabel::HigherRisk;
}

textprep::EncodedText RiskClassifier::encode(std::string_view narrative) const {
  return textprep::encode(textprep::preprocess(narrative, stopwords), vocabulary, max_len);
}

TrainedClassifier train_risk_classifier(const corpus::LabeledCorpus& corpus, const ClassifierConfig& config) {
  validate(config);
  if (corpus.items.size() < kMinClassifierItems) {
    throw Error(ErrorKind::EmptyDataset, "classifier training needs at least 10 labeled reports, got " +
                                             std::to_string(corpus.items.size()));
  }
  if (corpus.count(corpus::RiskLabel::HigherRisk) == 0 || corpus.count(corpus::RiskLabel::LowerRisk) == 0) {
    throw Error(ErrorKind::SingleClassCorpus, "both risk labels must be present");
  }

  const corpus::SplitIndices split = corpus::split_corpus(corpus, config.split_ratio, config.seed);
  if (split.test.empty()) throw Error(ErrorKind::EmptyTestSet, "split left no test items");

  TrainedClassifier out;
  RiskClassifier& clf = out.classifier;
  clf.config = config;
  clf.stopwords = textprep::default_stopwords();

  std::vector<textprep::TokenList> train_tokens;
  for (std::size_t i : split.train) train_tokens.push_back(textprep::preprocess(corpus.items[i].report.narrative, clf.stopwords));
  clf.vocabulary = textprep::fit_vocabulary(train_tokens, config.max_vocab);
  clf.max_len = config.max_len > 0 ? config.max_len : textprep::default_max_len(train_tokens);

  std::vector<std::vector<std::int32_t>> inputs;
  std::vector<std::size_t> targets;
  for (std::size_t k = 0; k < split.train.size(); ++k) {
    auto enc = textprep::encode(train_tokens[k], clf.vocabulary, clf.max_len);
    enc.ids.resize(enc.true_length);
    inputs.push_back(std::move(enc.ids));
    targets.push_back(label_code(corpus.items[split.train[k]].label));
  }

  std::vector<double> weights;
  if (config.class_weighting) {
    std::size_t counts[2] = {0, 0};
    for (std::size_t t : targets) ++counts[t];
    for (std::size_t t : targets) {
      weights.push_back(counts[t] == 0 ? 0.0 : static_cast<double>(targets.size()) / (2.0 * counts[t]));
    }
  }

  nn::ModelShape shape{clf.vocabulary.size(), config.embed_dim, config.hidden_units, 1, nn::HeadKind::Sigmoid};
  clf.model = nn::SequenceModel::initialize(shape, derive_seed(config.seed, kInitStream));
  out.run.loss_history = fit(clf.model, inputs, targets, weights, config.epochs, config.batch_size, config.dropout,
                             config.learning_rate, config.clip_norm, 0.0, config.seed);

  std::vector<corpus::LabeledItem> test_items;
  std::vector<std::size_t> test_truth;
  for (std::size_t i : split.test) {
    test_items.push_back(corpus.items[i]);
    test_truth.push_back(label_code(corpus.items[i].label));
  }
  out.run.task = "classifier";
  out.run.config_json = to_json(config);
  out.run.seed = config.seed;
  out.run.split = split;
  out.run.metrics = evaluate(clf, test_items);
  out.run.majority_baseline = majority_rate(test_truth, 2);
  return out;
}

RiskPrediction predict_risk(const RiskClassifier& classifier, std::string_view narrative) {
  if (textprep::normalize(narrative).empty()) throw Error(ErrorKind::EmptyNarrative, "narrative has no text");
  auto enc = classifier.encode(narrative);
  enc.ids.resize(enc.true_length);
  const std::vector<std::vector<std::int32_t>> rows{std::move(enc.ids)};
  const nn::Tensor probs = classifier.model.predict(make_batch(rows));
  RiskPrediction p;
  p.probability_lower_risk = probs[0];
  p.label = label_for_probability(p.probability_lower_risk);
  return p;
}

Metrics evaluate(const RiskClassifier& classifier, std::span<const corpus::LabeledItem> items) {
  if (items.empty()) throw Error(ErrorKind::EmptyTestSet, "no items to evaluate");
  std::vector<std::size_t> truth, predicted;
  for (const auto& item : items) {
    truth.push_back(label_code(item.label));
    // Reports with no content tokens still get a score from the zero state.
    auto enc = classifier.encode(item.report.narrative);
    enc.ids.resize(enc.true_length);
    const std::vector<std::vector<std::int32_t>> rows{std::move(enc.ids)};
    predicted.push_back(label_code(label_for_probability(classifier.model.predict(make_batch(rows))[0])));
  }
  return compute_metrics(truth, predicted, 2);
}

MarkerVocabulary::MarkerVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], static_cast<std::int32_t>(i + 1)).second) {
      throw Error(ErrorKind::DuplicateMarker, "marker '" + names_[i] + "' listed twice");
    }
  }
}

MarkerVocabulary MarkerVocabulary::from_lexicon(const markers::MarkerLexicon& lexicon) {
  std::vector<std::string> names;
  for (const auto& e : lexicon.entries()) names.push_back(e.canonical_name);
  return MarkerVocabulary(std::move(names));
}

MarkerVocabulary MarkerVocabulary::from_sequences(std::span<const markers::EventSequence> sequences) {
  std::vector<std::string> names;
  for (const auto& s : sequences) {
    for (const auto& e : s.events) {
      if (std::find(names.begin(), names.end(), e) == names.end()) names.push_back(e);
    }
  }
  return MarkerVocabulary(std::move(names));
}

std::int32_t MarkerVocabulary::id(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error(ErrorKind::UnknownMarker, "unknown marker '" + std::string(name) + "'");
  return it->second;
}

std::vector<PrefixSample> make_prefix_dataset(std::span<const markers::EventSequence> sequences) {
  std::vector<PrefixSample> out;
  for (const auto& s : sequences) {
    for (std::size_t k = 1; k < s.events.size(); ++k) {
      out.push_back({std::vector<std::string>(s.events.begin(), s.events.begin() + static_cast<long>(k)), s.events[k]});
    }
  }
  return out;
}

TrainedPredictor train_next_event(std::span<const markers::EventSequence> sequences,
                                  const MarkerVocabulary& vocabulary, const PredictorConfig& config) {
  validate(config);
  if (vocabulary.size() == 0) throw Error(ErrorKind::EmptyDataset, "marker vocabulary is empty");
  const auto samples = make_prefix_dataset(sequences);
  if (samples.empty()) throw Error(ErrorKind::EmptyDataset, "sequences yield no prefix samples");

  std::vector<std::vector<std::int32_t>> inputs;
  std::vector<std::size_t> targets;
  for (const auto& s : samples) {
    std::vector<std::int32_t> ids;
    for (const auto& e : s.prefix) ids.push_back(vocabulary.id(e));
    inputs.push_back(std::move(ids));
    targets.push_back(static_cast<std::size_t>(vocabulary.id(s.next) - 1));
  }

  TrainedPredictor out;
  out.predictor.config = config;
  out.predictor.vocabulary = vocabulary;
  nn::ModelShape shape{vocabulary.size() + 1, config.embed_dim, config.hidden_units, vocabulary.size(),
                       nn::HeadKind::Softmax};
  out.predictor.model = nn::SequenceModel::initialize(shape, derive_seed(config.seed, kInitStream));
  out.run.loss_history = fit(out.predictor.model, inputs, targets, {}, config.epochs, config.batch_size,
                             config.dropout, config.learning_rate, config.clip_norm, config.stop_loss, config.seed);

  const nn::Tensor probs = out.predictor.model.predict(make_batch(inputs));
  std::vector<std::size_t> predicted;
  for (std::size_t b = 0; b < probs.dim(0); ++b) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < probs.dim(1); ++k) {
      if (probs.at(b, k) > probs.at(b, best)) best = k;
    }
    predicted.push_back(best);
  }
  out.run.task = "predictor";
  out.run.config_json = to_json(config);
  out.run.seed = config.seed;
  out.run.metrics = compute_metrics(targets, predicted, vocabulary.size());
  out.run.majority_baseline = majority_rate(targets, vocabulary.size());
  return out;
}

std::vector<Candidate> predict_next_event(const NextEventPredictor& predictor, std::span<const std::string> prefix,
                                          std::size_t top_k) {
  if (prefix.empty()) throw Error(ErrorKind::EmptyPrefix, "prefix must contain at least one marker");
  if (top_k == 0) throw Error(ErrorKind::InvalidArgument, "top_k must be at least 1");
  std::vector<std::int32_t> ids;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    ids.push_back(predictor.vocabulary.id(prefix[i]));
    if (prefix[i] == markers::kFemicide && i + 1 < prefix.size()) {
      throw Error(ErrorKind::InvalidArgument, "Femicide can only end a sequence");
    }
  }
  const std::vector<std::vector<std::int32_t>> rows{std::move(ids)};
  const nn::Tensor probs = predictor.model.predict(make_batch(rows));

  std::vector<std::size_t> order(probs.dim(1));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs.at(0, a) > probs.at(0, b); });
  order.resize(std::min(top_k, order.size()));
  std::vector<Candidate> out;
  for (std::size_t k : order) out.push_back({predictor.vocabulary.name_for_class(k), probs.at(0, k)});
  return out;
}

std::string checkpoint_to_json(const RiskClassifier& classifier, const TrainRun& run) {
  ordered_json doc;
  doc["format"] = "dvrisk-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["task"] = "classifier";
  doc["config"] = config_object(classifier.config);
  doc["seed"] = run.seed;
  doc["epochs_run"] = run.loss_history.size();
  doc["max_len"] = classifier.max_len;
  std::vector<std::string> stop(classifier.stopwords.begin(), classifier.stopwords.end());
  std::sort(stop.begin(), stop.end());
  doc["stopwords"] = stop;
  doc["vocabulary"] = std::vector<std::string>(classifier.vocabulary.tokens().begin(),
                                               classifier.vocabulary.tokens().end());
  doc["shape"] = shape_json(classifier.model.shape());
  doc["parameters"] = tensors_json(classifier.model);
  return doc.dump() + "\n";
}

std::string checkpoint_to_json(const NextEventPredictor& predictor, const TrainRun& run) {
  ordered_json doc;
  doc["format"] = "dvrisk-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["task"] = "predictor";
  doc["config"] = config_object(predictor.config);
  doc["seed"] = run.seed;
  doc["epochs_run"] = run.loss_history.size();
  doc["markers"] = predictor.vocabulary.names();
  doc["shape"] = shape_json(predictor.model.shape());
  doc["parameters"] = tensors_json(predictor.model);
  return doc.dump() + "\n";
}

RiskClassifier risk_classifier_from_json(std::string_view json_text) {
  const ordered_json doc = open_checkpoint(json_text, "classifier");
  RiskClassifier clf;
  try {
    clf.config = classifier_config_from_json(checkpoint_get<ordered_json>(doc, "config").dump());
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidCheckpoint, e.what());
  }
  clf.max_len = checkpoint_get<std::size_t>(doc, "max_len");
  if (clf.max_len == 0) throw Error(ErrorKind::InvalidCheckpoint, "max_len must be positive");
  for (auto& w : checkpoint_get<std::vector<std::string>>(doc, "stopwords")) clf.stopwords.insert(std::move(w));
  clf.vocabulary = textprep::Vocabulary(checkpoint_get<std::vector<std::string>>(doc, "vocabulary"));
  clf.model = model_from_json(doc, nn::HeadKind::Sigmoid);
  if (clf.model.shape().vocab_size != clf.vocabulary.size()) {
    throw Error(ErrorKind::InvalidCheckpoint, "embedding rows do not match the vocabulary");
  }
  return clf;
}

NextEventPredictor next_event_predictor_from_json(std::string_view json_text) {
  const ordered_json doc = open_checkpoint(json_text, "predictor");
  NextEventPredictor p;
  try {
    p.config = predictor_config_from_json(checkpoint_get<ordered_json>(doc, "config").dump());
    p.vocabulary = MarkerVocabulary(checkpoint_get<std::vector<std::string>>(doc, "markers"));
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidCheckpoint, e.what());
  }
  p.model = model_from_json(doc, nn::HeadKind::Softmax);
  if (p.model.shape().vocab_size != p.vocabulary.size() + 1 || p.model.shape().output_size != p.vocabulary.size()) {
    throw Error(ErrorKind::InvalidCheckpoint, "model shape does not match the marker list");
  }
  return p;
}

RiskClassifier load_risk_checkpoint(const std::filesystem::path& path) {
  return risk_classifier_from_json(read_file(path));
}

NextEventPredictor load_next_event_checkpoint(const std::filesystem::path& path) {
  return next_event_predictor_from_json(read_file(path));
}

std::filesystem::path run_report_path(const std::filesystem::path& checkpoint) {
  std::filesystem::path out = checkpoint;
  out.replace_extension(".run.json");
  return out;
}

}  // namespace dvrisk::models
