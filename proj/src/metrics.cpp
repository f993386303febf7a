#include "dvrisk/metrics.hpp"

#include <json.hpp>

#include "dvrisk/error.hpp"

namespace dvrisk::models {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::size_t Metrics::total() const {
  std::size_t n = 0;
  for (const auto& row : confusion) {
    for (std::size_t c : row) n += c;
  }
  return n;
}

Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion) {
  const std::size_t k = confusion.size();
  for (const auto& row : confusion) {
    if (row.size() != k) throw Error(ErrorKind::InvalidArgument, "confusion matrix must be square");
  }
  Metrics m;
  m.confusion = std::move(confusion);
  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) correct += m.confusion[c][c];
  m.accuracy = ratio(correct, m.total());
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t j = 0; j < k; ++j) {
      predicted += m.confusion[j][c];
      actual += m.confusion[c][j];
    }
    ClassMetrics cm;
    cm.precision = ratio(m.confusion[c][c], predicted);
    cm.recall = ratio(m.confusion[c][c], actual);
    cm.f1 = cm.precision + cm.recall > 0.0 ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
    cm.support = actual;
    m.per_class.push_back(cm);
  }
  return m;
}

Metrics compute_metrics(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                        std::size_t classes) {
  if (truth.size() != predicted.size()) throw Error(ErrorKind::InvalidArgument, "truth/prediction length mismatch");
  if (truth.empty()) throw Error(ErrorKind::EmptyTestSet, "no items to evaluate");
  std::vector<std::vector<std::size_t>> confusion(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || predicted[i] >= classes) throw Error(ErrorKind::InvalidArgument, "class out of range");
    ++confusion[truth[i]][predicted[i]];
  }
  return metrics_from_confusion(std::move(confusion));
}

std::string metrics_to_json(const Metrics& metrics) {
  nlohmann::ordered_json doc;
  doc["accuracy"] = metrics.accuracy;
  doc["confusion"] = metrics.confusion;
  auto per_class = nlohmann::ordered_json::array();
  for (const auto& c : metrics.per_class) {
    nlohmann::ordered_json item;
    item["precision"] = c.precision;
    item["recall"] = c.recall;
    item["f1"] = c.f1;
    item["support"] = c.support;
    per_class.push_back(std::move(item));
  }
  doc["per_class"] = std::move(per_class);
  return doc.dump();
}

Metrics metrics_from_json(std::string_view json_text) {
  try {
    const auto doc = nlohmann::json::parse(json_text);
    Metrics m;
    m.accuracy = doc.at("accuracy").get<double>();
    m.confusion = doc.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    for (const auto& item : doc.at("per_class")) {
      m.per_class.push_back({item.at("precision").get<double>(), item.at("recall").get<double>(),
                             item.at("f1").get<double>(), item.at("support").get<std::size_t>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("metrics JSON: ") + e.what());
  }
}

}  // namespace dvrisk::models
