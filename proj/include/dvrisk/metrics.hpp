#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dvrisk::models {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;

  bool operator==(const ClassMetrics&) const = default;
};

/// confusion[true][predicted]; 0/0 ratios are reported as 0.
struct Metrics {
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<ClassMetrics> per_class;

  std::size_t total() const;
  bool operator==(const Metrics&) const = default;
};

Metrics compute_metrics(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                        std::size_t classes);
Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion);

std::string metrics_to_json(const Metrics& metrics);
Metrics metrics_from_json(std::string_view json_text);

}  // namespace dvrisk::models
