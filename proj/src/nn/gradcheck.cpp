#include <algorithm>
#include <cmath>
#include <numeric>

#include "dvrisk/error.hpp"
#include "dvrisk/nn/optim.hpp"
#include "dvrisk/random.hpp"

namespace dvrisk::nn {

GradCheckResult grad_check(const std::function<double()>& loss, std::span<Tensor* const> params,
                           std::span<const Tensor> analytic, double eps, std::size_t min_coordinates,
                           std::uint64_t seed) {
  if (params.size() != analytic.size()) throw Error(ErrorKind::InvalidArgument, "grad_check: size mismatch");
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != analytic[i].shape()) throw Error(ErrorKind::InvalidArgument, "grad_check: shape mismatch");
    for (std::size_t k = 0; k < params[i]->size(); ++k) coords.emplace_back(i, k);
  }
  if (coords.size() > min_coordinates) {
    Rng rng(seed);
    rng.shuffle(std::span(coords));
    coords.resize(min_coordinates);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckResult result;
  for (auto [i, k] : coords) {
    double& theta = (*params[i])[k];
    const double saved = theta;
    theta = saved + eps;
    const double plus = loss();
    theta = saved - eps;
    const double minus = loss();
    theta = saved;
    const double numeric = (plus - minus) / (2.0 * eps);
    const double a = analytic[i][k];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / denom);
    ++result.coordinates_checked;
  }
  return result;
}

}  // namespace dvrisk::nn
