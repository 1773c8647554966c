#include "lookaround/types.hpp"

#include <cmath>

namespace lookaround {

void validate_minibatch(const Minibatch& batch) {
  if (batch.examples.empty()) throw std::invalid_argument("minibatch is empty");
  const std::size_t dim = batch.examples.front().input.size();
  for (const Example& ex : batch.examples) {
    if (ex.input.size() != dim) throw std::invalid_argument("minibatch inputs differ in dimension");
  }
}

bool all_finite(std::span<const double> v) noexcept {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace lookaround
