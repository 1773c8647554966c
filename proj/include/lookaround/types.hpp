#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lookaround {

/// Flat weight vector shared by optimizers, quadratic models and MLPs.
using ParamVector = std::vector<double>;

struct Example {
  std::vector<double> input;
  int label = 0;
};

struct Minibatch {
  std::vector<Example> examples;
  std::vector<std::size_t> indices;  // source rows in the parent dataset

  std::size_t size() const noexcept { return examples.size(); }
  std::size_t input_dim() const noexcept {
    return examples.empty() ? 0 : examples.front().input.size();
  }
};

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Loss-and-gradient evaluator. Implementations must be deterministic in
/// (params, batch) and safe to call concurrently through a const reference.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dimension() const = 0;
  virtual LossAndGrad evaluate(std::span<const double> params, const Minibatch& batch) const = 0;
};

/// Raised by quadratic/rate formulas evaluated outside their validity range.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an iterative numerical routine fails to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

void validate_minibatch(const Minibatch& batch);

bool all_finite(std::span<const double> v) noexcept;

}  // namespace lookaround
