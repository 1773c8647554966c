#include "lookaround/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lookaround::nn {

std::size_t param_count(std::span<const int> widths) {
  if (widths.size() < 2) throw std::invalid_argument("an MLP needs at least input and output widths");
  std::size_t n = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    if (widths[l - 1] < 1 || widths[l] < 1) throw std::invalid_argument("layer widths must be >= 1");
    n += static_cast<std::size_t>(widths[l]) * static_cast<std::size_t>(widths[l - 1] + 1);
  }
  return n;
}

std::vector<int> architecture(int input_dim, std::span<const int> hidden, int classes) {
  std::vector<int> w{input_dim};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(classes);
  return w;
}

MLP::MLP(std::vector<int> widths, ParamVector params) : widths_(std::move(widths)), params_(std::move(params)) {
  require_same_size(params_.size(), param_count(widths_), "MLP parameters");
}

MLP MLP::zeros(std::vector<int> widths) {
  const std::size_t n = param_count(widths);
  return MLP(std::move(widths), ParamVector(n, 0.0));
}

MLP MLP::random(std::vector<int> widths, Rng& rng) {
  ParamVector p(param_count(widths), 0.0);
  std::size_t offset = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    const auto in = static_cast<std::size_t>(widths[l - 1]);
    const auto out = static_cast<std::size_t>(widths[l]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < in * out; ++i) p[offset + i] = dist(rng);
    offset += in * out + out;
  }
  return MLP(std::move(widths), std::move(p));
}

MLP MLP::unflatten(std::vector<int> widths, std::span<const double> flat) {
  return MLP(std::move(widths), ParamVector(flat.begin(), flat.end()));
}

std::vector<double> MLP::logits(std::span<const double> input) const {
  return forward_logits(widths_, params_, input);
}

namespace {

/// Activations of every layer for one input; the last entry holds logits.
void forward(std::span<const int> widths, std::span<const double> params, std::span<const double> input,
             std::vector<std::vector<double>>& acts) {
  require_same_size(input.size(), static_cast<std::size_t>(widths.front()), "MLP input");
  acts.resize(widths.size());
  acts[0].assign(input.begin(), input.end());
  std::size_t offset = 0;
  const std::size_t last = widths.size() - 1;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    const auto in = static_cast<std::size_t>(widths[l - 1]);
    const auto out = static_cast<std::size_t>(widths[l]);
    const double* w = params.data() + offset;
    const double* b = w + in * out;
    std::vector<double>& z = acts[l];
    z.resize(out);
    const std::vector<double>& prev = acts[l - 1];
    for (std::size_t o = 0; o < out; ++o) {
      double sum = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) sum += row[i] * prev[i];
      z[o] = l == last ? sum : std::tanh(sum);
    }
    offset += in * out + out;
  }
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_label(int label, int classes) {
  if (label < 0 || label >= classes) {
    throw std::invalid_argument("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
  }
}

}  // namespace

std::vector<double> forward_logits(std::span<const int> widths, std::span<const double> params,
                                   std::span<const double> input) {
  require_same_size(params.size(), param_count(widths), "MLP parameters");
  std::vector<std::vector<double>> acts;
  forward(widths, params, input, acts);
  return std::move(acts.back());
}

LossAndGrad loss_and_grad(std::span<const int> widths, std::span<const double> params, const Minibatch& batch) {
  require_same_size(params.size(), param_count(widths), "MLP parameters");
  validate_minibatch(batch);
  const std::size_t layers = widths.size() - 1;
  const int classes = widths.back();
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  LossAndGrad out;
  out.grad.assign(params.size(), 0.0);
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;

  std::vector<std::size_t> offsets(widths.size(), 0);
  for (std::size_t l = 1; l < widths.size(); ++l) {
    offsets[l] = offsets[l - 1] + (l == 1 ? 0
                                          : static_cast<std::size_t>(widths[l - 1]) *
                                                static_cast<std::size_t>(widths[l - 2] + 1));
  }

  for (const Example& ex : batch.examples) {
    check_label(ex.label, classes);
    forward(widths, params, ex.input, acts);
    const std::vector<double>& logits = acts.back();
    const double lse = log_sum_exp(logits);
    out.loss += (lse - logits[static_cast<std::size_t>(ex.label)]) * inv_n;

    delta.resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) delta[c] = std::exp(logits[c] - lse) * inv_n;
    delta[static_cast<std::size_t>(ex.label)] -= inv_n;

    for (std::size_t l = layers; l >= 1; --l) {
      const auto in = static_cast<std::size_t>(widths[l - 1]);
      const auto outw = static_cast<std::size_t>(widths[l]);
      const double* w = params.data() + offsets[l];
      double* gw = out.grad.data() + offsets[l];
      double* gb = gw + in * outw;
      const std::vector<double>& a_prev = acts[l - 1];
      for (std::size_t o = 0; o < outw; ++o) {
        const double dz = delta[o];
        gb[o] += dz;
        double* grow = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) grow[i] += dz * a_prev[i];
      }
      if (l == 1) break;
      prev_delta.assign(in, 0.0);
      for (std::size_t o = 0; o < outw; ++o) {
        const double* row = w + o * in;
        for (std::size_t i = 0; i < in; ++i) prev_delta[i] += row[i] * delta[o];
      }
      for (std::size_t i = 0; i < in; ++i) prev_delta[i] *= 1.0 - a_prev[i] * a_prev[i];
      delta.swap(prev_delta);
    }
  }
  return out;
}

LossAndGrad mlp_grad(const MLP& net, const Minibatch& batch) { return loss_and_grad(net.widths(), net.params(), batch); }

double mean_loss(std::span<const int> widths, std::span<const double> params, std::span<const Example> examples) {
  if (examples.empty()) throw std::invalid_argument("mean_loss over an empty set");
  require_same_size(params.size(), param_count(widths), "MLP parameters");
  std::vector<std::vector<double>> acts;
  double total = 0.0;
  for (const Example& ex : examples) {
    check_label(ex.label, widths.back());
    forward(widths, params, ex.input, acts);
    total += log_sum_exp(acts.back()) - acts.back()[static_cast<std::size_t>(ex.label)];
  }
  return total / static_cast<double>(examples.size());
}

double accuracy(std::span<const int> widths, std::span<const double> params, std::span<const Example> examples) {
  if (examples.empty()) throw std::invalid_argument("accuracy over an empty set");
  require_same_size(params.size(), param_count(widths), "MLP parameters");
  std::vector<std::vector<double>> acts;
  std::size_t hits = 0;
  for (const Example& ex : examples) {
    forward(widths, params, ex.input, acts);
    if (argmax(acts.back()) == ex.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

MlpObjective::MlpObjective(std::vector<int> widths) : widths_(std::move(widths)), dim_(param_count(widths_)) {}

LossAndGrad MlpObjective::evaluate(std::span<const double> params, const Minibatch& batch) const {
  return loss_and_grad(widths_, params, batch);
}

}  // namespace lookaround::nn
