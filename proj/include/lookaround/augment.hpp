#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lookaround/rng.hpp"
#include "lookaround/types.hpp"

namespace lookaround {

enum class AugKind {
  Identity,
  Rotation,      // 2-D rotation, angle ~ U[lo, hi] radians
  Jitter,        // additive Gaussian noise, stddev = lo
  Scale,         // multiply by U[lo, hi]
  CoordSwap,     // (x, y) -> (y, x)
  Translate,     // add U[-lo, lo] per coordinate, shared across the example
  PixelShift,    // shift an image by one pixel in a random direction
  PixelDropout,  // zero each pixel with probability lo
  HorizontalFlip,
  PixelNoise,    // additive Gaussian noise on pixels, stddev = lo
  Contrast,      // (x - mean) * U[lo, hi] + mean
};

/// One label-preserving transform. `stream` distinguishes specs that share a
/// kind so two replicas with the same transform still draw different noise.
struct AugmentationSpec {
  AugKind kind = AugKind::Identity;
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t stream = 0;
  std::string name;

  static AugmentationSpec identity() { return {AugKind::Identity, 0.0, 0.0, 0, "identity"}; }
};

std::string_view to_string(AugKind kind);

/// Applies `spec` to every example. Labels, indices and example count are
/// carried over unchanged; identity returns a bit-identical copy.
Minibatch apply_augmentation(const AugmentationSpec& spec, const Minibatch& batch, Rng& rng);

/// Single-example form used by evaluation code (test-set shift checks).
std::vector<double> augment_input(const AugmentationSpec& spec, std::span<const double> input, Rng& rng);

}  // namespace lookaround
