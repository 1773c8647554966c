#include "lookaround/augment.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lookaround {

std::string_view to_string(AugKind kind) {
  switch (kind) {
    case AugKind::Identity: return "identity";
    case AugKind::Rotation: return "rotation";
    case AugKind::Jitter: return "jitter";
    case AugKind::Scale: return "scale";
    case AugKind::CoordSwap: return "coord_swap";
    case AugKind::Translate: return "translate";
    case AugKind::PixelShift: return "pixel_shift";
    case AugKind::PixelDropout: return "pixel_dropout";
    case AugKind::HorizontalFlip: return "hflip";
    case AugKind::PixelNoise: return "pixel_noise";
    case AugKind::Contrast: return "contrast";
  }
  return "unknown";
}

namespace {

std::size_t image_side(std::size_t n) {
  auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
  if (side * side != n) throw std::invalid_argument("image augmentation needs a square input");
  return side;
}

void require_2d(std::size_t n, AugKind kind) {
  if (n != 2) {
    throw std::invalid_argument(std::string(to_string(kind)) + " augmentation needs 2-D inputs");
  }
}

}  // namespace

std::vector<double> augment_input(const AugmentationSpec& spec, std::span<const double> input, Rng& rng) {
  std::vector<double> out(input.begin(), input.end());
  const std::size_t n = out.size();
  switch (spec.kind) {
    case AugKind::Identity:
      break;
    case AugKind::Rotation: {
      require_2d(n, spec.kind);
      const double angle = spec.lo == spec.hi ? spec.lo
                                              : std::uniform_real_distribution<double>(spec.lo, spec.hi)(rng);
      const double c = std::cos(angle), s = std::sin(angle);
      out[0] = c * input[0] - s * input[1];
      out[1] = s * input[0] + c * input[1];
      break;
    }
    case AugKind::Jitter:
    case AugKind::PixelNoise: {
      std::normal_distribution<double> noise(0.0, spec.lo);
      for (double& x : out) x += noise(rng);
      break;
    }
    case AugKind::Scale: {
      const double f = spec.lo == spec.hi ? spec.lo
                                          : std::uniform_real_distribution<double>(spec.lo, spec.hi)(rng);
      for (double& x : out) x *= f;
      break;
    }
    case AugKind::CoordSwap:
      require_2d(n, spec.kind);
      std::swap(out[0], out[1]);
      break;
    case AugKind::Translate: {
      std::uniform_real_distribution<double> shift(-spec.lo, spec.lo);
      for (double& x : out) x += shift(rng);
      break;
    }
    case AugKind::PixelShift: {
      const std::size_t side = image_side(n);
      const int dir = std::uniform_int_distribution<int>(0, 3)(rng);
      const int dr = dir == 0 ? -1 : dir == 1 ? 1 : 0;
      const int dc = dir == 2 ? -1 : dir == 3 ? 1 : 0;
      const auto iside = static_cast<int>(side);
      for (int r = 0; r < iside; ++r) {
        for (int c = 0; c < iside; ++c) {
          const int sr = r - dr, sc = c - dc;
          const bool inside = sr >= 0 && sr < iside && sc >= 0 && sc < iside;
          out[static_cast<std::size_t>(r * iside + c)] =
              inside ? input[static_cast<std::size_t>(sr * iside + sc)] : 0.0;
        }
      }
      break;
    }
    case AugKind::PixelDropout: {
      std::bernoulli_distribution drop(spec.lo);
      for (double& x : out) {
        if (drop(rng)) x = 0.0;
      }
      break;
    }
    case AugKind::HorizontalFlip: {
      const std::size_t side = image_side(n);
      for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) out[r * side + c] = input[r * side + (side - 1 - c)];
      }
      break;
    }
    case AugKind::Contrast: {
      const double f = std::uniform_real_distribution<double>(spec.lo, spec.hi)(rng);
      const double mean = std::accumulate(input.begin(), input.end(), 0.0) / static_cast<double>(n);
      for (double& x : out) x = (x - mean) * f + mean;
      break;
    }
  }
  return out;
}

Minibatch apply_augmentation(const AugmentationSpec& spec, const Minibatch& batch, Rng& rng) {
  if (spec.kind == AugKind::Identity) return batch;
  Minibatch out;
  out.indices = batch.indices;
  out.examples.reserve(batch.examples.size());
  for (const Example& ex : batch.examples) {
    out.examples.push_back(Example{augment_input(spec, ex.input, rng), ex.label});
  }
  return out;
}

}  // namespace lookaround
