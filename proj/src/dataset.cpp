#include "lookaround/dataset.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lookaround/rng.hpp"

namespace lookaround::nn {

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Spirals: return "spirals";
    case DatasetKind::Blobs: return "blobs";
    case DatasetKind::Glyphs: return "glyphs";
  }
  return "unknown";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "spirals") return DatasetKind::Spirals;
  if (name == "blobs") return DatasetKind::Blobs;
  if (name == "glyphs") return DatasetKind::Glyphs;
  throw std::invalid_argument("unknown dataset kind '" + std::string(name) + "'");
}

double default_noise(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Spirals: return 0.25;
    case DatasetKind::Blobs: return 0.5;
    case DatasetKind::Glyphs: return 0.05;
  }
  return 0.0;
}

namespace {

constexpr double kPi = std::numbers::pi;

Example spiral_point(int label, double noise, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double t = unit(rng);
  const double radius = 5.0 * (0.1 + 0.9 * t);
  double angle = 1.5 * 2.0 * kPi * t + label * kPi;
  if (noise > 0.0) angle += noise * normal(rng);
  return {{radius * std::cos(angle), radius * std::sin(angle)}, label};
}

Example blob_point(int label, double noise, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double centre = -3.0 + 2.0 * label;
  Example ex{{centre, centre}, label};
  if (noise > 0.0) {
    ex.input[0] += noise * normal(rng);
    ex.input[1] += noise * normal(rng);
  }
  return ex;
}

Example glyph(int label, double flip_prob, Rng& rng) {
  constexpr int side = 8;
  std::vector<double> img(side * side, 0.0);
  auto set = [&](int r, int c) {
    if (r >= 0 && r < side && c >= 0 && c < side) img[static_cast<std::size_t>(r * side + c)] = 1.0;
  };
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  switch (label) {
    case 0: {  // horizontal bar
      const int len = uniform(4, 8), c0 = uniform(0, side - len), r = uniform(1, 6), thick = uniform(1, 2);
      for (int dr = 0; dr < thick; ++dr)
        for (int c = c0; c < c0 + len; ++c) set(r + dr, c);
      break;
    }
    case 1: {  // vertical bar
      const int len = uniform(4, 8), r0 = uniform(0, side - len), c = uniform(1, 6), thick = uniform(1, 2);
      for (int dc = 0; dc < thick; ++dc)
        for (int r = r0; r < r0 + len; ++r) set(r, c + dc);
      break;
    }
    case 2: {  // box outline
      const int size = uniform(4, 7), r0 = uniform(0, side - size), c0 = uniform(0, side - size);
      for (int i = 0; i < size; ++i) {
        set(r0, c0 + i);
        set(r0 + size - 1, c0 + i);
        set(r0 + i, c0);
        set(r0 + i, c0 + size - 1);
      }
      break;
    }
    default: {  // X
      const int size = uniform(5, 8), r0 = uniform(0, side - size), c0 = uniform(0, side - size);
      for (int i = 0; i < size; ++i) {
        set(r0 + i, c0 + i);
        set(r0 + i, c0 + size - 1 - i);
      }
      break;
    }
  }
  if (flip_prob > 0.0) {
    std::bernoulli_distribution flip(flip_prob);
    for (double& px : img) {
      if (flip(rng)) px = 1.0 - px;
    }
  }
  return {std::move(img), label};
}

std::vector<Example> generate(DatasetKind kind, std::size_t n, double noise, Rng& rng) {
  std::vector<Example> out;
  out.reserve(n);
  const int classes = kind == DatasetKind::Spirals ? 2 : 4;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    switch (kind) {
      case DatasetKind::Spirals: out.push_back(spiral_point(label, noise, rng)); break;
      case DatasetKind::Blobs: out.push_back(blob_point(label, noise, rng)); break;
      case DatasetKind::Glyphs: out.push_back(glyph(label, noise, rng)); break;
    }
  }
  return out;
}

}  // namespace

Dataset make_dataset(DatasetKind kind, std::size_t n_train, std::size_t n_test, std::uint64_t seed, double noise) {
  if (n_train < 1 || n_test < 1) throw std::invalid_argument("dataset sizes must be >= 1");
  if (noise < 0.0) noise = default_noise(kind);
  Dataset ds;
  ds.kind = kind;
  ds.input_dim = kind == DatasetKind::Glyphs ? 64 : 2;
  ds.num_classes = kind == DatasetKind::Spirals ? 2 : 4;
  Rng train_rng = make_rng(seed, "dataset/train");
  Rng test_rng = make_rng(seed, "dataset/test");
  ds.train = generate(kind, n_train, noise, train_rng);
  ds.test = generate(kind, n_test, noise, test_rng);
  return ds;
}

std::vector<AugmentationSpec> augmentation_catalog(DatasetKind kind) {
  constexpr double deg15 = 15.0 * kPi / 180.0;
  std::vector<AugmentationSpec> out;
  if (kind == DatasetKind::Glyphs) {
    out = {
        AugmentationSpec::identity(),
        {AugKind::PixelShift, 0.0, 0.0, 1, "pixel_shift"},
        {AugKind::PixelDropout, 0.1, 0.0, 2, "pixel_dropout"},
        {AugKind::HorizontalFlip, 0.0, 0.0, 3, "hflip"},
        {AugKind::PixelNoise, 0.2, 0.0, 4, "pixel_noise"},
        {AugKind::Contrast, 0.7, 1.3, 5, "contrast"},
    };
  } else {
    out = {
        AugmentationSpec::identity(),
        {AugKind::Rotation, -deg15, deg15, 1, "rotation15"},
        {AugKind::Jitter, 0.3, 0.0, 2, "jitter"},
        {AugKind::Scale, 0.9, 1.1, 3, "scale"},
        kind == DatasetKind::Blobs ? AugmentationSpec{AugKind::CoordSwap, 0.0, 0.0, 4, "coord_swap"}
                                   : AugmentationSpec{AugKind::Translate, 0.2, 0.0, 4, "translate"},
        {AugKind::Jitter, 0.35, 0.0, 5, "heavy_jitter"},
    };
  }
  return out;
}

std::vector<AugmentationSpec> make_augmentations(DatasetKind kind, int d) {
  std::vector<AugmentationSpec> all = augmentation_catalog(kind);
  if (d < 1 || d > static_cast<int>(all.size())) {
    throw std::invalid_argument("number of augmentations d must lie in [1, " + std::to_string(all.size()) + "]");
  }
  all.resize(static_cast<std::size_t>(d));
  return all;
}

std::vector<AugmentationSpec> identity_augmentations(int d) {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  std::vector<AugmentationSpec> out;
  for (int j = 0; j < d; ++j) {
    AugmentationSpec s = AugmentationSpec::identity();
    s.stream = static_cast<std::uint64_t>(j);
    out.push_back(s);
  }
  return out;
}

}  // namespace lookaround::nn
