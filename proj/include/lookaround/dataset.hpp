#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "lookaround/augment.hpp"
#include "lookaround/types.hpp"

namespace lookaround::nn {

enum class DatasetKind { Spirals, Blobs, Glyphs };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view name);

struct Dataset {
  DatasetKind kind = DatasetKind::Spirals;
  int input_dim = 2;
  int num_classes = 2;
  std::vector<Example> train;
  std::vector<Example> test;
};

/// Per-kind noise default: angular noise (radians) for spirals, cluster
/// stddev for blobs, pixel flip probability for glyphs.
double default_noise(DatasetKind kind);

/// Deterministic synthetic data. Train and test draw from separate named
/// streams of the same seed. A negative `noise` selects the kind's default.
///  - spirals: two interleaved arms, 1.5 turns, radius in [0.5, 5]
///  - blobs:   four Gaussian clusters centred on the diagonal y = x
///  - glyphs:  8x8 binary horizontal bar / vertical bar / box / X with random
///             placement and pixel flips
Dataset make_dataset(DatasetKind kind, std::size_t n_train, std::size_t n_test, std::uint64_t seed,
                     double noise = -1.0);

/// Ordered label-preserving transforms for `kind`; returns the first d.
/// Spirals have no coordinate-swap symmetry, so that entry is replaced by a
/// small translation for them.
std::vector<AugmentationSpec> make_augmentations(DatasetKind kind, int d);

/// The full ordered list (6 entries) make_augmentations draws from.
std::vector<AugmentationSpec> augmentation_catalog(DatasetKind kind);

/// d copies of the identity transform.
std::vector<AugmentationSpec> identity_augmentations(int d);

}  // namespace lookaround::nn
