#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tricortex/tensor.hpp"

namespace tricortex {

/// Bad or missing input files, layout violations, label problems.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Tensor images;  // [n, H, W, C], values in [0,1] before corruption
  std::vector<int64_t> labels;
  int64_t class_count = 0;
  std::string name;
  Tensor human_probs;  // optional [n, class_count], rows sum to 1

  int64_t size() const { return images.defined() ? images.dim(0) : 0; }
  int64_t height() const { return images.dim(1); }
  int64_t width() const { return images.dim(2); }
  int64_t channels() const { return images.dim(3); }
};

/// Record layout for raw binary image files: one label byte followed by
/// channel-planar pixel bytes (channels * height * width of them).
struct BinaryLayout {
  int64_t height = 32;
  int64_t width = 32;
  int64_t channels = 3;
  int64_t classes = 10;
  int64_t record_bytes() const { return 1 + height * width * channels; }
};

Dataset load_binary_images(const std::string& path, const BinaryLayout& layout);

/// Balanced dataset of filled geometric shapes (one shape family per
/// class) at random position, scale, and intensity on a black background.
/// size >= 16, classes in 2..10, deterministic per seed.
Dataset synth_shapes(int64_t n, int64_t size, int64_t classes, uint64_t seed);

/// Adds N(0, sigma^2) per pixel. Values are intentionally NOT clipped to
/// [0,1]: clipping would make the corruption non-Gaussian.
Dataset add_gaussian_noise(const Dataset& ds, double sigma, uint64_t seed);

/// Attaches per-sample human class probabilities from a comma-delimited
/// text file, one row per image in dataset order. Rows within 1e-3 of
/// sum 1 are renormalized; anything further off is rejected.
Dataset load_human_probs(const std::string& path, Dataset ds);

/// Pearson correlation; empty when either side has zero variance.
std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y);

/// Seeded shuffle split into (train, val); exact partition of indices.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double val_fraction,
                                          uint64_t seed);

Dataset take_subset(const Dataset& ds, std::span<const int64_t> indices);

Tensor batch_pixels(const Dataset& ds, std::span<const int64_t> indices);
std::vector<int64_t> batch_labels(const Dataset& ds,
                                  std::span<const int64_t> indices);

}  // namespace tricortex
