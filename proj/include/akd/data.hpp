#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "akd/tensor.hpp"

namespace akd {

// Labelled feature matrix with a disjoint train/validation split.
struct Dataset {
  Matrix features;  // n x d
  std::vector<int> labels;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
  std::size_t classes = 0;
  std::string provenance;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  Matrix gather_features(std::span<const std::size_t> indices) const;
  std::vector<int> gather_labels(std::span<const std::size_t> indices) const;
};

// c Gaussian clusters with isotropic deviation `spread` around unit-norm
// regular-simplex vertices (falling back to a regular polygon in the first two
// coordinates when d < c - 1). 80/20 split by seeded shuffle.
Dataset make_blobs(std::size_t n, std::size_t c, std::size_t d, double spread, std::uint64_t seed);

// Concentric annuli in the plane, class k at radius k + 1, with Gaussian
// radial noise.
Dataset make_rings(std::size_t n, std::size_t c, double noise, std::uint64_t seed);

struct DelimitedOptions {
  std::size_t label_column = 0;
  char delimiter = ',';
  bool has_header = false;
  std::uint64_t seed = 0;  // split shuffle
};

// Numeric delimited text. Labels must be non-negative integers; the class
// count is max(label) + 1. Errors carry 1-based line numbers.
Dataset load_delimited(const std::filesystem::path& path, const DelimitedOptions& options);

// Rescales every feature to zero mean and unit variance using statistics of
// the train split only; constant features are only centered.
void standardize(Dataset& data);

}  // namespace akd
