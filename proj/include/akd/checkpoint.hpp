#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "akd/mlp.hpp"

namespace akd {

// AKD1 layout, all little-endian:
//   "AKD1" | u32 layer_count | per layer: u32 rows | u32 cols |
//   rows*cols f64 weights (row-major) | cols f64 biases
std::vector<std::uint8_t> encode_checkpoint(const MlpModel& model);
// ParseError on bad magic, truncation or trailing bytes.
MlpModel decode_checkpoint(const std::vector<std::uint8_t>& bytes);

// IoError when the file cannot be written/read.
void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path);

}  // namespace akd
