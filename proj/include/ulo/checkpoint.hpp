#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ulo/tensor.hpp"

namespace ulo {

// Flat binary container, little-endian throughout:
//   8 bytes  magic "ULOCKPT\0"
//   u32      format version (currently 1)
//   u32      reserved (0)
//   u64      record count
// then per record:
//   u64      name length, followed by that many UTF-8 bytes
//   u64      rank, followed by rank u64 dims
//   f64[...] row-major data (product of dims values)
// The layout is documented in docs/formats.md.

void save_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, const Tensor*>>& tensors);

std::vector<std::pair<std::string, Tensor>> load_checkpoint(
    const std::string& path);

// Strict restore: every target must be present with the same shape, and no
// extra records may remain.
void load_checkpoint_into(
    const std::string& path,
    const std::vector<std::pair<std::string, Tensor*>>& targets);

}  // namespace ulo
