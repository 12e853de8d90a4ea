#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ulo/tensor.hpp"

namespace ulo {

// Images in [0,1] (raw bytes / 255), labels 0..9.
struct MnistDataset {
  Tensor images;  // [N, 1, H, W]
  std::vector<int32_t> labels;

  int64_t size() const { return static_cast<int64_t>(labels.size()); }
};

// Big-endian IDX readers (image magic 2051, label magic 2049).
Tensor load_idx_images(const std::string& path);
std::vector<int32_t> load_idx_labels(const std::string& path);

MnistDataset load_mnist(const std::string& images_path,
                        const std::string& labels_path);

// IDX writers, byte-exact counterparts of the readers.
void write_idx_images(const std::string& path, const std::vector<uint8_t>& pixels,
                      int64_t count, int64_t rows, int64_t cols);
void write_idx_labels(const std::string& path, const std::vector<uint8_t>& labels);

}  // namespace ulo
