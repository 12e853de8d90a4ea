#include "ulo/data.hpp"

#include <cstdio>
#include <fstream>

#include "ulo/error.hpp"

namespace ulo {
namespace {

constexpr uint32_t kImageMagic = 2051;
constexpr uint32_t kLabelMagic = 2049;

uint32_t read_u32_be(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError("truncated IDX header in " + path);
  }
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) |
         uint32_t(b[3]);
}

void write_u32_be(std::ofstream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return in;
}

}  // namespace

Tensor load_idx_images(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  const uint32_t magic = read_u32_be(in, path);
  if (magic != kImageMagic) {
    throw FormatError("bad IDX image magic in " + path + ": expected " +
                      std::to_string(kImageMagic) + ", got " + std::to_string(magic));
  }
  const int64_t count = read_u32_be(in, path);
  const int64_t rows = read_u32_be(in, path);
  const int64_t cols = read_u32_be(in, path);
  const int64_t total = count * rows * cols;
  std::vector<unsigned char> bytes(static_cast<size_t>(total));
  if (!in.read(reinterpret_cast<char*>(bytes.data()), total)) {
    throw FormatError("truncated IDX image data in " + path + ": expected " +
                      std::to_string(total) + " pixels");
  }
  Tensor images = Tensor::uninit({count, 1, rows, cols});
  for (int64_t i = 0; i < total; ++i) {
    images[i] = static_cast<double>(bytes[i]) / 255.0;
  }
  return images;
}

std::vector<int32_t> load_idx_labels(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  const uint32_t magic = read_u32_be(in, path);
  if (magic != kLabelMagic) {
    throw FormatError("bad IDX label magic in " + path + ": expected " +
                      std::to_string(kLabelMagic) + ", got " + std::to_string(magic));
  }
  const int64_t count = read_u32_be(in, path);
  std::vector<unsigned char> bytes(static_cast<size_t>(count));
  if (!in.read(reinterpret_cast<char*>(bytes.data()), count)) {
    throw FormatError("truncated IDX label data in " + path + ": expected " +
                      std::to_string(count) + " labels");
  }
  return {bytes.begin(), bytes.end()};
}

MnistDataset load_mnist(const std::string& images_path,
                        const std::string& labels_path) {
  MnistDataset ds;
  ds.images = load_idx_images(images_path);
  ds.labels = load_idx_labels(labels_path);
  if (ds.images.dim(0) != ds.size()) {
    throw FormatError("image/label count mismatch: " +
                      std::to_string(ds.images.dim(0)) + " images vs " +
                      std::to_string(ds.size()) + " labels");
  }
  return ds;
}

void write_idx_images(const std::string& path, const std::vector<uint8_t>& pixels,
                      int64_t count, int64_t rows, int64_t cols) {
  if (static_cast<int64_t>(pixels.size()) != count * rows * cols) {
    throw FormatError("write_idx_images: pixel count mismatch");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  write_u32_be(out, kImageMagic);
  write_u32_be(out, static_cast<uint32_t>(count));
  write_u32_be(out, static_cast<uint32_t>(rows));
  write_u32_be(out, static_cast<uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw FormatError("short write to " + path);
}

void write_idx_labels(const std::string& path, const std::vector<uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  write_u32_be(out, kLabelMagic);
  write_u32_be(out, static_cast<uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
  if (!out) throw FormatError("short write to " + path);
}

}  // namespace ulo
