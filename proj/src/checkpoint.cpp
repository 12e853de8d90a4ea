#include "ulo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "ulo/error.hpp"

namespace ulo {
namespace {

constexpr char kMagic[8] = {'U', 'L', 'O', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ofstream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ofstream& out, double d) {
  put_u64(out, std::bit_cast<uint64_t>(d));
}

uint32_t get_u32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError("truncated checkpoint " + path);
  }
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::ifstream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw FormatError("truncated checkpoint " + path);
  }
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path);
  out.write(kMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, 0);
  put_u64(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    put_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(out, t->rank());
    for (size_t i = 0; i < t->rank(); ++i) {
      put_u64(out, static_cast<uint64_t>(t->dim(i)));
    }
    for (int64_t i = 0; i < t->numel(); ++i) put_f64(out, (*t)[i]);
  }
  if (!out) throw FormatError("short write to checkpoint " + path);
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError("bad checkpoint magic in " + path);
  }
  const uint32_t version = get_u32(in, path);
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " in " + path + " (expected " + std::to_string(kVersion) + ")");
  }
  get_u32(in, path);  // reserved
  const uint64_t count = get_u64(in, path);
  std::vector<std::pair<std::string, Tensor>> result;
  result.reserve(count);
  for (uint64_t r = 0; r < count; ++r) {
    const uint64_t name_len = get_u64(in, path);
    if (name_len > (1u << 20)) {
      throw FormatError("implausible name length in checkpoint " + path);
    }
    std::string name(name_len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name_len))) {
      throw FormatError("truncated checkpoint " + path);
    }
    const uint64_t rank = get_u64(in, path);
    if (rank > 8) throw FormatError("implausible rank in checkpoint " + path);
    Shape shape(rank);
    for (uint64_t i = 0; i < rank; ++i) {
      shape[i] = static_cast<int64_t>(get_u64(in, path));
    }
    Tensor t = Tensor::uninit(shape);
    for (int64_t i = 0; i < t.numel(); ++i) {
      t[i] = std::bit_cast<double>(get_u64(in, path));
    }
    result.emplace_back(std::move(name), std::move(t));
  }
  return result;
}

void load_checkpoint_into(
    const std::string& path,
    const std::vector<std::pair<std::string, Tensor*>>& targets) {
  auto records = load_checkpoint(path);
  std::map<std::string, Tensor*> by_name;
  for (const auto& [name, t] : targets) by_name[name] = t;
  if (records.size() != targets.size()) {
    throw FormatError("checkpoint " + path + " holds " +
                      std::to_string(records.size()) + " tensors, expected " +
                      std::to_string(targets.size()));
  }
  for (auto& [name, loaded] : records) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw FormatError("checkpoint " + path + " has unexpected tensor '" + name + "'");
    }
    if (loaded.shape() != it->second->shape()) {
      throw FormatError("checkpoint tensor '" + name + "' has shape " +
                        shape_str(loaded.shape()) + ", expected " +
                        shape_str(it->second->shape()));
    }
    *it->second = std::move(loaded);
  }
}

}  // namespace ulo
