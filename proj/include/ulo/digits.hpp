#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ulo/rng.hpp"

namespace ulo {

// Procedural 28x28 handwritten-style digit corpus in MNIST's IDX layout.
// Digits are rendered from per-class stroke skeletons with random affine
// warps, stroke-width/ink variation, vertex jitter and pixel noise, so a
// classifier has real within-class variation to absorb.

struct DigitCorpusConfig {
  int64_t train_count = 60000;
  int64_t test_count = 10000;
  uint64_t seed = 1;
};

// Renders one digit into a 28*28 byte buffer (row-major, 0 = background).
void render_digit(int digit, Rng& rng, uint8_t* out);

// Writes train-images-idx3-ubyte, train-labels-idx1-ubyte,
// t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte under dir.
void generate_digit_corpus(const std::string& dir, const DigitCorpusConfig& cfg);

}  // namespace ulo
