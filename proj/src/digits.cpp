#include "ulo/digits.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ulo/data.hpp"
#include "ulo/error.hpp"

namespace ulo {
namespace {

struct Pt {
  double x, y;
};

using Stroke = std::vector<Pt>;

void arc(Stroke& s, double cx, double cy, double rx, double ry, double a0_deg,
         double a1_deg, int segments = 20) {
  for (int i = 0; i <= segments; ++i) {
    const double a = (a0_deg + (a1_deg - a0_deg) * i / segments) * M_PI / 180.0;
    // y grows downward on the canvas, so positive angles go up
    s.push_back({cx + rx * std::cos(a), cy - ry * std::sin(a)});
  }
}

Stroke line(std::initializer_list<Pt> pts) { return Stroke(pts); }

// Skeletons live in a unit box, x right, y down.
std::vector<Stroke> skeleton(int digit) {
  std::vector<Stroke> strokes;
  switch (digit) {
    case 0: {
      Stroke s;
      arc(s, 0.50, 0.50, 0.27, 0.38, 90, 450, 36);
      strokes.push_back(std::move(s));
      break;
    }
    case 1: {
      strokes.push_back(line({{0.36, 0.28}, {0.55, 0.11}, {0.55, 0.89}}));
      break;
    }
    case 2: {
      Stroke s;
      arc(s, 0.50, 0.30, 0.26, 0.20, 160, -15, 18);
      s.push_back({0.26, 0.86});
      s.push_back({0.80, 0.86});
      strokes.push_back(std::move(s));
      break;
    }
    case 3: {
      Stroke top;
      arc(top, 0.47, 0.30, 0.22, 0.19, 150, -90, 18);
      strokes.push_back(std::move(top));
      Stroke bot;
      arc(bot, 0.47, 0.68, 0.25, 0.21, 90, -150, 18);
      strokes.push_back(std::move(bot));
      break;
    }
    case 4: {
      strokes.push_back(line({{0.58, 0.10}, {0.18, 0.60}, {0.84, 0.60}}));
      strokes.push_back(line({{0.62, 0.28}, {0.62, 0.90}}));
      break;
    }
    case 5: {
      strokes.push_back(line({{0.76, 0.12}, {0.30, 0.12}, {0.27, 0.46}}));
      Stroke belly;
      arc(belly, 0.47, 0.66, 0.26, 0.22, 115, -140, 20);
      strokes.push_back(std::move(belly));
      break;
    }
    case 6: {
      Stroke sweep;
      arc(sweep, 0.55, 0.34, 0.30, 0.25, 65, 180, 14);
      sweep.push_back({0.26, 0.62});
      strokes.push_back(std::move(sweep));
      Stroke loop;
      arc(loop, 0.49, 0.67, 0.23, 0.21, 90, 450, 28);
      strokes.push_back(std::move(loop));
      break;
    }
    case 7: {
      strokes.push_back(line({{0.20, 0.13}, {0.80, 0.13}, {0.42, 0.88}}));
      break;
    }
    case 8: {
      Stroke top;
      arc(top, 0.50, 0.30, 0.20, 0.18, 90, 450, 28);
      strokes.push_back(std::move(top));
      Stroke bot;
      arc(bot, 0.50, 0.69, 0.24, 0.21, 90, 450, 28);
      strokes.push_back(std::move(bot));
      break;
    }
    case 9: {
      Stroke loop;
      arc(loop, 0.51, 0.32, 0.22, 0.20, 90, 450, 28);
      strokes.push_back(std::move(loop));
      strokes.push_back(line({{0.73, 0.34}, {0.71, 0.58}, {0.58, 0.88}}));
      break;
    }
    default:
      throw ContractError("render_digit: digit out of range");
  }
  return strokes;
}

double dist_to_segment(double px, double py, Pt a, Pt b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

void render_digit(int digit, Rng& rng, uint8_t* out) {
  auto strokes = skeleton(digit);

  // random affine warp of the unit box
  const double rot = rng.uniform(-0.22, 0.22);
  const double sx = rng.uniform(0.82, 1.12);
  const double sy = rng.uniform(0.82, 1.12);
  const double shear = rng.uniform(-0.18, 0.18);
  const double tx = rng.uniform(-0.05, 0.05);
  const double ty = rng.uniform(-0.05, 0.05);
  const double cr = std::cos(rot), sr = std::sin(rot);

  // unit box -> 20px glyph box centred in the 28px canvas (MNIST-style)
  const double box = 20.0, off = 4.0;
  for (auto& s : strokes) {
    for (auto& p : s) {
      double x = p.x - 0.5 + rng.normal() * 0.012;
      double y = p.y - 0.5 + rng.normal() * 0.012;
      x *= sx;
      y *= sy;
      x += shear * y;
      const double xr = cr * x - sr * y;
      const double yr = sr * x + cr * y;
      p.x = off + (xr + 0.5 + tx) * box;
      p.y = off + (yr + 0.5 + ty) * box;
    }
  }

  const double half_w = rng.uniform(0.55, 1.25);  // stroke half-width, px
  const double aa = 0.7;                          // soft edge, px
  const double ink = rng.uniform(0.72, 1.0);

  double cover[28 * 28] = {};
  for (const auto& s : strokes) {
    for (size_t i = 0; i + 1 < s.size(); ++i) {
      const Pt a = s[i], b = s[i + 1];
      const double reach = half_w + aa + 1.0;
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - reach)));
      const int x1 = std::min(27, static_cast<int>(std::ceil(std::max(a.x, b.x) + reach)));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - reach)));
      const int y1 = std::min(27, static_cast<int>(std::ceil(std::max(a.y, b.y) + reach)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double d = dist_to_segment(x + 0.5, y + 0.5, a, b);
          const double c = std::clamp((half_w + aa - d) / aa, 0.0, 1.0);
          if (c > cover[y * 28 + x]) cover[y * 28 + x] = c;
        }
      }
    }
  }

  for (int i = 0; i < 28 * 28; ++i) {
    double v = ink * cover[i] + rng.normal() * 0.02;
    v = std::clamp(v, 0.0, 1.0);
    out[i] = static_cast<uint8_t>(std::lround(v * 255.0));
  }
}

void generate_digit_corpus(const std::string& dir, const DigitCorpusConfig& cfg) {
  auto make_split = [&](int64_t count, uint64_t stream, const std::string& img_name,
                        const std::string& lbl_name) {
    Rng rng = Rng::derive(cfg.seed, stream);
    std::vector<uint8_t> pixels(static_cast<size_t>(count) * 28 * 28);
    std::vector<uint8_t> labels(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) {
      const int digit = static_cast<int>(rng.below(10));
      labels[static_cast<size_t>(i)] = static_cast<uint8_t>(digit);
      render_digit(digit, rng, pixels.data() + i * 28 * 28);
    }
    write_idx_images(dir + "/" + img_name, pixels, count, 28, 28);
    write_idx_labels(dir + "/" + lbl_name, labels);
  };
  make_split(cfg.train_count, 0x7261696eULL, "train-images-idx3-ubyte",
             "train-labels-idx1-ubyte");
  make_split(cfg.test_count, 0x74657374ULL, "t10k-images-idx3-ubyte",
             "t10k-labels-idx1-ubyte");
}

}  // namespace ulo
