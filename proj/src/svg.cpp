#include "ulo/svg.hpp"

#include <cstdio>
#include <fstream>

#include "ulo/error.hpp"

namespace ulo {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<ScatterPoint>& points) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);

  constexpr double kSize = 640.0;
  constexpr double kHalf = kSize / 2.0;
  constexpr double kScale = 280.0;  // unit length in px
  auto sx = [&](double x) { return kHalf + kScale * x; };
  auto sy = [&](double y) { return kHalf - kScale * y; };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize
      << "\" height=\"" << kSize << "\" viewBox=\"0 0 " << kSize << " " << kSize
      << "\">\n";
  out << "  <rect width=\"" << kSize << "\" height=\"" << kSize
      << "\" fill=\"white\"/>\n";
  out << "  <circle cx=\"" << kHalf << "\" cy=\"" << kHalf << "\" r=\"" << kScale
      << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  out << "  <line x1=\"" << num(sx(-1.05)) << "\" y1=\"" << kHalf << "\" x2=\""
      << num(sx(1.05)) << "\" y2=\"" << kHalf
      << "\" stroke=\"#dddddd\"/>\n";
  out << "  <line x1=\"" << kHalf << "\" y1=\"" << num(sy(-1.05)) << "\" x2=\""
      << kHalf << "\" y2=\"" << num(sy(1.05)) << "\" stroke=\"#dddddd\"/>\n";
  out << "  <text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
  out << "  <text x=\"" << num(sx(1.02)) << "\" y=\"" << num(kHalf - 6)
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
      << "</text>\n";
  out << "  <text x=\"" << num(kHalf + 6) << "\" y=\"" << num(sy(1.02))
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << y_label
      << "</text>\n";
  for (const auto& p : points) {
    out << "  <circle class=\"marker\" cx=\"" << num(sx(p.x)) << "\" cy=\""
        << num(sy(p.y)) << "\" r=\"" << num(p.radius_px) << "\" fill=\""
        << p.color << "\" fill-opacity=\"0.65\"/>\n";
  }
  out << "</svg>\n";
  if (!out) throw FormatError("short write to " + path);
}

}  // namespace ulo
