#include "enhancekit/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "enhancekit/errors.hpp"
#include "enhancekit/image_io.hpp"

namespace enhancekit {
namespace {

struct Color {
  double r, g, b;
};

Color random_color(RandomSource& rng) { return {rng.uniform(), rng.uniform(), rng.uniform()}; }

double luma(const Color& c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

bool inside(ToyShape shape, double x, double y, double cx, double cy, double radius, double angle) {
  const double dx = x - cx, dy = y - cy;
  switch (shape) {
    case ToyShape::disc:
      return dx * dx + dy * dy <= radius * radius;
    case ToyShape::square: {
      const double c = std::cos(angle), s = std::sin(angle);
      const double u = c * dx + s * dy, v = -s * dx + c * dy;
      const double half = radius * 0.85;
      return std::abs(u) <= half && std::abs(v) <= half;
    }
    case ToyShape::triangle: {
      // Inside when on the inner side of all three edges of an equilateral triangle.
      for (int k = 0; k < 3; ++k) {
        const double a = angle + 2.0 * std::numbers::pi * k / 3.0;
        if (std::cos(a) * dx + std::sin(a) * dy > 0.5 * radius) return false;
      }
      return true;
    }
    case ToyShape::ring: {
      const double d2 = dx * dx + dy * dy;
      return d2 <= radius * radius && d2 >= 0.36 * radius * radius;
    }
  }
  return false;
}

}  // namespace

Tensor make_toy_image(RandomSource& rng, ToyShape shape, int size) {
  if (size < 4) throw ContractError("toy images need at least 4 pixels per side");
  const Color bg0 = random_color(rng);
  const Color bg1 = random_color(rng);
  Color fg = random_color(rng);
  // Keep the shape visible against the background.
  if (std::abs(luma(fg) - 0.5 * (luma(bg0) + luma(bg1))) < 0.25) {
    const double shift = luma(fg) < 0.5 * (luma(bg0) + luma(bg1)) ? -0.35 : 0.35;
    fg = {std::clamp(fg.r + shift, 0.0, 1.0), std::clamp(fg.g + shift, 0.0, 1.0), std::clamp(fg.b + shift, 0.0, 1.0)};
  }
  const double grad_angle = 2.0 * std::numbers::pi * rng.uniform();
  const double radius = size * (0.22 + 0.13 * rng.uniform());
  const double cx = size * 0.5 + (rng.uniform() - 0.5) * (size - 2.0 * radius) * 0.8;
  const double cy = size * 0.5 + (rng.uniform() - 0.5) * (size - 2.0 * radius) * 0.8;
  const double angle = 2.0 * std::numbers::pi * rng.uniform();

  Tensor img({size, size, 3}, Space::display);
  const double gc = std::cos(grad_angle), gs = std::sin(grad_angle);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = std::clamp(0.5 + ((x + 0.5 - size * 0.5) * gc + (y + 0.5 - size * 0.5) * gs) / size, 0.0, 1.0);
      const Color bg{bg0.r + (bg1.r - bg0.r) * u, bg0.g + (bg1.g - bg0.g) * u, bg0.b + (bg1.b - bg0.b) * u};
      int hits = 0;
      for (int sy = 0; sy < 4; ++sy) {
        for (int sx = 0; sx < 4; ++sx) {
          hits += inside(shape, x + (sx + 0.5) / 4.0, y + (sy + 0.5) / 4.0, cx, cy, radius, angle) ? 1 : 0;
        }
      }
      const double cov = hits / 16.0;
      img.at(y, x, 0) = bg.r + (fg.r - bg.r) * cov;
      img.at(y, x, 1) = bg.g + (fg.g - bg.g) * cov;
      img.at(y, x, 2) = bg.b + (fg.b - bg.b) * cov;
    }
  }
  return img;
}

std::vector<LabeledImage> make_toy_dataset(int count, int size, std::uint64_t seed) {
  RandomSource rng(seed, 0xda7a);
  std::vector<LabeledImage> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int label = i % kToyShapeCount;
    out.push_back({make_toy_image(rng, static_cast<ToyShape>(label), size), label});
  }
  return out;
}

void write_dataset_dir(const std::string& dir, const std::vector<LabeledImage>& items) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory " + dir + ": " + ec.message());
  std::ostringstream index;
  for (std::size_t i = 0; i < items.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%05zu.png", i);
    write_png((std::filesystem::path(dir) / name).string(), items[i].image);
    index << name << ' ' << items[i].label << '\n';
  }
  std::ofstream f(std::filesystem::path(dir) / "index.txt");
  if (!f) throw IoError("cannot write index.txt in " + dir);
  f << index.str();
}

std::vector<LabeledImage> read_dataset_dir(const std::string& dir) {
  const auto index_path = std::filesystem::path(dir) / "index.txt";
  std::ifstream f(index_path);
  if (!f) throw IoError("dataset index not found: " + index_path.string());
  std::vector<LabeledImage> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string name;
    int label = -1;
    if (!(ss >> name)) continue;
    if (!(ss >> label)) label = -1;
    out.push_back({read_png((std::filesystem::path(dir) / name).string()), label});
  }
  if (out.empty()) throw IoError("dataset " + dir + " lists no images");
  return out;
}

}  // namespace enhancekit
