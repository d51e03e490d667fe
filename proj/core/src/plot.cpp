#include "enhancekit/plot.hpp"

#include <algorithm>
#include <cmath>

#include "enhancekit/errors.hpp"

namespace enhancekit {
namespace {

struct Rgb {
  double r, g, b;
};

class Canvas {
 public:
  Canvas(int w, int h) : img_({h, w, 3}, Space::display, 1.0) {}

  void pixel(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img_.width() || y >= img_.height()) return;
    img_.at(y, x, 0) = c.r;
    img_.at(y, x, 1) = c.g;
    img_.at(y, x, 2) = c.b;
  }
  void hline(int x0, int x1, int y, Rgb c) {
    for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) pixel(x, y, c);
  }
  void vline(int x, int y0, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) pixel(x, y, c);
  }
  void dot(int x, int y, int r, Rgb c) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        if (dx * dx + dy * dy <= r * r) pixel(x + dx, y + dy, c);
      }
    }
  }
  Tensor take() { return std::move(img_); }

 private:
  Tensor img_;
};

struct Panel {
  int left, top, right, bottom;
  double lo, hi;
  int y_of(double v) const { return bottom - static_cast<int>(std::lround((v - lo) / (hi - lo) * (bottom - top))); }
};

void draw_series(Canvas& c, const Panel& p, const std::vector<NoiseStatsRow>& rows, bool mean, double reference,
                 int t_max) {
  const Rgb axis{0.2, 0.2, 0.2}, ref{0.6, 0.6, 0.6}, bar{0.55, 0.7, 0.9}, point{0.1, 0.3, 0.75};
  c.hline(p.left, p.right, p.bottom, axis);
  c.vline(p.left, p.top, p.bottom, axis);
  if (reference >= p.lo && reference <= p.hi) {
    const int y = p.y_of(reference);
    for (int x = p.left; x <= p.right; x += 4) c.hline(x, std::min(x + 1, p.right), y, ref);
  }
  for (const auto& r : rows) {
    // t decreases left to right, the order the sampler visits it.
    const int x = p.left + static_cast<int>(std::lround((1.0 - static_cast<double>(r.t) / t_max) * (p.right - p.left)));
    const double v = mean ? r.mean : r.variance;
    const double sd = mean ? r.mean_sd : r.variance_sd;
    c.vline(x, p.y_of(std::min(v + sd, p.hi)), p.y_of(std::max(v - sd, p.lo)), bar);
    c.dot(x, p.y_of(v), 2, point);
  }
}

}  // namespace

Tensor render_noise_stats_plot(const std::vector<NoiseStatsRow>& rows, int width, int height) {
  if (rows.empty()) throw ContractError("nothing to plot");
  if (width < 64 || height < 64) throw ContractError("plot is too small");
  int t_max = 1;
  double mlo = 0.0, mhi = 0.0, vlo = 1.0, vhi = 1.0;
  for (const auto& r : rows) {
    t_max = std::max(t_max, r.t);
    mlo = std::min(mlo, r.mean - r.mean_sd);
    mhi = std::max(mhi, r.mean + r.mean_sd);
    vlo = std::min(vlo, r.variance - r.variance_sd);
    vhi = std::max(vhi, r.variance + r.variance_sd);
  }
  auto pad = [](double& lo, double& hi) {
    const double span = std::max(hi - lo, 1e-3);
    lo -= 0.1 * span;
    hi += 0.1 * span;
  };
  pad(mlo, mhi);
  pad(vlo, vhi);
  Canvas canvas(width, height);
  const int margin = 20;
  const int mid = height / 2;
  draw_series(canvas, {margin, margin, width - margin, mid - margin / 2, mlo, mhi}, rows, true, 0.0, t_max);
  draw_series(canvas, {margin, mid + margin / 2, width - margin, height - margin, vlo, vhi}, rows, false, 1.0,
              t_max);
  return canvas.take();
}

}  // namespace enhancekit
