#include "enhancekit/frequency.hpp"

#include <algorithm>
#include <cmath>

#include "enhancekit/errors.hpp"
#include "enhancekit/filters.hpp"

namespace enhancekit {
namespace {

// Responses at or below this count as flat; blur of a constant is only constant up to rounding.
constexpr double kFlat = 1e-9;

}  // namespace

FrequencyMask FrequencyMask::from_high(Tensor high) {
  if (high.channels() != 1) throw ContractError("frequency masks are single-channel");
  Tensor low(high.shape(), high.space());
  for (std::size_t i = 0; i < high.size(); ++i) {
    if (high[i] != 0.0 && high[i] != 1.0) throw ContractError("frequency mask values must be 0 or 1");
    low[i] = 1.0 - high[i];
  }
  return {std::move(high), std::move(low)};
}

Tensor high_pass_response(const Tensor& x, double blur_sigma) {
  const Tensor blurred = gaussian_blur(x, blur_sigma);
  Tensor out({x.height(), x.width(), 1}, x.space());
  const int C = x.channels();
  for (std::size_t p = 0; p < out.size(); ++p) {
    double m = 0.0;
    for (int c = 0; c < C; ++c) m = std::max(m, std::abs(x[p * C + c] - blurred[p * C + c]));
    out[p] = m;
  }
  return out;
}

FrequencyMask high_pass_mask(const Tensor& x, const HighPassParams& params) {
  if (!(params.threshold_quantile >= 0.0 && params.threshold_quantile <= 1.0)) {
    throw ContractError("threshold_quantile must lie in [0, 1]");
  }
  if (params.dilate_radius < 0) throw ContractError("dilate_radius must be non-negative");
  const Tensor response = high_pass_response(x, params.blur_sigma);
  std::vector<double> sorted(response.values().begin(), response.values().end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const auto rank = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(params.threshold_quantile * static_cast<double>(n))), 1, n);
  const double threshold = std::max(sorted[rank - 1], kFlat);

  Tensor high(response.shape(), Space::display);
  for (std::size_t i = 0; i < n; ++i) high[i] = response[i] > threshold ? 1.0 : 0.0;
  return FrequencyMask::from_high(dilate(high, params.dilate_radius));
}

Tensor dilate(const Tensor& binary, int radius) {
  if (radius <= 0) return binary;
  const int H = binary.height(), W = binary.width();
  // Separable: a square structuring element is a row max followed by a column max.
  Tensor rows(binary.shape(), binary.space());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double m = 0.0;
      for (int dx = std::max(0, x - radius); dx <= std::min(W - 1, x + radius); ++dx) m = std::max(m, binary.at(y, dx));
      rows.at(y, x) = m;
    }
  }
  Tensor out(binary.shape(), binary.space());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double m = 0.0;
      for (int dy = std::max(0, y - radius); dy <= std::min(H - 1, y + radius); ++dy) m = std::max(m, rows.at(dy, x));
      out.at(y, x) = m;
    }
  }
  return out;
}

FrequencyMask downsample_mask(const FrequencyMask& mask, int factor) {
  if (factor < 1) throw ContractError("downsample factor must be >= 1");
  const int H = mask.high.height(), W = mask.high.width();
  if (H % factor != 0 || W % factor != 0) {
    throw ContractError("mask " + std::to_string(H) + "x" + std::to_string(W) + " not divisible by " +
                        std::to_string(factor));
  }
  Tensor high({H / factor, W / factor, 1}, mask.high.space());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double& cell = high.at(y / factor, x / factor);
      cell = std::max(cell, mask.high.at(y, x));
    }
  }
  return FrequencyMask::from_high(std::move(high));
}

double mask_coverage(const FrequencyMask& mask) {
  if (mask.high.empty()) throw ContractError("mask_coverage of an empty mask");
  double sum = 0.0;
  for (double v : mask.high.values()) sum += v;
  return sum / static_cast<double>(mask.high.size());
}

FrequencyMask mask_from_image(const Tensor& img) {
  Tensor high({img.height(), img.width(), 1}, Space::display);
  const int C = img.channels();
  for (std::size_t p = 0; p < high.size(); ++p) {
    double mean = 0.0;
    for (int c = 0; c < C; ++c) mean += img[p * C + c];
    high[p] = mean / C > 0.5 ? 1.0 : 0.0;
  }
  return FrequencyMask::from_high(std::move(high));
}

Tensor mask_to_image(const FrequencyMask& mask) {
  Tensor out = mask.high;
  return Tensor(out.shape(), std::vector<double>(out.values().begin(), out.values().end()), Space::display);
}

}  // namespace enhancekit
