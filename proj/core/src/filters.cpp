#include "enhancekit/filters.hpp"

#include <cmath>

#include "enhancekit/errors.hpp"

namespace enhancekit {
namespace {

enum class Axis { rows, cols };

// out(y,x,c) = sum_j k[j] in(refl(y + j - r), x, c) for Axis::rows, likewise for cols.
Tensor correlate(const Tensor& in, const std::vector<double>& k, Axis axis) {
  const int r = static_cast<int>(k.size() / 2);
  const int H = in.height(), W = in.width(), C = in.channels();
  Tensor out(in.shape(), in.space());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int j = 0; j < static_cast<int>(k.size()); ++j) {
          if (k[j] == 0.0) continue;
          const int yy = axis == Axis::rows ? reflect_index(y + j - r, H) : y;
          const int xx = axis == Axis::cols ? reflect_index(x + j - r, W) : x;
          acc += k[j] * in.at(yy, xx, c);
        }
        out.at(y, x, c) = acc;
      }
    }
  }
  return out;
}

Tensor correlate_adjoint(const Tensor& cot, const std::vector<double>& k, Axis axis) {
  const int r = static_cast<int>(k.size() / 2);
  const int H = cot.height(), W = cot.width(), C = cot.channels();
  Tensor out(cot.shape(), cot.space());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) {
        const double g = cot.at(y, x, c);
        if (g == 0.0) continue;
        for (int j = 0; j < static_cast<int>(k.size()); ++j) {
          if (k[j] == 0.0) continue;
          const int yy = axis == Axis::rows ? reflect_index(y + j - r, H) : y;
          const int xx = axis == Axis::cols ? reflect_index(x + j - r, W) : x;
          out.at(yy, xx, c) += k[j] * g;
        }
      }
    }
  }
  return out;
}

const std::vector<double> kSmooth = {1.0, 2.0, 1.0};
const std::vector<double> kDiff = {-1.0, 0.0, 1.0};
constexpr double kLuma[3] = {0.299, 0.587, 0.114};

}  // namespace

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ContractError("gaussian_kernel: sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

Tensor gaussian_blur(const Tensor& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  return correlate(correlate(img, k, Axis::rows), k, Axis::cols);
}

Tensor gaussian_blur_adjoint(const Tensor& cotangent, double sigma) {
  const auto k = gaussian_kernel(sigma);
  return correlate_adjoint(correlate_adjoint(cotangent, k, Axis::cols), k, Axis::rows);
}

Tensor luminance(const Tensor& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) throw ContractError("luminance expects 1 or 3 channels");
  Tensor out({img.height(), img.width(), 1}, img.space());
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p] = kLuma[0] * img[3 * p] + kLuma[1] * img[3 * p + 1] + kLuma[2] * img[3 * p + 2];
  }
  return out;
}

Tensor luminance_adjoint(const Tensor& cotangent, int channels) {
  if (channels == 1) return cotangent;
  if (channels != 3 || cotangent.channels() != 1) throw ContractError("luminance_adjoint: bad channel counts");
  Tensor out({cotangent.height(), cotangent.width(), 3}, cotangent.space());
  for (std::size_t p = 0; p < cotangent.size(); ++p) {
    for (int c = 0; c < 3; ++c) out[3 * p + c] = kLuma[c] * cotangent[p];
  }
  return out;
}

SobelResponse sobel(const Tensor& gray) {
  if (gray.channels() != 1) throw ContractError("sobel expects a single-channel image");
  return {correlate(correlate(gray, kSmooth, Axis::rows), kDiff, Axis::cols),
          correlate(correlate(gray, kDiff, Axis::rows), kSmooth, Axis::cols)};
}

Tensor sobel_adjoint(const Tensor& gx_cotangent, const Tensor& gy_cotangent) {
  Tensor out = correlate_adjoint(correlate_adjoint(gx_cotangent, kDiff, Axis::cols), kSmooth, Axis::rows);
  out += correlate_adjoint(correlate_adjoint(gy_cotangent, kSmooth, Axis::cols), kDiff, Axis::rows);
  return out;
}

}  // namespace enhancekit
