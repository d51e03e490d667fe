#pragma once

#include "enhancekit/tensor.hpp"

namespace enhancekit {

// Binary partition of the image plane: high = edges/corners, low = 1 - high.
// Both maps are single-channel with values in {0, 1}.
struct FrequencyMask {
  Tensor high;
  Tensor low;

  static FrequencyMask from_high(Tensor high);
  Shape spatial_shape() const { return {high.height(), high.width(), 1}; }
};

struct HighPassParams {
  double blur_sigma = 2.0;
  double threshold_quantile = 0.6;
  int dilate_radius = 2;
};

// Channel-max of |x - GaussianBlur(x)|.
Tensor high_pass_response(const Tensor& x, double blur_sigma);

// Marks pixels whose high-pass response exceeds its nearest-rank
// `threshold_quantile` quantile, then dilates by a square of radius
// `dilate_radius`. A constant image yields an empty high mask.
FrequencyMask high_pass_mask(const Tensor& x, const HighPassParams& params = {});

// Square (Chebyshev) binary dilation.
Tensor dilate(const Tensor& binary, int radius);

// Block-max pooling of the high mask; low is recomputed as its complement.
FrequencyMask downsample_mask(const FrequencyMask& mask, int factor);

double mask_coverage(const FrequencyMask& mask);

// User-supplied mask image: pixels brighter than 0.5 (channel mean) are high.
FrequencyMask mask_from_image(const Tensor& img);
Tensor mask_to_image(const FrequencyMask& mask);

}  // namespace enhancekit
