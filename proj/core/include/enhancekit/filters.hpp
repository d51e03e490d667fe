#pragma once

#include <vector>

#include "enhancekit/tensor.hpp"

namespace enhancekit {

// Mirror index without repeating the edge sample (d c b | a b c d | c b a).
int reflect_index(int i, int n);

// Normalised Gaussian taps, radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

// Separable Gaussian blur per channel with reflect padding, and its adjoint.
Tensor gaussian_blur(const Tensor& img, double sigma);
Tensor gaussian_blur_adjoint(const Tensor& cotangent, double sigma);

// Rec.601 luma for 3 channels, identity for 1.
Tensor luminance(const Tensor& img);
Tensor luminance_adjoint(const Tensor& cotangent, int channels);

struct SobelResponse {
  Tensor gx;
  Tensor gy;
};

// 3x3 Sobel derivatives of a single-channel image with reflect padding.
// gx uses [[-1,0,1],[-2,0,2],[-1,0,1]], gy its transpose.
SobelResponse sobel(const Tensor& gray);
Tensor sobel_adjoint(const Tensor& gx_cotangent, const Tensor& gy_cotangent);

}  // namespace enhancekit
