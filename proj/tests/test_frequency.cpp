#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "enhancekit/errors.hpp"
#include "enhancekit/filters.hpp"
#include "enhancekit/frequency.hpp"
#include "helpers.hpp"

using namespace enhancekit;

namespace {

int mirror(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

// Direct 2-D Gaussian correlation with mirror padding, radius ceil(3 sigma).
Tensor blur_oracle(const Tensor& x, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  double norm = 0.0;
  for (int i = -r; i <= r; ++i) norm += std::exp(-0.5 * i * i / (sigma * sigma));
  Tensor out(x.shape(), x.space());
  for (int y = 0; y < x.height(); ++y) {
    for (int xx = 0; xx < x.width(); ++xx) {
      for (int c = 0; c < x.channels(); ++c) {
        double acc = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            const double w = std::exp(-0.5 * (dy * dy + dx * dx) / (sigma * sigma)) / (norm * norm);
            acc += w * x.at(mirror(y + dy, x.height()), mirror(xx + dx, x.width()), c);
          }
        }
        out.at(y, xx, c) = acc;
      }
    }
  }
  return out;
}

// Reference mask: channel-max response, nearest-rank threshold, brute-force square dilation.
Tensor mask_oracle(const Tensor& x, const HighPassParams& p) {
  const Tensor b = blur_oracle(x, p.blur_sigma);
  const int H = x.height(), W = x.width();
  std::vector<double> resp(H * W, 0.0);
  for (int i = 0; i < H * W; ++i) {
    for (int c = 0; c < x.channels(); ++c) resp[i] = std::max(resp[i], std::abs(x[i * x.channels() + c] - b[i * x.channels() + c]));
  }
  std::vector<double> sorted = resp;
  std::sort(sorted.begin(), sorted.end());
  const int rank = std::max(1, static_cast<int>(std::ceil(p.threshold_quantile * H * W)));
  const double thr = std::max(sorted[rank - 1], 1e-9);
  Tensor out({H, W, 1}, Space::display);
  for (int y = 0; y < H; ++y) {
    for (int xx = 0; xx < W; ++xx) {
      bool hit = false;
      for (int dy = -p.dilate_radius; dy <= p.dilate_radius; ++dy) {
        for (int dx = -p.dilate_radius; dx <= p.dilate_radius; ++dx) {
          const int yy = y + dy, xc = xx + dx;
          if (yy >= 0 && yy < H && xc >= 0 && xc < W && resp[yy * W + xc] > thr) hit = true;
        }
      }
      out.at(y, xx) = hit ? 1.0 : 0.0;
    }
  }
  return out;
}

Tensor step_image(int h, int w, int k, double lo, double hi) {
  Tensor img({h, w, 1}, Space::display);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.at(y, x) = x < k ? lo : hi;
  }
  return img;
}

}  // namespace

TEST_CASE("reflect_index mirrors without repeating the edge") {
  const int expected[] = {3, 2, 1, 0, 1, 2, 3, 2, 1, 0};
  for (int i = -3; i <= 6; ++i) CHECK(reflect_index(i, 4) == expected[i + 3]);
  CHECK(reflect_index(5, 1) == 0);
}

TEST_CASE("gaussian blur agrees with a direct 2-D convolution and has an exact adjoint") {
  const Tensor x = testing::uniform_tensor({9, 11, 2}, 1, 0.0, 1.0, Space::display);
  CHECK(testing::max_abs_diff(gaussian_blur(x, 1.3), blur_oracle(x, 1.3)) <= 1e-12);
  const Tensor a = testing::random_tensor({10, 7, 3}, 2);
  const Tensor b = testing::random_tensor({10, 7, 3}, 3);
  CHECK(dot(gaussian_blur(a, 2.0), b) == doctest::Approx(dot(a, gaussian_blur_adjoint(b, 2.0))).epsilon(1e-12));
  const auto k = gaussian_kernel(2.0);
  CHECK(k.size() == 13);
  double sum = 0.0;
  for (double v : k) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian_kernel(0.0), ContractError);
}

TEST_CASE("high_pass_mask: constant image has an empty high mask") {
  const FrequencyMask m = high_pass_mask(Tensor({16, 16, 3}, Space::display, 0.37));
  CHECK(mask_coverage(m) == 0.0);
  for (double v : m.low.values()) REQUIRE(v == 1.0);
}

TEST_CASE("high_pass_mask: vertical step edge matches the convolution oracle") {
  const HighPassParams p;
  const int k = 16;
  const Tensor img = step_image(24, 32, k, 0.2, 0.8);
  const FrequencyMask m = high_pass_mask(img, p);
  CHECK(m.high == mask_oracle(img, p));
  // The band sits around column k, no wider than the blur support plus dilation on each side.
  const int reach = static_cast<int>(std::ceil(3.0 * p.blur_sigma)) + p.dilate_radius;
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 32; ++x) {
      if (m.high.at(y, x) == 1.0) REQUIRE(std::abs(x - k) <= reach);
    }
    CHECK(m.high.at(y, k - 1) == 1.0);
    CHECK(m.high.at(y, k) == 1.0);
  }
  // Every row carries the same band.
  for (int y = 1; y < 24; ++y) {
    for (int x = 0; x < 32; ++x) REQUIRE(m.high.at(y, x) == m.high.at(0, x));
  }
}

TEST_CASE("high_pass_mask matches the oracle on random RGB content") {
  HighPassParams p;
  p.blur_sigma = 1.5;
  p.threshold_quantile = 0.8;
  p.dilate_radius = 1;
  const Tensor img = testing::uniform_tensor({13, 17, 3}, 4, 0.0, 1.0, Space::display);
  CHECK(high_pass_mask(img, p).high == mask_oracle(img, p));
}

TEST_CASE("white noise at quantile 0.7 covers 30% before dilation") {
  HighPassParams p;
  p.threshold_quantile = 0.7;
  p.dilate_radius = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor noise = testing::uniform_tensor({64, 64, 1}, 10 + seed, 0.0, 1.0, Space::display);
    CHECK(std::abs(mask_coverage(high_pass_mask(noise, p)) - 0.30) <= 0.02);
  }
}

TEST_CASE("high_pass_mask parameter validation") {
  HighPassParams p;
  p.threshold_quantile = 1.5;
  CHECK_THROWS_AS(high_pass_mask(Tensor({4, 4, 1}, Space::display, 0.5), p), ContractError);
  p = HighPassParams{};
  p.dilate_radius = -1;
  CHECK_THROWS_AS(high_pass_mask(Tensor({4, 4, 1}, Space::display, 0.5), p), ContractError);
}

TEST_CASE("downsample_mask: block max pooling") {
  const FrequencyMask ones = FrequencyMask::from_high(Tensor({8, 8, 1}, Space::display, 1.0));
  for (int f : {1, 2, 4, 8}) CHECK(mask_coverage(downsample_mask(ones, f)) == 1.0);

  Tensor single({8, 8, 1}, Space::display);
  single.at(5, 2) = 1.0;
  const FrequencyMask d = downsample_mask(FrequencyMask::from_high(single), 2);
  CHECK(d.high.shape() == Shape{4, 4, 1});
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) CHECK(d.high.at(y, x) == (y == 2 && x == 1 ? 1.0 : 0.0));
  }
  CHECK(d.low.at(2, 1) == 0.0);

  Tensor checker({8, 8, 1}, Space::display);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) checker.at(y, x) = (x + y) % 2;
  }
  CHECK(mask_coverage(downsample_mask(FrequencyMask::from_high(checker), 2)) == 1.0);
  CHECK_THROWS_AS(downsample_mask(ones, 3), ContractError);
  CHECK_THROWS_AS(downsample_mask(ones, 0), ContractError);
}

TEST_CASE("mask_coverage examples") {
  CHECK(mask_coverage(FrequencyMask::from_high(Tensor({4, 6, 1}, Space::display, 0.0))) == 0.0);
  CHECK(mask_coverage(FrequencyMask::from_high(Tensor({4, 6, 1}, Space::display, 1.0))) == 1.0);
  CHECK(mask_coverage(FrequencyMask::from_high(step_image(4, 6, 3, 0.0, 1.0))) == 0.5);
  CHECK_THROWS_AS(FrequencyMask::from_high(Tensor({2, 2, 1}, Space::display, 0.5)), ContractError);
  CHECK_THROWS_AS(FrequencyMask::from_high(Tensor({2, 2, 3}, Space::display, 1.0)), ContractError);
}

TEST_CASE("mask images round trip") {
  const FrequencyMask m = FrequencyMask::from_high(step_image(5, 6, 2, 1.0, 0.0));
  const Tensor img = mask_to_image(m);
  CHECK(img.space() == Space::display);
  CHECK(mask_from_image(img).high == m.high);
  Tensor rgb({1, 2, 3}, std::vector<double>{1.0, 1.0, 0.0, 0.2, 0.2, 0.2}, Space::display);
  const FrequencyMask f = mask_from_image(rgb);
  CHECK(f.high[0] == 1.0);
  CHECK(f.high[1] == 0.0);
}

TEST_CASE("dilation: square structuring element and saturation") {
  Tensor dot_img({7, 7, 1}, Space::display);
  dot_img.at(3, 3) = 1.0;
  const Tensor d = dilate(dot_img, 2);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 7; ++x) CHECK(d.at(y, x) == (std::abs(y - 3) <= 2 && std::abs(x - 3) <= 2 ? 1.0 : 0.0));
  }
  const Tensor full = dilate(dilate(dot_img, 6), 1);
  CHECK(dilate(full, 3) == full);
  CHECK(dilate(dot_img, 0) == dot_img);
}
