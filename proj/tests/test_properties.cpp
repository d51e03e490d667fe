#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "enhancekit/frequency.hpp"
#include "enhancekit/image_io.hpp"
#include "enhancekit/noising.hpp"
#include "enhancekit/regularizers.hpp"
#include "enhancekit/schedule.hpp"
#include "helpers.hpp"

using namespace enhancekit;

namespace {

FrequencyMask random_mask(int h, int w, std::uint64_t seed, double p) {
  RandomSource rng(seed, 5);
  Tensor high({h, w, 1}, Space::display);
  for (auto& v : high.values()) v = rng.uniform() < p ? 1.0 : 0.0;
  return FrequencyMask::from_high(high);
}

int random_int(RandomSource& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(hi - lo + 1)); }

}  // namespace

TEST_CASE("property: DDIM step maps exact forward noise to the same noise at the target level") {
  const NoiseSchedule s = NoiseSchedule::scaled_linear(1000);
  RandomSource rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int t = random_int(rng, 2, 1000);
    const int t_prev = random_int(rng, 0, t - 1);
    const Tensor x = testing::uniform_tensor({5, 6, 3}, 100 + trial, -1.0, 1.0);
    const Tensor eps = testing::random_tensor({5, 6, 3}, 200 + trial);
    const Tensor out = ddim_step(add_noise(x, t, eps, s), eps, t, t_prev, s);
    INFO("t=", t, " t_prev=", t_prev);
    CHECK(testing::max_abs_diff(out, add_noise(x, t_prev, eps, s)) <= 1e-9);
  }
}

TEST_CASE("property: snap returns the nearest grid point") {
  const NoiseSchedule s = NoiseSchedule::scaled_linear(1000);
  RandomSource rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = random_int(rng, 1, 200);
    const int t = random_int(rng, 1, 1000);
    // Positive timesteps snap among the grid points; only t <= 0 reaches the terminal 0.
    const std::vector<int> grid = s.step_grid(n);
    const int snapped = s.snap(t, n);
    REQUIRE(std::find(grid.begin(), grid.end(), snapped) != grid.end());
    for (int g : grid) REQUIRE(std::abs(snapped - t) <= std::abs(g - t));
  }
}

TEST_CASE("property: the high region of a blend is the stable stream for any tau") {
  const NoiseSchedule s = NoiseSchedule::scaled_linear(1000);
  RandomSource rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const double tau = rng.uniform();
    const FrequencyMask m = random_mask(7, 9, trial, 0.4);
    const Tensor x = testing::uniform_tensor({7, 9, 3}, 300 + trial, -1.0, 1.0);
    const Tensor xs = testing::random_tensor({7, 9, 3}, 400 + trial);
    const Tensor xc = testing::random_tensor({7, 9, 3}, 500 + trial);
    for (bool calibrate : {false, true}) {
      const Tensor b = blend_and_calibrate(xs, xc, m, tau, x, 400, s, calibrate);
      for (int y = 0; y < 7; ++y) {
        for (int px = 0; px < 9; ++px) {
          if (m.high.at(y, px) != 1.0) continue;
          for (int c = 0; c < 3; ++c) REQUIRE(b.at(y, px, c) == xs.at(y, px, c));
        }
      }
    }
  }
}

TEST_CASE("property: nested percentile bands select nested pixel sets") {
  RandomSource rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const Tensor map = testing::uniform_tensor({random_int(rng, 1, 20), random_int(rng, 1, 20), 1}, 600 + trial, 0.0, 1.0);
    const double lo = 50.0 * rng.uniform(), hi = 50.0 + 50.0 * rng.uniform();
    const Tensor inner = band_mask(map, lo + 5.0, std::max(lo + 5.0, hi - 5.0));
    const Tensor outer = band_mask(map, lo, hi);
    for (std::size_t i = 0; i < map.size(); ++i) REQUIRE(inner[i] <= outer[i]);
  }
}

TEST_CASE("property: dilation and block pooling never shrink a mask") {
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    const FrequencyMask m = random_mask(12, 16, 700 + trial, 0.1);
    const Tensor d = dilate(m.high, static_cast<int>(trial % 3));
    for (std::size_t i = 0; i < d.size(); ++i) REQUIRE(d[i] >= m.high[i]);
    for (int f : {2, 4}) CHECK(mask_coverage(downsample_mask(m, f)) >= mask_coverage(m));
  }
}

TEST_CASE("property: tensor dumps round trip through float32") {
  RandomSource rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Shape shape{random_int(rng, 1, 9), random_int(rng, 1, 9), trial % 2 ? 3 : 1};
    const Tensor t = testing::random_tensor(shape, 800 + trial);
    const Tensor back = decode_tensor_dump(encode_tensor_dump(t));
    REQUIRE(back.shape() == t.shape());
    CHECK(back.space() == t.space());
    for (std::size_t i = 0; i < t.size(); ++i) REQUIRE(back[i] == static_cast<double>(static_cast<float>(t[i])));
  }
}

TEST_CASE("property: losses are invariant to a constant brightness shift") {
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const Tensor x = testing::uniform_tensor({10, 12, 3}, 900 + trial, -0.5, 0.5);
    Tensor shifted = x;
    for (auto& v : shifted.values()) v += 0.25;
    CHECK(acutance_loss(shifted, 35.0, 65.0).loss == doctest::Approx(acutance_loss(x, 35.0, 65.0).loss).epsilon(1e-9));
    CHECK(adversarial_loss(shifted, 3.0) == doctest::Approx(adversarial_loss(x, 3.0)).epsilon(1e-9));
    CHECK(distribution_loss(shifted) == doctest::Approx(distribution_loss(x)).epsilon(1e-9));
  }
}
