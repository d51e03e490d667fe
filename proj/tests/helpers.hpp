#pragma once

#include <cmath>
#include <functional>

#include "enhancekit/random.hpp"
#include "enhancekit/tensor.hpp"

namespace testing {

using enhancekit::Tensor;

inline Tensor random_tensor(enhancekit::Shape shape, std::uint64_t seed, double scale = 1.0) {
  enhancekit::RandomSource rng(seed, 77);
  Tensor t = rng.normal_tensor(shape);
  t *= scale;
  return t;
}

inline Tensor uniform_tensor(enhancekit::Shape shape, std::uint64_t seed, double lo, double hi,
                             enhancekit::Space space = enhancekit::Space::model) {
  enhancekit::RandomSource rng(seed, 78);
  Tensor t(shape, space);
  for (auto& v : t.values()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

// Plain central differences over every coordinate with a fixed step.
inline Tensor central_diff(const std::function<double(const Tensor&)>& f, const Tensor& x, double h = 1e-5) {
  Tensor g(x.shape(), x.space());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||b||, floor)
inline double rel_error(const Tensor& a, const Tensor& b, double floor = 1e-12) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing
