#include "enhancekit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "enhancekit/errors.hpp"

namespace enhancekit {

std::string_view to_string(Space space) {
  return space == Space::model ? "model" : "display";
}

Space parse_space(std::string_view text) {
  if (text == "model") return Space::model;
  if (text == "display") return Space::display;
  throw ContractError("unknown tensor space '" + std::string(text) + "'");
}

std::string to_string(const Shape& shape) {
  return std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" +
         std::to_string(shape.channels);
}

Tensor::Tensor(Shape shape, Space space, double fill)
    : shape_(shape), values_(shape.size(), fill), space_(space) {
  if (shape.height < 0 || shape.width < 0 || shape.channels < 0) {
    throw ContractError("negative tensor dimension " + to_string(shape));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> values, Space space)
    : shape_(shape), values_(std::move(values)), space_(space) {
  if (values_.size() != shape_.size()) {
    throw ContractError("tensor payload has " + std::to_string(values_.size()) +
                        " values, shape " + to_string(shape_) + " needs " +
                        std::to_string(shape_.size()));
  }
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "tensor +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require_same_shape(*this, other, "tensor -=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

bool Tensor::operator==(const Tensor& other) const {
  return shape_ == other.shape_ && space_ == other.space_ &&
         (values_.empty() ||
          std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(double)) == 0);
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(double s, Tensor a) { return a *= s; }
Tensor operator*(Tensor a, double s) { return a *= s; }

void axpy(double a, const Tensor& x, Tensor& y) {
  require_same_shape(x, y, "axpy");
  auto xs = x.values();
  auto ys = y.values();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] += a * xs[i];
}

Tensor lincomb(double a, const Tensor& x, double b, const Tensor& y) {
  require_same_shape(x, y, "lincomb");
  Tensor out(x.shape(), x.space());
  auto xs = x.values();
  auto ys = y.values();
  auto os = out.values();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = a * xs[i] + b * ys[i];
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor out = a;
  auto bs = b.values();
  auto os = out.values();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] *= bs[i];
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  auto as = a.values();
  auto bs = b.values();
  for (std::size_t i = 0; i < as.size(); ++i) acc += as[i] * bs[i];
  return acc;
}

double l2_norm(const Tensor& t) { return std::sqrt(dot(t, t)); }

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.shape() != b.shape()) {
    throw ContractError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                        to_string(b.shape()));
  }
}

void require_finite(const Tensor& t, std::string_view what) {
  if (!t.all_finite()) throw NumericalError(std::string(what) + ": non-finite values");
}

Tensor to_model_space(const Tensor& img) {
  if (img.space() != Space::display) throw ContractError("to_model_space expects a display-space tensor");
  constexpr double tol = 1e-6;
  std::vector<double> out(img.size());
  auto in = img.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = in[i];
    if (!(v >= -tol && v <= 1.0 + tol)) {
      throw DomainError("display value " + std::to_string(v) + " outside [0,1] at element " +
                        std::to_string(i));
    }
    out[i] = 2.0 * std::clamp(v, 0.0, 1.0) - 1.0;
  }
  return Tensor(img.shape(), std::move(out), Space::model);
}

Tensor to_display_space(const Tensor& img) {
  if (img.space() != Space::model) throw ContractError("to_display_space expects a model-space tensor");
  std::vector<double> out(img.size());
  auto in = img.values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = 0.5 * (in[i] + 1.0);
  return Tensor(img.shape(), std::move(out), Space::display);
}

Tensor clamp(Tensor t, double lo, double hi) {
  for (double& v : t.values()) v = std::clamp(v, lo, hi);
  return t;
}

TensorStats tensor_stats(const Tensor& t) {
  if (t.empty()) throw ContractError("tensor_stats of an empty tensor");
  const auto vs = t.values();
  double mean = 0.0;
  for (double v : vs) mean += v;
  mean /= static_cast<double>(vs.size());
  double var = 0.0;
  for (double v : vs) var += (v - mean) * (v - mean);
  var /= static_cast<double>(vs.size());
  return {mean, var};
}

Tensor broadcast_channels(const Tensor& single, int channels) {
  if (single.channels() != 1) throw ContractError("broadcast_channels expects one channel");
  Tensor out({single.height(), single.width(), channels}, single.space());
  for (std::size_t p = 0; p < single.size(); ++p) {
    for (int c = 0; c < channels; ++c) out[p * channels + c] = single[p];
  }
  return out;
}

double psnr(const Tensor& reference, const Tensor& test, double peak) {
  require_same_shape(reference, test, "psnr");
  const Tensor diff = test - reference;
  const double mse = dot(diff, diff) / static_cast<double>(diff.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace enhancekit
