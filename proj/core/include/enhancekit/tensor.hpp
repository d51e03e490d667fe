#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace enhancekit {

enum class Space { model, display };

std::string_view to_string(Space space);
Space parse_space(std::string_view text);

struct Shape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return pixels() * channels; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

// H x W x C raster of doubles, row-major with interleaved channels.
//
// Model space holds values nominally in [-1, 1]; display space in [0, 1].
// The space tag only changes through to_model_space / to_display_space.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Space space = Space::model, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values, Space space = Space::model);

  const Shape& shape() const { return shape_; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  Space space() const { return space_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(int y, int x, int c = 0) { return values_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return values_[index(y, x, c)]; }

  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * shape_.width + x) * shape_.channels + c;
  }

  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  // Bitwise equality of shape, tag and payload.
  bool operator==(const Tensor& other) const;

 private:
  Shape shape_;
  std::vector<double> values_;
  Space space_ = Space::model;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(double s, Tensor a);
Tensor operator*(Tensor a, double s);

// y <- y + a * x
void axpy(double a, const Tensor& x, Tensor& y);
// a * x + b * y
Tensor lincomb(double a, const Tensor& x, double b, const Tensor& y);
Tensor hadamard(const Tensor& a, const Tensor& b);
double dot(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& t);

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what);
// Throws NumericalError naming `what` on NaN/Inf.
void require_finite(const Tensor& t, std::string_view what);

// Display [0,1] -> model [-1,1]. Values more than 1e-6 outside [0,1] are a DomainError.
Tensor to_model_space(const Tensor& img);
Tensor to_display_space(const Tensor& img);
Tensor clamp(Tensor t, double lo, double hi);

struct TensorStats {
  double mean = 0.0;
  double variance = 0.0;
};

// Population mean and variance over every element.
TensorStats tensor_stats(const Tensor& t);

// Broadcasts a single-channel tensor across `channels`.
Tensor broadcast_channels(const Tensor& single, int channels);

double psnr(const Tensor& reference, const Tensor& test, double peak);

}  // namespace enhancekit
