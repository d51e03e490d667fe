#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "enhancekit/config.hpp"
#include "enhancekit/schedule.hpp"
#include "enhancekit/tensor.hpp"

namespace enhancekit {

// Conditioning signal: nothing, or a small class label.
class Condition {
 public:
  static Condition none() { return Condition(); }
  static Condition class_label(int label);

  bool has_label() const { return label_.has_value(); }
  int label() const;
  bool operator==(const Condition&) const = default;

 private:
  std::optional<int> label_;
};

// Noise predictor eps_theta(x_t; t, y).
//
// Implementations must allow concurrent const calls.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual Tensor predict(const Tensor& x_t, int t, const Condition& y) const = 0;

  // cotangent^T * d predict / d x_t. The base version differentiates
  // numerically through finite_diff_grad.
  virtual Tensor vjp(const Tensor& x_t, int t, const Condition& y, const Tensor& cotangent) const;

  virtual bool has_exact_vjp() const { return false; }
  // Closed-form oracles prefer through-denoiser gradients by default.
  virtual bool is_analytic() const { return false; }
  virtual std::string id() const = 0;
};

using ScalarFunctional = std::function<double(const Tensor&)>;

struct FiniteDiffOptions {
  // Coordinate-wise differences up to this many pixels (H*W), random probes above.
  std::size_t full_pixel_limit = 32 * 32;
  int probes = 64;
  std::uint64_t seed = 0x5eed;
};

// Central-difference estimate of grad_{x_t} loss_fn(predict(x_t)). Step per
// coordinate is 1e-3 (1 + |x_i|). Above the pixel limit a Rademacher-probe
// estimator is used: g_i ~ mean_k D_k v_ki / h_i with D_k the directional
// difference along h * v_k.
Tensor finite_diff_grad(const Denoiser& denoiser, const Tensor& x_t, int t, const Condition& y,
                        const ScalarFunctional& loss_fn, const FiniteDiffOptions& options = {});

GradientMode resolve_gradient_mode(GradientMode requested, const Denoiser& denoiser);

// Maps grad wrt x0_hat = (x_t - sigma_t eps(x_t)) / alpha_t to grad wrt x_t.
Tensor pullback_through_x0(const Tensor& grad_x0, const Tensor& x_t, int t, const Denoiser& denoiser,
                           const Condition& y, const NoiseSchedule& sched, GradientMode mode);

// Classifier-free guidance around a label-conditioned denoiser:
// eps = eps(none) + scale * (eps(y) - eps(none)). Scale 1 or an unlabeled y
// forwards the call unchanged.
class GuidedDenoiser final : public Denoiser {
 public:
  GuidedDenoiser(const Denoiser& base, double scale) : base_(base), scale_(scale) {}

  Tensor predict(const Tensor& x_t, int t, const Condition& y) const override;
  Tensor vjp(const Tensor& x_t, int t, const Condition& y, const Tensor& cotangent) const override;
  bool has_exact_vjp() const override { return base_.has_exact_vjp(); }
  bool is_analytic() const override { return base_.is_analytic(); }
  std::string id() const override { return base_.id(); }

 private:
  bool inert(const Condition& y) const { return scale_ == 1.0 || !y.has_label(); }

  const Denoiser& base_;
  double scale_;
};

}  // namespace enhancekit
