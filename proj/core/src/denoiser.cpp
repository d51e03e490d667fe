#include "enhancekit/denoiser.hpp"

#include <cmath>

#include "enhancekit/errors.hpp"
#include "enhancekit/random.hpp"

namespace enhancekit {

Condition Condition::class_label(int label) {
  if (label < 0) throw ContractError("class label must be non-negative");
  Condition c;
  c.label_ = label;
  return c;
}

int Condition::label() const {
  if (!label_) throw ContractError("condition carries no label");
  return *label_;
}

Tensor Denoiser::vjp(const Tensor& x_t, int t, const Condition& y, const Tensor& cotangent) const {
  return finite_diff_grad(*this, x_t, t, y, [&cotangent](const Tensor& eps) { return dot(cotangent, eps); });
}

Tensor finite_diff_grad(const Denoiser& denoiser, const Tensor& x_t, int t, const Condition& y,
                        const ScalarFunctional& loss_fn, const FiniteDiffOptions& options) {
  auto eval = [&](const Tensor& x) {
    const double v = loss_fn(denoiser.predict(x, t, y));
    if (!std::isfinite(v)) throw NumericalError("finite_diff_grad: non-finite loss at probe point");
    return v;
  };
  Tensor grad(x_t.shape(), x_t.space());
  std::vector<double> steps(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) steps[i] = 1e-3 * (1.0 + std::abs(x_t[i]));

  if (x_t.shape().pixels() <= options.full_pixel_limit) {
    Tensor probe = x_t;
    for (std::size_t i = 0; i < x_t.size(); ++i) {
      const double h = steps[i];
      probe[i] = x_t[i] + h;
      const double up = eval(probe);
      probe[i] = x_t[i] - h;
      const double down = eval(probe);
      probe[i] = x_t[i];
      grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
  }

  RandomSource rng(options.seed, static_cast<std::uint64_t>(t));
  std::vector<double> signs(x_t.size());
  for (int k = 0; k < options.probes; ++k) {
    Tensor plus = x_t;
    Tensor minus = x_t;
    for (std::size_t i = 0; i < x_t.size(); ++i) {
      signs[i] = (rng.next_u64() >> 63) ? 1.0 : -1.0;
      plus[i] += steps[i] * signs[i];
      minus[i] -= steps[i] * signs[i];
    }
    const double directional = (eval(plus) - eval(minus)) / 2.0;
    for (std::size_t i = 0; i < x_t.size(); ++i) grad[i] += directional * signs[i] / steps[i];
  }
  grad *= 1.0 / options.probes;
  return grad;
}

GradientMode resolve_gradient_mode(GradientMode requested, const Denoiser& denoiser) {
  if (requested != GradientMode::automatic) return requested;
  return denoiser.is_analytic() ? GradientMode::through_denoiser : GradientMode::locally_constant;
}

Tensor pullback_through_x0(const Tensor& grad_x0, const Tensor& x_t, int t, const Denoiser& denoiser,
                           const Condition& y, const NoiseSchedule& sched, GradientMode mode) {
  require_same_shape(grad_x0, x_t, "pullback_through_x0");
  const double a = sched.alpha(t);
  if (a < 1e-8) throw NumericalError("pullback_through_x0: alpha_" + std::to_string(t) + " is singular");
  mode = resolve_gradient_mode(mode, denoiser);
  if (mode == GradientMode::locally_constant) return (1.0 / a) * grad_x0;
  const Tensor through = denoiser.vjp(x_t, t, y, grad_x0);
  return lincomb(1.0 / a, grad_x0, -sched.sigma(t) / a, through);
}

Tensor GuidedDenoiser::predict(const Tensor& x_t, int t, const Condition& y) const {
  if (inert(y)) return base_.predict(x_t, t, y);
  const Tensor uncond = base_.predict(x_t, t, Condition::none());
  const Tensor cond = base_.predict(x_t, t, y);
  return lincomb(1.0 - scale_, uncond, scale_, cond);
}

Tensor GuidedDenoiser::vjp(const Tensor& x_t, int t, const Condition& y, const Tensor& cotangent) const {
  if (inert(y)) return base_.vjp(x_t, t, y, cotangent);
  const Tensor uncond = base_.vjp(x_t, t, Condition::none(), cotangent);
  const Tensor cond = base_.vjp(x_t, t, y, cotangent);
  return lincomb(1.0 - scale_, uncond, scale_, cond);
}

}  // namespace enhancekit
