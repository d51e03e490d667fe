#include "enhancekit/noising.hpp"

#include <cmath>

#include "enhancekit/errors.hpp"

namespace enhancekit {

HighPassParams high_pass_params(const EnhanceConfig& cfg) {
  return {cfg.hp_blur_sigma, cfg.hp_quantile, cfg.hp_dilate_radius};
}

namespace {

void require_mask_fits(const FrequencyMask& mask, const Tensor& x) {
  if (mask.high.height() != x.height() || mask.high.width() != x.width()) {
    throw ContractError("frequency mask " + to_string(mask.high.shape()) + " does not match working grid " +
                        to_string(x.shape()));
  }
}

double masked_count(const FrequencyMask& mask, int channels) {
  double n = 0.0;
  for (double v : mask.high.values()) n += v;
  return n * channels;
}

}  // namespace

double ggs_energy(const Tensor& x, const Tensor& x0_hat, const FrequencyMask& mask) {
  require_same_shape(x, x0_hat, "ggs_energy");
  require_mask_fits(mask, x);
  const int C = x.channels();
  const double n = masked_count(mask, C);
  if (n == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t p = 0; p < mask.high.size(); ++p) {
    if (mask.high[p] == 0.0) continue;
    for (int c = 0; c < C; ++c) {
      const double d = x[p * C + c] - x0_hat[p * C + c];
      acc += d * d;
    }
  }
  return acc / n;
}

Tensor ggs_energy_grad_x0(const Tensor& x, const Tensor& x0_hat, const FrequencyMask& mask) {
  require_same_shape(x, x0_hat, "ggs_energy_grad_x0");
  require_mask_fits(mask, x);
  const int C = x.channels();
  Tensor out(x.shape(), x.space());
  const double n = masked_count(mask, C);
  if (n == 0.0) return out;
  for (std::size_t p = 0; p < mask.high.size(); ++p) {
    if (mask.high[p] == 0.0) continue;
    for (int c = 0; c < C; ++c) out[p * C + c] = -2.0 * (x[p * C + c] - x0_hat[p * C + c]) / n;
  }
  return out;
}

Tensor ggs_gradient(const Tensor& x_t, const Tensor& eps_hat, int t, const Tensor& x, const FrequencyMask& mask,
                    const Denoiser& denoiser, const NoiseSchedule& sched, GradientMode mode) {
  const Tensor x0 = predict_x0(x_t, eps_hat, t, sched);
  return pullback_through_x0(ggs_energy_grad_x0(x, x0, mask), x_t, t, denoiser, Condition::none(), sched, mode);
}

Tensor creative_stream(const Tensor& x, const FrequencyMask& mask, const Denoiser& denoiser,
                       const NoiseSchedule& sched, const EnhanceConfig& cfg, RandomSource& rng,
                       Tensor* x_T_out) {
  require_mask_fits(mask, x);
  const int T = sched.total_T();
  const int t0 = sched.snap(cfg.t0, cfg.inference_steps);
  const Condition y = Condition::none();
  const GradientMode mode = resolve_gradient_mode(cfg.gradient_mode, denoiser);
  const bool guided = cfg.lambda_ggs != 0.0 && masked_count(mask, 1) > 0.0;

  Tensor cur = add_noise(x, T, rng.normal_tensor(x.shape()), sched);
  if (x_T_out) *x_T_out = cur;
  int step = 0;
  for (const auto& [t, t_prev] : sched.transitions(T, t0, cfg.inference_steps)) {
    Tensor eps = denoiser.predict(cur, t, y);
    Tensor guidance;
    if (guided) {
      guidance = ggs_gradient(cur, eps, t, x, mask, denoiser, sched, mode);
      if (cfg.guidance_form == GuidanceForm::eps_space) axpy(cfg.lambda_ggs * sched.sigma(t), guidance, eps);
    }
    Tensor next = cfg.creative_sampler == SamplerKind::ddim ? ddim_step(cur, eps, t, t_prev, sched)
                                                            : ddpm_step(cur, eps, t, t_prev, sched, rng);
    if (guided && cfg.guidance_form == GuidanceForm::x_space) axpy(-cfg.lambda_ggs, guidance, next);
    if (!next.all_finite()) {
      throw NumericalError("creative stream: non-finite iterate at step " + std::to_string(step) + " (t=" +
                           std::to_string(t_prev) + ")");
    }
    cur = std::move(next);
    ++step;
  }
  return cur;
}

Tensor stable_stream(const Tensor& x, const Denoiser& denoiser, const NoiseSchedule& sched,
                     const EnhanceConfig& cfg) {
  const int t0 = sched.snap(cfg.t0, cfg.inference_steps);
  return ddim_invert(x, t0, denoiser, Condition::none(), sched, cfg.inference_steps);
}

double calibration_scale(double tau) { return 1.0 / std::sqrt(2.0 * tau * tau - 2.0 * tau + 1.0); }

Tensor blend_and_calibrate(const Tensor& x_s, const Tensor& x_c, const FrequencyMask& mask, double tau,
                           const Tensor& x, int t0, const NoiseSchedule& sched, bool calibrate) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ContractError("tau must lie in [0, 1]");
  require_same_shape(x_s, x_c, "blend_and_calibrate");
  require_same_shape(x_s, x, "blend_and_calibrate");
  require_mask_fits(mask, x);
  const int C = x.channels();
  const double a = sched.alpha(t0);
  const double k = calibrate ? calibration_scale(tau) : 1.0;
  Tensor out(x.shape(), x_s.space());
  for (std::size_t p = 0; p < mask.high.size(); ++p) {
    const double mh = mask.high[p];
    const double ml = mask.low[p];
    for (int c = 0; c < C; ++c) {
      const std::size_t i = p * C + c;
      const double high = mh * x_s[i];
      const double blend = ml * (tau * x_s[i] + (1.0 - tau) * x_c[i]);
      // k == 1 exactly at tau in {0, 1}; the recentring is skipped so the map is the identity.
      const double low = k == 1.0 ? blend : ml * (a * x[i] + (blend - ml * a * x[i]) * k);
      out[i] = high + low;
    }
  }
  return out;
}

NoisingResult run_noising(const Tensor& x, const Denoiser& denoiser, const NoiseSchedule& sched,
                          const EnhanceConfig& cfg, RandomSource& rng, const FrequencyMask* mask_override) {
  if (x.space() != Space::model) throw ContractError("run_noising expects a model-space image");
  NoisingResult r;
  r.t0 = sched.snap(cfg.t0, cfg.inference_steps);
  r.mask = mask_override ? *mask_override : high_pass_mask(to_display_space(x), high_pass_params(cfg));
  require_mask_fits(r.mask, x);
  try {
    r.x_t0_creative = creative_stream(x, r.mask, denoiser, sched, cfg, rng, &r.x_T_creative);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("noising/creative: ") + e.what());
  }
  try {
    r.x_t0_stable = stable_stream(x, denoiser, sched, cfg);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("noising/stable: ") + e.what());
  }
  r.x_t0 = blend_and_calibrate(r.x_t0_stable, r.x_t0_creative, r.mask, cfg.tau, x, r.t0, sched, cfg.calibrate);
  require_finite(r.x_t0, "noising/blend");
  return r;
}

}  // namespace enhancekit
