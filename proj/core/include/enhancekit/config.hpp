#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace enhancekit {

enum class ScheduleKind { scaled_linear, cosine };
enum class SamplerKind { ddim, ddpm };
// Where the guidance gradient enters the creative stream: revise x_{t-1}
// directly, or shift the predicted noise by lambda * sigma_t * grad.
enum class GuidanceForm { x_space, eps_space };
// How gradients of functionals of x0_hat reach x_t.
//   locally_constant: the predicted noise is held fixed, d x0_hat / d x_t = I / alpha_t.
//   through_denoiser: the denoiser's vector-Jacobian product is included.
//   automatic: through_denoiser for analytic denoisers, locally_constant otherwise.
enum class GradientMode { automatic, locally_constant, through_denoiser };
enum class DenoiserKind { toy, gmm };

std::string_view to_string(ScheduleKind v);
std::string_view to_string(SamplerKind v);
std::string_view to_string(GuidanceForm v);
std::string_view to_string(GradientMode v);
std::string_view to_string(DenoiserKind v);

struct EnhanceConfig {
  // schedule
  int total_T = 1000;
  int inference_steps = 100;
  int t0 = 500;
  ScheduleKind schedule = ScheduleKind::scaled_linear;

  // noising stage
  double tau = 0.5;
  double lambda_ggs = 1.0;
  GuidanceForm guidance_form = GuidanceForm::x_space;
  SamplerKind creative_sampler = SamplerKind::ddim;
  bool calibrate = true;
  double hp_blur_sigma = 2.0;
  double hp_quantile = 0.6;
  int hp_dilate_radius = 2;

  // denoising stage
  double rho_acu = 4.0;
  double rho_dist = 20.0;
  double rho_adv = 0.3;
  double percentile_lo = 35.0;
  double percentile_hi = 65.0;
  double blur_sigma = 3.0;
  SamplerKind sampler = SamplerKind::ddim;
  GradientMode gradient_mode = GradientMode::automatic;
  // L_dist depends on x_t only through the denoiser, so it has its own mode.
  GradientMode dist_gradient_mode = GradientMode::through_denoiser;
  int regularize_every_k = 1;

  double guidance_scale = 1.0;
  std::uint64_t seed = 0;

  DenoiserKind denoiser = DenoiserKind::toy;
  std::string checkpoint;
  int label = -1;

  // Throws ConfigError on the first violated invariant.
  void validate() const;
};

// Flat `key = value` text, one entry per line, `#` starts a comment.
EnhanceConfig parse_config(std::string_view text, EnhanceConfig base = {});
EnhanceConfig load_config_file(const std::string& path, EnhanceConfig base = {});
// Applies one key; used for CLI overrides.
void set_config_value(EnhanceConfig& cfg, std::string_view key, std::string_view value);
std::map<std::string, std::string> config_entries(const EnhanceConfig& cfg);
std::string format_config(const EnhanceConfig& cfg);

// 30 steps with the regularizers applied every 4th step.
EnhanceConfig fast_preset(EnhanceConfig base = {});

}  // namespace enhancekit
