#pragma once

#include <string_view>

#include "enhancekit/config.hpp"
#include "enhancekit/denoiser.hpp"
#include "enhancekit/schedule.hpp"
#include "enhancekit/tensor.hpp"

namespace enhancekit {

struct RegularizerWeights {
  double rho_acu = 4.0;
  double rho_dist = 20.0;
  double rho_adv = 0.3;

  static RegularizerWeights zero() { return {0.0, 0.0, 0.0}; }
  static RegularizerWeights from(const EnhanceConfig& cfg) { return {cfg.rho_acu, cfg.rho_dist, cfg.rho_adv}; }
  bool all_zero() const { return rho_acu == 0.0 && rho_dist == 0.0 && rho_adv == 0.0; }
  void validate() const;
};

struct StepDiagnostics {
  int t = 0;
  double loss_acu = 0.0;
  double loss_dist = 0.0;
  double loss_adv = 0.0;
  double eps_mean = 0.0;
  double eps_var = 0.0;
  double revision_norm = 0.0;
};

// Per-pixel Sobel gradient magnitude sqrt(gx^2 + gy^2) of the luminance.
Tensor acutance_map(const Tensor& x0_hat);

// V: 1 on pixels whose rank r (ascending, ties broken by pixel index) satisfies
// lo <= 100 r / n <= hi. An all-equal map has V = 0.
Tensor band_mask(const Tensor& map, double lo, double hi);

struct AcutanceLoss {
  double loss = 0.0;  // -(1/HW) sum V F
  Tensor band;
};

AcutanceLoss acutance_loss(const Tensor& x0_hat, double lo, double hi);
// Gradient wrt x0_hat with the band held fixed.
Tensor acutance_loss_grad(const Tensor& x0_hat, double lo, double hi);

// |1 - Var(eps)| with the population variance.
double distribution_loss(const Tensor& eps_hat);
Tensor distribution_loss_grad(const Tensor& eps_hat);

// ||x0 - blur(x0)||_2 / sqrt(HWC).
double adversarial_loss(const Tensor& x0_hat, double blur_sigma);
Tensor adversarial_loss_grad(const Tensor& x0_hat, double blur_sigma);

enum class RegularizerTerm { acutance, distribution, adversarial };
std::string_view to_string(RegularizerTerm term);

struct RevisionContext {
  const Denoiser& denoiser;
  const NoiseSchedule& sched;
  Condition condition;
  GradientMode x0_mode = GradientMode::automatic;
  GradientMode dist_mode = GradientMode::through_denoiser;
  double percentile_lo = 35.0;
  double percentile_hi = 65.0;
  double blur_sigma = 3.0;
};

// grad_{x_t} of one regularizer evaluated on x0_hat(x_t, eps_hat) (or eps_hat
// itself for the distribution term). eps_hat must be the denoiser output at x_t.
Tensor regularizer_gradient(RegularizerTerm term, const Tensor& x_t, const Tensor& eps_hat, int t,
                            const RevisionContext& ctx);

struct Revision {
  Tensor x_prev;
  StepDiagnostics diagnostics;
};

// x*_{t-1} = x_{t-1} - rho_acu grad L_acu - rho_dist grad L_dist - rho_adv grad L_adv,
// every gradient taken with respect to x_t.
Revision revise_step(const Tensor& x_prev, const Tensor& x_t, const Tensor& eps_hat, int t,
                     const RevisionContext& ctx, const RegularizerWeights& weights);

// Mean of the banded acutance map: the sharpness proxy reported by sweeps.
double banded_acutance(const Tensor& img, double lo = 35.0, double hi = 65.0);

}  // namespace enhancekit
