#pragma once

#include "enhancekit/config.hpp"
#include "enhancekit/denoiser.hpp"
#include "enhancekit/frequency.hpp"
#include "enhancekit/random.hpp"
#include "enhancekit/schedule.hpp"

namespace enhancekit {

struct NoisingResult {
  Tensor x_t0;           // calibrated blend fed to the denoising stage
  Tensor x_t0_creative;  // creative stream at t0
  Tensor x_t0_stable;    // DDIM inversion at t0
  Tensor x_T_creative;   // creative stream starting point
  FrequencyMask mask;
  int t0 = 0;
};

HighPassParams high_pass_params(const EnhanceConfig& cfg);

// Guidance energy: mean over high-mask elements of (x - x0_hat)^2; zero for an empty mask.
double ggs_energy(const Tensor& x, const Tensor& x0_hat, const FrequencyMask& mask);
Tensor ggs_energy_grad_x0(const Tensor& x, const Tensor& x0_hat, const FrequencyMask& mask);
// grad_{x_t} of the energy through x0_hat(x_t, eps_hat).
Tensor ggs_gradient(const Tensor& x_t, const Tensor& eps_hat, int t, const Tensor& x, const FrequencyMask& mask,
                    const Denoiser& denoiser, const NoiseSchedule& sched, GradientMode mode);

// x_T = alpha_T x + sigma_T eps, then guided denoising T -> t0. Each update is
// followed by x_{t-1} -= lambda grad_{x_t} g (x_space), or the noise estimate is
// shifted by lambda sigma_t grad g before the update (eps_space).
Tensor creative_stream(const Tensor& x, const FrequencyMask& mask, const Denoiser& denoiser,
                       const NoiseSchedule& sched, const EnhanceConfig& cfg, RandomSource& rng,
                       Tensor* x_T_out = nullptr);

// DDIM inversion of x to the (snapped) t0.
Tensor stable_stream(const Tensor& x, const Denoiser& denoiser, const NoiseSchedule& sched,
                     const EnhanceConfig& cfg);

// 1 / sqrt(2 tau^2 - 2 tau + 1)
double calibration_scale(double tau);

// High region takes x_s. Low region blends b = tau x_s + (1 - tau) x_c and, when
// calibrating, rescales the residual about alpha_t0 x by calibration_scale(tau).
Tensor blend_and_calibrate(const Tensor& x_s, const Tensor& x_c, const FrequencyMask& mask, double tau,
                           const Tensor& x, int t0, const NoiseSchedule& sched, bool calibrate = true);

// Mask (unless overridden) -> creative and stable streams -> blend. x is model space.
NoisingResult run_noising(const Tensor& x, const Denoiser& denoiser, const NoiseSchedule& sched,
                          const EnhanceConfig& cfg, RandomSource& rng, const FrequencyMask* mask_override = nullptr);

}  // namespace enhancekit
