#pragma once

#include <string>
#include <utility>
#include <vector>

#include "enhancekit/config.hpp"
#include "enhancekit/random.hpp"
#include "enhancekit/tensor.hpp"

namespace enhancekit {

class Denoiser;
class Condition;

// Variance-preserving discrete schedule: x_t = alpha_t x + sigma_t eps with
// alpha_t^2 + sigma_t^2 = 1. Index 0 is the clean image (alpha 1, sigma 0);
// index T is the noisiest level.
class NoiseSchedule {
 public:
  // `alpha_bar` holds cumulative products for t = 1..T; t = 0 is prepended.
  NoiseSchedule(std::string id, std::vector<double> alpha_bar);

  // Squared-linear betas from 0.00085 to 0.012, the latent-diffusion convention.
  static NoiseSchedule scaled_linear(int total_T = 1000);
  static NoiseSchedule cosine(int total_T = 1000);
  static NoiseSchedule make(ScheduleKind kind, int total_T);

  const std::string& id() const { return id_; }
  int total_T() const { return static_cast<int>(alpha_bar_.size()) - 1; }
  double alpha_bar(int t) const { return alpha_bar_.at(checked(t)); }
  double alpha(int t) const { return alphas_[checked(t)]; }
  double sigma(int t) const { return sigmas_[checked(t)]; }

  // Strictly decreasing grid {round(T (n - i) / n) : i = 0..n-1}; it starts at T
  // and its last element hops to 0.
  std::vector<int> step_grid(int inference_steps) const;
  // Grid point closest to t (ties resolve to the lower timestep); t <= 0 maps to the terminal 0.
  int snap(int t, int inference_steps) const;
  // Consecutive (t, t_prev) pairs of the grid from t_start down to t_stop,
  // where 0 counts as the terminal point.
  std::vector<std::pair<int, int>> transitions(int t_start, int t_stop, int inference_steps) const;

 private:
  std::size_t checked(int t) const;

  std::string id_;
  std::vector<double> alpha_bar_;
  std::vector<double> alphas_;
  std::vector<double> sigmas_;
};

// alpha_t x + sigma_t eps
Tensor add_noise(const Tensor& x, int t, const Tensor& eps, const NoiseSchedule& sched);
// (x_t - sigma_t eps_hat) / alpha_t; NumericalError when alpha_t < 1e-8.
Tensor predict_x0(const Tensor& x_t, const Tensor& eps_hat, int t, const NoiseSchedule& sched);
// Deterministic update (eta = 0): alpha_prev x0_hat + sigma_prev eps_hat.
Tensor ddim_step(const Tensor& x_t, const Tensor& eps_hat, int t, int t_prev, const NoiseSchedule& sched);
// Ancestral update for a possibly strided pair (t, t_prev).
Tensor ddpm_step(const Tensor& x_t, const Tensor& eps_hat, int t, int t_prev, const NoiseSchedule& sched,
                 RandomSource& rng);
// Variance of the noise injected by ddpm_step:
// (1 - abar_prev) / (1 - abar_t) * (1 - abar_t / abar_prev).
double ancestral_variance(int t, int t_prev, const NoiseSchedule& sched);

// Maps a clean image to x_{t_target} by running the DDIM recurrence upward
// along the grid. Each hop evaluates the denoiser on the current (less noisy)
// iterate with the destination timestep.
Tensor ddim_invert(const Tensor& x, int t_target, const Denoiser& denoiser, const Condition& y,
                   const NoiseSchedule& sched, int inference_steps);

// Deterministic DDIM chain from x at t_start down to 0.
Tensor ddim_sample(const Tensor& x, int t_start, const Denoiser& denoiser, const Condition& y,
                   const NoiseSchedule& sched, int inference_steps);

}  // namespace enhancekit
