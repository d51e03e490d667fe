#include "enhancekit/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "enhancekit/denoiser.hpp"
#include "enhancekit/errors.hpp"

namespace enhancekit {

NoiseSchedule::NoiseSchedule(std::string id, std::vector<double> alpha_bar) : id_(std::move(id)) {
  if (alpha_bar.empty()) throw ContractError("noise schedule needs at least one timestep");
  alpha_bar_.reserve(alpha_bar.size() + 1);
  alpha_bar_.push_back(1.0);
  double prev = 1.0;
  for (double a : alpha_bar) {
    if (!(a > 0.0 && a <= prev)) {
      throw ContractError("alpha_bar must be positive and non-increasing");
    }
    alpha_bar_.push_back(a);
    prev = a;
  }
  alphas_.resize(alpha_bar_.size());
  sigmas_.resize(alpha_bar_.size());
  for (std::size_t t = 0; t < alpha_bar_.size(); ++t) {
    alphas_[t] = std::sqrt(alpha_bar_[t]);
    sigmas_[t] = std::sqrt(1.0 - alpha_bar_[t]);
  }
}

NoiseSchedule NoiseSchedule::scaled_linear(int total_T) {
  if (total_T < 1) throw ContractError("total_T must be positive");
  const double lo = std::sqrt(0.00085);
  const double hi = std::sqrt(0.012);
  std::vector<double> alpha_bar(total_T);
  double prod = 1.0;
  for (int i = 0; i < total_T; ++i) {
    const double frac = total_T == 1 ? 0.0 : static_cast<double>(i) / (total_T - 1);
    const double root = lo + (hi - lo) * frac;
    prod *= 1.0 - root * root;
    alpha_bar[i] = prod;
  }
  return NoiseSchedule("scaled_linear_" + std::to_string(total_T), std::move(alpha_bar));
}

NoiseSchedule NoiseSchedule::cosine(int total_T) {
  if (total_T < 1) throw ContractError("total_T must be positive");
  constexpr double s = 0.008;
  auto f = [&](double t) {
    const double c = std::cos((t / total_T + s) / (1.0 + s) * std::numbers::pi / 2.0);
    return c * c;
  };
  std::vector<double> alpha_bar(total_T);
  double prod = 1.0;
  for (int t = 1; t <= total_T; ++t) {
    const double beta = std::min(1.0 - f(t) / f(t - 1), 0.999);
    prod *= 1.0 - beta;
    alpha_bar[t - 1] = prod;
  }
  return NoiseSchedule("cosine_" + std::to_string(total_T), std::move(alpha_bar));
}

NoiseSchedule NoiseSchedule::make(ScheduleKind kind, int total_T) {
  return kind == ScheduleKind::scaled_linear ? scaled_linear(total_T) : cosine(total_T);
}

std::size_t NoiseSchedule::checked(int t) const {
  if (t < 0 || t > total_T()) {
    throw ContractError("timestep " + std::to_string(t) + " outside [0, " + std::to_string(total_T()) + "]");
  }
  return static_cast<std::size_t>(t);
}

std::vector<int> NoiseSchedule::step_grid(int inference_steps) const {
  const int T = total_T();
  if (inference_steps < 1 || inference_steps > T) {
    throw ContractError("inference_steps must lie in [1, " + std::to_string(T) + "]");
  }
  std::vector<int> grid(inference_steps);
  for (int i = 0; i < inference_steps; ++i) {
    grid[i] = static_cast<int>(std::lround(static_cast<double>(T) * (inference_steps - i) / inference_steps));
  }
  return grid;
}

int NoiseSchedule::snap(int t, int inference_steps) const {
  if (t <= 0) return 0;
  const auto grid = step_grid(inference_steps);
  int best = grid.front();
  for (int g : grid) {
    if (std::abs(g - t) < std::abs(best - t) || (std::abs(g - t) == std::abs(best - t) && g < best)) best = g;
  }
  return best;
}

std::vector<std::pair<int, int>> NoiseSchedule::transitions(int t_start, int t_stop, int inference_steps) const {
  auto grid = step_grid(inference_steps);
  grid.push_back(0);
  if (std::find(grid.begin(), grid.end(), t_start) == grid.end() ||
      std::find(grid.begin(), grid.end(), t_stop) == grid.end()) {
    throw ContractError("timesteps " + std::to_string(t_start) + " and " + std::to_string(t_stop) +
                        " must lie on the inference grid");
  }
  if (t_stop > t_start) throw ContractError("transitions run from high to low timesteps");
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (grid[i] <= t_start && grid[i + 1] >= t_stop) out.emplace_back(grid[i], grid[i + 1]);
  }
  return out;
}

Tensor add_noise(const Tensor& x, int t, const Tensor& eps, const NoiseSchedule& sched) {
  require_same_shape(x, eps, "add_noise");
  return lincomb(sched.alpha(t), x, sched.sigma(t), eps);
}

Tensor predict_x0(const Tensor& x_t, const Tensor& eps_hat, int t, const NoiseSchedule& sched) {
  require_same_shape(x_t, eps_hat, "predict_x0");
  const double a = sched.alpha(t);
  if (a < 1e-8) throw NumericalError("predict_x0: alpha_" + std::to_string(t) + " is singular");
  return lincomb(1.0 / a, x_t, -sched.sigma(t) / a, eps_hat);
}

Tensor ddim_step(const Tensor& x_t, const Tensor& eps_hat, int t, int t_prev, const NoiseSchedule& sched) {
  if (t_prev >= t) {
    throw ContractError("ddim_step requires t_prev < t (got " + std::to_string(t_prev) + " >= " +
                        std::to_string(t) + ")");
  }
  const Tensor x0 = predict_x0(x_t, eps_hat, t, sched);
  return lincomb(sched.alpha(t_prev), x0, sched.sigma(t_prev), eps_hat);
}

double ancestral_variance(int t, int t_prev, const NoiseSchedule& sched) {
  const double ab_t = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t_prev);
  if (1.0 - ab_t <= 0.0) return 0.0;
  return std::max(0.0, (1.0 - ab_prev) / (1.0 - ab_t) * (1.0 - ab_t / ab_prev));
}

Tensor ddpm_step(const Tensor& x_t, const Tensor& eps_hat, int t, int t_prev, const NoiseSchedule& sched,
                 RandomSource& rng) {
  if (t_prev >= t) {
    throw ContractError("ddpm_step requires t_prev < t (got " + std::to_string(t_prev) + " >= " +
                        std::to_string(t) + ")");
  }
  const double var = ancestral_variance(t, t_prev, sched);
  if (var == 0.0) return ddim_step(x_t, eps_hat, t, t_prev, sched);
  const Tensor x0 = predict_x0(x_t, eps_hat, t, sched);
  const double s_prev = sched.sigma(t_prev);
  const double dir = std::sqrt(std::max(0.0, s_prev * s_prev - var));
  Tensor out = lincomb(sched.alpha(t_prev), x0, dir, eps_hat);
  axpy(std::sqrt(var), rng.normal_tensor(x_t.shape()), out);
  return out;
}

Tensor ddim_invert(const Tensor& x, int t_target, const Denoiser& denoiser, const Condition& y,
                   const NoiseSchedule& sched, int inference_steps) {
  if (t_target == 0) return x;
  auto hops = sched.transitions(t_target, 0, inference_steps);
  std::reverse(hops.begin(), hops.end());
  Tensor cur = x;
  for (const auto& [t_next, t_cur] : hops) {
    const Tensor eps = denoiser.predict(cur, t_next, y);
    const Tensor x0 = predict_x0(cur, eps, t_cur, sched);
    cur = lincomb(sched.alpha(t_next), x0, sched.sigma(t_next), eps);
    require_finite(cur, "ddim_invert at t=" + std::to_string(t_next));
  }
  return cur;
}

Tensor ddim_sample(const Tensor& x, int t_start, const Denoiser& denoiser, const Condition& y,
                   const NoiseSchedule& sched, int inference_steps) {
  Tensor cur = x;
  for (const auto& [t, t_prev] : sched.transitions(t_start, 0, inference_steps)) {
    cur = ddim_step(cur, denoiser.predict(cur, t, y), t, t_prev, sched);
    require_finite(cur, "ddim_sample at t=" + std::to_string(t_prev));
  }
  return cur;
}

}  // namespace enhancekit
