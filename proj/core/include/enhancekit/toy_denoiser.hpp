#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "enhancekit/denoiser.hpp"
#include "enhancekit/random.hpp"
#include "enhancekit/schedule.hpp"

namespace enhancekit {

struct ToyArchitecture {
  int in_channels = 3;
  int base_channels = 32;
  int embed_dim = 128;
  // Label embeddings for classes 0..num_classes-1 plus one null slot.
  int num_classes = 4;

  bool operator==(const ToyArchitecture&) const = default;
};

struct ToyCheckpointInfo {
  std::string schedule_id;
  int image_size = 32;
  std::uint64_t seed = 0;
  int train_steps = 0;
};

namespace detail {
class UNet;
}

// Small U-Net noise predictor: three resolutions (base, 2x, 2x channels),
// residual blocks conditioned on a sinusoidal timestep embedding plus an
// optional label embedding. Parameters are stored as float32; arithmetic is
// double so gradient checks stay meaningful. Height and width must be
// multiples of 4.
class ToyDenoiser final : public Denoiser {
 public:
  ToyDenoiser(ToyArchitecture arch, std::uint64_t init_seed);
  ToyDenoiser(ToyArchitecture arch, std::vector<float> params, ToyCheckpointInfo info = {});
  ~ToyDenoiser() override;
  ToyDenoiser(const ToyDenoiser&);
  ToyDenoiser& operator=(const ToyDenoiser&);
  ToyDenoiser(ToyDenoiser&&) noexcept;
  ToyDenoiser& operator=(ToyDenoiser&&) noexcept;

  Tensor predict(const Tensor& x_t, int t, const Condition& y) const override;
  Tensor vjp(const Tensor& x_t, int t, const Condition& y, const Tensor& cotangent) const override;
  bool has_exact_vjp() const override { return true; }
  std::string id() const override;

  const ToyArchitecture& architecture() const { return arch_; }
  const ToyCheckpointInfo& info() const { return info_; }
  void set_info(ToyCheckpointInfo info) { info_ = std::move(info); }
  const std::vector<float>& parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }
  void set_parameters(std::vector<float> params);

  // Loss gradient for one training example; returns the example loss
  // mean((eps_hat - eps)^2) and accumulates d loss / d params * weight.
  double accumulate_gradient(const Tensor& x_t, int t, const Condition& y, const Tensor& eps,
                             double weight, std::vector<double>& grads) const;

 private:
  void rebuild();

  ToyArchitecture arch_;
  std::vector<float> params_;
  ToyCheckpointInfo info_;
  std::unique_ptr<detail::UNet> net_;
};

// JSON header line + little-endian float32 parameter payload.
void save_checkpoint(const std::string& path, const ToyDenoiser& model);
ToyDenoiser load_checkpoint(const std::string& path);
std::vector<std::uint8_t> encode_checkpoint(const ToyDenoiser& model);
ToyDenoiser decode_checkpoint(const std::vector<std::uint8_t>& bytes);

struct TrainingExample {
  Tensor image;  // model space
  Condition condition;
};

struct TrainHyperparams {
  int steps = 2000;
  int batch_size = 16;
  double learning_rate = 5e-4;
  double ema_decay = 0.999;
  double grad_clip = 1.0;
  double label_dropout = 0.1;
  int eval_every = 100;
  int validation_size = 64;
  // Stop after this many evaluations without improvement; 0 disables.
  int patience = 0;
  ToyArchitecture arch;
};

struct TrainingReport {
  std::vector<int> eval_steps;
  std::vector<double> validation_mse;  // raw per-evaluation values
  std::vector<double> best_mse;        // running minimum, the early-stopping curve
  std::vector<double> train_loss;      // mean batch loss between evaluations
  double zero_predictor_mse = 0.0;     // validation MSE of predicting eps = 0
  int best_step = 0;
  int steps_run = 0;
};

using TrainingObserver = std::function<void(int step, double validation_mse, const ToyDenoiser& current)>;

// Minimises E||eps - eps_theta(alpha_t x + sigma_t eps; t, y)||^2 with Adam over
// t ~ U{1..T}. The returned model holds the EMA weights with the best validation MSE.
ToyDenoiser train_toy_denoiser(const std::vector<TrainingExample>& dataset, const NoiseSchedule& sched,
                               RandomSource& rng, const TrainHyperparams& hp, TrainingReport* report = nullptr,
                               const TrainingObserver& observer = {});

}  // namespace enhancekit
