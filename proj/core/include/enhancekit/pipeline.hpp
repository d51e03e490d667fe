#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "enhancekit/config.hpp"
#include "enhancekit/denoiser.hpp"
#include "enhancekit/errors.hpp"
#include "enhancekit/frequency.hpp"
#include "enhancekit/gmm_denoiser.hpp"
#include "enhancekit/manifest.hpp"
#include "enhancekit/noising.hpp"
#include "enhancekit/schedule.hpp"

namespace enhancekit {

// A numerical failure inside enhance/generate, carrying the partial manifest.
class PipelineError : public NumericalError {
 public:
  PipelineError(const std::string& what, RunManifest manifest)
      : NumericalError(what), manifest_(std::move(manifest)) {}
  const RunManifest& manifest() const { return manifest_; }

 private:
  RunManifest manifest_;
};

// Path of the checkpoint shipped with the source tree.
std::string default_checkpoint_path();

// Mixture whose sharp modes are procedural toy images (one class label each).
GmmDataModel toy_gmm_model(Shape shape, int components = 16, double stddev = 0.05, std::uint64_t seed = 0x6a11);

// The toy checkpoint named by cfg (or the shipped default), or the analytic
// mixture over `shape`. ConfigError when a checkpoint was trained on another schedule.
std::unique_ptr<Denoiser> make_denoiser(const EnhanceConfig& cfg, const NoiseSchedule& sched, Shape shape);

// Sampler steps t_start -> 0, each followed by the revision step (every k-th
// step; the others only record diagnostics). Returns the model-space sample.
Tensor denoise_stage(const Tensor& x_start, int t_start, const Denoiser& denoiser, const NoiseSchedule& sched,
                     const EnhanceConfig& cfg, const Condition& y, RandomSource& rng, TrajectoryLog* log = nullptr,
                     bool keep_snapshots = false);

struct EnhanceOptions {
  const FrequencyMask* mask_override = nullptr;
  std::string input_path;
  std::string mask_path;
  bool keep_snapshots = false;
};

struct RunResult {
  Tensor output;  // display space, clamped to [0, 1]
  RunManifest manifest;
  TrajectoryLog log;
  NoisingResult noising;  // enhance only
};

// Noising to the snapped t0, then regularized denoising to 0. x is display space.
RunResult enhance(const Tensor& x, const Denoiser& denoiser, const NoiseSchedule& sched, const EnhanceConfig& cfg,
                  const EnhanceOptions& options = {});

// Regularized denoising of x_T ~ N(0, I) from T. Classifier-free guidance at
// cfg.guidance_scale applies when y carries a label.
RunResult generate(Shape shape, const Condition& y, const Denoiser& denoiser, const NoiseSchedule& sched,
                   const EnhanceConfig& cfg, bool keep_snapshots = false);

// Reruns a manifest. Enhance manifests need the original input (and mask, if
// one was used); ConfigError when the input hash or denoiser id disagree.
RunResult replay(const RunManifest& manifest, const Denoiser& denoiser, const Tensor* input = nullptr,
                 const FrequencyMask* mask = nullptr);

struct NoiseStatsRow {
  int t = 0;
  double mean = 0.0;  // average of per-run eps means
  double mean_sd = 0.0;
  double variance = 0.0;  // average of per-run eps variances
  double variance_sd = 0.0;
  int runs = 0;
};

// Produces the model-space iterate at the snapped t0 that starts run `run`.
using StartSampler = std::function<Tensor(int run, RandomSource& rng)>;

// Runs the denoising stage n_runs times from sampled starts and aggregates
// the predicted-noise statistics per timestep.
std::vector<NoiseStatsRow> noise_stats(const Denoiser& denoiser, const NoiseSchedule& sched, const EnhanceConfig& cfg,
                                       int n_runs, const StartSampler& start);
// Starts from the calibrated two-stream blend of images[run % size] (model space).
StartSampler blended_starts(std::vector<Tensor> images, const Denoiser& denoiser, const NoiseSchedule& sched,
                            const EnhanceConfig& cfg);
// Starts from exact forward noising of mixture samples: alpha x0 + sigma eps.
StartSampler exact_starts(const GmmDataModel& model, const NoiseSchedule& sched, const EnhanceConfig& cfg);
std::string noise_stats_csv(const std::vector<NoiseStatsRow>& rows);

struct RegionChange {
  double mean_abs_high = 0.0;  // mean |output - input| over high-mask pixels
  double mean_abs_low = 0.0;
  double rms_high = 0.0;
  double rms_low = 0.0;
};

// Statistics of the change between two same-shape images, split by the mask.
RegionChange region_change(const Tensor& input, const Tensor& output, const FrequencyMask& mask);

struct AblationRow {
  int t0 = 0;
  Tensor output;
  RunManifest manifest;
  RegionChange change;
  double acutance_in = 0.0;
  double acutance_out = 0.0;
};

// Enhance at each t0 (snapped to the grid) with everything else fixed.
std::vector<AblationRow> ablate_t0(const Tensor& x, const Denoiser& denoiser, const NoiseSchedule& sched,
                                   const EnhanceConfig& cfg, const std::vector<int>& t0_list,
                                   const EnhanceOptions& options = {});
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace enhancekit
