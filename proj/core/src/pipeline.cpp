#include "enhancekit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>

#include "enhancekit/image_io.hpp"
#include "enhancekit/regularizers.hpp"
#include "enhancekit/toy_data.hpp"
#include "enhancekit/toy_denoiser.hpp"

namespace enhancekit {
namespace {

// Substream ids; every run draws from (cfg.seed, id).
constexpr std::uint64_t kCreativeStream = 1;
constexpr std::uint64_t kDenoiseStream = 2;
constexpr std::uint64_t kGenerateStream = 3;
constexpr std::uint64_t kStatsStream = 1000;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

RunManifest base_manifest(std::string mode, const EnhanceConfig& cfg, const NoiseSchedule& sched,
                          const Denoiser& denoiser, Shape shape) {
  RunManifest m;
  m.mode = std::move(mode);
  m.config = cfg;
  m.schedule_id = sched.id();
  m.denoiser_id = denoiser.id();
  m.seed = cfg.seed;
  m.shape = shape;
  m.version = std::string(toolkit_version());
  return m;
}

FrequencyMask fit_mask(const FrequencyMask& mask, const Tensor& x) {
  const int mh = mask.high.height(), mw = mask.high.width();
  if (mh == x.height() && mw == x.width()) return mask;
  if (mh % x.height() == 0 && mw % x.width() == 0 && mh / x.height() == mw / x.width()) {
    return downsample_mask(mask, mh / x.height());
  }
  throw ConfigError("mask of " + std::to_string(mh) + "x" + std::to_string(mw) + " does not fit a " +
                    std::to_string(x.height()) + "x" + std::to_string(x.width()) + " image");
}

}  // namespace

std::string default_checkpoint_path() { return ENHANCEKIT_DEFAULT_CHECKPOINT; }

GmmDataModel toy_gmm_model(Shape shape, int components, double stddev, std::uint64_t seed) {
  if (components < 1) throw ContractError("mixture needs at least one component");
  if (shape.channels != 1 && shape.channels != 3) throw ContractError("mixture images need 1 or 3 channels");
  const int size = std::max(shape.height, shape.width);
  RandomSource rng(seed, 0x6a11);
  std::vector<GmmComponent> comps;
  for (int k = 0; k < components; ++k) {
    const int label = k % kToyShapeCount;
    const Tensor full = make_toy_image(rng, static_cast<ToyShape>(label), size);
    Tensor img({shape.height, shape.width, shape.channels}, Space::display);
    for (int y = 0; y < shape.height; ++y) {
      for (int x = 0; x < shape.width; ++x) {
        if (shape.channels == 3) {
          for (int c = 0; c < 3; ++c) img.at(y, x, c) = full.at(y, x, c);
        } else {
          img.at(y, x) = 0.299 * full.at(y, x, 0) + 0.587 * full.at(y, x, 1) + 0.114 * full.at(y, x, 2);
        }
      }
    }
    comps.push_back({1.0, to_model_space(img), stddev, label});
  }
  return GmmDataModel(std::move(comps));
}

std::unique_ptr<Denoiser> make_denoiser(const EnhanceConfig& cfg, const NoiseSchedule& sched, Shape shape) {
  if (cfg.denoiser == DenoiserKind::gmm) return std::make_unique<GmmDenoiser>(toy_gmm_model(shape), sched);
  const std::string path = cfg.checkpoint.empty() ? default_checkpoint_path() : cfg.checkpoint;
  auto model = std::make_unique<ToyDenoiser>(load_checkpoint(path));
  if (model->info().schedule_id != sched.id()) {
    throw ConfigError("checkpoint " + path + " was trained with schedule '" + model->info().schedule_id +
                      "', the run uses '" + sched.id() + "'");
  }
  return model;
}

Tensor denoise_stage(const Tensor& x_start, int t_start, const Denoiser& denoiser, const NoiseSchedule& sched,
                     const EnhanceConfig& cfg, const Condition& y, RandomSource& rng, TrajectoryLog* log,
                     bool keep_snapshots) {
  const RevisionContext ctx{denoiser, sched, y, cfg.gradient_mode, cfg.dist_gradient_mode,
                            cfg.percentile_lo, cfg.percentile_hi, cfg.blur_sigma};
  const RegularizerWeights weights = RegularizerWeights::from(cfg);
  Tensor cur = x_start;
  int step = 0;
  for (const auto& [t, t_prev] : sched.transitions(t_start, 0, cfg.inference_steps)) {
    const Tensor eps = denoiser.predict(cur, t, y);
    Tensor next = cfg.sampler == SamplerKind::ddim ? ddim_step(cur, eps, t, t_prev, sched)
                                                   : ddpm_step(cur, eps, t, t_prev, sched, rng);
    const bool active = step % cfg.regularize_every_k == 0;
    Revision rev = revise_step(next, cur, eps, t, ctx, active ? weights : RegularizerWeights::zero());
    if (!rev.x_prev.all_finite()) {
      throw NumericalError("denoising: non-finite iterate at step " + std::to_string(step) + " (t=" +
                           std::to_string(t_prev) + ")");
    }
    if (log) {
      TrajectoryLog::Entry entry{rev.diagnostics, -1};
      if (keep_snapshots) {
        entry.snapshot = static_cast<int>(log->snapshots.size());
        log->snapshots.push_back(cur);
      }
      log->entries.push_back(entry);
    }
    cur = std::move(rev.x_prev);
    ++step;
  }
  return cur;
}

RunResult enhance(const Tensor& x, const Denoiser& denoiser, const NoiseSchedule& sched, const EnhanceConfig& cfg,
                  const EnhanceOptions& options) {
  cfg.validate();
  if (x.space() != Space::display) throw ContractError("enhance expects a display-space image");
  const auto start = Clock::now();
  RunResult r;
  r.manifest = base_manifest("enhance", cfg, sched, denoiser, x.shape());
  r.manifest.input_path = options.input_path;
  r.manifest.input_hash = tensor_hash(x);
  std::optional<FrequencyMask> mask;
  if (options.mask_override) {
    mask = fit_mask(*options.mask_override, x);
    r.manifest.mask_path = options.mask_path;
    r.manifest.mask_hash = tensor_hash(mask->high);
  }
  const Tensor xm = to_model_space(x);

  RandomSource creative_rng(cfg.seed, kCreativeStream);
  auto t = Clock::now();
  try {
    r.noising = run_noising(xm, denoiser, sched, cfg, creative_rng, mask ? &*mask : nullptr);
  } catch (const NumericalError& e) {
    throw PipelineError(std::string("enhance/") + e.what(), r.manifest);
  }
  r.manifest.timings_ms["noising"] = elapsed_ms(t);

  RandomSource denoise_rng(cfg.seed, kDenoiseStream);
  t = Clock::now();
  Tensor out;
  try {
    out = denoise_stage(r.noising.x_t0, r.noising.t0, denoiser, sched, cfg, Condition::none(), denoise_rng, &r.log,
                        options.keep_snapshots);
  } catch (const NumericalError& e) {
    throw PipelineError(std::string("enhance/") + e.what(), r.manifest);
  }
  r.manifest.timings_ms["denoising"] = elapsed_ms(t);

  r.output = clamp(to_display_space(out), 0.0, 1.0);
  r.manifest.output_hash = tensor_hash(r.output);
  r.manifest.timings_ms["total"] = elapsed_ms(start);
  return r;
}

RunResult generate(Shape shape, const Condition& y, const Denoiser& denoiser, const NoiseSchedule& sched,
                   const EnhanceConfig& cfg, bool keep_snapshots) {
  cfg.validate();
  const auto start = Clock::now();
  RunResult r;
  r.manifest = base_manifest("generate", cfg, sched, denoiser, shape);
  r.manifest.label = y.has_label() ? y.label() : -1;
  const GuidedDenoiser guided(denoiser, cfg.guidance_scale);
  RandomSource noise_rng(cfg.seed, kGenerateStream);
  RandomSource denoise_rng(cfg.seed, kDenoiseStream);
  const Tensor x_T = noise_rng.normal_tensor(shape);
  Tensor out;
  try {
    out = denoise_stage(x_T, sched.total_T(), guided, sched, cfg, y, denoise_rng, &r.log, keep_snapshots);
  } catch (const NumericalError& e) {
    throw PipelineError(std::string("generate/") + e.what(), r.manifest);
  }
  r.manifest.timings_ms["denoising"] = elapsed_ms(start);
  r.output = clamp(to_display_space(out), 0.0, 1.0);
  r.manifest.output_hash = tensor_hash(r.output);
  r.manifest.timings_ms["total"] = elapsed_ms(start);
  return r;
}

RunResult replay(const RunManifest& manifest, const Denoiser& denoiser, const Tensor* input,
                 const FrequencyMask* mask) {
  if (denoiser.id() != manifest.denoiser_id) {
    throw ConfigError("manifest was recorded with denoiser " + manifest.denoiser_id + ", got " + denoiser.id());
  }
  const NoiseSchedule sched = NoiseSchedule::make(manifest.config.schedule, manifest.config.total_T);
  if (sched.id() != manifest.schedule_id) throw ConfigError("manifest schedule does not match its config");
  if (manifest.mode == "generate") {
    const Condition y = manifest.label >= 0 ? Condition::class_label(manifest.label) : Condition::none();
    return generate(manifest.shape, y, denoiser, sched, manifest.config);
  }
  if (!input) throw ConfigError("replaying an enhance manifest needs its input image");
  if (tensor_hash(*input) != manifest.input_hash) throw ConfigError("input image does not match the manifest hash");
  EnhanceOptions options;
  options.input_path = manifest.input_path;
  options.mask_path = manifest.mask_path;
  if (!manifest.mask_hash.empty()) {
    if (!mask) throw ConfigError("manifest used a mask override; pass the same mask");
    options.mask_override = mask;
  }
  RunResult r = enhance(*input, denoiser, sched, manifest.config, options);
  if (r.manifest.mask_hash != manifest.mask_hash) throw ConfigError("mask does not match the manifest hash");
  return r;
}

std::vector<NoiseStatsRow> noise_stats(const Denoiser& denoiser, const NoiseSchedule& sched, const EnhanceConfig& cfg,
                                       int n_runs, const StartSampler& start) {
  if (n_runs < 1) throw ContractError("noise_stats needs at least one run");
  cfg.validate();
  const int t0 = sched.snap(cfg.t0, cfg.inference_steps);
  std::vector<std::vector<StepDiagnostics>> runs;
  for (int run = 0; run < n_runs; ++run) {
    RandomSource rng(cfg.seed, kStatsStream + static_cast<std::uint64_t>(run));
    const Tensor x_t0 = start(run, rng);
    TrajectoryLog log;
    denoise_stage(x_t0, t0, denoiser, sched, cfg, Condition::none(), rng, &log);
    runs.push_back(log.diagnostics());
  }
  std::vector<NoiseStatsRow> rows;
  for (std::size_t i = 0; i < runs.front().size(); ++i) {
    NoiseStatsRow row;
    row.t = runs.front()[i].t;
    row.runs = n_runs;
    for (const auto& run : runs) {
      row.mean += run[i].eps_mean;
      row.variance += run[i].eps_var;
    }
    row.mean /= n_runs;
    row.variance /= n_runs;
    for (const auto& run : runs) {
      row.mean_sd += (run[i].eps_mean - row.mean) * (run[i].eps_mean - row.mean);
      row.variance_sd += (run[i].eps_var - row.variance) * (run[i].eps_var - row.variance);
    }
    row.mean_sd = std::sqrt(row.mean_sd / n_runs);
    row.variance_sd = std::sqrt(row.variance_sd / n_runs);
    rows.push_back(row);
  }
  return rows;
}

StartSampler blended_starts(std::vector<Tensor> images, const Denoiser& denoiser, const NoiseSchedule& sched,
                            const EnhanceConfig& cfg) {
  if (images.empty()) throw ContractError("blended_starts needs at least one image");
  return [images = std::move(images), &denoiser, sched, cfg](int run, RandomSource& rng) {
    return run_noising(images[static_cast<std::size_t>(run) % images.size()], denoiser, sched, cfg, rng).x_t0;
  };
}

StartSampler exact_starts(const GmmDataModel& model, const NoiseSchedule& sched, const EnhanceConfig& cfg) {
  const int t0 = sched.snap(cfg.t0, cfg.inference_steps);
  return [model, sched, t0](int, RandomSource& rng) {
    const Tensor x0 = model.sample(rng);
    return add_noise(x0, t0, rng.normal_tensor(x0.shape()), sched);
  };
}

std::string noise_stats_csv(const std::vector<NoiseStatsRow>& rows) {
  std::string out = "t,mean,mean_sd,variance,variance_sd,runs\n";
  char buf[192];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%d\n", r.t, r.mean, r.mean_sd, r.variance,
                  r.variance_sd, r.runs);
    out += buf;
  }
  return out;
}

RegionChange region_change(const Tensor& input, const Tensor& output, const FrequencyMask& mask) {
  require_same_shape(input, output, "region_change");
  if (mask.high.height() != input.height() || mask.high.width() != input.width()) {
    throw ContractError("region_change: mask does not match the image");
  }
  const int C = input.channels();
  double abs_h = 0.0, abs_l = 0.0, sq_h = 0.0, sq_l = 0.0, n_h = 0.0, n_l = 0.0;
  for (std::size_t p = 0; p < mask.high.size(); ++p) {
    const bool high = mask.high[p] != 0.0;
    for (int c = 0; c < C; ++c) {
      const double d = output[p * C + c] - input[p * C + c];
      (high ? abs_h : abs_l) += std::abs(d);
      (high ? sq_h : sq_l) += d * d;
      (high ? n_h : n_l) += 1.0;
    }
  }
  RegionChange r;
  if (n_h > 0) {
    r.mean_abs_high = abs_h / n_h;
    r.rms_high = std::sqrt(sq_h / n_h);
  }
  if (n_l > 0) {
    r.mean_abs_low = abs_l / n_l;
    r.rms_low = std::sqrt(sq_l / n_l);
  }
  return r;
}

std::vector<AblationRow> ablate_t0(const Tensor& x, const Denoiser& denoiser, const NoiseSchedule& sched,
                                   const EnhanceConfig& cfg, const std::vector<int>& t0_list,
                                   const EnhanceOptions& options) {
  if (t0_list.empty()) throw ConfigError("ablate_t0 needs at least one t0");
  std::vector<AblationRow> rows;
  const double acu_in = banded_acutance(x, cfg.percentile_lo, cfg.percentile_hi);
  for (int t0 : t0_list) {
    EnhanceConfig c = cfg;
    c.t0 = t0;
    RunResult r = enhance(x, denoiser, sched, c, options);
    AblationRow row;
    row.t0 = r.noising.t0;
    row.change = region_change(x, r.output, r.noising.mask);
    row.acutance_in = acu_in;
    row.acutance_out = banded_acutance(r.output, cfg.percentile_lo, cfg.percentile_hi);
    row.output = std::move(r.output);
    row.manifest = std::move(r.manifest);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out =
      "t0,mean_abs_high,mean_abs_low,rms_high,rms_low,acutance_in,acutance_out,acutance_delta,output_hash\n";
  char buf[320];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s\n", r.t0, r.change.mean_abs_high,
                  r.change.mean_abs_low, r.change.rms_high, r.change.rms_low, r.acutance_in, r.acutance_out,
                  r.acutance_out - r.acutance_in, r.manifest.output_hash.c_str());
    out += buf;
  }
  return out;
}

}  // namespace enhancekit
