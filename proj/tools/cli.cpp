#include "cli.hpp"

#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "enhancekit/errors.hpp"
#include "enhancekit/image_io.hpp"
#include "enhancekit/pipeline.hpp"
#include "enhancekit/plot.hpp"
#include "enhancekit/toy_data.hpp"
#include "enhancekit/toy_denoiser.hpp"

namespace enhancekit::cli {
namespace {

namespace fs = std::filesystem;

// Options shared by every subcommand that runs the pipeline.
struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::optional<std::uint64_t> seed;
  std::optional<std::string> denoiser;
  std::optional<std::string> checkpoint;
  bool fast = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Config file (key = value lines)");
  cmd->add_option("--set", o.overrides, "Override one config key, e.g. --set rho_acu=2")->take_all();
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--denoiser", o.denoiser, "toy or gmm");
  cmd->add_option("--checkpoint", o.checkpoint, "Toy denoiser checkpoint");
  cmd->add_flag("--fast", o.fast, "30 steps, regularizers every 4th step");
}

EnhanceConfig build_config(const CommonOptions& o) {
  EnhanceConfig cfg;
  if (o.fast) cfg = fast_preset(cfg);
  if (!o.config_path.empty()) cfg = load_config_file(o.config_path, cfg);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.denoiser) set_config_value(cfg, "denoiser", *o.denoiser);
  if (o.checkpoint) cfg.checkpoint = *o.checkpoint;
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

Shape parse_size(const std::string& text, int channels) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const int h = std::stoi(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(text);
    const std::string ws = text.substr(x + 1);
    const int w = std::stoi(ws, &used);
    if (used != ws.size() || h < 1 || w < 1) throw std::invalid_argument(text);
    return {h, w, channels};
  } catch (const std::logic_error&) {
    throw ConfigError("--size expects HxW, got '" + text + "'");
  }
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("expected a comma-separated integer list, got '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

std::string default_manifest_path(const std::string& output) { return output + ".manifest.json"; }

void dump_intermediates(const std::string& dir, const RunResult& r) {
  ensure_dir(dir);
  const fs::path d(dir);
  write_tensor_dump((d / "x_T_creative.f32").string(), r.noising.x_T_creative);
  write_tensor_dump((d / "x_t0_creative.f32").string(), r.noising.x_t0_creative);
  write_tensor_dump((d / "x_t0_stable.f32").string(), r.noising.x_t0_stable);
  write_tensor_dump((d / "x_t0.f32").string(), r.noising.x_t0);
  write_tensor_dump((d / "mask_high.f32").string(), r.noising.mask.high);
  write_png((d / "mask_high.png").string(), mask_to_image(r.noising.mask));
  write_diagnostics_csv((d / "diagnostics.csv").string(), r.log.diagnostics());
}

int cmd_enhance(const CommonOptions& common, const std::string& input, const std::string& output,
                std::optional<int> t0, std::optional<double> tau, const std::string& dump_dir,
                const std::string& mask_path, std::string manifest_path, const std::string& diag_path,
                std::ostream& out) {
  EnhanceConfig cfg = build_config(common);
  if (t0) cfg.t0 = *t0;
  if (tau) cfg.tau = *tau;
  cfg.validate();
  const Tensor x = read_png(input);
  const NoiseSchedule sched = NoiseSchedule::make(cfg.schedule, cfg.total_T);
  const auto denoiser = make_denoiser(cfg, sched, x.shape());
  std::optional<FrequencyMask> mask;
  EnhanceOptions options;
  options.input_path = input;
  if (!mask_path.empty()) {
    mask = mask_from_image(read_png(mask_path));
    options.mask_override = &*mask;
    options.mask_path = mask_path;
  }
  if (manifest_path.empty()) manifest_path = default_manifest_path(output);
  RunResult r;
  try {
    r = enhance(x, *denoiser, sched, cfg, options);
  } catch (const PipelineError& e) {
    write_manifest(manifest_path, e.manifest());
    throw;
  }
  write_png(output, r.output);
  write_manifest(manifest_path, r.manifest);
  if (!dump_dir.empty()) dump_intermediates(dump_dir, r);
  if (!diag_path.empty()) write_diagnostics_csv(diag_path, r.log.diagnostics());
  const RegionChange change = region_change(x, r.output, r.noising.mask);
  out << "enhanced " << input << " -> " << output << " (t0=" << r.noising.t0
      << ", mask coverage=" << mask_coverage(r.noising.mask) << ", mean|d| high=" << change.mean_abs_high
      << ", low=" << change.mean_abs_low << ")\n";
  return 0;
}

int cmd_generate(const CommonOptions& common, const std::string& size, int channels, std::optional<int> label,
                 const std::string& output, std::string manifest_path, const std::string& diag_path,
                 std::ostream& out) {
  EnhanceConfig cfg = build_config(common);
  if (label) cfg.label = *label;
  cfg.validate();
  const Shape shape = parse_size(size, channels);
  const NoiseSchedule sched = NoiseSchedule::make(cfg.schedule, cfg.total_T);
  const auto denoiser = make_denoiser(cfg, sched, shape);
  const Condition y = cfg.label >= 0 ? Condition::class_label(cfg.label) : Condition::none();
  if (manifest_path.empty()) manifest_path = default_manifest_path(output);
  RunResult r;
  try {
    r = generate(shape, y, *denoiser, sched, cfg);
  } catch (const PipelineError& e) {
    write_manifest(manifest_path, e.manifest());
    throw;
  }
  write_png(output, r.output);
  write_manifest(manifest_path, r.manifest);
  if (!diag_path.empty()) write_diagnostics_csv(diag_path, r.log.diagnostics());
  out << "generated " << shape.height << "x" << shape.width << " -> " << output << "\n";
  return 0;
}

int cmd_stats(const CommonOptions& common, int runs, const std::string& csv, const std::string& plot,
              const std::string& source, const std::string& size, std::ostream& out) {
  EnhanceConfig cfg = build_config(common);
  cfg.validate();
  const Shape shape = parse_size(size, 3);
  const NoiseSchedule sched = NoiseSchedule::make(cfg.schedule, cfg.total_T);
  const auto denoiser = make_denoiser(cfg, sched, shape);
  StartSampler start;
  if (source == "exact") {
    const auto* gmm = dynamic_cast<const GmmDenoiser*>(denoiser.get());
    if (!gmm) throw ConfigError("--source exact needs the gmm denoiser");
    start = exact_starts(gmm->model(), sched, cfg);
  } else {
    if (shape.height != shape.width) throw ConfigError("--source blended needs a square --size");
    std::vector<Tensor> images;
    for (auto& item : make_toy_dataset(8, shape.height, cfg.seed + 0x51a7)) images.push_back(to_model_space(item.image));
    start = blended_starts(std::move(images), *denoiser, sched, cfg);
  }
  const auto rows = noise_stats(*denoiser, sched, cfg, runs, start);
  write_text(csv, noise_stats_csv(rows));
  if (!plot.empty()) write_png(plot, render_noise_stats_plot(rows));
  out << "noise statistics over " << runs << " runs -> " << csv << "\n";
  return 0;
}

int cmd_ablate(const CommonOptions& common, const std::string& input, const std::string& t0s,
               const std::string& outdir, std::optional<double> tau, std::ostream& out) {
  EnhanceConfig cfg = build_config(common);
  if (tau) cfg.tau = *tau;
  cfg.validate();
  const std::vector<int> t0_list = parse_int_list(t0s);
  const Tensor x = read_png(input);
  const NoiseSchedule sched = NoiseSchedule::make(cfg.schedule, cfg.total_T);
  const auto denoiser = make_denoiser(cfg, sched, x.shape());
  EnhanceOptions options;
  options.input_path = input;
  const auto rows = ablate_t0(x, *denoiser, sched, cfg, t0_list, options);
  ensure_dir(outdir);
  for (const auto& row : rows) {
    const std::string stem = (fs::path(outdir) / ("t0_" + std::to_string(row.t0))).string();
    write_png(stem + ".png", row.output);
    write_manifest(stem + ".manifest.json", row.manifest);
  }
  write_text((fs::path(outdir) / "summary.csv").string(), ablation_csv(rows));
  out << "t0    mean|d| high  mean|d| low   rms low    acutance delta\n";
  for (const auto& row : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-5d %-13.6f %-13.6f %-10.6f %+.6f\n", row.t0, row.change.mean_abs_high,
                  row.change.mean_abs_low, row.change.rms_low, row.acutance_out - row.acutance_in);
    out << buf;
  }
  return 0;
}

int cmd_train(const std::string& data, const std::string& output, int steps, std::uint64_t seed, int batch,
              double lr, int eval_every, int patience, const std::string& schedule, const std::string& log_path,
              std::ostream& out) {
  EnhanceConfig cfg;
  set_config_value(cfg, "schedule", schedule);
  const NoiseSchedule sched = NoiseSchedule::make(cfg.schedule, cfg.total_T);
  std::vector<TrainingExample> dataset;
  for (auto& item : read_dataset_dir(data)) {
    dataset.push_back({to_model_space(item.image),
                       item.label >= 0 ? Condition::class_label(item.label) : Condition::none()});
  }
  TrainHyperparams hp;
  hp.steps = steps;
  hp.batch_size = batch;
  hp.learning_rate = lr;
  hp.eval_every = eval_every;
  hp.patience = patience;
  RandomSource rng(seed, 0x7a1);
  TrainingReport report;
  auto observer = [&out](int step, double mse, const ToyDenoiser&) {
    out << "step " << step << " validation mse " << mse << "\n" << std::flush;
  };
  const ToyDenoiser model = train_toy_denoiser(dataset, sched, rng, hp, &report, observer);
  save_checkpoint(output, model);
  if (!log_path.empty()) {
    std::string csv = "step,validation_mse,best_mse,train_loss\n";
    for (std::size_t i = 0; i < report.eval_steps.size(); ++i) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", report.eval_steps[i], report.validation_mse[i],
                    report.best_mse[i], report.train_loss[i]);
      csv += buf;
    }
    write_text(log_path, csv);
  }
  out << "best validation mse " << report.best_mse.back() << " at step " << report.best_step
      << " (zero predictor " << report.zero_predictor_mse << ") -> " << output << "\n";
  return 0;
}

int cmd_synth(const std::string& dir, int count, int size, std::uint64_t seed, std::ostream& out) {
  if (count < 1 || size < 4) throw ConfigError("synth-data needs --count >= 1 and --size >= 4");
  write_dataset_dir(dir, make_toy_dataset(count, size, seed));
  out << "wrote " << count << " images to " << dir << "\n";
  return 0;
}

int cmd_replay(const std::string& manifest_path, std::string input, std::string mask_path,
               const std::string& output, std::ostream& out) {
  const RunManifest m = read_manifest(manifest_path);
  const NoiseSchedule sched = NoiseSchedule::make(m.config.schedule, m.config.total_T);
  const auto denoiser = make_denoiser(m.config, sched, m.shape);
  std::optional<Tensor> x;
  std::optional<FrequencyMask> mask;
  if (m.mode == "enhance") {
    if (input.empty()) input = m.input_path;
    x = read_png(input);
    if (mask_path.empty()) mask_path = m.mask_path;
    if (!m.mask_hash.empty()) mask = mask_from_image(read_png(mask_path));
  }
  const RunResult r = replay(m, *denoiser, x ? &*x : nullptr, mask ? &*mask : nullptr);
  if (!output.empty()) write_png(output, r.output);
  if (r.manifest.output_hash != m.output_hash) {
    throw NumericalError("replay diverged: output hash " + r.manifest.output_hash + " != recorded " + m.output_hash);
  }
  out << "replay identical (" << r.manifest.output_hash << ")\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tuning-free diffusion image enhancement", "enhancekit"};
  app.require_subcommand(1);

  CommonOptions common;

  std::string input, output, dump_dir, mask_path, manifest_path, diag_path;
  std::optional<int> t0;
  std::optional<double> tau;
  auto* enhance_cmd = app.add_subcommand("enhance", "Enhance one PNG image");
  add_common(enhance_cmd, common);
  enhance_cmd->add_option("--input", input, "Input PNG")->required();
  enhance_cmd->add_option("--output", output, "Output PNG")->required();
  enhance_cmd->add_option("--t0", t0, "Noising strength timestep");
  enhance_cmd->add_option("--tau", tau, "Blend weight of the stable stream");
  enhance_cmd->add_option("--dump-intermediates", dump_dir, "Directory for tensor dumps of the noising stage");
  enhance_cmd->add_option("--mask", mask_path, "High-frequency mask PNG overriding the computed one");
  enhance_cmd->add_option("--manifest", manifest_path, "Run manifest path (default <output>.manifest.json)");
  enhance_cmd->add_option("--diagnostics", diag_path, "Per-step diagnostics CSV");

  std::string size = "64x64";
  int channels = 3;
  std::optional<int> label;
  auto* generate_cmd = app.add_subcommand("generate", "Sample an image from noise");
  add_common(generate_cmd, common);
  generate_cmd->add_option("--size", size, "HxW")->capture_default_str();
  generate_cmd->add_option("--channels", channels, "1 or 3")->capture_default_str();
  generate_cmd->add_option("--label", label, "Class label");
  generate_cmd->add_option("--output", output, "Output PNG")->required();
  generate_cmd->add_option("--manifest", manifest_path, "Run manifest path (default <output>.manifest.json)");
  generate_cmd->add_option("--diagnostics", diag_path, "Per-step diagnostics CSV");

  int runs = 32;
  std::string csv, plot, source = "blended", stats_size = "32x32";
  auto* stats_cmd = app.add_subcommand("stats", "Predicted-noise statistics along the denoising stage");
  add_common(stats_cmd, common);
  stats_cmd->add_option("--runs", runs, "Number of runs")->capture_default_str()->check(CLI::PositiveNumber);
  stats_cmd->add_option("--out", csv, "CSV output")->required();
  stats_cmd->add_option("--plot", plot, "Scatter plot PNG");
  stats_cmd->add_option("--source", source, "blended (two-stream noising of toy images) or exact")
      ->capture_default_str()
      ->check(CLI::IsMember({"blended", "exact"}));
  stats_cmd->add_option("--size", stats_size, "Image size HxW")->capture_default_str();

  std::string t0_list = "300,400,500,600,700", outdir;
  auto* ablate_cmd = app.add_subcommand("ablate-t0", "Enhance across several noising strengths");
  add_common(ablate_cmd, common);
  ablate_cmd->add_option("--input", input, "Input PNG")->required();
  ablate_cmd->add_option("--t0", t0_list, "Comma-separated t0 values")->capture_default_str();
  ablate_cmd->add_option("--outdir", outdir, "Output directory")->required();
  ablate_cmd->add_option("--tau", tau, "Blend weight of the stable stream");

  std::string data, schedule = "scaled_linear", log_path;
  int steps = 2000, batch = 16, eval_every = 100, patience = 0;
  double lr = 5e-4;
  std::uint64_t train_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train the toy denoiser");
  train_cmd->add_option("--data", data, "Dataset directory with index.txt")->required();
  train_cmd->add_option("--out", output, "Checkpoint path")->required();
  train_cmd->add_option("--steps", steps, "Optimizer steps")->capture_default_str();
  train_cmd->add_option("--seed", train_seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--batch", batch, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--eval-every", eval_every, "Validation interval")->capture_default_str();
  train_cmd->add_option("--patience", patience, "Early-stopping patience in evaluations, 0 = off")
      ->capture_default_str();
  train_cmd->add_option("--schedule", schedule, "scaled_linear or cosine")->capture_default_str();
  train_cmd->add_option("--log", log_path, "Training curve CSV");

  int count = 512, synth_size = 32;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth-data", "Write a procedural toy dataset");
  synth_cmd->add_option("--out", outdir, "Dataset directory")->required();
  synth_cmd->add_option("--count", count, "Number of images")->capture_default_str();
  synth_cmd->add_option("--size", synth_size, "Side length in pixels")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "Random seed")->capture_default_str();

  std::string replay_manifest;
  auto* replay_cmd = app.add_subcommand("replay", "Rerun a manifest and check the output is identical");
  replay_cmd->add_option("--manifest", replay_manifest, "Run manifest")->required();
  replay_cmd->add_option("--input", input, "Input PNG (default: path recorded in the manifest)");
  replay_cmd->add_option("--mask", mask_path, "Mask PNG (default: path recorded in the manifest)");
  replay_cmd->add_option("--output", output, "Write the replayed output here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*enhance_cmd) {
      return cmd_enhance(common, input, output, t0, tau, dump_dir, mask_path, manifest_path, diag_path, out);
    }
    if (*generate_cmd) return cmd_generate(common, size, channels, label, output, manifest_path, diag_path, out);
    if (*stats_cmd) return cmd_stats(common, runs, csv, plot, source, stats_size, out);
    if (*ablate_cmd) return cmd_ablate(common, input, t0_list, outdir, tau, out);
    if (*train_cmd) {
      return cmd_train(data, output, steps, train_seed, batch, lr, eval_every, patience, schedule, log_path, out);
    }
    if (*synth_cmd) return cmd_synth(outdir, count, synth_size, synth_seed, out);
    if (*replay_cmd) return cmd_replay(replay_manifest, input, mask_path, output, out);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}

}  // namespace enhancekit::cli
