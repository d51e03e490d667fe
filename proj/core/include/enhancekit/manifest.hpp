#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "enhancekit/config.hpp"
#include "enhancekit/regularizers.hpp"
#include "enhancekit/tensor.hpp"

namespace enhancekit {

std::string_view toolkit_version();

// Everything needed to rerun an enhance or generate call.
struct RunManifest {
  std::string mode;  // "enhance" or "generate"
  EnhanceConfig config;
  std::string schedule_id;
  std::string denoiser_id;
  std::uint64_t seed = 0;
  Shape shape;
  int label = -1;
  std::string input_path;
  std::string input_hash;
  std::string mask_path;
  std::string mask_hash;
  std::string output_hash;
  std::map<std::string, double> timings_ms;
  std::string version;
};

std::string manifest_to_json(const RunManifest& m);
// ConfigError on malformed or incomplete manifests.
RunManifest manifest_from_json(const std::string& text);
void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

// Per-step record of one denoising chain; t strictly decreasing.
struct TrajectoryLog {
  struct Entry {
    StepDiagnostics diagnostics;
    // Index into `snapshots` of the iterate x_t entering the step, -1 if not kept.
    int snapshot = -1;
  };
  std::vector<Entry> entries;
  std::vector<Tensor> snapshots;

  std::vector<StepDiagnostics> diagnostics() const;
};

// Header t,loss_acu,loss_dist,loss_adv,eps_mean,eps_var,revision_norm.
std::string diagnostics_csv(const std::vector<StepDiagnostics>& rows);
void write_diagnostics_csv(const std::string& path, const std::vector<StepDiagnostics>& rows);

}  // namespace enhancekit
