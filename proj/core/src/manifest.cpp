#include "enhancekit/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "enhancekit/errors.hpp"
#include "enhancekit/image_io.hpp"

namespace enhancekit {

std::string_view toolkit_version() { return ENHANCEKIT_VERSION; }

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["version"] = m.version;
  j["mode"] = m.mode;
  j["seed"] = m.seed;
  j["schedule"] = m.schedule_id;
  j["denoiser"] = m.denoiser_id;
  j["shape"] = {{"h", m.shape.height}, {"w", m.shape.width}, {"c", m.shape.channels}};
  j["label"] = m.label;
  j["input"] = {{"path", m.input_path}, {"hash", m.input_hash}};
  j["mask"] = {{"path", m.mask_path}, {"hash", m.mask_hash}};
  j["output_hash"] = m.output_hash;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_entries(m.config)) cfg[k] = v;
  j["config"] = cfg;
  nlohmann::ordered_json timings = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.timings_ms) timings[k] = v;
  j["timings_ms"] = timings;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  RunManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.version = j.at("version").get<std::string>();
    m.mode = j.at("mode").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.schedule_id = j.at("schedule").get<std::string>();
    m.denoiser_id = j.at("denoiser").get<std::string>();
    m.shape = {j.at("shape").at("h").get<int>(), j.at("shape").at("w").get<int>(), j.at("shape").at("c").get<int>()};
    m.label = j.at("label").get<int>();
    m.input_path = j.at("input").at("path").get<std::string>();
    m.input_hash = j.at("input").at("hash").get<std::string>();
    m.mask_path = j.at("mask").at("path").get<std::string>();
    m.mask_hash = j.at("mask").at("hash").get<std::string>();
    m.output_hash = j.at("output_hash").get<std::string>();
    for (const auto& [k, v] : j.at("config").items()) set_config_value(m.config, k, v.get<std::string>());
    for (const auto& [k, v] : j.at("timings_ms").items()) m.timings_ms[k] = v.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run manifest: ") + e.what());
  }
  if (m.mode != "enhance" && m.mode != "generate") throw ConfigError("unknown manifest mode '" + m.mode + "'");
  m.config.validate();
  return m;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  const std::string text = manifest_to_json(m);
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

RunManifest read_manifest(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return manifest_from_json(std::string(bytes.begin(), bytes.end()));
}

std::vector<StepDiagnostics> TrajectoryLog::diagnostics() const {
  std::vector<StepDiagnostics> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.diagnostics);
  return out;
}

std::string diagnostics_csv(const std::vector<StepDiagnostics>& rows) {
  std::string out = "t,loss_acu,loss_dist,loss_adv,eps_mean,eps_var,revision_norm\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.t, r.loss_acu, r.loss_dist, r.loss_adv,
                  r.eps_mean, r.eps_var, r.revision_norm);
    out += buf;
  }
  return out;
}

void write_diagnostics_csv(const std::string& path, const std::vector<StepDiagnostics>& rows) {
  const std::string text = diagnostics_csv(rows);
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace enhancekit
