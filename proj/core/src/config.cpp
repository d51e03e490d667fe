#include "enhancekit/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "enhancekit/errors.hpp"

namespace enhancekit {

std::string_view to_string(ScheduleKind v) {
  return v == ScheduleKind::scaled_linear ? "scaled_linear" : "cosine";
}
std::string_view to_string(SamplerKind v) { return v == SamplerKind::ddim ? "ddim" : "ddpm"; }
std::string_view to_string(GuidanceForm v) {
  return v == GuidanceForm::x_space ? "x_space" : "eps_space";
}
std::string_view to_string(GradientMode v) {
  switch (v) {
    case GradientMode::automatic: return "auto";
    case GradientMode::locally_constant: return "locally_constant";
    case GradientMode::through_denoiser: return "through_denoiser";
  }
  return "auto";
}
std::string_view to_string(DenoiserKind v) { return v == DenoiserKind::toy ? "toy" : "gmm"; }

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string s(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError("config key '" + std::string(key) + "': expected a real number, got '" + s + "'");
  }
  return v;
}

long long parse_int(std::string_view key, std::string_view text) {
  const std::string s(text);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError("config key '" + std::string(key) + "': expected an integer, got '" + s + "'");
  }
  return v;
}

int parse_int32(std::string_view key, std::string_view text) {
  const long long v = parse_int(key, text);
  if (v < -2147483647LL || v > 2147483647LL) {
    throw ConfigError("config key '" + std::string(key) + "': integer out of range");
  }
  return static_cast<int>(v);
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false, got '" +
                    std::string(text) + "'");
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(EnhanceConfig&, std::string_view, std::string_view)>;
using Getter = std::function<std::string(const EnhanceConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = [] {
    std::map<std::string, Field, std::less<>> m;
    auto real = [&m](const char* name, double EnhanceConfig::*member) {
      m[name] = {[member](EnhanceConfig& c, std::string_view k, std::string_view v) {
                   c.*member = parse_double(k, v);
                 },
                 [member](const EnhanceConfig& c) { return fmt_double(c.*member); }};
    };
    auto integer = [&m](const char* name, int EnhanceConfig::*member) {
      m[name] = {[member](EnhanceConfig& c, std::string_view k, std::string_view v) {
                   c.*member = parse_int32(k, v);
                 },
                 [member](const EnhanceConfig& c) { return std::to_string(c.*member); }};
    };
    auto enumeration = [&m]<typename E>(const char* name, E EnhanceConfig::*member,
                                        std::initializer_list<E> options) {
      std::vector<E> opts(options);
      m[name] = {[member, opts](EnhanceConfig& c, std::string_view k, std::string_view v) {
                   bool found = false;
                   for (E e : opts) {
                     if (to_string(e) == v) {
                       c.*member = e;
                       found = true;
                     }
                   }
                   if (!found) {
                     std::string allowed;
                     for (E e : opts) allowed += (allowed.empty() ? "" : ", ") + std::string(to_string(e));
                     throw ConfigError("config key '" + std::string(k) + "': '" + std::string(v) +
                                       "' is not one of " + allowed);
                   }
                 },
                 [member](const EnhanceConfig& c) { return std::string(to_string(c.*member)); }};
    };

    integer("total_T", &EnhanceConfig::total_T);
    integer("inference_steps", &EnhanceConfig::inference_steps);
    integer("t0", &EnhanceConfig::t0);
    enumeration("schedule", &EnhanceConfig::schedule, {ScheduleKind::scaled_linear, ScheduleKind::cosine});
    real("tau", &EnhanceConfig::tau);
    real("lambda_ggs", &EnhanceConfig::lambda_ggs);
    enumeration("guidance_form", &EnhanceConfig::guidance_form,
                {GuidanceForm::x_space, GuidanceForm::eps_space});
    enumeration("creative_sampler", &EnhanceConfig::creative_sampler, {SamplerKind::ddim, SamplerKind::ddpm});
    m["calibrate"] = {[](EnhanceConfig& c, std::string_view k, std::string_view v) {
                        c.calibrate = parse_bool(k, v);
                      },
                      [](const EnhanceConfig& c) { return std::string(c.calibrate ? "true" : "false"); }};
    real("hp_blur_sigma", &EnhanceConfig::hp_blur_sigma);
    real("hp_quantile", &EnhanceConfig::hp_quantile);
    integer("hp_dilate_radius", &EnhanceConfig::hp_dilate_radius);
    real("rho_acu", &EnhanceConfig::rho_acu);
    real("rho_dist", &EnhanceConfig::rho_dist);
    real("rho_adv", &EnhanceConfig::rho_adv);
    real("percentile_lo", &EnhanceConfig::percentile_lo);
    real("percentile_hi", &EnhanceConfig::percentile_hi);
    real("blur_sigma", &EnhanceConfig::blur_sigma);
    enumeration("sampler", &EnhanceConfig::sampler, {SamplerKind::ddim, SamplerKind::ddpm});
    enumeration("gradient_mode", &EnhanceConfig::gradient_mode,
                {GradientMode::automatic, GradientMode::locally_constant, GradientMode::through_denoiser});
    enumeration("dist_gradient_mode", &EnhanceConfig::dist_gradient_mode,
                {GradientMode::automatic, GradientMode::locally_constant, GradientMode::through_denoiser});
    integer("regularize_every_k", &EnhanceConfig::regularize_every_k);
    real("guidance_scale", &EnhanceConfig::guidance_scale);
    m["seed"] = {[](EnhanceConfig& c, std::string_view k, std::string_view v) {
                   const long long s = parse_int(k, v);
                   if (s < 0) throw ConfigError("config key 'seed' must be non-negative");
                   c.seed = static_cast<std::uint64_t>(s);
                 },
                 [](const EnhanceConfig& c) { return std::to_string(c.seed); }};
    enumeration("denoiser", &EnhanceConfig::denoiser, {DenoiserKind::toy, DenoiserKind::gmm});
    m["checkpoint"] = {[](EnhanceConfig& c, std::string_view, std::string_view v) { c.checkpoint = v; },
                       [](const EnhanceConfig& c) { return c.checkpoint; }};
    integer("label", &EnhanceConfig::label);
    return m;
  }();
  return table;
}

}  // namespace

void EnhanceConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
  if (total_T < 1) fail("total_T must be positive");
  if (!(t0 > 0 && t0 < total_T)) fail("t0 must satisfy 0 < t0 < total_T");
  if (inference_steps < 1 || inference_steps > total_T) fail("inference_steps must be in [1, total_T]");
  if (!(tau >= 0.0 && tau <= 1.0)) fail("tau must lie in [0, 1]");
  if (!(lambda_ggs >= 0.0)) fail("lambda_ggs must be >= 0");
  if (!(rho_acu >= 0.0 && rho_dist >= 0.0 && rho_adv >= 0.0)) fail("regularizer weights must be >= 0");
  if (!(percentile_lo >= 0.0 && percentile_hi <= 100.0 && percentile_lo < percentile_hi)) {
    fail("percentiles must satisfy 0 <= lo < hi <= 100");
  }
  if (!(blur_sigma > 0.0)) fail("blur_sigma must be > 0");
  if (!(hp_blur_sigma > 0.0)) fail("hp_blur_sigma must be > 0");
  if (!(hp_quantile >= 0.0 && hp_quantile <= 1.0)) fail("hp_quantile must lie in [0, 1]");
  if (hp_dilate_radius < 0) fail("hp_dilate_radius must be >= 0");
  if (regularize_every_k < 1) fail("regularize_every_k must be >= 1");
  if (!(guidance_scale >= 0.0)) fail("guidance_scale must be >= 0");
  if (label < -1) fail("label must be -1 (none) or a class index");
}

void set_config_value(EnhanceConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = fields();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second.set(cfg, key, value);
}

EnhanceConfig parse_config(std::string_view text, EnhanceConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    try {
      set_config_value(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

EnhanceConfig load_config_file(const std::string& path, EnhanceConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::map<std::string, std::string> config_entries(const EnhanceConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& [name, field] : fields()) out[name] = field.get(cfg);
  return out;
}

std::string format_config(const EnhanceConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

EnhanceConfig fast_preset(EnhanceConfig base) {
  base.inference_steps = 30;
  base.regularize_every_k = 4;
  return base;
}

}  // namespace enhancekit
