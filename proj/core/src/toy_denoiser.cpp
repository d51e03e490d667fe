#include "enhancekit/toy_denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "enhancekit/errors.hpp"
#include "enhancekit/image_io.hpp"
#include "unet.hpp"

namespace enhancekit {
namespace {

constexpr const char* kCheckpointFormat = "enhancekit-toy-denoiser";
constexpr int kCheckpointVersion = 1;

Eigen::Map<const detail::Mat> as_matrix(const Tensor& t) {
  return {t.values().data(), t.channels(), static_cast<Eigen::Index>(t.shape().pixels())};
}

Tensor to_tensor(const detail::Mat& m, const Shape& shape, Space space) {
  return Tensor(shape, std::vector<double>(m.data(), m.data() + m.size()), space);
}

}  // namespace

ToyDenoiser::ToyDenoiser(ToyArchitecture arch, std::uint64_t init_seed) : arch_(arch) {
  net_ = std::make_unique<detail::UNet>(arch_);
  RandomSource rng(init_seed, 0x70e1);
  net_->initialise(params_, rng);
  info_.seed = init_seed;
  net_->load(params_);
}

ToyDenoiser::ToyDenoiser(ToyArchitecture arch, std::vector<float> params, ToyCheckpointInfo info)
    : arch_(arch), params_(std::move(params)), info_(std::move(info)) {
  rebuild();
}

ToyDenoiser::~ToyDenoiser() = default;

ToyDenoiser::ToyDenoiser(const ToyDenoiser& other) : arch_(other.arch_), params_(other.params_), info_(other.info_) {
  rebuild();
}

ToyDenoiser& ToyDenoiser::operator=(const ToyDenoiser& other) {
  if (this != &other) {
    arch_ = other.arch_;
    params_ = other.params_;
    info_ = other.info_;
    rebuild();
  }
  return *this;
}

ToyDenoiser::ToyDenoiser(ToyDenoiser&&) noexcept = default;
ToyDenoiser& ToyDenoiser::operator=(ToyDenoiser&&) noexcept = default;

void ToyDenoiser::rebuild() {
  net_ = std::make_unique<detail::UNet>(arch_);
  net_->load(params_);
}

void ToyDenoiser::set_parameters(std::vector<float> params) {
  if (params.size() != net_->parameter_count()) throw ContractError("parameter vector has the wrong length");
  params_ = std::move(params);
  net_->load(params_);
}

namespace {

int label_slot(const Condition& y, const ToyArchitecture& arch) {
  if (!y.has_label()) return arch.num_classes;
  if (y.label() < 0 || y.label() >= arch.num_classes) {
    throw ContractError("label " + std::to_string(y.label()) + " outside the toy denoiser's " +
                        std::to_string(arch.num_classes) + " classes");
  }
  return y.label();
}

void check_input(const Tensor& x_t, const ToyArchitecture& arch) {
  if (x_t.channels() != arch.in_channels) {
    throw ContractError("toy denoiser expects " + std::to_string(arch.in_channels) + " channels, got " +
                        to_string(x_t.shape()));
  }
}

}  // namespace

Tensor ToyDenoiser::predict(const Tensor& x_t, int t, const Condition& y) const {
  check_input(x_t, arch_);
  const detail::Mat out =
      net_->forward(as_matrix(x_t), x_t.height(), x_t.width(), t, label_slot(y, arch_), nullptr);
  return to_tensor(out, x_t.shape(), x_t.space());
}

Tensor ToyDenoiser::vjp(const Tensor& x_t, int t, const Condition& y, const Tensor& cotangent) const {
  check_input(x_t, arch_);
  require_same_shape(x_t, cotangent, "toy denoiser vjp");
  detail::Trace trace;
  net_->forward(as_matrix(x_t), x_t.height(), x_t.width(), t, label_slot(y, arch_), &trace);
  const detail::Mat dx = net_->backward(as_matrix(cotangent), trace, nullptr);
  return to_tensor(dx, x_t.shape(), x_t.space());
}

std::string ToyDenoiser::id() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(params_.data(), params_.size() * sizeof(float))));
  return "toy:" + std::string(buf);
}

double ToyDenoiser::accumulate_gradient(const Tensor& x_t, int t, const Condition& y, const Tensor& eps,
                                        double weight, std::vector<double>& grads) const {
  check_input(x_t, arch_);
  require_same_shape(x_t, eps, "toy denoiser training example");
  if (grads.size() != params_.size()) grads.assign(params_.size(), 0.0);
  detail::Trace trace;
  const detail::Mat out = net_->forward(as_matrix(x_t), x_t.height(), x_t.width(), t, label_slot(y, arch_), &trace);
  const detail::Mat diff = out - as_matrix(eps);
  const double n = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / n;
  net_->backward((2.0 * weight / n) * diff, trace, grads.data());
  return loss;
}

std::vector<std::uint8_t> encode_checkpoint(const ToyDenoiser& model) {
  const ToyArchitecture& a = model.architecture();
  const ToyCheckpointInfo& info = model.info();
  nlohmann::ordered_json header;
  header["format"] = kCheckpointFormat;
  header["version"] = kCheckpointVersion;
  header["arch"] = {{"in_channels", a.in_channels},
                    {"base_channels", a.base_channels},
                    {"embed_dim", a.embed_dim},
                    {"num_classes", a.num_classes}};
  header["schedule"] = info.schedule_id;
  header["image_size"] = info.image_size;
  header["seed"] = info.seed;
  header["train_steps"] = info.train_steps;
  header["param_count"] = model.parameter_count();
  const std::string text = header.dump() + "\n";
  std::vector<std::uint8_t> out(text.begin(), text.end());
  out.reserve(out.size() + 4 * model.parameter_count());
  for (float v : model.parameters()) append_f32_le(out, v);
  return out;
}

ToyDenoiser decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  const auto newline = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (newline == bytes.end()) throw IoError("checkpoint has no header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin(), newline);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  try {
    if (header.at("format").get<std::string>() != kCheckpointFormat) throw IoError("not a toy denoiser checkpoint");
    if (header.at("version").get<int>() != kCheckpointVersion) throw IoError("unsupported checkpoint version");
    ToyArchitecture arch;
    const auto& a = header.at("arch");
    arch.in_channels = a.at("in_channels").get<int>();
    arch.base_channels = a.at("base_channels").get<int>();
    arch.embed_dim = a.at("embed_dim").get<int>();
    arch.num_classes = a.at("num_classes").get<int>();
    ToyCheckpointInfo info;
    info.schedule_id = header.at("schedule").get<std::string>();
    info.image_size = header.at("image_size").get<int>();
    info.seed = header.at("seed").get<std::uint64_t>();
    info.train_steps = header.at("train_steps").get<int>();
    const auto count = header.at("param_count").get<std::size_t>();
    const std::size_t offset = static_cast<std::size_t>(newline - bytes.begin()) + 1;
    if (bytes.size() - offset != 4 * count) {
      throw IoError("checkpoint payload holds " + std::to_string(bytes.size() - offset) + " bytes, expected " +
                    std::to_string(4 * count));
    }
    std::vector<float> params(count);
    for (std::size_t i = 0; i < count; ++i) params[i] = read_f32_le(bytes.data() + offset + 4 * i);
    try {
      return ToyDenoiser(arch, std::move(params), std::move(info));
    } catch (const ContractError& e) {
      throw IoError(std::string("checkpoint does not match its architecture: ") + e.what());
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint header is missing fields: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const ToyDenoiser& model) {
  write_file_bytes(path, encode_checkpoint(model));
}

ToyDenoiser load_checkpoint(const std::string& path) { return decode_checkpoint(read_file_bytes(path)); }

namespace {

struct ValidationItem {
  Tensor x_t;
  Tensor eps;
  int t;
  Condition y;
};

double validation_mse(const ToyDenoiser& model, const std::vector<ValidationItem>& items) {
  double acc = 0.0;
  for (const auto& item : items) {
    const Tensor diff = model.predict(item.x_t, item.t, item.y) - item.eps;
    acc += dot(diff, diff) / static_cast<double>(diff.size());
  }
  return acc / static_cast<double>(items.size());
}

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

}  // namespace

ToyDenoiser train_toy_denoiser(const std::vector<TrainingExample>& dataset, const NoiseSchedule& sched,
                               RandomSource& rng, const TrainHyperparams& hp, TrainingReport* report,
                               const TrainingObserver& observer) {
  if (dataset.empty()) throw ContractError("training dataset is empty");
  const Shape shape = dataset.front().image.shape();
  for (const auto& ex : dataset) {
    if (ex.image.shape() != shape) throw ContractError("training images must share one shape");
  }
  if (hp.steps < 0 || hp.batch_size < 1 || hp.eval_every < 1 || hp.validation_size < 1) {
    throw ContractError("invalid training hyperparameters");
  }
  const int T = sched.total_T();

  ToyDenoiser model(hp.arch, rng.next_u64());
  ToyCheckpointInfo info{sched.id(), shape.height, rng.seed(), 0};
  model.set_info(info);
  const std::size_t n = model.parameter_count();

  // The validation set is drawn once from its own substream.
  RandomSource val_rng = rng.substream(rng.stream_id() + 0x9a1);
  std::vector<ValidationItem> validation;
  double zero_mse = 0.0;
  for (int i = 0; i < hp.validation_size; ++i) {
    const auto& ex = dataset[val_rng.below(dataset.size())];
    const int t = 1 + static_cast<int>(val_rng.below(static_cast<std::uint64_t>(T)));
    Tensor eps = val_rng.normal_tensor(shape);
    Tensor x_t = add_noise(ex.image, t, eps, sched);
    zero_mse += dot(eps, eps) / static_cast<double>(eps.size());
    validation.push_back({std::move(x_t), std::move(eps), t, ex.condition});
  }
  zero_mse /= hp.validation_size;

  std::vector<double> w(model.parameters().begin(), model.parameters().end());
  std::vector<double> ema = w, m(n, 0.0), v(n, 0.0), grads(n, 0.0);
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  TrainingReport local;
  local.zero_predictor_mse = zero_mse;
  ToyDenoiser best = model;
  double best_mse = std::numeric_limits<double>::infinity();
  double loss_acc = 0.0;
  int loss_count = 0;
  int stale = 0;

  auto evaluate = [&](int step) {
    ToyDenoiser current(hp.arch, to_float(ema), info);
    current.set_info({sched.id(), shape.height, rng.seed(), step});
    const double mse = validation_mse(current, validation);
    if (!std::isfinite(mse)) {
      throw NumericalError("training diverged: validation MSE is not finite at step " + std::to_string(step));
    }
    local.eval_steps.push_back(step);
    local.validation_mse.push_back(mse);
    local.train_loss.push_back(loss_count ? loss_acc / loss_count : 0.0);
    loss_acc = 0.0;
    loss_count = 0;
    if (mse < best_mse) {
      best_mse = mse;
      best = current;
      local.best_step = step;
      stale = 0;
    } else {
      ++stale;
    }
    local.best_mse.push_back(best_mse);
    if (observer) observer(step, mse, current);
  };

  evaluate(0);
  int step = 0;
  for (step = 1; step <= hp.steps; ++step) {
    std::fill(grads.begin(), grads.end(), 0.0);
    double batch_loss = 0.0;
    for (int b = 0; b < hp.batch_size; ++b) {
      const auto& ex = dataset[rng.below(dataset.size())];
      Condition y = ex.condition;
      if (y.has_label() && rng.uniform() < hp.label_dropout) y = Condition::none();
      const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(T)));
      const Tensor eps = rng.normal_tensor(shape);
      const Tensor x_t = add_noise(ex.image, t, eps, sched);
      batch_loss += model.accumulate_gradient(x_t, t, y, eps, 1.0 / hp.batch_size, grads);
    }
    batch_loss /= hp.batch_size;
    if (!std::isfinite(batch_loss)) {
      throw NumericalError("training diverged: loss is not finite at step " + std::to_string(step));
    }
    loss_acc += batch_loss;
    ++loss_count;

    double gnorm = 0.0;
    for (double g : grads) gnorm += g * g;
    gnorm = std::sqrt(gnorm);
    if (!std::isfinite(gnorm)) {
      throw NumericalError("training diverged: gradient is not finite at step " + std::to_string(step));
    }
    const double clip = hp.grad_clip > 0.0 && gnorm > hp.grad_clip ? hp.grad_clip / gnorm : 1.0;
    const double c1 = 1.0 - std::pow(beta1, step);
    const double c2 = 1.0 - std::pow(beta2, step);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grads[i] * clip;
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      w[i] -= hp.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam_eps);
      // Warm-up keeps the average from being dominated by the initial weights.
      const double decay = std::min(hp.ema_decay, (1.0 + step) / (10.0 + step));
      ema[i] = decay * ema[i] + (1.0 - decay) * w[i];
    }
    model.set_parameters(to_float(w));

    if (step % hp.eval_every == 0 || step == hp.steps) {
      evaluate(step);
      if (hp.patience > 0 && stale >= hp.patience) break;
    }
  }
  local.steps_run = std::min(step, hp.steps);
  if (report) *report = std::move(local);
  return best;
}

}  // namespace enhancekit
