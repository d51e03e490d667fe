#include "enhancekit/gmm_denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "enhancekit/errors.hpp"
#include "enhancekit/image_io.hpp"

namespace enhancekit {

GmmDataModel::GmmDataModel(std::vector<GmmComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw ContractError("GMM needs at least one component");
  shape_ = components_.front().mean.shape();
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.shape() != shape_) throw ContractError("GMM component means must share one shape");
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw ContractError("GMM weights must be positive");
    if (!(c.stddev >= 0.0)) throw ContractError("GMM stddev must be non-negative");
    total += c.weight;
  }
  for (auto& c : components_) c.weight /= total;
}

Tensor GmmDataModel::sample(RandomSource& rng, const Condition& y) const {
  std::vector<std::size_t> pool;
  double total = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    if (!y.has_label() || components_[k].label == y.label()) {
      pool.push_back(k);
      total += components_[k].weight;
    }
  }
  if (pool.empty()) throw ContractError("no GMM component carries the requested label");
  double u = rng.uniform() * total;
  std::size_t pick = pool.back();
  for (std::size_t k : pool) {
    if (u < components_[k].weight) {
      pick = k;
      break;
    }
    u -= components_[k].weight;
  }
  const auto& comp = components_[pick];
  Tensor out = comp.mean;
  for (double& v : out.values()) v += comp.stddev * rng.normal();
  return out;
}

GmmDataModel::Posterior GmmDataModel::posterior(const Tensor& x_t, double alpha, double sigma,
                                                const Condition& y) const {
  if (x_t.shape() != shape_) {
    throw ContractError("GMM input shape " + to_string(x_t.shape()) + " does not match model " + to_string(shape_));
  }
  Posterior p;
  const double dim = static_cast<double>(x_t.size());
  std::vector<double> logits;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    if (y.has_label() && c.label != y.label()) continue;
    const double var = alpha * alpha * c.stddev * c.stddev + sigma * sigma;
    if (!(var > 0.0)) throw NumericalError("GMM posterior: zero variance component at sigma = 0");
    double sq = 0.0;
    auto xs = x_t.values();
    auto ms = c.mean.values();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = xs[i] - alpha * ms[i];
      sq += d * d;
    }
    p.active.push_back(k);
    p.variance.push_back(var);
    logits.push_back(std::log(c.weight) - 0.5 * sq / var - 0.5 * dim * std::log(2.0 * std::numbers::pi * var));
  }
  if (p.active.empty()) throw ContractError("no GMM component carries the requested label");
  const double peak = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - peak);
  p.log_norm = peak + std::log(z);
  p.resp.resize(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) p.resp[j] = std::exp(logits[j] - p.log_norm);
  if (y.has_label()) {
    // Conditional density renormalises over the labelled subset.
    double mass = 0.0;
    for (std::size_t k : p.active) mass += components_[k].weight;
    p.log_norm -= std::log(mass);
  }
  return p;
}

Tensor GmmDataModel::component_mean(std::size_t k, const Tensor& x_t, double alpha, double sigma,
                                    double var) const {
  const auto& c = components_[k];
  return lincomb(alpha * c.stddev * c.stddev / var, x_t, sigma * sigma / var, c.mean);
}

Tensor GmmDataModel::posterior_mean(const Tensor& x_t, double alpha, double sigma, const Condition& y) const {
  const Posterior p = posterior(x_t, alpha, sigma, y);
  Tensor out(x_t.shape(), x_t.space());
  for (std::size_t j = 0; j < p.active.size(); ++j) {
    if (p.resp[j] == 0.0) continue;
    axpy(p.resp[j], component_mean(p.active[j], x_t, alpha, sigma, p.variance[j]), out);
  }
  return out;
}

Tensor GmmDataModel::posterior_mean_vjp(const Tensor& x_t, double alpha, double sigma, const Condition& y,
                                        const Tensor& cotangent) const {
  require_same_shape(x_t, cotangent, "posterior_mean_vjp");
  const Posterior p = posterior(x_t, alpha, sigma, y);
  // J = sum_k r_k c_k I + sum_k r_k m_k (g_k - gbar)^T with g_k = -(x_t - alpha mu_k) / v_k,
  // so u^T J = sum_k r_k c_k u + sum_k r_k (u . m_k) (g_k - gbar).
  Tensor out(x_t.shape(), x_t.space());
  Tensor gbar(x_t.shape(), x_t.space());
  std::vector<Tensor> gs;
  std::vector<double> um;
  gs.reserve(p.active.size());
  for (std::size_t j = 0; j < p.active.size(); ++j) {
    const auto& c = components_[p.active[j]];
    const double v = p.variance[j];
    gs.push_back(lincomb(-1.0 / v, x_t, alpha / v, c.mean));
    um.push_back(dot(cotangent, component_mean(p.active[j], x_t, alpha, sigma, v)));
    axpy(p.resp[j], gs.back(), gbar);
    axpy(p.resp[j] * alpha * c.stddev * c.stddev / v, cotangent, out);
  }
  for (std::size_t j = 0; j < p.active.size(); ++j) {
    if (p.resp[j] == 0.0) continue;
    axpy(p.resp[j] * um[j], gs[j] - gbar, out);
  }
  return out;
}

double GmmDataModel::log_density(const Tensor& x_t, double alpha, double sigma, const Condition& y) const {
  return posterior(x_t, alpha, sigma, y).log_norm;
}

Tensor GmmDataModel::score(const Tensor& x_t, double alpha, double sigma, const Condition& y) const {
  const Posterior p = posterior(x_t, alpha, sigma, y);
  Tensor out(x_t.shape(), x_t.space());
  for (std::size_t j = 0; j < p.active.size(); ++j) {
    const double v = p.variance[j];
    axpy(p.resp[j], lincomb(-1.0 / v, x_t, alpha / v, components_[p.active[j]].mean), out);
  }
  return out;
}

std::string GmmDataModel::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& c : components_) {
    h = fnv1a64(&c.weight, sizeof c.weight, h);
    h = fnv1a64(&c.stddev, sizeof c.stddev, h);
    h = fnv1a64(&c.label, sizeof c.label, h);
    h = fnv1a64(c.mean.values().data(), c.mean.size() * sizeof(double), h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Tensor gmm_predict(const Tensor& x_t, int t, const GmmDataModel& model, const NoiseSchedule& sched,
                   const Condition& y) {
  const double a = sched.alpha(t);
  const double s = sched.sigma(t);
  if (!(s > 0.0)) throw NumericalError("gmm_predict: sigma_" + std::to_string(t) + " is zero");
  return lincomb(1.0 / s, x_t, -a / s, model.posterior_mean(x_t, a, s, y));
}

Tensor gmm_grad(const Tensor& x_t, int t, const GmmDataModel& model, const Tensor& cotangent,
                const NoiseSchedule& sched, const Condition& y) {
  const double a = sched.alpha(t);
  const double s = sched.sigma(t);
  if (!(s > 0.0)) throw NumericalError("gmm_grad: sigma_" + std::to_string(t) + " is zero");
  return lincomb(1.0 / s, cotangent, -a / s, model.posterior_mean_vjp(x_t, a, s, y, cotangent));
}

}  // namespace enhancekit
