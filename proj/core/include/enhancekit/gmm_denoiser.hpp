#pragma once

#include <optional>
#include <vector>

#include "enhancekit/denoiser.hpp"
#include "enhancekit/random.hpp"
#include "enhancekit/schedule.hpp"

namespace enhancekit {

struct GmmComponent {
  double weight = 1.0;
  Tensor mean;
  // Isotropic standard deviation; 0 is a point mass.
  double stddev = 0.0;
  // Class label used for conditional prediction, -1 for none.
  int label = -1;
};

// Isotropic Gaussian mixture over images. Weights are normalised on construction.
class GmmDataModel {
 public:
  explicit GmmDataModel(std::vector<GmmComponent> components);

  const std::vector<GmmComponent>& components() const { return components_; }
  const Shape& shape() const { return shape_; }

  Tensor sample(RandomSource& rng, const Condition& y = Condition::none()) const;

  // E[x0 | x_t] under x_t = alpha x0 + sigma eps, with responsibilities via log-sum-exp.
  Tensor posterior_mean(const Tensor& x_t, double alpha, double sigma, const Condition& y) const;
  // cotangent^T d E[x0 | x_t] / d x_t.
  Tensor posterior_mean_vjp(const Tensor& x_t, double alpha, double sigma, const Condition& y,
                            const Tensor& cotangent) const;
  // log p_t(x_t) of the noised mixture.
  double log_density(const Tensor& x_t, double alpha, double sigma, const Condition& y) const;
  // grad_x log p_t(x_t), computed from the mixture directly.
  Tensor score(const Tensor& x_t, double alpha, double sigma, const Condition& y) const;

  std::string fingerprint() const;

 private:
  struct Posterior {
    std::vector<std::size_t> active;
    std::vector<double> resp;      // responsibilities, aligned with `active`
    std::vector<double> variance;  // alpha^2 s^2 + sigma^2
    double log_norm = 0.0;         // log p_t(x_t)
  };
  Posterior posterior(const Tensor& x_t, double alpha, double sigma, const Condition& y) const;
  Tensor component_mean(std::size_t k, const Tensor& x_t, double alpha, double sigma, double var) const;

  std::vector<GmmComponent> components_;
  Shape shape_;
};

// (x_t - alpha_t E[x0|x_t]) / sigma_t
Tensor gmm_predict(const Tensor& x_t, int t, const GmmDataModel& model, const NoiseSchedule& sched,
                   const Condition& y = Condition::none());
// Exact vector-Jacobian product of gmm_predict.
Tensor gmm_grad(const Tensor& x_t, int t, const GmmDataModel& model, const Tensor& cotangent,
                const NoiseSchedule& sched, const Condition& y = Condition::none());

class GmmDenoiser final : public Denoiser {
 public:
  GmmDenoiser(GmmDataModel model, NoiseSchedule sched) : model_(std::move(model)), sched_(std::move(sched)) {}

  Tensor predict(const Tensor& x_t, int t, const Condition& y) const override {
    return gmm_predict(x_t, t, model_, sched_, y);
  }
  Tensor vjp(const Tensor& x_t, int t, const Condition& y, const Tensor& cotangent) const override {
    return gmm_grad(x_t, t, model_, cotangent, sched_, y);
  }
  bool has_exact_vjp() const override { return true; }
  bool is_analytic() const override { return true; }
  std::string id() const override { return "gmm:" + model_.fingerprint(); }

  const GmmDataModel& model() const { return model_; }

 private:
  GmmDataModel model_;
  NoiseSchedule sched_;
};

}  // namespace enhancekit
