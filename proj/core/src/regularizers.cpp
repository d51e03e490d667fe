#include "enhancekit/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "enhancekit/errors.hpp"
#include "enhancekit/filters.hpp"

namespace enhancekit {

void RegularizerWeights::validate() const {
  for (double w : {rho_acu, rho_dist, rho_adv}) {
    if (!std::isfinite(w) || w < 0.0) throw ContractError("regularizer weights must be finite and >= 0");
  }
}

std::string_view to_string(RegularizerTerm term) {
  switch (term) {
    case RegularizerTerm::acutance: return "acutance";
    case RegularizerTerm::distribution: return "distribution";
    case RegularizerTerm::adversarial: return "adversarial";
  }
  return "?";
}

Tensor acutance_map(const Tensor& x0_hat) {
  const SobelResponse g = sobel(luminance(x0_hat));
  Tensor out = g.gx;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(g.gx[i], g.gy[i]);
  return out;
}

Tensor band_mask(const Tensor& map, double lo, double hi) {
  if (!(lo < hi)) throw ContractError("band_mask requires lo < hi");
  const std::size_t n = map.size();
  Tensor band(map.shape(), map.space());
  if (n == 0) return band;
  const auto [mn, mx] = std::minmax_element(map.values().begin(), map.values().end());
  if (*mn == *mx) return band;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&map](std::size_t a, std::size_t b) {
    return map[a] < map[b] || (map[a] == map[b] && a < b);
  });
  // Rank r (1-based) is in the band iff lo <= 100 r / n <= hi.
  const double nd = static_cast<double>(n);
  const auto first = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(lo * nd / 100.0)));
  const auto last = std::min<std::size_t>(n, static_cast<std::size_t>(std::floor(hi * nd / 100.0)));
  for (std::size_t r = first; r <= last; ++r) band[order[r - 1]] = 1.0;
  return band;
}

AcutanceLoss acutance_loss(const Tensor& x0_hat, double lo, double hi) {
  const Tensor map = acutance_map(x0_hat);
  Tensor band = band_mask(map, lo, hi);
  return {-dot(band, map) / static_cast<double>(map.size()), std::move(band)};
}

Tensor acutance_loss_grad(const Tensor& x0_hat, double lo, double hi) {
  const Tensor gray = luminance(x0_hat);
  const SobelResponse g = sobel(gray);
  Tensor map = g.gx;
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = std::hypot(g.gx[i], g.gy[i]);
  const Tensor band = band_mask(map, lo, hi);
  const double scale = -1.0 / static_cast<double>(map.size());
  Tensor cot_x(map.shape(), map.space());
  Tensor cot_y(map.shape(), map.space());
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (band[i] == 0.0 || map[i] == 0.0) continue;
    cot_x[i] = scale * g.gx[i] / map[i];
    cot_y[i] = scale * g.gy[i] / map[i];
  }
  return luminance_adjoint(sobel_adjoint(cot_x, cot_y), x0_hat.channels());
}

double distribution_loss(const Tensor& eps_hat) {
  return std::abs(1.0 - tensor_stats(eps_hat).variance);
}

Tensor distribution_loss_grad(const Tensor& eps_hat) {
  const TensorStats s = tensor_stats(eps_hat);
  const double gap = 1.0 - s.variance;
  Tensor out(eps_hat.shape(), eps_hat.space());
  if (gap == 0.0) return out;
  const double coef = (gap > 0.0 ? -1.0 : 1.0) * 2.0 / static_cast<double>(eps_hat.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = coef * (eps_hat[i] - s.mean);
  return out;
}

double adversarial_loss(const Tensor& x0_hat, double blur_sigma) {
  const Tensor residual = x0_hat - gaussian_blur(x0_hat, blur_sigma);
  return l2_norm(residual) / std::sqrt(static_cast<double>(x0_hat.size()));
}

Tensor adversarial_loss_grad(const Tensor& x0_hat, double blur_sigma) {
  const Tensor residual = x0_hat - gaussian_blur(x0_hat, blur_sigma);
  const double norm = l2_norm(residual);
  if (norm == 0.0) return Tensor(x0_hat.shape(), x0_hat.space());
  Tensor g = residual - gaussian_blur_adjoint(residual, blur_sigma);
  g *= 1.0 / (norm * std::sqrt(static_cast<double>(x0_hat.size())));
  return g;
}

Tensor regularizer_gradient(RegularizerTerm term, const Tensor& x_t, const Tensor& eps_hat, int t,
                            const RevisionContext& ctx) {
  if (term == RegularizerTerm::distribution) {
    if (resolve_gradient_mode(ctx.dist_mode, ctx.denoiser) == GradientMode::locally_constant) {
      return Tensor(x_t.shape(), x_t.space());
    }
    return ctx.denoiser.vjp(x_t, t, ctx.condition, distribution_loss_grad(eps_hat));
  }
  const Tensor x0 = predict_x0(x_t, eps_hat, t, ctx.sched);
  const Tensor grad_x0 = term == RegularizerTerm::acutance
                             ? acutance_loss_grad(x0, ctx.percentile_lo, ctx.percentile_hi)
                             : adversarial_loss_grad(x0, ctx.blur_sigma);
  return pullback_through_x0(grad_x0, x_t, t, ctx.denoiser, ctx.condition, ctx.sched, ctx.x0_mode);
}

Revision revise_step(const Tensor& x_prev, const Tensor& x_t, const Tensor& eps_hat, int t,
                     const RevisionContext& ctx, const RegularizerWeights& weights) {
  require_same_shape(x_prev, x_t, "revise_step");
  require_same_shape(x_t, eps_hat, "revise_step");
  weights.validate();

  StepDiagnostics diag;
  diag.t = t;
  const Tensor x0 = predict_x0(x_t, eps_hat, t, ctx.sched);
  diag.loss_acu = acutance_loss(x0, ctx.percentile_lo, ctx.percentile_hi).loss;
  diag.loss_dist = distribution_loss(eps_hat);
  diag.loss_adv = adversarial_loss(x0, ctx.blur_sigma);
  const TensorStats stats = tensor_stats(eps_hat);
  diag.eps_mean = stats.mean;
  diag.eps_var = stats.variance;

  if (weights.all_zero()) return {x_prev, diag};

  Tensor revision(x_t.shape(), x_t.space());
  const std::pair<RegularizerTerm, double> terms[] = {{RegularizerTerm::acutance, weights.rho_acu},
                                                      {RegularizerTerm::distribution, weights.rho_dist},
                                                      {RegularizerTerm::adversarial, weights.rho_adv}};
  for (const auto& [term, rho] : terms) {
    if (rho == 0.0) continue;
    const Tensor g = regularizer_gradient(term, x_t, eps_hat, t, ctx);
    if (!g.all_finite()) {
      throw NumericalError("revise_step: non-finite " + std::string(to_string(term)) + " gradient at t=" +
                           std::to_string(t));
    }
    axpy(rho, g, revision);
  }
  diag.revision_norm = l2_norm(revision);
  return {x_prev - revision, diag};
}

double banded_acutance(const Tensor& img, double lo, double hi) {
  return -acutance_loss(img, lo, hi).loss;
}

}  // namespace enhancekit
