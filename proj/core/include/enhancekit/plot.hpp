#pragma once

#include <vector>

#include "enhancekit/pipeline.hpp"
#include "enhancekit/tensor.hpp"

namespace enhancekit {

// Two stacked scatter panels against t (decreasing left to right): eps mean
// with its zero line, eps variance with its unit line. Error bars span one
// standard deviation across runs. Returns a display-space RGB image.
Tensor render_noise_stats_plot(const std::vector<NoiseStatsRow>& rows, int width = 640, int height = 480);

}  // namespace enhancekit
