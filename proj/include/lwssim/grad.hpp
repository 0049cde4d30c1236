#pragma once

#include <functional>

#include "lwssim/image.hpp"
#include "lwssim/metric.hpp"

namespace lwssim {

// d(pooled metric) / d(test-image pixel), same planar layout as the image.
using GradientField = Image;

GradientField grad_mse(const Image& x, const Image& y);

// Analytic gradients of the pooled scores with respect to y, accumulated over
// every window containing each pixel. Implemented for unit exponents; other
// exponents throw UnsupportedConfigError (grad_fd has no such restriction).
GradientField grad_ssim(const Image& x, const Image& y, const SsimConfig& cfg = {});
GradientField grad_lwssim(const Image& x, const Image& y,
                          const LevelBank& bank = default_level_bank());
GradientField grad_lwssim_loss(const Image& x, const Image& y,
                               const LevelBank& bank = default_level_bank());

using MetricFn = std::function<double(const Image& x, const Image& y)>;

// Central finite differences in every pixel of y. The perturbed values are
// not clamped, so the metric must be evaluable slightly outside [0,1].
GradientField grad_fd(const MetricFn& metric, const Image& x, const Image& y, double h = 1e-5);

}  // namespace lwssim
