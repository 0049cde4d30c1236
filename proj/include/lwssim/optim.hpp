#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lwssim/grad.hpp"
#include "lwssim/image.hpp"
#include "lwssim/metric.hpp"

namespace lwssim {

enum class LossKind { kMse, kSsim, kLwssim };

const char* loss_name(LossKind kind);          // "mse", "ssim", "lwssim"
LossKind loss_from_name(const std::string& s);

// Loss selector plus the metric configuration it needs. kSsim means
// 1 - ssim(x, y); kLwssim means the lwssim loss 1 - lwssim(x, y)/2.
struct LossSpec {
  LossKind kind = LossKind::kLwssim;
  SsimConfig ssim_cfg{};
  LevelBank bank = default_level_bank();
};

double loss_value(const LossSpec& spec, const Image& target, const Image& y);
GradientField loss_grad(const LossSpec& spec, const Image& target, const Image& y);

struct OptimizeOptions {
  int steps = 200;
  double step_size = 0.5;
  double momentum = 0.9;   // in [0, 1)
  bool clamp = true;       // keep evaluated images inside [0,1]
  std::uint64_t seed = 1;  // factor initialization for bottleneck runs
};

struct OptimizationTrace {
  std::vector<double> loss;  // steps + 1 entries; loss[0] is the initial value
  Image final_image;
  MetricReport final_report;
};

using StepCallback = std::function<void(int step, double loss)>;

// Momentum gradient descent directly on the pixels of a copy of `init`.
// Throws DivergenceError if the loss becomes non-finite.
OptimizationTrace optimize_pixels(const Image& target, const Image& init, const LossSpec& spec,
                                  const OptimizeOptions& opts, const StepCallback& on_step = {});

// Rank-k factor pair per channel, standing in for a capacity-limited decoder.
// The reconstruction is clamp(U*V); the clamp has a pass-through gradient.
struct BottleneckModel {
  int rank = 0;
  int height = 0;
  int width = 0;
  std::vector<Grid> u;  // per channel, height x rank
  std::vector<Grid> v;  // per channel, rank x width
  Image reconstruct(bool clamp = true) const;
};

BottleneckModel seeded_bottleneck(int channels, int height, int width, int rank,
                                  std::uint64_t seed);

OptimizationTrace optimize_bottleneck(const Image& target, int rank, const LossSpec& spec,
                                      const OptimizeOptions& opts,
                                      const StepCallback& on_step = {});

struct ComparisonRow {
  std::string loss;
  double ssim_mean = 0.0;
  double ssim_sd = 0.0;
  double mse_mean = 0.0;
  double mse_sd = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;  // one per loss spec, in input order
};

// Runs optimize_bottleneck for every (spec, seed) pair and aggregates the
// final reconstruction quality per spec. Reported SSIM uses eval_cfg; the
// standard deviations are sample deviations over seeds.
ComparisonReport compare_losses(const Image& target, const std::vector<LossSpec>& specs,
                                int rank, const OptimizeOptions& opts,
                                const std::vector<std::uint64_t>& seeds,
                                const SsimConfig& eval_cfg = {});

}  // namespace lwssim
