#include "lwssim/optim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "canonical_rng.hpp"
#include "lwssim/errors.hpp"
#include "lwssim/grad.hpp"

namespace lwssim {

namespace {

void validate_opts(const OptimizeOptions& opts) {
  if (opts.steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (!(opts.step_size > 0.0)) throw std::invalid_argument("step size must be > 0");
  if (!(opts.momentum >= 0.0 && opts.momentum < 1.0))
    throw std::invalid_argument("momentum must lie in [0, 1)");
}

// Metric parameters for a final report, shrunk so every window fits the image.
SsimConfig report_cfg(const LossSpec& spec, int min_dim) {
  SsimConfig cfg = spec.ssim_cfg;
  cfg.xi = std::min(cfg.xi, min_dim);
  return cfg;
}

OptimizationTrace finish_trace(OptimizationTrace&& trace, const Image& target,
                               const LossSpec& spec) {
  const int min_dim = std::min(target.height, target.width);
  trace.final_report = compute_report(target, trace.final_image, report_cfg(spec, min_dim),
                                      fit_bank(spec.bank, min_dim));
  return std::move(trace);
}

void matmul(const Grid& a, const Grid& b, Grid& out) {
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double sum = 0.0;
      for (int k = 0; k < a.cols; ++k) sum += a.at(i, k) * b.at(k, j);
      out.at(i, j) = sum;
    }
}

double sample_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  long double sum = 0.0L;
  for (double x : v) {
    const long double d = static_cast<long double>(x) - mean;
    sum += d * d;
  }
  return static_cast<double>(std::sqrt(sum / (v.size() - 1)));
}

}  // namespace

const char* loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::kMse: return "mse";
    case LossKind::kSsim: return "ssim";
    case LossKind::kLwssim: return "lwssim";
  }
  return "unknown";
}

LossKind loss_from_name(const std::string& s) {
  if (s == "mse") return LossKind::kMse;
  if (s == "ssim") return LossKind::kSsim;
  if (s == "lwssim") return LossKind::kLwssim;
  throw std::invalid_argument("unknown loss '" + s + "' (expected mse, ssim, or lwssim)");
}

double loss_value(const LossSpec& spec, const Image& target, const Image& y) {
  switch (spec.kind) {
    case LossKind::kMse: return mse(target, y);
    case LossKind::kSsim: return 1.0 - ssim(target, y, spec.ssim_cfg);
    case LossKind::kLwssim: return lwssim_loss(target, y, spec.bank);
  }
  throw std::invalid_argument("unknown loss kind");
}

GradientField loss_grad(const LossSpec& spec, const Image& target, const Image& y) {
  switch (spec.kind) {
    case LossKind::kMse: return grad_mse(target, y);
    case LossKind::kSsim: {
      GradientField g = grad_ssim(target, y, spec.ssim_cfg);
      for (double& v : g.data) v = -v;
      return g;
    }
    case LossKind::kLwssim: return grad_lwssim_loss(target, y, spec.bank);
  }
  throw std::invalid_argument("unknown loss kind");
}

OptimizationTrace optimize_pixels(const Image& target, const Image& init, const LossSpec& spec,
                                  const OptimizeOptions& opts, const StepCallback& on_step) {
  if (!target.same_shape(init)) throw std::invalid_argument("target and init must share a shape");
  validate_opts(opts);

  OptimizationTrace trace;
  trace.loss.reserve(opts.steps + 1);
  Image y = init;
  std::vector<double> velocity(y.data.size(), 0.0);

  double loss = loss_value(spec, target, y);
  if (!std::isfinite(loss)) throw DivergenceError(0);
  trace.loss.push_back(loss);
  if (on_step) on_step(0, loss);

  for (int step = 1; step <= opts.steps; ++step) {
    const GradientField g = loss_grad(spec, target, y);
    for (std::size_t i = 0; i < y.data.size(); ++i) {
      velocity[i] = opts.momentum * velocity[i] + g.data[i];
      double v = y.data[i] - opts.step_size * velocity[i];
      if (opts.clamp) v = std::clamp(v, 0.0, 1.0);
      y.data[i] = v;
    }
    loss = loss_value(spec, target, y);
    if (!std::isfinite(loss)) throw DivergenceError(step);
    trace.loss.push_back(loss);
    if (on_step) on_step(step, loss);
  }

  trace.final_image = std::move(y);
  return finish_trace(std::move(trace), target, spec);
}

Image BottleneckModel::reconstruct(bool clamp) const {
  Image img(static_cast<int>(u.size()), height, width);
  Grid product(height, width);
  for (std::size_t c = 0; c < u.size(); ++c) {
    matmul(u[c], v[c], product);
    double* plane = img.plane(static_cast<int>(c)).data();
    for (std::size_t i = 0; i < product.size(); ++i)
      plane[i] = clamp ? std::clamp(product.v[i], 0.0, 1.0) : product.v[i];
  }
  return img;
}

BottleneckModel seeded_bottleneck(int channels, int height, int width, int rank,
                                  std::uint64_t seed) {
  if (channels < 1) throw std::invalid_argument("channels must be >= 1");
  if (rank < 1 || rank >= std::min(height, width))
    throw std::invalid_argument("rank must satisfy 1 <= k < min(m, n)");

  BottleneckModel model;
  model.rank = rank;
  model.height = height;
  model.width = width;
  model.u.assign(channels, Grid(height, rank));
  model.v.assign(channels, Grid(rank, width));

  // Entries in [0, sqrt(1/k)) put the initial product's entries in [0, 1).
  const double limit = std::sqrt(1.0 / rank);
  std::mt19937_64 gen(seed);
  for (int c = 0; c < channels; ++c) {
    for (double& e : model.u[c].v) e = limit * detail::canonical(gen);
    for (double& e : model.v[c].v) e = limit * detail::canonical(gen);
  }
  return model;
}

OptimizationTrace optimize_bottleneck(const Image& target, int rank, const LossSpec& spec,
                                      const OptimizeOptions& opts, const StepCallback& on_step) {
  validate_opts(opts);
  BottleneckModel model =
      seeded_bottleneck(target.channels, target.height, target.width, rank, opts.seed);

  std::vector<Grid> vel_u(model.u.size(), Grid(target.height, rank));
  std::vector<Grid> vel_v(model.v.size(), Grid(rank, target.width));
  Grid grad_u(target.height, rank);
  Grid grad_v(rank, target.width);
  Grid g_plane(target.height, target.width);
  Grid u_t(rank, target.height);
  Grid v_t(target.width, rank);

  OptimizationTrace trace;
  trace.loss.reserve(opts.steps + 1);

  Image y = model.reconstruct(opts.clamp);
  double loss = loss_value(spec, target, y);
  if (!std::isfinite(loss)) throw DivergenceError(0);
  trace.loss.push_back(loss);
  if (on_step) on_step(0, loss);

  for (int step = 1; step <= opts.steps; ++step) {
    const GradientField g = loss_grad(spec, target, y);
    for (std::size_t c = 0; c < model.u.size(); ++c) {
      const auto plane = g.plane(static_cast<int>(c));
      std::copy(plane.begin(), plane.end(), g_plane.v.begin());

      // y = U*V with a pass-through clamp, so dU = G*V^T and dV = U^T*G.
      for (int i = 0; i < rank; ++i)
        for (int j = 0; j < target.width; ++j) v_t.at(j, i) = model.v[c].at(i, j);
      matmul(g_plane, v_t, grad_u);
      for (int i = 0; i < target.height; ++i)
        for (int j = 0; j < rank; ++j) u_t.at(j, i) = model.u[c].at(i, j);
      matmul(u_t, g_plane, grad_v);

      for (std::size_t i = 0; i < grad_u.size(); ++i) {
        vel_u[c].v[i] = opts.momentum * vel_u[c].v[i] + grad_u.v[i];
        model.u[c].v[i] -= opts.step_size * vel_u[c].v[i];
      }
      for (std::size_t i = 0; i < grad_v.size(); ++i) {
        vel_v[c].v[i] = opts.momentum * vel_v[c].v[i] + grad_v.v[i];
        model.v[c].v[i] -= opts.step_size * vel_v[c].v[i];
      }
    }
    y = model.reconstruct(opts.clamp);
    loss = loss_value(spec, target, y);
    if (!std::isfinite(loss)) throw DivergenceError(step);
    trace.loss.push_back(loss);
    if (on_step) on_step(step, loss);
  }

  trace.final_image = model.reconstruct(true);
  return finish_trace(std::move(trace), target, spec);
}

ComparisonReport compare_losses(const Image& target, const std::vector<LossSpec>& specs,
                                int rank, const OptimizeOptions& opts,
                                const std::vector<std::uint64_t>& seeds,
                                const SsimConfig& eval_cfg) {
  if (specs.empty()) throw std::invalid_argument("compare_losses needs at least one loss spec");
  if (seeds.empty()) throw std::invalid_argument("compare_losses needs at least one seed");

  SsimConfig eval = eval_cfg;
  eval.xi = std::min(eval.xi, std::min(target.height, target.width));

  ComparisonReport report;
  for (const LossSpec& spec : specs) {
    std::vector<double> ssim_vals, mse_vals;
    ssim_vals.reserve(seeds.size());
    mse_vals.reserve(seeds.size());
    for (std::uint64_t seed : seeds) {
      OptimizeOptions run = opts;
      run.seed = seed;
      const OptimizationTrace trace = optimize_bottleneck(target, rank, spec, run);
      ssim_vals.push_back(ssim(target, trace.final_image, eval));
      mse_vals.push_back(mse(target, trace.final_image));
    }
    ComparisonRow row;
    row.loss = loss_name(spec.kind);
    long double ssim_sum = 0.0L, mse_sum = 0.0L;
    for (double v : ssim_vals) ssim_sum += v;
    for (double v : mse_vals) mse_sum += v;
    row.ssim_mean = static_cast<double>(ssim_sum / seeds.size());
    row.mse_mean = static_cast<double>(mse_sum / seeds.size());
    row.ssim_sd = sample_sd(ssim_vals, row.ssim_mean);
    row.mse_sd = sample_sd(mse_vals, row.mse_mean);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace lwssim
