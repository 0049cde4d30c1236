#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <utility>

#include "lwssim/errors.hpp"
#include "lwssim/grad.hpp"
#include "lwssim/image.hpp"
#include "lwssim/metric.hpp"
#include "lwssim/optim.hpp"
#include "lwssim/window_stats.hpp"

namespace py = pybind11;
namespace lw = lwssim;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LevelList = std::vector<std::pair<int, double>>;

// Accepts (H, W) or (C, H, W).
lw::Image to_image(const DoubleArray& arr) {
  const py::buffer_info info = arr.request();
  int channels, height, width;
  if (info.ndim == 2) {
    channels = 1;
    height = static_cast<int>(info.shape[0]);
    width = static_cast<int>(info.shape[1]);
  } else if (info.ndim == 3) {
    channels = static_cast<int>(info.shape[0]);
    height = static_cast<int>(info.shape[1]);
    width = static_cast<int>(info.shape[2]);
  } else {
    throw std::invalid_argument("expected a (H, W) or (C, H, W) array");
  }
  lw::Image img(channels, height, width);
  const double* src = static_cast<const double*>(info.ptr);
  std::copy(src, src + img.data.size(), img.data.begin());
  return img;
}

// Single-channel images come back as (H, W); anything else as (C, H, W).
py::array from_image(const lw::Image& img) {
  DoubleArray arr = img.channels == 1
                        ? DoubleArray({img.height, img.width})
                        : DoubleArray({img.channels, img.height, img.width});
  std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
  return std::move(arr);
}

py::array from_grid(const lw::Grid& g) {
  DoubleArray arr({g.rows, g.cols});
  std::copy(g.v.begin(), g.v.end(), arr.mutable_data());
  return std::move(arr);
}

lw::SsimConfig make_cfg(int xi, double c1, double c2, std::optional<double> c3, double alpha,
                        double beta, double gamma) {
  lw::SsimConfig cfg;
  cfg.xi = xi;
  cfg.c1 = c1;
  cfg.c2 = c2;
  cfg.c3 = c3.value_or(c2 / 2.0);
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.gamma = gamma;
  return cfg;
}

lw::LevelBank make_bank(const std::optional<LevelList>& levels, const lw::SsimConfig& shared) {
  lw::LevelBank bank = lw::default_level_bank();
  if (levels) {
    bank.levels.clear();
    for (const auto& [xi, lambda] : *levels) bank.levels.push_back({xi, lambda});
    lw::normalize_weights(bank);
  }
  bank.shared = shared;  // stabilizers and exponents; per-level xi overrides shared.xi
  lw::validate(bank);
  return bank;
}

py::dict report_to_dict(const lw::MetricReport& report) {
  py::dict d;
  d["ssim"] = report.ssim;
  d["lwssim"] = report.lwssim;
  d["lwssim_loss"] = report.lwssim_loss;
  d["mse"] = report.mse;
  d["mae"] = report.mae;
  py::list levels;
  for (const lw::LevelScore& level : report.levels) {
    py::dict e;
    e["xi"] = level.xi;
    e["lambda"] = level.lambda;
    e["score"] = level.score;
    levels.append(e);
  }
  d["levels"] = levels;
  py::list channels;
  for (const lw::ChannelScores& ch : report.channels) {
    py::dict e;
    e["ssim"] = ch.ssim;
    e["lwssim"] = ch.lwssim;
    e["lwssim_loss"] = ch.lwssim_loss;
    e["mse"] = ch.mse;
    e["mae"] = ch.mae;
    channels.append(e);
  }
  d["channels"] = channels;
  return d;
}

py::dict trace_to_dict(const lw::OptimizationTrace& trace) {
  py::dict d;
  // A bare {n} would pick the array_t(ssize_t) constructor, which builds a
  // stride-0 array; spell out the shape container and let pybind copy.
  d["loss"] = DoubleArray(
      py::array::ShapeContainer{static_cast<py::ssize_t>(trace.loss.size())},
      trace.loss.data());
  d["final"] = from_image(trace.final_image);
  d["report"] = report_to_dict(trace.final_report);
  return d;
}

lw::LossSpec make_loss_spec(const std::string& loss, const lw::SsimConfig& cfg,
                            const std::optional<LevelList>& levels) {
  lw::LossSpec spec;
  spec.kind = lw::loss_from_name(loss);
  spec.ssim_cfg = cfg;
  spec.bank = make_bank(levels, cfg);
  return spec;
}

lw::OptimizeOptions make_opts(int steps, double lr, double momentum, bool clamp,
                              std::uint64_t seed) {
  lw::OptimizeOptions opts;
  opts.steps = steps;
  opts.step_size = lr;
  opts.momentum = momentum;
  opts.clamp = clamp;
  opts.seed = seed;
  return opts;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Windowed structural similarity metrics, gradients, and reconstruction "
            "optimizers. Images are float64 arrays shaped (H, W) or (C, H, W) with "
            "intensities in [0, 1].";

  py::register_exception<lw::IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<lw::FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<lw::UnsupportedConfigError>(m, "UnsupportedConfigError",
                                                     PyExc_ValueError);
  py::register_exception<lw::DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.def(
      "synthesize",
      [](const std::string& kind, int channels, int height, int width, double value,
         int period, std::uint64_t seed, double amplitude) {
        lw::SyntheticSpec spec;
        if (kind == "constant")
          spec.kind = lw::SyntheticKind::kConstant;
        else if (kind == "gradient")
          spec.kind = lw::SyntheticKind::kHorizontalGradient;
        else if (kind == "checkerboard")
          spec.kind = lw::SyntheticKind::kCheckerboard;
        else if (kind == "noise")
          spec.kind = lw::SyntheticKind::kUniformNoise;
        else
          throw std::invalid_argument("unknown pattern '" + kind + "'");
        spec.value = value;
        spec.period = period;
        spec.seed = seed;
        spec.amplitude = amplitude;
        return from_image(lw::synthesize(spec, channels, height, width));
      },
      py::arg("kind"), py::arg("channels") = 1, py::arg("height") = 32, py::arg("width") = 32,
      py::arg("value") = 0.5, py::arg("period") = 1, py::arg("seed") = 0,
      py::arg("amplitude") = 1.0,
      "Deterministic test pattern: 'constant', 'gradient', 'checkerboard', or 'noise'.");

  m.def(
      "load_image", [](const std::string& path) { return from_image(lw::load_image(path)); },
      py::arg("path"), "Read a PGM, PPM, or PNG file as a [0,1] float array.");
  m.def(
      "save_image",
      [](const DoubleArray& img, const std::string& path) {
        lw::save_image(to_image(img), path);
      },
      py::arg("image"), py::arg("path"),
      "Write an 8-bit PGM, PPM, or PNG file depending on the extension.");

#define LWSSIM_CFG_ARGS                                                                   \
  py::arg("xi") = 7, py::arg("c1") = 1e-4, py::arg("c2") = 9e-4,                          \
      py::arg("c3") = py::none(), py::arg("alpha") = 1.0, py::arg("beta") = 1.0,          \
      py::arg("gamma") = 1.0

  m.def(
      "ssim",
      [](const DoubleArray& x, const DoubleArray& y, int xi, double c1, double c2,
         std::optional<double> c3, double alpha, double beta, double gamma) {
        return lw::ssim(to_image(x), to_image(y), make_cfg(xi, c1, c2, c3, alpha, beta, gamma));
      },
      py::arg("x"), py::arg("y"), LWSSIM_CFG_ARGS,
      "Mean windowed structural similarity; configurable via xi and the stabilizers.");

  m.def(
      "lwssim_level",
      [](const DoubleArray& x, const DoubleArray& y, int xi, double c1, double c2,
         std::optional<double> c3, double alpha, double beta, double gamma) {
        return lw::lwssim_level(to_image(x), to_image(y),
                                make_cfg(xi, c1, c2, c3, alpha, beta, gamma));
      },
      py::arg("x"), py::arg("y"), LWSSIM_CFG_ARGS,
      "Single-level additive score l + c*s pooled over windows.");

  m.def(
      "lwssim",
      [](const DoubleArray& x, const DoubleArray& y, const std::optional<LevelList>& levels,
         int xi, double c1, double c2, std::optional<double> c3, double alpha, double beta,
         double gamma) {
        return lw::lwssim(to_image(x), to_image(y),
                          make_bank(levels, make_cfg(xi, c1, c2, c3, alpha, beta, gamma)));
      },
      py::arg("x"), py::arg("y"), py::arg("levels") = py::none(), LWSSIM_CFG_ARGS,
      "Level-weighted score over a bank of window sizes; levels is a list of "
      "(xi, weight) pairs, default [(3,1),(7,1),(11,1)]. Weights are normalized to "
      "average 1.");

  m.def(
      "lwssim_loss",
      [](const DoubleArray& x, const DoubleArray& y, const std::optional<LevelList>& levels,
         int xi, double c1, double c2, std::optional<double> c3, double alpha, double beta,
         double gamma) {
        return lw::lwssim_loss(to_image(x), to_image(y),
                               make_bank(levels, make_cfg(xi, c1, c2, c3, alpha, beta, gamma)));
      },
      py::arg("x"), py::arg("y"), py::arg("levels") = py::none(), LWSSIM_CFG_ARGS,
      "Reconstruction loss 1 - lwssim/2, zero at a perfect match.");

  m.def(
      "mse",
      [](const DoubleArray& x, const DoubleArray& y) { return lw::mse(to_image(x), to_image(y)); },
      py::arg("x"), py::arg("y"));
  m.def(
      "mae",
      [](const DoubleArray& x, const DoubleArray& y) { return lw::mae(to_image(x), to_image(y)); },
      py::arg("x"), py::arg("y"));

  m.def(
      "compute_report",
      [](const DoubleArray& x, const DoubleArray& y, const std::optional<LevelList>& levels,
         int xi, double c1, double c2, std::optional<double> c3, double alpha, double beta,
         double gamma) {
        const lw::SsimConfig cfg = make_cfg(xi, c1, c2, c3, alpha, beta, gamma);
        return report_to_dict(
            lw::compute_report(to_image(x), to_image(y), cfg, make_bank(levels, cfg)));
      },
      py::arg("x"), py::arg("y"), py::arg("levels") = py::none(), LWSSIM_CFG_ARGS,
      "Every metric at once: scalars, per-level scores, per-channel scores.");

  m.def(
      "score_map",
      [](const DoubleArray& x, const DoubleArray& y, const std::string& which, int xi,
         double c1, double c2, std::optional<double> c3, double alpha, double beta,
         double gamma) {
        const lw::SsimConfig cfg = make_cfg(xi, c1, c2, c3, alpha, beta, gamma);
        lw::validate(cfg);
        const lw::Image xi_img = to_image(x);
        const lw::Image yi_img = to_image(y);
        py::list maps;
        for (int c = 0; c < xi_img.channels; ++c) {
          const auto stats =
              lw::window_stats(xi_img.plane_view(c), yi_img.plane_view(c), cfg.xi);
          lw::Grid g;
          if (which == "l")
            g = lw::luminance_map(stats, cfg.c1);
          else if (which == "c")
            g = lw::contrast_map(stats, cfg.c2);
          else if (which == "s")
            g = lw::structure_map(stats, cfg.c3);
          else if (which == "ssim")
            g = lw::ssim_map(stats, cfg);
          else if (which == "lwssim")
            g = lw::lwssim_map(stats, cfg);
          else
            throw std::invalid_argument("unknown map '" + which + "'");
          maps.append(from_grid(g));
        }
        return xi_img.channels == 1 ? py::object(maps[0]) : py::object(maps);
      },
      py::arg("x"), py::arg("y"), py::arg("which"), LWSSIM_CFG_ARGS,
      "Per-window map ('l', 'c', 's', 'ssim', or 'lwssim'); one array per channel.");

  m.def(
      "grad_mse",
      [](const DoubleArray& x, const DoubleArray& y) {
        return from_image(lw::grad_mse(to_image(x), to_image(y)));
      },
      py::arg("x"), py::arg("y"), "Gradient of mse with respect to y.");

  m.def(
      "grad_ssim",
      [](const DoubleArray& x, const DoubleArray& y, int xi, double c1, double c2,
         std::optional<double> c3, double alpha, double beta, double gamma) {
        return from_image(lw::grad_ssim(to_image(x), to_image(y),
                                        make_cfg(xi, c1, c2, c3, alpha, beta, gamma)));
      },
      py::arg("x"), py::arg("y"), LWSSIM_CFG_ARGS,
      "Analytic gradient of ssim with respect to y (unit exponents only).");

  m.def(
      "grad_lwssim",
      [](const DoubleArray& x, const DoubleArray& y, const std::optional<LevelList>& levels,
         int xi, double c1, double c2, std::optional<double> c3, double alpha, double beta,
         double gamma) {
        return from_image(
            lw::grad_lwssim(to_image(x), to_image(y),
                            make_bank(levels, make_cfg(xi, c1, c2, c3, alpha, beta, gamma))));
      },
      py::arg("x"), py::arg("y"), py::arg("levels") = py::none(), LWSSIM_CFG_ARGS,
      "Analytic gradient of lwssim with respect to y (unit exponents only).");

  m.def(
      "grad_lwssim_loss",
      [](const DoubleArray& x, const DoubleArray& y, const std::optional<LevelList>& levels,
         int xi, double c1, double c2, std::optional<double> c3, double alpha, double beta,
         double gamma) {
        return from_image(lw::grad_lwssim_loss(
            to_image(x), to_image(y),
            make_bank(levels, make_cfg(xi, c1, c2, c3, alpha, beta, gamma))));
      },
      py::arg("x"), py::arg("y"), py::arg("levels") = py::none(), LWSSIM_CFG_ARGS,
      "Analytic gradient of the lwssim loss with respect to y.");

  m.def(
      "optimize_pixels",
      [](const DoubleArray& target, const DoubleArray& init, const std::string& loss,
         int steps, double lr, double momentum, bool clamp, const std::optional<LevelList>& levels,
         int xi, double c1, double c2, std::optional<double> c3, double alpha, double beta,
         double gamma) {
        const lw::LossSpec spec =
            make_loss_spec(loss, make_cfg(xi, c1, c2, c3, alpha, beta, gamma), levels);
        return trace_to_dict(lw::optimize_pixels(to_image(target), to_image(init), spec,
                                                 make_opts(steps, lr, momentum, clamp, 0)));
      },
      py::arg("target"), py::arg("init"), py::arg("loss") = "lwssim", py::arg("steps") = 200,
      py::arg("lr") = 0.5, py::arg("momentum") = 0.9, py::arg("clamp") = true,
      py::arg("levels") = py::none(), LWSSIM_CFG_ARGS,
      "Momentum gradient descent on the pixels of init; returns {'loss', 'final', "
      "'report'}.");

  m.def(
      "optimize_bottleneck",
      [](const DoubleArray& target, int rank, const std::string& loss, int steps, double lr,
         double momentum, std::uint64_t seed, const std::optional<LevelList>& levels, int xi,
         double c1, double c2, std::optional<double> c3, double alpha, double beta,
         double gamma) {
        const lw::LossSpec spec =
            make_loss_spec(loss, make_cfg(xi, c1, c2, c3, alpha, beta, gamma), levels);
        return trace_to_dict(lw::optimize_bottleneck(to_image(target), rank, spec,
                                                     make_opts(steps, lr, momentum, true, seed)));
      },
      py::arg("target"), py::arg("rank"), py::arg("loss") = "lwssim", py::arg("steps") = 200,
      py::arg("lr") = 0.5, py::arg("momentum") = 0.9, py::arg("seed") = 1,
      py::arg("levels") = py::none(), LWSSIM_CFG_ARGS,
      "Fits a rank-k factorization of the target under the chosen loss.");

  m.def(
      "compare_losses",
      [](const DoubleArray& target, const std::vector<std::string>& losses, int rank,
         int steps, double lr, double momentum, std::uint64_t seed, int seeds) {
        std::vector<lw::LossSpec> specs;
        for (const std::string& name : losses)
          specs.push_back(make_loss_spec(name, lw::SsimConfig{}, std::nullopt));
        std::vector<std::uint64_t> seed_list;
        for (int i = 0; i < seeds; ++i) seed_list.push_back(seed + static_cast<std::uint64_t>(i));
        const lw::ComparisonReport report = lw::compare_losses(
            to_image(target), specs, rank, make_opts(steps, lr, momentum, true, seed),
            seed_list);
        py::list rows;
        for (const lw::ComparisonRow& row : report.rows) {
          py::dict d;
          d["loss"] = row.loss;
          d["ssim_mean"] = row.ssim_mean;
          d["ssim_sd"] = row.ssim_sd;
          d["mse_mean"] = row.mse_mean;
          d["mse_sd"] = row.mse_sd;
          rows.append(d);
        }
        return rows;
      },
      py::arg("target"),
      py::arg("losses") = std::vector<std::string>{"mse", "ssim", "lwssim"},
      py::arg("rank") = 4, py::arg("steps") = 300, py::arg("lr") = 0.2,
      py::arg("momentum") = 0.9, py::arg("seed") = 1, py::arg("seeds") = 5,
      "Bottleneck reconstruction quality per loss, averaged over seeded restarts.");

#undef LWSSIM_CFG_ARGS
}
