#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lwssim/errors.hpp"
#include "lwssim/grad.hpp"
#include "lwssim/image.hpp"
#include "lwssim/metric.hpp"
#include "lwssim/optim.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lwssim;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("cannot write " + path.string());
    }
  }
  fs::rename(tmp, path);
}

// Empty path means stdout.
void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    write_text_atomic(out_path, text);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

// Flags shared by every subcommand that evaluates a metric.
struct MetricFlags {
  std::string levels;
  int xi = 7;
  double c1 = 1e-4;
  double c2 = 9e-4;
  double c3 = -1.0;  // sentinel: derive as c2/2
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
};

void add_metric_flags(CLI::App* sub, MetricFlags& f) {
  sub->add_option("--levels", f.levels,
                  "Level bank as XI:LAMBDA[,XI:LAMBDA...] (default 3:1,7:1,11:1)");
  sub->add_option("--xi", f.xi, "Window size for single-window SSIM")->capture_default_str();
  sub->add_option("--c1", f.c1, "Luminance stabilizer")->capture_default_str();
  sub->add_option("--c2", f.c2, "Contrast stabilizer")->capture_default_str();
  sub->add_option("--c3", f.c3, "Structure stabilizer (default c2/2)");
  sub->add_option("--alpha", f.alpha, "Luminance exponent")->capture_default_str();
  sub->add_option("--beta", f.beta, "Contrast exponent")->capture_default_str();
  sub->add_option("--gamma", f.gamma, "Structure exponent")->capture_default_str();
}

SsimConfig build_cfg(const MetricFlags& f) {
  SsimConfig cfg;
  cfg.xi = f.xi;
  cfg.c1 = f.c1;
  cfg.c2 = f.c2;
  cfg.c3 = f.c3 < 0.0 ? f.c2 / 2.0 : f.c3;
  cfg.alpha = f.alpha;
  cfg.beta = f.beta;
  cfg.gamma = f.gamma;
  return cfg;
}

std::vector<Level> parse_levels(const std::string& s) {
  std::vector<Level> levels;
  for (const std::string& item : split(s, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("levels entry '" + item + "' is not XI:LAMBDA");
    try {
      levels.push_back({std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw std::invalid_argument("levels entry '" + item + "' is not XI:LAMBDA");
    }
  }
  if (levels.empty()) throw std::invalid_argument("--levels must name at least one level");
  return levels;
}

LevelBank build_bank(const MetricFlags& f) {
  LevelBank bank = default_level_bank();
  if (!f.levels.empty()) bank.levels = parse_levels(f.levels);
  bank.shared = build_cfg(f);
  if (normalize_weights(bank))
    std::cerr << "warning: level weights rescaled to average 1\n";
  validate(bank);
  return bank;
}

json report_to_json(const MetricReport& r) {
  json j;
  j["ssim"] = r.ssim;
  j["lwssim"] = r.lwssim;
  j["lwssim_loss"] = r.lwssim_loss;
  j["mse"] = r.mse;
  j["mae"] = r.mae;
  j["levels"] = json::array();
  for (const LevelScore& lv : r.levels)
    j["levels"].push_back({{"xi", lv.xi}, {"lambda", lv.lambda}, {"score", lv.score}});
  j["channels"] = json::array();
  for (const ChannelScores& cs : r.channels)
    j["channels"].push_back({{"ssim", cs.ssim},
                             {"lwssim", cs.lwssim},
                             {"lwssim_loss", cs.lwssim_loss},
                             {"mse", cs.mse},
                             {"mae", cs.mae}});
  return j;
}

std::string flatten_csv(const json& j) {
  std::string out = "key,value\n";
  const json flat = j.flatten();
  for (const auto& [pointer, value] : flat.items()) {
    std::string key = pointer.substr(1);
    std::replace(key.begin(), key.end(), '/', '.');
    out += key + "," + (value.is_number_float() ? fmt(value.get<double>()) : value.dump()) + "\n";
  }
  return out;
}

void load_pair(const std::string& ref, const std::string& test, Image& x, Image& y) {
  x = load_image(ref);
  y = load_image(test);
  if (!x.same_shape(y))
    throw std::invalid_argument("images differ in shape: " + ref + " vs " + test);
}

void run_compare(const std::string& ref, const std::string& test, const MetricFlags& f,
                 const std::string& out, const std::string& format) {
  Image x, y;
  load_pair(ref, test, x, y);
  const MetricReport report = compute_report(x, y, build_cfg(f), build_bank(f));
  const json j = report_to_json(report);
  emit(format == "csv" ? flatten_csv(j) : j.dump(2) + "\n", out);
}

void run_map(const std::string& ref, const std::string& test, const std::string& which,
             const MetricFlags& f, const std::string& out) {
  Image x, y;
  load_pair(ref, test, x, y);
  const SsimConfig cfg = build_cfg(f);
  validate(cfg);

  Grid acc;
  for (int c = 0; c < x.channels; ++c) {
    const WindowStatsMaps stats = window_stats(x.plane_view(c), y.plane_view(c), cfg.xi);
    Grid m;
    if (which == "l")
      m = luminance_map(stats, cfg.c1);
    else if (which == "c")
      m = contrast_map(stats, cfg.c2);
    else if (which == "s")
      m = structure_map(stats, cfg.c3);
    else if (which == "ssim")
      m = ssim_map(stats, cfg);
    else
      m = lwssim_map(stats, cfg);
    if (c == 0)
      acc = std::move(m);
    else
      for (std::size_t i = 0; i < acc.size(); ++i) acc.v[i] += m.v[i];
  }

  // Affine rescale from the map's documented range to [0,1].
  const double lo = which == "l" || which == "c" ? 0.0 : -1.0;
  const double hi = which == "lwssim" ? 2.0 : 1.0;
  Image img(1, acc.rows, acc.cols);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double v = acc.v[i] / x.channels;
    img.data[i] = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  }
  save_image(img, out);
  std::cout << "min=" << fmt(lo) << " max=" << fmt(hi) << "\n";
}

struct OptimizeFlags {
  std::string loss = "lwssim";
  int steps = 200;
  double lr = 0.5;
  double momentum = 0.9;
  int bottleneck = 0;  // 0: free pixels
  std::uint64_t seed = 1;
  std::string init = "noise";
};

LossSpec build_spec(const std::string& loss, const MetricFlags& f) {
  LossSpec spec;
  spec.kind = loss_from_name(loss);
  spec.ssim_cfg = build_cfg(f);
  spec.bank = build_bank(f);
  return spec;
}

void run_optimize(const std::string& target_path, const OptimizeFlags& of, const MetricFlags& mf,
                  const std::string& prefix) {
  const Image target = load_image(target_path);
  const LossSpec spec = build_spec(of.loss, mf);
  OptimizeOptions opts;
  opts.steps = of.steps;
  opts.step_size = of.lr;
  opts.momentum = of.momentum;
  opts.seed = of.seed;

  const fs::path trace_path = prefix + "_trace.csv";
  fs::path trace_tmp = trace_path;
  trace_tmp += ".tmp";
  std::ofstream trace_out(trace_tmp, std::ios::binary);
  if (!trace_out) throw IoError("cannot write " + trace_path.string());
  trace_out << "step,loss\n";
  const StepCallback cb = [&](int step, double loss) {
    trace_out << step << "," << fmt(loss) << "\n";
  };

  OptimizationTrace trace;
  try {
    if (of.bottleneck > 0) {
      trace = optimize_bottleneck(target, of.bottleneck, spec, opts, cb);
    } else {
      Image init = target;
      if (of.init == "noise") {
        SyntheticSpec noise;
        noise.kind = SyntheticKind::kUniformNoise;
        noise.seed = of.seed;
        init = synthesize(noise, target.channels, target.height, target.width);
      }
      trace = optimize_pixels(target, init, spec, opts, cb);
    }
  } catch (...) {
    // Keep whatever was traced before the failure.
    trace_out.close();
    fs::rename(trace_tmp, trace_path);
    throw;
  }
  trace_out.close();
  if (!trace_out) throw IoError("cannot write " + trace_path.string());
  fs::rename(trace_tmp, trace_path);

  save_image(trace.final_image, prefix + "_final.png");
  write_text_atomic(prefix + "_report.json", report_to_json(trace.final_report).dump(2) + "\n");
}

struct StudyFlags {
  std::string losses = "mse,ssim,lwssim";
  int bottleneck = 4;
  int steps = 300;
  double lr = 0.2;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  int seeds = 5;
};

void run_study(const std::string& target_path, const StudyFlags& sf, const MetricFlags& mf,
               const std::string& out, const std::string& format) {
  const Image target = load_image(target_path);

  std::vector<LossSpec> specs;
  for (const std::string& name : split(sf.losses, ',')) specs.push_back(build_spec(name, mf));
  std::vector<std::uint64_t> seeds(sf.seeds);
  for (int i = 0; i < sf.seeds; ++i) seeds[i] = sf.seed + i;

  OptimizeOptions opts;
  opts.steps = sf.steps;
  opts.step_size = sf.lr;
  opts.momentum = sf.momentum;

  const ComparisonReport report =
      compare_losses(target, specs, sf.bottleneck, opts, seeds, build_cfg(mf));

  std::string text;
  if (format == "json") {
    json j = json::array();
    for (const ComparisonRow& row : report.rows)
      j.push_back({{"loss", row.loss},
                   {"ssim_mean", row.ssim_mean},
                   {"ssim_sd", row.ssim_sd},
                   {"mse_mean", row.mse_mean},
                   {"mse_sd", row.mse_sd}});
    text = j.dump(2) + "\n";
  } else {
    text = "loss,ssim_mean,ssim_sd,mse_mean,mse_sd\n";
    for (const ComparisonRow& row : report.rows)
      text += row.loss + "," + fmt(row.ssim_mean) + "," + fmt(row.ssim_sd) + "," +
              fmt(row.mse_mean) + "," + fmt(row.mse_sd) + "\n";
  }
  emit(text, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SSIM / LWSSIM image comparison and reconstruction toolkit"};
  app.require_subcommand(1);

  std::string ref, test, target, out, format = "json", study_format = "csv", which;
  MetricFlags mf;
  OptimizeFlags of;
  StudyFlags sf;

  CLI::App* compare = app.add_subcommand("compare", "Score a test image against a reference");
  compare->add_option("ref", ref, "Reference image")->required();
  compare->add_option("test", test, "Test image")->required();
  add_metric_flags(compare, mf);
  compare->add_option("--out", out, "Write the report here instead of stdout");
  compare->add_option("--format", format, "Report format")->capture_default_str()
      ->check(CLI::IsMember({"json", "csv"}));
  compare->callback([&] { run_compare(ref, test, mf, out, format); });

  CLI::App* map = app.add_subcommand("map", "Write a per-window comparison map as an image");
  map->add_option("ref", ref, "Reference image")->required();
  map->add_option("test", test, "Test image")->required();
  map->add_option("--which", which, "Map to write")
      ->required()
      ->check(CLI::IsMember({"l", "c", "s", "ssim", "lwssim"}));
  map->add_option("--out", out, "Output image path (.pgm or .png)")->required();
  add_metric_flags(map, mf);
  map->callback([&] { run_map(ref, test, which, mf, out); });

  CLI::App* optimize =
      app.add_subcommand("optimize", "Reconstruct a target by gradient descent");
  optimize->add_option("target", target, "Target image")->required();
  optimize->add_option("--loss", of.loss, "Loss to minimize")->capture_default_str()
      ->check(CLI::IsMember({"mse", "ssim", "lwssim"}));
  optimize->add_option("--steps", of.steps, "Gradient steps")->capture_default_str();
  optimize->add_option("--lr", of.lr, "Step size")->capture_default_str();
  optimize->add_option("--momentum", of.momentum, "Momentum coefficient")->capture_default_str();
  optimize->add_option("--bottleneck", of.bottleneck,
                       "Optimize a rank-K factorization instead of free pixels");
  optimize->add_option("--seed", of.seed, "Seed for init noise or factors")->capture_default_str();
  optimize->add_option("--init", of.init, "Pixel-space start")->capture_default_str()
      ->check(CLI::IsMember({"noise", "self"}));
  optimize->add_option("--out", out, "Output prefix (default 'optimize')");
  add_metric_flags(optimize, mf);
  optimize->callback([&] { run_optimize(target, of, mf, out.empty() ? "optimize" : out); });

  CLI::App* study = app.add_subcommand("study", "Compare losses on a bottleneck reconstruction");
  study->add_option("target", target, "Target image")->required();
  study->add_option("--losses", sf.losses, "Comma-separated losses to compare")->capture_default_str();
  study->add_option("--bottleneck", sf.bottleneck, "Factorization rank")->capture_default_str();
  study->add_option("--steps", sf.steps, "Gradient steps per run")->capture_default_str();
  study->add_option("--lr", sf.lr, "Step size")->capture_default_str();
  study->add_option("--momentum", sf.momentum, "Momentum coefficient")->capture_default_str();
  study->add_option("--seed", sf.seed, "First seed")->capture_default_str();
  study->add_option("--seeds", sf.seeds, "Number of seeds per loss")->capture_default_str();
  study->add_option("--out", out, "Write the table here instead of stdout");
  study->add_option("--format", study_format, "Table format")->capture_default_str()
      ->check(CLI::IsMember({"json", "csv"}));
  add_metric_flags(study, mf);
  study->callback([&] { run_study(target, sf, mf, out, study_format); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
