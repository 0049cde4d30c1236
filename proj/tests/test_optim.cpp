#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_support.hpp"

using namespace lwssim;

namespace {

Image gradient_target(int height = 16, int width = 16) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::kHorizontalGradient;
  return synthesize(spec, 1, height, width);
}

LossSpec spec_of(LossKind kind) {
  LossSpec spec;
  spec.kind = kind;
  return spec;
}

}  // namespace

TEST_CASE("loss names round-trip") {
  CHECK(loss_name(LossKind::kMse) == std::string("mse"));
  CHECK(loss_name(LossKind::kSsim) == std::string("ssim"));
  CHECK(loss_name(LossKind::kLwssim) == std::string("lwssim"));
  CHECK(loss_from_name("mse") == LossKind::kMse);
  CHECK(loss_from_name("ssim") == LossKind::kSsim);
  CHECK(loss_from_name("lwssim") == LossKind::kLwssim);
  CHECK_THROWS_AS(loss_from_name("psnr"), std::invalid_argument);
}

TEST_CASE("loss_value and loss_grad dispatch to the metric stack") {
  const Image x = test_support::seeded_image(401, 1, 16, 16);
  const Image y = test_support::seeded_image(402, 1, 16, 16);

  CHECK(loss_value(spec_of(LossKind::kMse), x, y) == mse(x, y));
  const LossSpec s = spec_of(LossKind::kSsim);
  CHECK(loss_value(s, x, y) == 1.0 - ssim(x, y, s.ssim_cfg));
  const LossSpec lw = spec_of(LossKind::kLwssim);
  CHECK(loss_value(lw, x, y) == lwssim_loss(x, y, lw.bank));

  const GradientField gs = loss_grad(s, x, y);
  const GradientField ref = grad_ssim(x, y, s.ssim_cfg);
  for (std::size_t i = 0; i < ref.data.size(); ++i) CHECK(gs.data[i] == -ref.data[i]);

  const GradientField gl = loss_grad(lw, x, y);
  const GradientField lref = grad_lwssim_loss(x, y, lw.bank);
  CHECK(gl.data == lref.data);
}

TEST_CASE("starting at the target is a fixed point") {
  const Image target = test_support::seeded_image(411, 1, 16, 16);
  OptimizeOptions opts;
  opts.steps = 20;

  const auto mse_trace = optimize_pixels(target, target, spec_of(LossKind::kMse), opts);
  for (double v : mse_trace.loss) CHECK(v == 0.0);
  CHECK(mse_trace.final_image.data == target.data);

  const auto lw_trace = optimize_pixels(target, target, spec_of(LossKind::kLwssim), opts);
  for (double v : lw_trace.loss) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("pixel descent drives mse to the target") {
  const Image target = gradient_target();
  const Image init = test_support::seeded_image(421, 1, 16, 16);
  OptimizeOptions opts;  // 200 steps, 0.5 step size, 0.9 momentum
  const auto trace = optimize_pixels(target, init, spec_of(LossKind::kMse), opts);
  REQUIRE(trace.loss.size() == 201);
  CHECK(trace.loss.back() < 1e-3);
  CHECK(trace.final_report.mse < 1e-3);
}

TEST_CASE("pixel descent drives the lwssim loss below threshold") {
  const Image target = gradient_target();
  const Image init = test_support::seeded_image(431, 1, 16, 16);
  OptimizeOptions opts;
  const auto trace = optimize_pixels(target, init, spec_of(LossKind::kLwssim), opts);
  CHECK(trace.loss.back() < 0.05);
  CHECK(trace.final_report.ssim > 0.95);
}

TEST_CASE("the trace has steps + 1 entries and zero steps change nothing") {
  const Image target = gradient_target(12, 12);
  const Image init = test_support::seeded_image(441, 1, 12, 12);
  OptimizeOptions opts;
  opts.steps = 0;
  const auto trace = optimize_pixels(target, init, spec_of(LossKind::kMse), opts);
  REQUIRE(trace.loss.size() == 1);
  CHECK(trace.loss[0] == mse(target, init));
  CHECK(trace.final_image.data == init.data);

  opts.steps = 7;
  const auto longer = optimize_pixels(target, init, spec_of(LossKind::kMse), opts);
  CHECK(longer.loss.size() == 8);
}

TEST_CASE("the step callback sees every trace entry") {
  const Image target = gradient_target(12, 12);
  const Image init = test_support::seeded_image(451, 1, 12, 12);
  OptimizeOptions opts;
  opts.steps = 5;
  std::vector<int> steps;
  std::vector<double> losses;
  const auto trace = optimize_pixels(target, init, spec_of(LossKind::kMse), opts,
                                     [&](int step, double loss) {
                                       steps.push_back(step);
                                       losses.push_back(loss);
                                     });
  REQUIRE(steps.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(steps[i] == i);
  CHECK(losses == trace.loss);
}

TEST_CASE("plain gradient descent on mse is monotone") {
  const Image target = gradient_target(12, 12);
  const Image init = test_support::seeded_image(461, 1, 12, 12);
  OptimizeOptions opts;
  opts.steps = 100;
  opts.step_size = 1e-2;
  opts.momentum = 0.0;
  const auto trace = optimize_pixels(target, init, spec_of(LossKind::kMse), opts);
  for (std::size_t i = 1; i < trace.loss.size(); ++i) CHECK(trace.loss[i] <= trace.loss[i - 1]);
}

TEST_CASE("default momentum still ends below where it started") {
  const Image target = gradient_target();
  const Image init = test_support::seeded_image(471, 1, 16, 16);
  OptimizeOptions opts;
  opts.steps = 60;
  for (LossKind kind : {LossKind::kMse, LossKind::kSsim, LossKind::kLwssim}) {
    const auto trace = optimize_pixels(target, init, spec_of(kind), opts);
    CHECK(trace.loss.back() < trace.loss.front());
  }
}

TEST_CASE("a runaway step size raises DivergenceError") {
  const Image target = gradient_target(12, 12);
  const Image init = test_support::seeded_image(481, 1, 12, 12);
  OptimizeOptions opts;
  opts.step_size = 1e6;
  opts.clamp = false;
  CHECK_THROWS_AS(optimize_pixels(target, init, spec_of(LossKind::kMse), opts),
                  DivergenceError);
  try {
    optimize_pixels(target, init, spec_of(LossKind::kMse), opts);
  } catch (const DivergenceError& e) {
    CHECK(e.step >= 1);
  }
}

TEST_CASE("optimize_pixels validates its inputs") {
  const Image target = gradient_target(12, 12);
  const Image init = test_support::seeded_image(491, 1, 12, 12);
  const Image wrong = test_support::seeded_image(492, 1, 12, 13);
  OptimizeOptions opts;
  CHECK_THROWS_AS(optimize_pixels(target, wrong, spec_of(LossKind::kMse), opts),
                  std::invalid_argument);
  opts.steps = -1;
  CHECK_THROWS_AS(optimize_pixels(target, init, spec_of(LossKind::kMse), opts),
                  std::invalid_argument);
  opts = OptimizeOptions{};
  opts.step_size = 0.0;
  CHECK_THROWS_AS(optimize_pixels(target, init, spec_of(LossKind::kMse), opts),
                  std::invalid_argument);
  opts = OptimizeOptions{};
  opts.momentum = 1.0;
  CHECK_THROWS_AS(optimize_pixels(target, init, spec_of(LossKind::kMse), opts),
                  std::invalid_argument);
}

TEST_CASE("seeded_bottleneck is deterministic and bounded") {
  const BottleneckModel a = seeded_bottleneck(2, 10, 8, 3, 99);
  const BottleneckModel b = seeded_bottleneck(2, 10, 8, 3, 99);
  const BottleneckModel c = seeded_bottleneck(2, 10, 8, 3, 100);
  REQUIRE(a.u.size() == 2);
  CHECK(a.u[0].v == b.u[0].v);
  CHECK(a.v[1].v == b.v[1].v);
  CHECK(a.u[0].v != c.u[0].v);

  const double limit = std::sqrt(1.0 / 3.0);
  for (const Grid& g : a.u)
    for (double v : g.v) {
      CHECK(v >= 0.0);
      CHECK(v < limit);
    }

  CHECK_THROWS_AS(seeded_bottleneck(1, 10, 8, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(seeded_bottleneck(1, 10, 8, 8, 1), std::invalid_argument);
  CHECK_THROWS_AS(seeded_bottleneck(0, 10, 8, 2, 1), std::invalid_argument);
}

TEST_CASE("reconstruct multiplies the factors and optionally clamps") {
  BottleneckModel m;
  m.rank = 2;
  m.height = 3;
  m.width = 4;
  m.u = {Grid(3, 2, 2.0)};
  m.v = {Grid(2, 4, 1.0)};
  const Image raw = m.reconstruct(false);
  for (double v : raw.data) CHECK(v == 4.0);
  const Image clamped = m.reconstruct(true);
  for (double v : clamped.data) CHECK(v == 1.0);
}

TEST_CASE("a rank-1 bottleneck recovers a rank-1 target") {
  // Every row of the horizontal gradient is the same vector.
  const Image target = gradient_target(12, 12);
  OptimizeOptions opts;
  opts.steps = 400;
  opts.seed = 3;
  const auto trace = optimize_bottleneck(target, 1, spec_of(LossKind::kMse), opts);
  CHECK(trace.loss.back() < 1e-4);
  CHECK(trace.final_report.mse < 1e-4);
  CHECK(trace.final_image.channels == 1);
  CHECK(trace.final_image.height == 12);
  for (double v : trace.final_image.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("bottleneck runs are seed-deterministic") {
  const Image target = gradient_target(12, 12);
  OptimizeOptions opts;
  opts.steps = 40;
  opts.seed = 7;
  const auto a = optimize_bottleneck(target, 2, spec_of(LossKind::kLwssim), opts);
  const auto b = optimize_bottleneck(target, 2, spec_of(LossKind::kLwssim), opts);
  CHECK(a.loss == b.loss);
  CHECK(a.final_image.data == b.final_image.data);

  opts.seed = 8;
  const auto c = optimize_bottleneck(target, 2, spec_of(LossKind::kLwssim), opts);
  CHECK(a.loss != c.loss);
}

TEST_CASE("compare_losses aggregates one row per spec") {
  const Image target = gradient_target(12, 12);
  const std::vector<LossSpec> specs = {spec_of(LossKind::kMse), spec_of(LossKind::kSsim),
                                       spec_of(LossKind::kLwssim)};
  OptimizeOptions opts;
  opts.steps = 30;
  opts.step_size = 0.2;
  const std::vector<std::uint64_t> seeds = {1, 2};

  const ComparisonReport rep = compare_losses(target, specs, 2, opts, seeds);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].loss == "mse");
  CHECK(rep.rows[1].loss == "ssim");
  CHECK(rep.rows[2].loss == "lwssim");
  for (const ComparisonRow& row : rep.rows) {
    CHECK(std::isfinite(row.ssim_mean));
    CHECK(std::isfinite(row.mse_mean));
    CHECK(row.ssim_sd >= 0.0);
    CHECK(row.mse_sd >= 0.0);
  }

  const ComparisonReport again = compare_losses(target, specs, 2, opts, seeds);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].ssim_mean == again.rows[i].ssim_mean);
    CHECK(rep.rows[i].mse_sd == again.rows[i].mse_sd);
  }
}

TEST_CASE("compare_losses with a single seed reports zero spread") {
  const Image target = gradient_target(12, 12);
  OptimizeOptions opts;
  opts.steps = 20;
  const ComparisonReport rep =
      compare_losses(target, {spec_of(LossKind::kMse)}, 2, opts, {5});
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].ssim_sd == 0.0);
  CHECK(rep.rows[0].mse_sd == 0.0);
}

TEST_CASE("compare_losses validates its inputs") {
  const Image target = gradient_target(12, 12);
  OptimizeOptions opts;
  opts.steps = 5;
  CHECK_THROWS_AS(compare_losses(target, {}, 2, opts, {1}), std::invalid_argument);
  CHECK_THROWS_AS(compare_losses(target, {spec_of(LossKind::kMse)}, 2, opts, {}),
                  std::invalid_argument);
}
