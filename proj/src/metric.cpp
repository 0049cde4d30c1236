#include "lwssim/metric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lwssim {

namespace {

void validate_constants(const SsimConfig& cfg) {
  const auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(cfg.c1) || !in_unit(cfg.c2) || !in_unit(cfg.c3))
    throw std::invalid_argument("stabilizers C1, C2, C3 must lie in (0, 1)");
  if (!std::isfinite(cfg.alpha) || !std::isfinite(cfg.beta) || !std::isfinite(cfg.gamma))
    throw std::invalid_argument("exponents must be finite");
}

void validate_shapes(const Image& x, const Image& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("images must share a shape");
}

// pow with an exact fast path for the default exponent. Negative bases with
// non-integer exponents have no real value.
double pow_checked(double base, double e) {
  if (e == 1.0) return base;
  if (base < 0.0 && e != std::floor(e))
    throw std::domain_error("negative comparison value raised to non-integer exponent");
  return std::pow(base, e);
}

double mean_of(const Grid& g) {
  long double sum = 0.0L;
  for (double v : g.v) sum += v;
  return static_cast<double>(sum / static_cast<long double>(g.size()));
}

double channel_mean(const std::vector<double>& per_channel) {
  long double sum = 0.0L;
  for (double v : per_channel) sum += v;
  return static_cast<double>(sum / static_cast<long double>(per_channel.size()));
}

double plane_pooled_ssim(GridView xp, GridView yp, const SsimConfig& cfg) {
  const WindowStatsMaps stats = window_stats(xp, yp, cfg.xi);
  return mean_of(ssim_map(stats, cfg));
}

double plane_pooled_lwssim(GridView xp, GridView yp, const SsimConfig& cfg) {
  const WindowStatsMaps stats = window_stats(xp, yp, cfg.xi);
  return mean_of(lwssim_map(stats, cfg));
}

double plane_mse(GridView xp, GridView yp) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < xp.size(); ++i) {
    const double d = yp.data[i] - xp.data[i];
    sum += d * d;
  }
  return static_cast<double>(sum / static_cast<long double>(xp.size()));
}

double plane_mae(GridView xp, GridView yp) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < xp.size(); ++i) sum += std::abs(yp.data[i] - xp.data[i]);
  return static_cast<double>(sum / static_cast<long double>(xp.size()));
}

// (1/I) * sum(lambda_i * score_i), accumulated so a single unit-weight level
// passes through unchanged.
double weighted_level_sum(const std::vector<Level>& levels, const std::vector<double>& scores) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < levels.size(); ++i)
    sum += static_cast<long double>(levels[i].lambda) * static_cast<long double>(scores[i]);
  return static_cast<double>(sum / static_cast<long double>(levels.size()));
}

}  // namespace

void validate(const SsimConfig& cfg) {
  if (cfg.xi < 2)
    throw std::invalid_argument("window size must be >= 2 (1x1 windows have no contrast)");
  validate_constants(cfg);
}

LevelBank default_level_bank() {
  LevelBank bank;
  bank.levels = {{3, 1.0}, {7, 1.0}, {11, 1.0}};
  return bank;
}

void validate(const LevelBank& bank) {
  if (bank.levels.empty()) throw std::invalid_argument("level bank needs at least one level");
  validate_constants(bank.shared);
  int prev_xi = 0;
  long double sum = 0.0L;
  for (const Level& lv : bank.levels) {
    if (lv.xi < 2) throw std::invalid_argument("level window size must be >= 2");
    if (lv.xi <= prev_xi)
      throw std::invalid_argument("level window sizes must be strictly increasing");
    if (!(lv.lambda >= 0.0)) throw std::invalid_argument("level weights must be >= 0");
    prev_xi = lv.xi;
    sum += lv.lambda;
  }
  const double mean_lambda = static_cast<double>(sum / bank.levels.size());
  if (std::abs(mean_lambda - 1.0) > 1e-9)
    throw std::invalid_argument("level weights must average to 1; call normalize_weights");
}

bool normalize_weights(LevelBank& bank) {
  if (bank.levels.empty()) throw std::invalid_argument("level bank needs at least one level");
  long double sum = 0.0L;
  for (const Level& lv : bank.levels) {
    if (!(lv.lambda >= 0.0)) throw std::invalid_argument("level weights must be >= 0");
    sum += lv.lambda;
  }
  if (sum == 0.0L) throw std::invalid_argument("level weights must not all be zero");
  const long double scale = static_cast<long double>(bank.levels.size()) / sum;
  if (scale == 1.0L) return false;
  for (Level& lv : bank.levels)
    lv.lambda = static_cast<double>(static_cast<long double>(lv.lambda) * scale);
  return true;
}

LevelBank fit_bank(const LevelBank& bank, int min_dim) {
  LevelBank fitted;
  fitted.shared = bank.shared;
  for (const Level& lv : bank.levels)
    if (lv.xi <= min_dim) fitted.levels.push_back(lv);
  if (fitted.levels.empty())
    throw std::invalid_argument("no level window fits an image of min dimension " +
                                std::to_string(min_dim));
  normalize_weights(fitted);
  return fitted;
}

Grid luminance_map(const WindowStatsMaps& stats, double c1) {
  Grid out(stats.mu_x.rows, stats.mu_x.cols);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double mux = stats.mu_x.v[i];
    const double muy = stats.mu_y.v[i];
    const double l = (2.0 * mux * muy + c1) / (mux * mux + muy * muy + c1);
    out.v[i] = std::min(l, 1.0);
  }
  return out;
}

Grid contrast_map(const WindowStatsMaps& stats, double c2) {
  Grid out(stats.mu_x.rows, stats.mu_x.cols);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double sx = std::sqrt(stats.var_x.v[i]);
    const double sy = std::sqrt(stats.var_y.v[i]);
    const double c = (2.0 * sx * sy + c2) / (stats.var_x.v[i] + stats.var_y.v[i] + c2);
    out.v[i] = std::min(c, 1.0);
  }
  return out;
}

Grid structure_map(const WindowStatsMaps& stats, double c3) {
  Grid out(stats.mu_x.rows, stats.mu_x.cols);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double sx = std::sqrt(stats.var_x.v[i]);
    const double sy = std::sqrt(stats.var_y.v[i]);
    const double s = (stats.cov_xy.v[i] + c3) / (sx * sy + c3);
    out.v[i] = std::min(s, 1.0);
  }
  return out;
}

Grid ssim_map(const WindowStatsMaps& stats, const SsimConfig& cfg) {
  const Grid l = luminance_map(stats, cfg.c1);
  const Grid c = contrast_map(stats, cfg.c2);
  const Grid s = structure_map(stats, cfg.c3);
  Grid out(l.rows, l.cols);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.v[i] = pow_checked(l.v[i], cfg.alpha) * pow_checked(c.v[i], cfg.beta) *
               pow_checked(s.v[i], cfg.gamma);
  return out;
}

Grid lwssim_map(const WindowStatsMaps& stats, const SsimConfig& cfg) {
  const Grid l = luminance_map(stats, cfg.c1);
  const Grid c = contrast_map(stats, cfg.c2);
  const Grid s = structure_map(stats, cfg.c3);
  Grid out(l.rows, l.cols);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.v[i] = pow_checked(l.v[i], cfg.alpha) +
               pow_checked(c.v[i], cfg.beta) * pow_checked(s.v[i], cfg.gamma);
  return out;
}

double ssim(const Image& x, const Image& y, const SsimConfig& cfg) {
  validate_shapes(x, y);
  validate(cfg);
  std::vector<double> per_channel(x.channels);
  for (int c = 0; c < x.channels; ++c)
    per_channel[c] = plane_pooled_ssim(x.plane_view(c), y.plane_view(c), cfg);
  return channel_mean(per_channel);
}

double lwssim_level(const Image& x, const Image& y, const SsimConfig& cfg) {
  validate_shapes(x, y);
  validate(cfg);
  std::vector<double> per_channel(x.channels);
  for (int c = 0; c < x.channels; ++c)
    per_channel[c] = plane_pooled_lwssim(x.plane_view(c), y.plane_view(c), cfg);
  return channel_mean(per_channel);
}

double lwssim(const Image& x, const Image& y, const LevelBank& bank) {
  validate_shapes(x, y);
  validate(bank);
  std::vector<double> per_channel(x.channels);
  for (int c = 0; c < x.channels; ++c) {
    std::vector<double> level_scores(bank.levels.size());
    for (std::size_t i = 0; i < bank.levels.size(); ++i) {
      SsimConfig cfg = bank.shared;
      cfg.xi = bank.levels[i].xi;
      validate(cfg);
      level_scores[i] = plane_pooled_lwssim(x.plane_view(c), y.plane_view(c), cfg);
    }
    per_channel[c] = weighted_level_sum(bank.levels, level_scores);
  }
  return channel_mean(per_channel);
}

double lwssim_loss(const Image& x, const Image& y, const LevelBank& bank) {
  return 1.0 - lwssim(x, y, bank) / 2.0;
}

double mse(const Image& x, const Image& y) {
  validate_shapes(x, y);
  std::vector<double> per_channel(x.channels);
  for (int c = 0; c < x.channels; ++c)
    per_channel[c] = plane_mse(x.plane_view(c), y.plane_view(c));
  return channel_mean(per_channel);
}

double mae(const Image& x, const Image& y) {
  validate_shapes(x, y);
  std::vector<double> per_channel(x.channels);
  for (int c = 0; c < x.channels; ++c)
    per_channel[c] = plane_mae(x.plane_view(c), y.plane_view(c));
  return channel_mean(per_channel);
}

MetricReport compute_report(const Image& x, const Image& y, const SsimConfig& cfg,
                            const LevelBank& bank) {
  validate_shapes(x, y);
  validate(cfg);
  validate(bank);

  const std::size_t ch = static_cast<std::size_t>(x.channels);
  const std::size_t nl = bank.levels.size();

  MetricReport report;
  report.channels.resize(ch);
  report.levels.resize(nl);

  // level_scores[i][c] = per-channel pooled score for level i.
  std::vector<std::vector<double>> level_scores(nl, std::vector<double>(ch));
  for (std::size_t c = 0; c < ch; ++c) {
    const GridView xp = x.plane_view(static_cast<int>(c));
    const GridView yp = y.plane_view(static_cast<int>(c));
    ChannelScores& cs = report.channels[c];
    cs.ssim = plane_pooled_ssim(xp, yp, cfg);
    cs.mse = plane_mse(xp, yp);
    cs.mae = plane_mae(xp, yp);
    std::vector<double> scores(nl);
    for (std::size_t i = 0; i < nl; ++i) {
      SsimConfig level_cfg = bank.shared;
      level_cfg.xi = bank.levels[i].xi;
      validate(level_cfg);
      scores[i] = plane_pooled_lwssim(xp, yp, level_cfg);
      level_scores[i][c] = scores[i];
    }
    cs.lwssim = weighted_level_sum(bank.levels, scores);
    cs.lwssim_loss = 1.0 - cs.lwssim / 2.0;
  }

  for (std::size_t i = 0; i < nl; ++i) {
    report.levels[i].xi = bank.levels[i].xi;
    report.levels[i].lambda = bank.levels[i].lambda;
    report.levels[i].score = channel_mean(level_scores[i]);
  }

  std::vector<double> v(ch);
  const auto aggregate = [&](auto field) {
    for (std::size_t c = 0; c < ch; ++c) v[c] = report.channels[c].*field;
    return channel_mean(v);
  };
  report.ssim = aggregate(&ChannelScores::ssim);
  report.lwssim = aggregate(&ChannelScores::lwssim);
  // Derived from the aggregate score, not averaged over channels, so it is
  // bitwise-identical to the standalone lwssim_loss.
  report.lwssim_loss = 1.0 - report.lwssim / 2.0;
  report.mse = aggregate(&ChannelScores::mse);
  report.mae = aggregate(&ChannelScores::mae);
  return report;
}

}  // namespace lwssim
