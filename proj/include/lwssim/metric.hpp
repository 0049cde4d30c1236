#pragma once

#include <vector>

#include "lwssim/image.hpp"
#include "lwssim/window_stats.hpp"

namespace lwssim {

// Window size, stabilizers, and exponents for one SSIM/LWSSIM evaluation.
// Stabilizers default to (0.01)^2 and (0.03)^2 on the [0,1] intensity range,
// with c3 = c2/2.
struct SsimConfig {
  int xi = 7;
  double c1 = 1e-4;
  double c2 = 9e-4;
  double c3 = 4.5e-4;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;

  bool unit_exponents() const { return alpha == 1.0 && beta == 1.0 && gamma == 1.0; }
};

void validate(const SsimConfig& cfg);

struct Level {
  int xi = 0;
  double lambda = 1.0;
};

// Window sizes and weights for the multi-level score. Weights must satisfy
// sum(lambda) / count == 1, so the aggregate of equal per-level scores is that
// score. Window sizes are strictly increasing.
struct LevelBank {
  std::vector<Level> levels;
  SsimConfig shared;  // stabilizers and exponents; per-level xi overrides shared.xi
};

LevelBank default_level_bank();  // xi {3, 7, 11}, lambda 1 each
void validate(const LevelBank& bank);

// Rescales lambdas so sum(lambda) / count == 1. Returns true if they changed.
bool normalize_weights(LevelBank& bank);

// Copy of the bank keeping only levels whose window fits an image whose
// smaller dimension is min_dim, with weights renormalized. Throws if no level
// fits.
LevelBank fit_bank(const LevelBank& bank, int min_dim);

// Per-window comparison maps, one entry per valid window.
Grid luminance_map(const WindowStatsMaps& stats, double c1);
Grid contrast_map(const WindowStatsMaps& stats, double c2);
Grid structure_map(const WindowStatsMaps& stats, double c3);
Grid ssim_map(const WindowStatsMaps& stats, const SsimConfig& cfg);    // l^a * c^b * s^g
Grid lwssim_map(const WindowStatsMaps& stats, const SsimConfig& cfg);  // l^a + c^b * s^g

// Pooled scalars: mean over valid windows, then mean over channels.
double ssim(const Image& x, const Image& y, const SsimConfig& cfg = {});
double lwssim_level(const Image& x, const Image& y, const SsimConfig& cfg);
double lwssim(const Image& x, const Image& y, const LevelBank& bank = default_level_bank());
double lwssim_loss(const Image& x, const Image& y, const LevelBank& bank = default_level_bank());
double mse(const Image& x, const Image& y);
double mae(const Image& x, const Image& y);

struct LevelScore {
  int xi = 0;
  double lambda = 0.0;
  double score = 0.0;  // channel-averaged level score
};

struct ChannelScores {
  double ssim = 0.0;
  double lwssim = 0.0;
  double lwssim_loss = 0.0;
  double mse = 0.0;
  double mae = 0.0;
};

struct MetricReport {
  double ssim = 0.0;
  double lwssim = 0.0;
  double lwssim_loss = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  std::vector<LevelScore> levels;
  std::vector<ChannelScores> channels;
};

MetricReport compute_report(const Image& x, const Image& y, const SsimConfig& cfg = {},
                            const LevelBank& bank = default_level_bank());

}  // namespace lwssim
