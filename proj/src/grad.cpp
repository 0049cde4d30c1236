#include "lwssim/grad.hpp"

#include <cmath>
#include <stdexcept>

#include "lwssim/errors.hpp"
#include "lwssim/window_stats.hpp"

namespace lwssim {

namespace {

// Partial derivatives of one window's score with respect to the y-side
// moments. `additive` selects l + c*s; otherwise l*c*s.
struct PerWindow {
  double d_mu;   // d score / d mu_y
  double d_var;  // d score / d var_y
  double d_cov;  // d score / d cov_xy
};

PerWindow score_partials(double mux, double muy, double vx, double vy, double cov,
                         const SsimConfig& cfg, bool additive) {
  const double nl = 2.0 * mux * muy + cfg.c1;
  const double dl = mux * mux + muy * muy + cfg.c1;
  const double l = nl / dl;
  const double sx = std::sqrt(vx);
  const double sy = std::sqrt(vy);
  const double nc = 2.0 * sx * sy + cfg.c2;
  const double dc = vx + vy + cfg.c2;
  const double c = nc / dc;
  const double ns = cov + cfg.c3;
  const double ds = sx * sy + cfg.c3;
  const double s = ns / ds;

  const double dl_dmuy = 2.0 * (mux * dl - nl * muy) / (dl * dl);
  // d sigma_y / d var_y; the subgradient at var_y = 0 is taken as 0 so flat
  // windows stay finite.
  const double dsy_dvy = vy > 0.0 ? 0.5 / sy : 0.0;
  const double dc_dvy = (2.0 * sx * dsy_dvy * dc - nc) / (dc * dc);
  const double ds_dvy = -ns * sx * dsy_dvy / (ds * ds);
  const double ds_dcov = 1.0 / ds;

  PerWindow p;
  if (additive) {
    p.d_mu = dl_dmuy;
    p.d_var = dc_dvy * s + c * ds_dvy;
    p.d_cov = c * ds_dcov;
  } else {
    p.d_mu = dl_dmuy * c * s;
    p.d_var = l * (dc_dvy * s + c * ds_dvy);
    p.d_cov = l * c * ds_dcov;
  }
  return p;
}

// Adds scale * d(mean window score)/dy into the plane gradient. Windows are
// scattered directly so pixels outside every window provably stay untouched.
void accumulate_plane(GridView xp, GridView yp, const SsimConfig& cfg, bool additive,
                      double scale, double* out) {
  const WindowStatsMaps st = window_stats(xp, yp, cfg.xi);
  const int xi = cfg.xi;
  const double wcount = static_cast<double>(xi) * xi;
  const double base = scale / wcount;
  for (int wr = 0; wr < st.mu_x.rows; ++wr)
    for (int wc = 0; wc < st.mu_x.cols; ++wc) {
      const double mux = st.mu_x.at(wr, wc);
      const double muy = st.mu_y.at(wr, wc);
      const PerWindow p = score_partials(mux, muy, st.var_x.at(wr, wc), st.var_y.at(wr, wc),
                                         st.cov_xy.at(wr, wc), cfg, additive);
      for (int i = 0; i < xi; ++i)
        for (int j = 0; j < xi; ++j) {
          const double dyv = yp.at(wr + i, wc + j) - muy;
          const double dxv = xp.at(wr + i, wc + j) - mux;
          out[static_cast<std::size_t>(wr + i) * yp.cols + (wc + j)] +=
              base * (p.d_mu + 2.0 * p.d_var * dyv + p.d_cov * dxv);
        }
    }
}

void require_same_shape(const Image& x, const Image& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("images must share a shape");
}

}  // namespace

GradientField grad_mse(const Image& x, const Image& y) {
  require_same_shape(x, y);
  GradientField g(y.channels, y.height, y.width);
  const double total = static_cast<double>(y.data.size());
  for (std::size_t i = 0; i < y.data.size(); ++i)
    g.data[i] = 2.0 * (y.data[i] - x.data[i]) / total;
  return g;
}

GradientField grad_ssim(const Image& x, const Image& y, const SsimConfig& cfg) {
  require_same_shape(x, y);
  validate(cfg);
  if (!cfg.unit_exponents())
    throw UnsupportedConfigError("analytic ssim gradient requires alpha = beta = gamma = 1");

  GradientField g(y.channels, y.height, y.width);
  const int windows = (y.height - cfg.xi + 1) * (y.width - cfg.xi + 1);
  const double scale = 1.0 / (static_cast<double>(y.channels) * windows);
  for (int c = 0; c < y.channels; ++c)
    accumulate_plane(x.plane_view(c), y.plane_view(c), cfg, /*additive=*/false, scale,
                     g.plane(c).data());
  return g;
}

GradientField grad_lwssim(const Image& x, const Image& y, const LevelBank& bank) {
  require_same_shape(x, y);
  validate(bank);
  if (!bank.shared.unit_exponents())
    throw UnsupportedConfigError("analytic lwssim gradient requires alpha = beta = gamma = 1");

  GradientField g(y.channels, y.height, y.width);
  const double denom = static_cast<double>(y.channels) * bank.levels.size();
  for (const Level& lv : bank.levels) {
    SsimConfig cfg = bank.shared;
    cfg.xi = lv.xi;
    validate(cfg);
    const int windows = (y.height - cfg.xi + 1) * (y.width - cfg.xi + 1);
    const double scale = lv.lambda / (denom * windows);
    for (int c = 0; c < y.channels; ++c)
      accumulate_plane(x.plane_view(c), y.plane_view(c), cfg, /*additive=*/true, scale,
                       g.plane(c).data());
  }
  return g;
}

GradientField grad_lwssim_loss(const Image& x, const Image& y, const LevelBank& bank) {
  GradientField g = grad_lwssim(x, y, bank);
  for (double& v : g.data) v *= -0.5;
  return g;
}

GradientField grad_fd(const MetricFn& metric, const Image& x, const Image& y, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  GradientField g(y.channels, y.height, y.width);
  Image probe = y;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const double original = probe.data[i];
    probe.data[i] = original + h;
    const double up = metric(x, probe);
    probe.data[i] = original - h;
    const double down = metric(x, probe);
    probe.data[i] = original;
    g.data[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace lwssim
