#include "lwssim/window_stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lwssim {

namespace {

void validate_pair(GridView x, GridView y, int xi) {
  if (!x.same_shape(y)) throw std::invalid_argument("planes must share a shape");
  if (x.rows < 1 || x.cols < 1) throw std::invalid_argument("planes must be non-empty");
  const int min_dim = std::min(x.rows, x.cols);
  if (xi < 2 || xi > min_dim)
    throw std::invalid_argument("window size " + std::to_string(xi) +
                                " outside [2, " + std::to_string(min_dim) + "]");
}

WindowStatsMaps make_maps(int rows, int cols, int xi) {
  WindowStatsMaps m;
  m.xi = xi;
  const int wr = rows - xi + 1;
  const int wc = cols - xi + 1;
  m.mu_x = Grid(wr, wc);
  m.mu_y = Grid(wr, wc);
  m.var_x = Grid(wr, wc);
  m.var_y = Grid(wr, wc);
  m.cov_xy = Grid(wr, wc);
  return m;
}

// Neumaier's variant of Kahan summation: the compensation also absorbs the
// case where the addend dominates the running sum.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

double SummedAreaTable::rect_sum(int r0, int c0, int h, int w) const {
  const auto idx = [this](int r, int c) {
    return cum[static_cast<std::size_t>(r) * cols + c];
  };
  const long double s =
      idx(r0 + h, c0 + w) - idx(r0, c0 + w) - idx(r0 + h, c0) + idx(r0, c0);
  return static_cast<double>(s);
}

SummedAreaTable build_sat(GridView plane) {
  if (plane.rows < 1 || plane.cols < 1)
    throw std::invalid_argument("plane must be non-empty");
  SummedAreaTable sat;
  sat.rows = plane.rows + 1;
  sat.cols = plane.cols + 1;
  sat.cum.assign(static_cast<std::size_t>(sat.rows) * sat.cols, 0.0L);
  for (int r = 0; r < plane.rows; ++r) {
    long double row_sum = 0.0L;
    for (int c = 0; c < plane.cols; ++c) {
      row_sum += plane.at(r, c);
      sat.cum[static_cast<std::size_t>(r + 1) * sat.cols + (c + 1)] =
          sat.cum[static_cast<std::size_t>(r) * sat.cols + (c + 1)] + row_sum;
    }
  }
  return sat;
}

WindowStatsMaps window_stats(GridView x_plane, GridView y_plane, int xi) {
  validate_pair(x_plane, y_plane, xi);

  Grid xx(x_plane.rows, x_plane.cols);
  Grid yy(x_plane.rows, x_plane.cols);
  Grid xy(x_plane.rows, x_plane.cols);
  for (int r = 0; r < x_plane.rows; ++r)
    for (int c = 0; c < x_plane.cols; ++c) {
      const double xv = x_plane.at(r, c);
      const double yv = y_plane.at(r, c);
      xx.at(r, c) = xv * xv;
      yy.at(r, c) = yv * yv;
      xy.at(r, c) = xv * yv;
    }

  const SummedAreaTable sx = build_sat(x_plane);
  const SummedAreaTable sy = build_sat(y_plane);
  const SummedAreaTable sxx = build_sat(xx);
  const SummedAreaTable syy = build_sat(yy);
  const SummedAreaTable sxy = build_sat(xy);

  WindowStatsMaps m = make_maps(x_plane.rows, x_plane.cols, xi);
  const double count = static_cast<double>(xi) * xi;
  for (int r = 0; r < m.mu_x.rows; ++r)
    for (int c = 0; c < m.mu_x.cols; ++c) {
      const double mux = sx.rect_sum(r, c, xi, xi) / count;
      const double muy = sy.rect_sum(r, c, xi, xi) / count;
      m.mu_x.at(r, c) = mux;
      m.mu_y.at(r, c) = muy;
      const double vx = std::max(0.0, sxx.rect_sum(r, c, xi, xi) / count - mux * mux);
      const double vy = std::max(0.0, syy.rect_sum(r, c, xi, xi) / count - muy * muy);
      m.var_x.at(r, c) = vx;
      m.var_y.at(r, c) = vy;
      // Cauchy-Schwarz: a zero variance forces a zero covariance; without this
      // a constant window can carry covariance rounding noise.
      m.cov_xy.at(r, c) =
          vx == 0.0 || vy == 0.0 ? 0.0 : sxy.rect_sum(r, c, xi, xi) / count - mux * muy;
    }
  return m;
}

WindowStatsMaps window_stats_naive(GridView x_plane, GridView y_plane, int xi) {
  validate_pair(x_plane, y_plane, xi);

  WindowStatsMaps m = make_maps(x_plane.rows, x_plane.cols, xi);
  const double count = static_cast<double>(xi) * xi;
  for (int r = 0; r < m.mu_x.rows; ++r)
    for (int c = 0; c < m.mu_x.cols; ++c) {
      CompensatedSum sx, sy, sxx, syy, sxy;
      for (int i = 0; i < xi; ++i)
        for (int j = 0; j < xi; ++j) {
          const double xv = x_plane.at(r + i, c + j);
          const double yv = y_plane.at(r + i, c + j);
          sx.add(xv);
          sy.add(yv);
          sxx.add(xv * xv);
          syy.add(yv * yv);
          sxy.add(xv * yv);
        }
      const double mux = sx.value() / count;
      const double muy = sy.value() / count;
      m.mu_x.at(r, c) = mux;
      m.mu_y.at(r, c) = muy;
      const double vx = std::max(0.0, sxx.value() / count - mux * mux);
      const double vy = std::max(0.0, syy.value() / count - muy * muy);
      m.var_x.at(r, c) = vx;
      m.var_y.at(r, c) = vy;
      m.cov_xy.at(r, c) =
          vx == 0.0 || vy == 0.0 ? 0.0 : sxy.value() / count - mux * muy;
    }
  return m;
}

}  // namespace lwssim
