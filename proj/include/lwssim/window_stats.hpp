#pragma once

#include <vector>

#include "lwssim/grid.hpp"

namespace lwssim {

// Cumulative sums with a zero top row and left column, so any axis-aligned
// rectangle sum comes out of four corner lookups. Entries are kept in extended
// precision because downstream variance formulas subtract quantities that
// agree to many digits.
struct SummedAreaTable {
  int rows = 0;  // source rows + 1
  int cols = 0;  // source cols + 1
  std::vector<long double> cum;

  double at(int r, int c) const {
    return static_cast<double>(cum[static_cast<std::size_t>(r) * cols + c]);
  }
  // Sum of the source plane over rows [r0, r0+h) and columns [c0, c0+w).
  double rect_sum(int r0, int c0, int h, int w) const;
};

SummedAreaTable build_sat(GridView plane);

// Per-window first and second moments of an image-plane pair at one window
// size. Each grid has one entry per valid window origin, so the grids are
// (rows - xi + 1) x (cols - xi + 1).
struct WindowStatsMaps {
  int xi = 0;
  Grid mu_x, mu_y;
  Grid var_x, var_y;  // population variances, clamped at 0 against rounding
  Grid cov_xy;
};

// Fast path: five summed-area tables, O(1) work per window.
WindowStatsMaps window_stats(GridView x_plane, GridView y_plane, int xi);

// Oracle path: direct per-window loops with compensated summation. Same
// contract as window_stats.
WindowStatsMaps window_stats_naive(GridView x_plane, GridView y_plane, int xi);

}  // namespace lwssim
