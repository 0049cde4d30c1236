#pragma once

#include <cstddef>
#include <vector>

namespace lwssim {

// Dense row-major 2-D array of doubles. Used for image planes, per-window
// statistic maps, and metric maps.
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Grid() = default;
  Grid(int rows_, int cols_, double fill = 0.0)
      : rows(rows_), cols(cols_),
        v(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_), fill) {}

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return v.size(); }
};

// Non-owning view of a row-major 2-D double array.
struct GridView {
  const double* data = nullptr;
  int rows = 0;
  int cols = 0;

  GridView() = default;
  GridView(const Grid& g) : data(g.v.data()), rows(g.rows), cols(g.cols) {}
  GridView(const double* data_, int rows_, int cols_) : data(data_), rows(rows_), cols(cols_) {}

  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
  bool same_shape(const GridView& o) const { return rows == o.rows && cols == o.cols; }
};

}  // namespace lwssim
