#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lwssim/grid.hpp"

namespace lwssim {

// Planar multi-channel image. Loaders and generators produce intensities
// normalized to [0,1]; the container itself does not constrain values, so the
// same layout carries gradient fields.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;  // channel-major: data[(c*height + r)*width + col]

  Image() = default;
  Image(int channels_, int height_, int width_, double fill = 0.0);

  double& at(int c, int r, int col) {
    return data[(static_cast<std::size_t>(c) * height + r) * width + col];
  }
  double at(int c, int r, int col) const {
    return data[(static_cast<std::size_t>(c) * height + r) * width + col];
  }
  std::span<double> plane(int c) {
    return {data.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }
  std::span<const double> plane(int c) const {
    return {data.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }
  GridView plane_view(int c) const {
    return {data.data() + static_cast<std::size_t>(c) * plane_size(), height, width};
  }
  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

// Checks the canonical-image invariants: channels >= 1, height and width >= 2,
// every intensity in [0,1]. Throws std::invalid_argument on violation.
void validate_image(const Image& img);

enum class SyntheticKind { kConstant, kHorizontalGradient, kCheckerboard, kUniformNoise };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kConstant;
  double value = 0.5;       // constant level
  int period = 1;           // checkerboard tile size in pixels
  std::uint64_t seed = 0;   // noise stream seed
  double amplitude = 1.0;   // noise peak-to-peak width, centered at 0.5
};

// Deterministic pattern generator. Same spec and shape always produce the
// same image, bit for bit.
Image synthesize(const SyntheticSpec& spec, int channels, int height, int width);

// Reads PGM (P5), PPM (P6), or PNG. Integer samples are divided by the file's
// maximum value so intensities land in [0,1]. 8- and 16-bit inputs accepted.
Image load_image(const std::filesystem::path& path);

// Writes 8-bit PGM, PPM, or PNG depending on the extension. The write is
// atomic: a temporary file is renamed into place.
void save_image(const Image& img, const std::filesystem::path& path);

}  // namespace lwssim
