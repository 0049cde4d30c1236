#include "lwssim/image.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "canonical_rng.hpp"
#include "lwssim/errors.hpp"

namespace lwssim {

namespace fs = std::filesystem;

Image::Image(int channels_, int height_, int width_, double fill)
    : channels(channels_), height(height_), width(width_),
      data(static_cast<std::size_t>(channels_) * height_ * width_, fill) {}

void validate_image(const Image& img) {
  if (img.channels < 1) throw std::invalid_argument("image needs at least one channel");
  if (img.height < 2 || img.width < 2)
    throw std::invalid_argument("image dimensions must be at least 2x2");
  if (img.data.size() != static_cast<std::size_t>(img.channels) * img.plane_size())
    throw std::invalid_argument("image data size does not match its dimensions");
  for (double v : img.data) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("image intensities must lie in [0,1]");
  }
}

Image synthesize(const SyntheticSpec& spec, int channels, int height, int width) {
  if (channels < 1) throw std::invalid_argument("channels must be >= 1");
  if (height < 2 || width < 2) throw std::invalid_argument("dimensions must be at least 2x2");

  Image img(channels, height, width);
  switch (spec.kind) {
    case SyntheticKind::kConstant: {
      if (spec.value < 0.0 || spec.value > 1.0)
        throw std::invalid_argument("constant value must lie in [0,1]");
      for (double& v : img.data) v = spec.value;
      break;
    }
    case SyntheticKind::kHorizontalGradient: {
      for (int c = 0; c < channels; ++c)
        for (int r = 0; r < height; ++r)
          for (int col = 0; col < width; ++col)
            img.at(c, r, col) = static_cast<double>(col) / (width - 1);
      break;
    }
    case SyntheticKind::kCheckerboard: {
      if (spec.period < 1) throw std::invalid_argument("checkerboard period must be >= 1");
      const double lo = spec.value - spec.amplitude / 2.0;
      const double hi = spec.value + spec.amplitude / 2.0;
      if (lo < 0.0 || hi > 1.0)
        throw std::invalid_argument("checkerboard levels must lie in [0,1]");
      for (int c = 0; c < channels; ++c)
        for (int r = 0; r < height; ++r)
          for (int col = 0; col < width; ++col) {
            const int parity = (r / spec.period + col / spec.period) % 2;
            img.at(c, r, col) = parity ? hi : lo;
          }
      break;
    }
    case SyntheticKind::kUniformNoise: {
      const double lo = spec.value - spec.amplitude / 2.0;
      const double hi = spec.value + spec.amplitude / 2.0;
      if (spec.amplitude < 0.0 || spec.amplitude > 1.0)
        throw std::invalid_argument("noise amplitude must lie in [0,1]");
      if (lo < 0.0 || hi > 1.0)
        throw std::invalid_argument("noise range must lie in [0,1]");
      std::mt19937_64 gen(spec.seed);
      for (double& v : img.data)
        v = spec.value + spec.amplitude * (detail::canonical(gen) - 0.5);
      break;
    }
  }
  return img;
}

namespace {

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("cannot read " + path.string());
  return bytes;
}

// --- PNM (P5 grayscale, P6 color) ---

struct PnmHeader {
  int channels = 0;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

int pnm_next_int(const std::vector<unsigned char>& b, std::size_t& i) {
  for (;;) {
    while (i < b.size() && std::isspace(b[i])) ++i;
    if (i < b.size() && b[i] == '#') {
      while (i < b.size() && b[i] != '\n') ++i;
      continue;
    }
    break;
  }
  if (i >= b.size() || !std::isdigit(b[i])) throw FormatError("malformed PNM header");
  long v = 0;
  while (i < b.size() && std::isdigit(b[i])) {
    v = v * 10 + (b[i] - '0');
    if (v > 1 << 30) throw FormatError("PNM header value out of range");
    ++i;
  }
  return static_cast<int>(v);
}

PnmHeader parse_pnm_header(const std::vector<unsigned char>& b) {
  PnmHeader h;
  h.channels = b[1] == '5' ? 1 : 3;
  std::size_t i = 2;
  h.width = pnm_next_int(b, i);
  h.height = pnm_next_int(b, i);
  h.maxval = pnm_next_int(b, i);
  if (i >= b.size() || !std::isspace(b[i])) throw FormatError("malformed PNM header");
  h.data_offset = i + 1;
  if (h.width < 2 || h.height < 2) throw FormatError("PNM image smaller than 2x2");
  if (h.maxval < 1 || h.maxval > 65535) throw FormatError("PNM maxval out of range");
  return h;
}

Image load_pnm(const std::vector<unsigned char>& b) {
  const PnmHeader h = parse_pnm_header(b);
  const int bytes_per_sample = h.maxval > 255 ? 2 : 1;
  const std::size_t samples =
      static_cast<std::size_t>(h.width) * h.height * h.channels;
  if (b.size() - h.data_offset < samples * bytes_per_sample)
    throw FormatError("PNM pixel data truncated");

  Image img(h.channels, h.height, h.width);
  const unsigned char* p = b.data() + h.data_offset;
  // PNM raster is interleaved; the Image is planar.
  std::size_t s = 0;
  for (int r = 0; r < h.height; ++r)
    for (int col = 0; col < h.width; ++col)
      for (int c = 0; c < h.channels; ++c, ++s) {
        int raw;
        if (bytes_per_sample == 2)
          raw = p[2 * s] << 8 | p[2 * s + 1];
        else
          raw = p[s];
        if (raw > h.maxval) throw FormatError("PNM sample exceeds maxval");
        img.at(c, r, col) = static_cast<double>(raw) / h.maxval;
      }
  return img;
}

// --- PNG via libpng ---

struct MemReader {
  const unsigned char* data;
  std::size_t size;
  std::size_t off;
};

extern "C" void png_mem_read(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->off + n > r->size) png_error(png, "read past end of buffer");
  std::memcpy(out, r->data + r->off, n);
  r->off += n;
}

Image load_png(const std::vector<unsigned char>& b) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw FormatError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw FormatError("libpng initialization failed");
  }

  std::vector<unsigned char> raster;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("PNG decode failed");
  }

  MemReader reader{b.data(), b.size(), 0};
  png_set_read_fn(png, &reader, png_mem_read);
  png_read_info(png, info);

  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  const int channels =
      color == PNG_COLOR_TYPE_GRAY ? 1 : color == PNG_COLOR_TYPE_RGB ? 3 : 0;
  if (channels == 0 || (depth != 8 && depth != 16))
    png_error(png, "unsupported PNG layout");
  if (width < 2 || height < 2) png_error(png, "PNG image smaller than 2x2");

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  raster.resize(rowbytes * height);
  rows.resize(height);
  for (int r = 0; r < height; ++r) rows[r] = raster.data() + r * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(channels, height, width);
  const int maxval = depth == 16 ? 65535 : 255;
  for (int r = 0; r < height; ++r) {
    const unsigned char* row = raster.data() + static_cast<std::size_t>(r) * rowbytes;
    for (int col = 0; col < width; ++col)
      for (int c = 0; c < channels; ++c) {
        const std::size_t s = static_cast<std::size_t>(col) * channels + c;
        // PNG 16-bit samples are big-endian.
        const int raw = depth == 16 ? row[2 * s] << 8 | row[2 * s + 1] : row[s];
        img.at(c, r, col) = static_cast<double>(raw) / maxval;
      }
  }
  return img;
}

void write_png(const Image& img, std::FILE* f) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }

  std::vector<unsigned char> raster;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed");
  }

  png_init_io(png, f);
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);

  raster.resize(static_cast<std::size_t>(img.height) * img.width * img.channels);
  std::size_t s = 0;
  for (int r = 0; r < img.height; ++r)
    for (int col = 0; col < img.width; ++col)
      for (int c = 0; c < img.channels; ++c, ++s)
        raster[s] = static_cast<unsigned char>(std::lround(img.at(c, r, col) * 255.0));

  rows.resize(img.height);
  for (int r = 0; r < img.height; ++r)
    rows[r] = raster.data() + static_cast<std::size_t>(r) * img.width * img.channels;
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_pnm(const Image& img, std::FILE* f) {
  std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                       std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<unsigned char> raster;
  raster.reserve(img.plane_size() * img.channels);
  for (int r = 0; r < img.height; ++r)
    for (int col = 0; col < img.width; ++col)
      for (int c = 0; c < img.channels; ++c)
        raster.push_back(static_cast<unsigned char>(std::lround(img.at(c, r, col) * 255.0)));
  if (std::fwrite(header.data(), 1, header.size(), f) != header.size() ||
      std::fwrite(raster.data(), 1, raster.size(), f) != raster.size())
    throw IoError("short write");
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  for (char& ch : ext) ch = static_cast<char>(std::tolower(ch));
  return ext;
}

}  // namespace

Image load_image(const fs::path& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
    return load_pnm(bytes);
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0) return load_png(bytes);
  throw FormatError(path.string() + ": not a PGM (P5), PPM (P6), or PNG file");
}

void save_image(const Image& img, const fs::path& path) {
  validate_image(img);
  const std::string ext = lower_extension(path);
  const bool png = ext == ".png";
  if (!png && !(ext == ".pgm" && img.channels == 1) && !(ext == ".ppm" && img.channels == 3))
    throw FormatError("cannot save " + std::to_string(img.channels) + "-channel image as " +
                      (ext.empty() ? "extension-less file" : ext));

  fs::path tmp = path;
  tmp += ".tmp";
  std::FILE* f = std::fopen(tmp.string().c_str(), "wb");
  if (!f) throw IoError("cannot create " + tmp.string());
  try {
    if (png)
      write_png(img, f);
    else
      write_pnm(img, f);
    if (std::fclose(f) != 0) {
      f = nullptr;
      throw IoError("cannot finish writing " + tmp.string());
    }
    f = nullptr;
    fs::rename(tmp, path);
  } catch (...) {
    if (f) std::fclose(f);
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

}  // namespace lwssim
