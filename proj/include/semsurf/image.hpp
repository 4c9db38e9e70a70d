#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "semsurf/common.hpp"

namespace semsurf {

using Rgb8 = std::array<std::uint8_t, 3>;
using Normal3f = std::array<float, 3>;

/// Row-major raster. (0,0) is the top-left pixel.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h), data(std::size_t(w) * h, fill) {}

  T& at(int row, int col) { return data[std::size_t(row) * width + col]; }
  const T& at(int row, int col) const { return data[std::size_t(row) * width + col]; }
  std::size_t pixels() const { return data.size(); }
  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height && col >= 0 && col < width;
  }
};

// Binary PPM (P6) / PGM (P5), maxval 255.
void write_ppm(const std::string& path, const Image<Rgb8>& img);
Image<Rgb8> read_ppm(const std::string& path);
void write_pgm(const std::string& path, const Image<std::uint8_t>& img);
Image<std::uint8_t> read_pgm(const std::string& path);

/// Normal maps: per pixel 3 little-endian float32 components + 1 validity byte.
void write_normal_map(const std::string& path, const Image<Normal3f>& normals,
                      const Image<std::uint8_t>& validity);
void read_normal_map(const std::string& path, int width, int height, Image<Normal3f>& normals,
                     Image<std::uint8_t>& validity);

/// Raw little-endian float32 raster (depth channels).
void write_float_map(const std::string& path, const Image<float>& img);
Image<float> read_float_map(const std::string& path, int width, int height);

}  // namespace semsurf
