#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "shellseg/labelspace.hpp"
#include "shellseg/pointcloud.hpp"
#include "shellseg/stats.hpp"

namespace shellseg::cli {

struct Image {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image() = default;
  Image(std::size_t w, std::size_t h, Rgb fill);
  Rgb at(std::size_t x, std::size_t y) const;
  void set(std::size_t x, std::size_t y, Rgb c);
  void fill_rect(long x0, long y0, long x1, long y1, Rgb c);  // inclusive, clipped

  bool operator==(const Image&) const = default;
};

inline constexpr Rgb kEmptyPixel{255, 255, 0};

// Color for class index `label` in class-colored renderings.
Rgb class_color(Label label);

// `text` becomes tEXt chunks (keyword, value).
void write_png(const Image& image, const std::filesystem::path& path,
               const std::vector<std::pair<std::string, std::string>>& text = {});
Image read_png(const std::filesystem::path& path);

enum class PanoramaColor { kRgb, kClass };

// Equirectangular view from the origin: azimuth atan2(y, x) in [-pi, pi)
// runs left to right, elevation pi/2 .. -pi/2 top to bottom. The nearest
// point wins each pixel; pixels nothing projects to stay yellow.
Image render_panorama(const PointCloud& pc, std::size_t width, std::size_t height, PanoramaColor color);

struct ClassChart {
  Image image;
  std::vector<std::size_t> bars;  // class index of each bar, left to right
};

// Bars of per-scene means with +-1 std whiskers on a log10 axis: points per
// class on the left, instances per class on the right when available.
// Only classes with a non-zero mean get a bar.
ClassChart render_class_chart(const ClassStats& stats, std::size_t width, std::size_t height);

}  // namespace shellseg::cli
