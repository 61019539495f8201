#include "shellseg_cli/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>

#include "shellseg/error.hpp"

namespace shellseg::cli {

Image::Image(std::size_t w, std::size_t h, Rgb fill) : width(w), height(h), rgb(w * h * 3) {
  for (std::size_t i = 0; i < w * h; ++i) std::copy(fill.begin(), fill.end(), rgb.begin() + 3 * i);
}

Rgb Image::at(std::size_t x, std::size_t y) const {
  const auto* p = rgb.data() + 3 * (y * width + x);
  return {p[0], p[1], p[2]};
}

void Image::set(std::size_t x, std::size_t y, Rgb c) {
  std::copy(c.begin(), c.end(), rgb.begin() + 3 * (y * width + x));
}

void Image::fill_rect(long x0, long y0, long x1, long y1, Rgb c) {
  x0 = std::max(x0, 0L);
  y0 = std::max(y0, 0L);
  x1 = std::min(x1, static_cast<long>(width) - 1);
  y1 = std::min(y1, static_cast<long>(height) - 1);
  for (long y = y0; y <= y1; ++y) {
    for (long x = x0; x <= x1; ++x) set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c);
  }
}

Rgb class_color(Label label) {
  static constexpr std::array<Rgb, 16> kPalette{{{230, 230, 220}, {128, 100, 80},  {180, 180, 180}, {150, 90, 40},
                                                 {100, 100, 160}, {60, 160, 230},  {200, 60, 40},   {230, 170, 30},
                                                 {40, 140, 60},   {210, 80, 190},  {90, 60, 120},   {0, 150, 150},
                                                 {250, 120, 120}, {120, 200, 90},  {30, 60, 200},   {160, 160, 40}}};
  if (label == kIgnoreLabel) return {0, 0, 0};
  return kPalette[label % kPalette.size()];
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

// libpng reports through stderr by default; keep the message for the
// exception instead.
void on_png_error(png_structp png, png_const_charp msg) {
  if (auto* sink = static_cast<std::string*>(png_get_error_ptr(png))) *sink = msg;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

}  // namespace

void write_png(const Image& image, const std::filesystem::path& path,
               const std::vector<std::pair<std::string, std::string>>& text) {
  if (image.width == 0 || image.height == 0) throw InvalidArgument("cannot write an empty image");
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  std::string reason;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &reason, on_png_error, on_png_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing '" + path.string() + "': " + reason);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_text> chunks(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
    chunks[i].key = const_cast<png_charp>(text[i].first.c_str());
    chunks[i].text = const_cast<png_charp>(text[i].second.c_str());
  }
  if (!chunks.empty()) png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));
  png_write_info(png, info);
  for (std::size_t y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.rgb.data() + 3 * y * image.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) throw IoError("write failure on '" + path.string() + "'");
}

Image read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::string reason;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &reason, on_png_error, on_png_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialization failed");
  }
  Image img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("'" + path.string() + "' is not a readable PNG: " + reason, 0);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.rgb.resize(img.width * img.height * 3);
  for (std::size_t y = 0; y < img.height; ++y) png_read_row(png, img.rgb.data() + 3 * y * img.width, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

Image render_panorama(const PointCloud& pc, std::size_t width, std::size_t height, PanoramaColor color) {
  if (width == 0 || height == 0) throw InvalidArgument("panorama canvas must be at least 1x1");
  if (color == PanoramaColor::kRgb && !pc.empty() && !pc.colors) {
    throw InvalidArgument("panorama: scene has no colors (render with class colors instead)");
  }
  if (color == PanoramaColor::kClass && !pc.empty() && !pc.labels) {
    throw InvalidArgument("panorama: scene has no labels to color by");
  }
  Image img(width, height, kEmptyPixel);
  std::vector<double> depth(width * height, std::numeric_limits<double>::infinity());
  const double w = static_cast<double>(width), h = static_cast<double>(height);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const auto& p = pc.positions[i];
    const double r = p.norm();
    if (r == 0.0) continue;
    const double azimuth = std::atan2(p.y(), p.x());
    const double elevation = std::atan2(p.z(), std::hypot(p.x(), p.y()));
    auto px = static_cast<std::size_t>(std::floor((azimuth + std::numbers::pi) / (2 * std::numbers::pi) * w));
    auto py = static_cast<std::size_t>(std::floor((std::numbers::pi / 2 - elevation) / std::numbers::pi * h));
    px = std::min(px, width - 1);  // azimuth == pi folds onto the last column
    py = std::min(py, height - 1);
    auto& d = depth[py * width + px];
    if (r >= d) continue;
    d = r;
    img.set(px, py, color == PanoramaColor::kRgb ? (*pc.colors)[i] : class_color((*pc.labels)[i]));
  }
  return img;
}

namespace {

constexpr Rgb kWhite{255, 255, 255}, kBlack{0, 0, 0}, kGrid{220, 220, 220};

void draw_panel(Image& img, long left, long top, long right, long bottom, const std::vector<double>& mean,
                const std::vector<double>& std_dev, std::vector<std::size_t>* bars) {
  std::vector<std::size_t> present;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t c = 0; c < mean.size(); ++c) {
    if (!(mean[c] > 0.0)) continue;
    present.push_back(c);
    lo = std::min(lo, mean[c]);
    hi = std::max(hi, mean[c] + std_dev[c]);
  }
  img.fill_rect(left, bottom, right, bottom, kBlack);
  img.fill_rect(left, top, left, bottom, kBlack);
  if (present.empty()) return;
  const double dec_lo = std::floor(std::log10(lo));
  double dec_hi = std::ceil(std::log10(hi));
  if (dec_hi <= dec_lo) dec_hi = dec_lo + 1;
  const double plot_h = static_cast<double>(bottom - top);
  auto y_of = [&](double v) {
    const double t = (std::log10(std::max(v, std::pow(10.0, dec_lo))) - dec_lo) / (dec_hi - dec_lo);
    return bottom - static_cast<long>(std::lround(t * plot_h));
  };
  for (double d = dec_lo; d <= dec_hi; d += 1.0) {
    const long y = y_of(std::pow(10.0, d));
    img.fill_rect(left + 1, y, right, y, kGrid);
    img.fill_rect(left - 4, y, left, y, kBlack);  // decade tick
  }
  const double slot = static_cast<double>(right - left) / static_cast<double>(present.size());
  for (std::size_t b = 0; b < present.size(); ++b) {
    const auto c = present[b];
    const long x0 = left + static_cast<long>(slot * (static_cast<double>(b) + 0.15));
    const long x1 = left + static_cast<long>(slot * (static_cast<double>(b) + 0.85));
    img.fill_rect(x0, y_of(mean[c]), x1, bottom - 1, class_color(static_cast<Label>(c)));
    const long xm = (x0 + x1) / 2;
    const long y_top = y_of(mean[c] + std_dev[c]), y_bottom = y_of(mean[c] - std_dev[c]);
    img.fill_rect(xm, y_top, xm, y_bottom, kBlack);
    img.fill_rect(xm - 3, y_top, xm + 3, y_top, kBlack);
    img.fill_rect(xm - 3, y_bottom, xm + 3, y_bottom, kBlack);
    if (bars) bars->push_back(c);
  }
}

}  // namespace

ClassChart render_class_chart(const ClassStats& stats, std::size_t width, std::size_t height) {
  if (width < 80 || height < 60) throw InvalidArgument("chart canvas must be at least 80x60");
  ClassChart out{Image(width, height, kWhite), {}};
  const long w = static_cast<long>(width), h = static_cast<long>(height);
  const long margin = 20;
  if (stats.has_instances()) {
    const long mid = w / 2;
    draw_panel(out.image, margin, margin, mid - margin, h - margin, stats.points_mean, stats.points_std, &out.bars);
    draw_panel(out.image, mid + margin, margin, w - margin, h - margin, stats.instances_mean, stats.instances_std,
               nullptr);
  } else {
    draw_panel(out.image, margin, margin, w - margin, h - margin, stats.points_mean, stats.points_std, &out.bars);
  }
  return out;
}

}  // namespace shellseg::cli
