#pragma once

#include <filesystem>
#include <vector>

namespace ugs {

/// Row-major RGB image with channels in [0, 1].
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // 3 * width * height, interleaved RGB

  ImageBuffer() = default;
  ImageBuffer(int w, int h, double r = 0.0, double g = 0.0, double b = 0.0);

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  double& at(int x, int y, int c) {
    return pixels[3 * (static_cast<std::size_t>(y) * width + x) + c];
  }
  double at(int x, int y, int c) const {
    return pixels[3 * (static_cast<std::size_t>(y) * width + x) + c];
  }

  /// Throws when the pixel array size or channel ranges are inconsistent.
  void validate() const;
};

/// Decodes a PNG (any bit depth / colour type) to RGB in [0,1].
ImageBuffer load_png(const std::filesystem::path& path);

/// Encodes as 8-bit RGB; channels are clamped to [0,1] and rounded.
void save_png(const ImageBuffer& image, const std::filesystem::path& path);

/// Lossless float dump for oracle-grade comparisons:
/// int32 width, int32 height, then 3*w*h little-endian float32.
void save_raw_f32(const ImageBuffer& image, const std::filesystem::path& path);
ImageBuffer load_raw_f32(const std::filesystem::path& path);

}  // namespace ugs
