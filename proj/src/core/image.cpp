#include "ugs/core/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "ugs/core/error.hpp"
#include "ugs/core/mathutil.hpp"

namespace ugs {

ImageBuffer::ImageBuffer(int w, int h, double r, double g, double b)
    : width(w), height(h), pixels(3 * static_cast<std::size_t>(w) * h) {
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    pixels[3 * i + 0] = r;
    pixels[3 * i + 1] = g;
    pixels[3 * i + 2] = b;
  }
}

void ImageBuffer::validate() const {
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::kDimension, "image dimensions must be positive");
  if (pixels.size() != 3 * pixel_count())
    throw Error(ErrorCode::kDimension,
                "pixel array size does not match 3*width*height");
  for (double v : pixels) {
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(ErrorCode::kDomain, "image channel outside [0,1]");
  }
}

ImageBuffer load_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str()))
    throw Error(ErrorCode::kIo,
                "cannot read PNG '" + path.string() + "': " + png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> raw(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, raw.data(), 0, nullptr)) {
    throw Error(ErrorCode::kParse,
                "cannot decode PNG '" + path.string() + "': " + png.message);
  }
  ImageBuffer img(static_cast<int>(png.width), static_cast<int>(png.height));
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = raw[i] / 255.0;
  return img;
}

void save_png(const ImageBuffer& image, const std::filesystem::path& path) {
  image.validate();
  std::vector<unsigned char> raw(image.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<unsigned char>(
        std::lround(clamp01(image.pixels[i]) * 255.0));
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, raw.data(), 0,
                               nullptr))
    throw Error(ErrorCode::kIo,
                "cannot write PNG '" + path.string() + "': " + png.message);
}

void save_raw_f32(const ImageBuffer& image,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for write");
  const std::int32_t dims[2] = {image.width, image.height};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  std::vector<float> data(image.pixels.begin(), image.pixels.end());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

ImageBuffer load_raw_f32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::int32_t dims[2] = {0, 0};
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || dims[0] <= 0 || dims[1] <= 0)
    throw Error(ErrorCode::kFormat, "bad raw image header: " + path.string());
  ImageBuffer img(dims[0], dims[1]);
  std::vector<float> data(img.pixels.size());
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) throw Error(ErrorCode::kFormat, "truncated raw image: " + path.string());
  for (std::size_t i = 0; i < data.size(); ++i) img.pixels[i] = data[i];
  return img;
}

}  // namespace ugs
