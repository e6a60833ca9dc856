#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nerfdyn/vec3.hpp"

namespace nerfdyn {

// Float RGB image, values nominally in [0,1], row-major, channel-last.
struct Image {
  int width = 0, height = 0;
  std::vector<float> rgb;  // height*width*3

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 0.0f) {}

  static Image constant(int w, int h, Vec3 color) {
    Image im(w, h);
    for (std::size_t i = 0; i < im.rgb.size(); i += 3) {
      im.rgb[i] = color.x;
      im.rgb[i + 1] = color.y;
      im.rgb[i + 2] = color.z;
    }
    return im;
  }

  float* px(int x, int y) { return rgb.data() + (std::size_t(y) * width + x) * 3; }
  const float* px(int x, int y) const { return rgb.data() + (std::size_t(y) * width + x) * 3; }
  void set(int x, int y, Vec3 c) {
    float* p = px(x, y);
    p[0] = c.x;
    p[1] = c.y;
    p[2] = c.z;
  }
  Vec3 get(int x, int y) const {
    const float* p = px(x, y);
    return {p[0], p[1], p[2]};
  }
  std::size_t pixel_count() const { return std::size_t(width) * height; }
};

// Binary P6 portable pixmap, 8 bits per channel.
void write_ppm(const std::filesystem::path& path, const Image& im);
Image read_ppm(const std::filesystem::path& path);

// 8-bit quantized form matching what write_ppm emits (training targets are
// read back from disk, so this is the reference quantization).
std::vector<std::uint8_t> quantize(const Image& im);
Image dequantize(const std::vector<std::uint8_t>& bytes, int width, int height);

double image_mse(const Image& a, const Image& b);
double image_psnr(const Image& a, const Image& b);  // dB, peak 1.0

// Tiles images (all equal size) into a rows x cols grid with a 1px separator.
Image tile_grid(const std::vector<Image>& tiles, int rows, int cols);

}  // namespace nerfdyn
