#include "nerfdyn/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nerfdyn/errors.hpp"

namespace nerfdyn {

static std::uint8_t to_byte(float x) {
  float v = x * 255.0f + 0.5f;
  if (v < 0.0f) v = 0.0f;
  if (v > 255.0f) v = 255.0f;
  return static_cast<std::uint8_t>(v);
}

std::vector<std::uint8_t> quantize(const Image& im) {
  std::vector<std::uint8_t> out(im.rgb.size());
  for (std::size_t i = 0; i < im.rgb.size(); ++i) out[i] = to_byte(im.rgb[i]);
  return out;
}

Image dequantize(const std::vector<std::uint8_t>& bytes, int width, int height) {
  Image im(width, height);
  if (bytes.size() != im.rgb.size()) throw DataError("dequantize: byte count mismatch");
  for (std::size_t i = 0; i < bytes.size(); ++i) im.rgb[i] = bytes[i] * (1.0f / 255.0f);
  return im;
}

void write_ppm(const std::filesystem::path& path, const Image& im) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open image for writing: " + path.string());
  os << "P6\n" << im.width << " " << im.height << "\n255\n";
  auto bytes = quantize(im);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("image write failed: " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open image: " + path.string());
  std::string magic;
  is >> magic;
  if (magic != "P6") throw DataError("not a binary P6 pixmap: " + path.string());
  auto skip_ws_comments = [&] {
    for (;;) {
      int c = is.peek();
      if (c == '#') {
        std::string line;
        std::getline(is, line);
      } else if (std::isspace(c)) {
        is.get();
      } else {
        break;
      }
    }
  };
  int w = 0, h = 0, maxval = 0;
  skip_ws_comments();
  is >> w;
  skip_ws_comments();
  is >> h;
  skip_ws_comments();
  is >> maxval;
  is.get();  // single whitespace after header
  if (w <= 0 || h <= 0 || maxval != 255) throw DataError("unsupported PPM header in " + path.string());
  std::vector<std::uint8_t> bytes(std::size_t(w) * h * 3);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!is) throw DataError("truncated PPM data in " + path.string());
  return dequantize(bytes, w, h);
}

double image_mse(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw DataError("image_mse: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    double d = double(a.rgb[i]) - double(b.rgb[i]);
    acc += d * d;
  }
  return acc / double(a.rgb.size());
}

double image_psnr(const Image& a, const Image& b) {
  double mse = image_mse(a, b);
  if (mse <= 0.0) return 99.0;
  return 10.0 * std::log10(1.0 / mse);
}

Image tile_grid(const std::vector<Image>& tiles, int rows, int cols) {
  if (tiles.empty() || rows * cols < static_cast<int>(tiles.size()))
    throw DataError("tile_grid: grid smaller than tile count");
  int tw = tiles[0].width, th = tiles[0].height;
  Image out(cols * (tw + 1) - 1, rows * (th + 1) - 1);
  std::fill(out.rgb.begin(), out.rgb.end(), 0.15f);
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const Image& t = tiles[k];
    if (t.width != tw || t.height != th) throw DataError("tile_grid: tile size mismatch");
    int r = static_cast<int>(k) / cols, c = static_cast<int>(k) % cols;
    for (int y = 0; y < th; ++y)
      for (int x = 0; x < tw; ++x) out.set(c * (tw + 1) + x, r * (th + 1) + y, t.get(x, y));
  }
  return out;
}

}  // namespace nerfdyn
