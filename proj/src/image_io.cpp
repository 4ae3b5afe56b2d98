#include "unoqa/image.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace unoqa {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open image file: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<std::uint8_t> data;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("not a decodable PNG file: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  if (width == 0 || height == 0) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("zero-dimension image: " + path);
  }
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  // Normalize everything to 8-bit RGB.
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_strip_16(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  data.resize(static_cast<std::size_t>(width) * height * 3);
  row_ptrs.resize(height);
  for (png_uint_32 y = 0; y < height; ++y)
    row_ptrs[y] = data.data() + static_cast<std::size_t>(y) * width * 3;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  return gray_from_rgb8(data, static_cast<Index>(height), static_cast<Index>(width));
}

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw FormatError("unsupported PGM variant (want P5): " + path);

  auto next_token = [&](long long& out) {
    // skip whitespace and '#' comment lines
    for (;;) {
      const int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    if (!(in >> out)) throw FormatError("truncated PGM header: " + path);
  };
  long long w = 0, h = 0, maxval = 0;
  next_token(w);
  next_token(h);
  next_token(maxval);
  if (w <= 0 || h <= 0) throw FormatError("zero-dimension image: " + path);
  if (maxval <= 0 || maxval > 255) throw FormatError("unsupported PGM maxval: " + path);
  in.get();  // single whitespace before payload

  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw FormatError("truncated PGM payload: " + path);

  Image out(h, w);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) out(y, x) = buf[static_cast<std::size_t>(y * w + x)] * scale;
  return out;
}

bool has_png_signature(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image file: " + path);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() >= 8 && png_sig_cmp(sig, 0, 8) == 0;
}

}  // namespace

Image load_image_native(const std::string& path) {
  Image img = has_png_signature(path) ? load_png(path) : load_pgm(path);
  validate_image(img, path);
  return img;
}

Image load_image(const std::string& path, Index target_size) {
  if (target_size <= 0) throw ArgError("load_image: target size must be positive");
  return bilinear_resize(load_image_native(path), target_size, target_size);
}

void save_pgm(const std::string& path, const Image& img) {
  if (img.rows() <= 0 || img.cols() <= 0) throw ArgError("save_pgm: empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image file: " + path);
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(img.rows() * img.cols()));
  for (Index y = 0; y < img.rows(); ++y)
    for (Index x = 0; x < img.cols(); ++x) {
      const double v = std::clamp(img(y, x), 0.0, 1.0);
      buf[static_cast<std::size_t>(y * img.cols() + x)] =
          static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write: " + path);
}

}  // namespace unoqa
