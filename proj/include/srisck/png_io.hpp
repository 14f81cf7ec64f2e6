#pragma once

// PNG support through libpng; link with PNG::PNG.

#include "image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace srisck {

namespace detail {

struct FileCloser {
  void operator()(std::FILE *f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors by longjmp. The setjmp-protected functions below hold
// only trivially destructible locals; all C++ state lives outside them.
struct PngState {
  png_structp png = nullptr;
  png_infop info = nullptr;
  bool writing = false;
  char message[256] = {};

  ~PngState() {
    if (writing)
      png_destroy_write_struct(&png, &info);
    else
      png_destroy_read_struct(&png, &info, nullptr);
  }
};

inline void png_error_to_state(png_structp png, png_const_charp msg) {
  auto *st = static_cast<PngState *>(png_get_error_ptr(png));
  std::snprintf(st->message, sizeof st->message, "%s", msg);
  png_longjmp(png, 1);
}

inline void png_ignore_warning(png_structp, png_const_charp) {}

struct PngHeader {
  std::size_t width = 0, height = 0, channels = 0;
};

inline bool png_read_header(PngState &st, std::FILE *fp, PngHeader &hdr) {
  if (setjmp(png_jmpbuf(st.png)))
    return false;
  png_init_io(st.png, fp);
  png_set_sig_bytes(st.png, 8);
  png_read_info(st.png, st.info);
  const int color_type = png_get_color_type(st.png, st.info);
  const int depth = png_get_bit_depth(st.png, st.info);
  if (depth == 16)
    png_set_strip_16(st.png);
  if (color_type == PNG_COLOR_TYPE_PALETTE)
    png_set_palette_to_rgb(st.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(st.png);
  if (color_type & PNG_COLOR_MASK_ALPHA)
    png_set_strip_alpha(st.png);
  png_read_update_info(st.png, st.info);
  hdr.width = png_get_image_width(st.png, st.info);
  hdr.height = png_get_image_height(st.png, st.info);
  hdr.channels = png_get_channels(st.png, st.info);
  return true;
}

inline bool png_read_rows(PngState &st, png_bytepp rows) {
  if (setjmp(png_jmpbuf(st.png)))
    return false;
  png_read_image(st.png, rows);
  png_read_end(st.png, nullptr);
  return true;
}

inline bool png_write_all(PngState &st, std::FILE *fp, png_uint_32 w,
                          png_uint_32 h, png_bytepp rows) {
  if (setjmp(png_jmpbuf(st.png)))
    return false;
  png_init_io(st.png, fp);
  png_set_IHDR(st.png, st.info, w, h, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(st.png, st.info);
  png_write_image(st.png, rows);
  png_write_end(st.png, nullptr);
  return true;
}

} // namespace detail

//! Reads an 8-bit (or narrower) PNG. Palette and low bit depths are expanded,
//! alpha is dropped, 16-bit samples are reduced to 8 bits.
inline AnyImage read_png(const std::string &path, std::size_t max_pixels = 0) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp)
    throw ImageIoError("cannot open " + path);
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw ImageIoError("not a PNG file: " + path);

  detail::PngState st;
  st.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st,
                                  detail::png_error_to_state,
                                  detail::png_ignore_warning);
  if (st.png)
    st.info = png_create_info_struct(st.png);
  if (!st.png || !st.info)
    throw ImageIoError("png: allocation failed");

  detail::PngHeader hdr;
  if (!detail::png_read_header(st, fp.get(), hdr))
    throw ImageIoError(std::string("png: ") + st.message);
  const auto w = hdr.width, h = hdr.height, channels = hdr.channels;
  if (max_pixels != 0 && w * h > max_pixels)
    throw ImageIoError("image exceeds pixel limit");
  if (channels != 1 && channels != 3)
    throw ImageIoError("png: unsupported channel layout");

  std::vector<png_byte> raw(w * h * channels);
  std::vector<png_bytep> rows(h);
  for (std::size_t r = 0; r < h; ++r)
    rows[r] = raw.data() + r * w * channels;
  if (!detail::png_read_rows(st, rows.data()))
    throw ImageIoError(std::string("png: ") + st.message);

  constexpr double scale = 1.0 / 255.0;
  if (channels == 1) {
    GrayImage g(w, h);
    auto d = g.data();
    for (std::size_t i = 0; i < raw.size(); ++i)
      d[i] = raw[i] * scale;
    return g;
  }
  RgbImage rgb{GrayImage(w, h), GrayImage(w, h), GrayImage(w, h)};
  auto r = rgb.r.data(), g = rgb.g.data(), b = rgb.b.data();
  for (std::size_t i = 0; i < w * h; ++i) {
    r[i] = raw[3 * i] * scale;
    g[i] = raw[3 * i + 1] * scale;
    b[i] = raw[3 * i + 2] * scale;
  }
  return rgb;
}

inline void write_png(const std::string &path, const RgbImage &img) {
  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp)
    throw ImageIoError("cannot write " + path);
  detail::PngState st;
  st.writing = true;
  st.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &st,
                                   detail::png_error_to_state,
                                   detail::png_ignore_warning);
  if (st.png)
    st.info = png_create_info_struct(st.png);
  if (!st.png || !st.info)
    throw ImageIoError("png: allocation failed");

  const auto w = img.width(), h = img.height();
  std::vector<png_byte> raw(w * h * 3);
  std::vector<png_bytep> rows(h);
  for (std::size_t r = 0; r < h; ++r) {
    rows[r] = raw.data() + r * w * 3;
    for (std::size_t c = 0; c < w; ++c) {
      rows[r][3 * c] = detail::to_byte(img.r(r, c));
      rows[r][3 * c + 1] = detail::to_byte(img.g(r, c));
      rows[r][3 * c + 2] = detail::to_byte(img.b(r, c));
    }
  }
  if (!detail::png_write_all(st, fp.get(), static_cast<png_uint_32>(w),
                             static_cast<png_uint_32>(h), rows.data()))
    throw ImageIoError(std::string("png: ") + st.message);
}

//! Dispatches on file signature: PNG, otherwise binary PNM.
inline AnyImage read_image(const std::string &path,
                           std::size_t max_pixels = 0) {
  {
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw ImageIoError("cannot open " + path);
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char *>(sig), 8);
    if (in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0)
      return read_png(path, max_pixels);
  }
  return read_pnm(path, max_pixels);
}

} // namespace srisck
