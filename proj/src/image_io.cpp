#include "restorl/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace restorl {

namespace {

unsigned char to_byte(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));  // round half up
}

std::vector<unsigned char> quantize(const Image& img) {
  std::vector<unsigned char> bytes(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) bytes[i] = to_byte(img.data[i]);
  return bytes;
}

Image from_bytes(int h, int w, int c, const unsigned char* bytes) {
  Image img(h, w, c);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = bytes[i] / 255.0;
  return img;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_to_exception(png_structp png, png_const_charp msg) {
  (void)png;
  throw ImageIoError(std::string("png: ") + msg);
}

void png_warning_silencer(png_structp, png_const_charp) {}

Image load_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw ImageIoError("cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_to_exception, png_warning_silencer);
  if (!png) throw ImageIoError("png: read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageIoError("png: info struct allocation failed");
  }

  try {
    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    const int interlace = png_get_interlace_type(png, info);

    if (bit_depth != 8) {
      throw ImageIoError(path + ": unsupported bit depth " + std::to_string(bit_depth) +
                         " (only 8-bit supported)");
    }
    if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
      throw ImageIoError(path + ": unsupported color type (only 8-bit gray or RGB)");
    }
    if (interlace != PNG_INTERLACE_NONE) {
      throw ImageIoError(path + ": interlaced PNG not supported");
    }

    const int channels = (color_type == PNG_COLOR_TYPE_RGB) ? 3 : 1;
    std::vector<unsigned char> bytes(static_cast<std::size_t>(h) * w * channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) {
      rows[y] = bytes.data() + static_cast<std::size_t>(y) * w * channels;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return from_bytes(static_cast<int>(h), static_cast<int>(w), channels, bytes.data());
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
}

void write_png_rows(png_structp png, png_infop info, const Image& img,
                    const std::vector<unsigned char>& bytes) {
  const int color_type = (img.channels == 3) ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, img.width, img.height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = const_cast<png_bytep>(bytes.data() +
                                    static_cast<std::size_t>(y) * img.width * img.channels);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
}

void save_png(const Image& img, const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw ImageIoError("cannot open " + path + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_to_exception, png_warning_silencer);
  if (!png) throw ImageIoError("png: write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageIoError("png: info struct allocation failed");
  }
  try {
    png_init_io(png, file.get());
    write_png_rows(png, info, img, quantize(img));
    png_destroy_write_struct(&png, &info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
}

void append_to_string(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

void flush_noop(png_structp) {}

// --- PPM / PGM ---

int read_ppm_token(std::istream& in) {
  // skips whitespace and '#' comments
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return in ? value : -1;
}

Image load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  int channels;
  if (magic[0] == 'P' && magic[1] == '6') {
    channels = 3;
  } else if (magic[0] == 'P' && magic[1] == '5') {
    channels = 1;
  } else {
    throw ImageIoError(path + ": not a binary PPM/PGM file");
  }
  const int w = read_ppm_token(in);
  const int h = read_ppm_token(in);
  const int maxval = read_ppm_token(in);
  if (w <= 0 || h <= 0) throw ImageIoError(path + ": malformed PPM header");
  if (maxval != 255) {
    throw ImageIoError(path + ": unsupported maxval " + std::to_string(maxval) +
                       " (only 8-bit supported)");
  }
  in.get();  // single whitespace after maxval
  std::vector<unsigned char> bytes(static_cast<std::size_t>(h) * w * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw ImageIoError(path + ": truncated pixel data");
  }
  return from_bytes(h, w, channels, bytes.data());
}

void save_ppm(const Image& img, const std::string& path, bool gray) {
  if (gray && img.channels != 1) throw ImageIoError(path + ": PGM requires 1 channel");
  if (!gray && img.channels != 3) throw ImageIoError(path + ": PPM requires 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot open " + path + " for writing");
  out << (gray ? "P5" : "P6") << "\n" << img.width << " " << img.height << "\n255\n";
  const auto bytes = quantize(img);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError(path + ": write failed");
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         std::equal(suffix.rbegin(), suffix.rend(), s.rbegin());
}

}  // namespace

Image load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw ImageIoError("cannot open " + path);
  unsigned char sig[8] = {0};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (std::memcmp(sig, png_sig, 8) == 0) return load_png(path);
  if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) return load_ppm(path);
  throw ImageIoError(path + ": unrecognized image format");
}

void save_image(const Image& img, const std::string& path) {
  if (has_suffix(path, ".png")) {
    save_png(img, path);
  } else if (has_suffix(path, ".ppm")) {
    save_ppm(img, path, /*gray=*/false);
  } else if (has_suffix(path, ".pgm")) {
    save_ppm(img, path, /*gray=*/true);
  } else {
    throw ImageIoError(path + ": unsupported extension (use .png, .ppm or .pgm)");
  }
}

std::string encode_png(const Image& img) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_to_exception, png_warning_silencer);
  if (!png) throw ImageIoError("png: write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageIoError("png: info struct allocation failed");
  }
  std::string out;
  try {
    png_set_write_fn(png, &out, append_to_string, flush_noop);
    write_png_rows(png, info, img, quantize(img));
    png_destroy_write_struct(&png, &info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  return out;
}

}  // namespace restorl
