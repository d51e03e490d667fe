#include "enhancekit/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <nlohmann/json.hpp>

#include "enhancekit/errors.hpp"

namespace enhancekit {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Tensor read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open PNG '" + path + "'");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("'" + path + "' is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  std::vector<png_bytep> rows;
  std::vector<png_byte> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  pixels.resize(rowbytes * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3) {
    throw IoError("unsupported PNG channel count " + std::to_string(channels) + " in '" + path + "'");
  }
  Tensor out({height, width, channels}, Space::display);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        out.at(y, x, c) = rows[y][x * channels + c] / 255.0;
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> quantize_8bit(const Tensor& img) {
  const Tensor display = img.space() == Space::display ? img : to_display_space(img);
  std::vector<std::uint8_t> bytes(display.size());
  auto vs = display.values();
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const double v = std::isfinite(vs[i]) ? std::clamp(vs[i], 0.0, 1.0) : 0.0;
    bytes[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
  }
  return bytes;
}

void write_png(const std::string& path, const Tensor& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw ContractError("write_png supports 1 or 3 channels, got " + std::to_string(img.channels()));
  }
  const std::vector<std::uint8_t> bytes = quantize_8bit(img);
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open '" + path + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  std::vector<png_bytep> rows(img.height());
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
  for (int y = 0; y < img.height(); ++y) {
    rows[y] = const_cast<png_bytep>(bytes.data() + y * stride);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void append_f32_le(std::vector<std::uint8_t>& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

float read_f32_le(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::vector<std::uint8_t> encode_tensor_dump(const Tensor& t) {
  nlohmann::ordered_json header;
  header["h"] = t.height();
  header["w"] = t.width();
  header["c"] = t.channels();
  header["space"] = std::string(to_string(t.space()));
  const std::string line = header.dump() + "\n";
  std::vector<std::uint8_t> out(line.begin(), line.end());
  out.reserve(line.size() + 4 * t.size());
  for (double v : t.values()) append_f32_le(out, static_cast<float>(v));
  return out;
}

Tensor decode_tensor_dump(const std::vector<std::uint8_t>& bytes) {
  const auto newline = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (newline == bytes.end()) throw IoError("tensor dump: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin(), newline);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("tensor dump: bad header: ") + e.what());
  }
  Shape shape;
  Space space;
  try {
    shape = {header.at("h").get<int>(), header.at("w").get<int>(), header.at("c").get<int>()};
    space = parse_space(header.at("space").get<std::string>());
  } catch (const std::exception& e) {
    throw IoError(std::string("tensor dump: bad header: ") + e.what());
  }
  const std::size_t offset = static_cast<std::size_t>(newline - bytes.begin()) + 1;
  if (shape.height < 0 || shape.width < 0 || shape.channels < 0 ||
      bytes.size() - offset != 4 * shape.size()) {
    throw IoError("tensor dump: payload size does not match header");
  }
  std::vector<double> values(shape.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = read_f32_le(bytes.data() + offset + 4 * i);
  return Tensor(shape, std::move(values), space);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

void write_tensor_dump(const std::string& path, const Tensor& t) {
  write_file_bytes(path, encode_tensor_dump(t));
}

Tensor read_tensor_dump(const std::string& path) { return decode_tensor_dump(read_file_bytes(path)); }

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string tensor_hash(const Tensor& t) {
  const Shape s = t.shape();
  std::uint64_t h = fnv1a64(&s, sizeof s);
  h = fnv1a64(t.values().data(), t.size() * sizeof(double), h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace enhancekit
