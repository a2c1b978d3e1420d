#include "polargs/core/io.h"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace polargs {
namespace {

using FilePtr = std::unique_ptr<FILE, int (*)(FILE*)>;

FilePtr OpenFile(const std::filesystem::path& path, const char* mode) {
  FILE* f = std::fopen(path.c_str(), mode);
  POLARGS_CHECK(f != nullptr, ErrorKind::kFormat,
                "cannot open file: " + path.string());
  return FilePtr(f, &std::fclose);
}

uint32_t ByteSwap32(uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

// Reads the next whitespace-delimited token of a PFM header.
std::string HeaderToken(const std::string& buf, size_t* pos) {
  while (*pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[*pos]))) {
    ++*pos;
  }
  const size_t start = *pos;
  while (*pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[*pos]))) {
    ++*pos;
  }
  return buf.substr(start, *pos - start);
}

}  // namespace

void WritePfm(const std::filesystem::path& path, const FloatImage& img) {
  POLARGS_CHECK(img.channels() == 1 || img.channels() == 3, ErrorKind::kFormat,
                "pfm: only 1 or 3 channels are supported");
  std::ofstream out(path, std::ios::binary);
  POLARGS_CHECK(out.good(), ErrorKind::kFormat, "cannot write " + path.string());
  out << (img.channels() == 3 ? "PF" : "Pf") << "\n"
      << img.width() << " " << img.height() << "\n-1.0\n";
  const size_t row = static_cast<size_t>(img.width()) * img.channels();
  std::vector<uint32_t> bits(row);
  for (int y = img.height() - 1; y >= 0; --y) {
    const float* src = img.pixel(0, y);
    for (size_t i = 0; i < row; ++i) {
      uint32_t b = std::bit_cast<uint32_t>(src[i]);
      if constexpr (std::endian::native == std::endian::big) b = ByteSwap32(b);
      bits[i] = b;
    }
    out.write(reinterpret_cast<const char*>(bits.data()),
              static_cast<std::streamsize>(row * sizeof(uint32_t)));
  }
  POLARGS_CHECK(out.good(), ErrorKind::kFormat, "pfm: write failed " + path.string());
}

FloatImage ReadPfm(const std::filesystem::path& path) {
  const std::string buf = ReadTextFile(path);
  size_t pos = 0;
  const std::string magic = HeaderToken(buf, &pos);
  POLARGS_CHECK(magic == "PF" || magic == "Pf", ErrorKind::kFormat,
                "pfm: bad magic in " + path.string());
  const int channels = magic == "PF" ? 3 : 1;
  int width = 0, height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(HeaderToken(buf, &pos));
    height = std::stoi(HeaderToken(buf, &pos));
    scale = std::stod(HeaderToken(buf, &pos));
  } catch (const std::exception&) {
    Throw(ErrorKind::kFormat, "pfm: malformed header in " + path.string());
  }
  POLARGS_CHECK(width > 0 && height > 0 && scale != 0.0, ErrorKind::kFormat,
                "pfm: invalid header values in " + path.string());
  ++pos;  // single whitespace byte after the scale
  const bool little = scale < 0.0;
  const size_t row = static_cast<size_t>(width) * channels;
  const size_t need = row * height * sizeof(float);
  POLARGS_CHECK(pos <= buf.size() && buf.size() - pos >= need, ErrorKind::kFormat,
                "pfm: truncated data in " + path.string());
  FloatImage img(width, height, channels);
  const bool swap = little != (std::endian::native == std::endian::little);
  for (int y = height - 1; y >= 0; --y) {
    float* dst = img.pixel(0, y);
    for (size_t i = 0; i < row; ++i) {
      uint32_t b;
      std::memcpy(&b, buf.data() + pos, 4);
      pos += 4;
      if (swap) b = ByteSwap32(b);
      dst[i] = std::bit_cast<float>(b);
    }
  }
  return img;
}

namespace {

void WritePngRaw(const std::filesystem::path& path, int width, int height,
                 int channels, int bit_depth, const std::vector<uint8_t>& rows) {
  FilePtr f = OpenFile(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    Throw(ErrorKind::kFormat, "png: write failed " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  // Fixed settings keep the encoded bytes reproducible.
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  const size_t stride = static_cast<size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rows.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct RawPng {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<uint8_t> rows;
};

RawPng ReadPngRaw(const std::filesystem::path& path) {
  FilePtr f = OpenFile(path, "rb");
  uint8_t sig[8];
  POLARGS_CHECK(std::fread(sig, 1, 8, f.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0,
                ErrorKind::kFormat, "png: bad signature in " + path.string());
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  RawPng raw;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    Throw(ErrorKind::kFormat, "png: decode failed " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  POLARGS_CHECK(color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_RGB,
                ErrorKind::kFormat, "png: only gray or RGB is supported");
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.bit_depth = png_get_bit_depth(png, info);
  raw.channels = color == PNG_COLOR_TYPE_RGB ? 3 : 1;
  POLARGS_CHECK(raw.bit_depth == 8 || raw.bit_depth == 16, ErrorKind::kFormat,
                "png: unsupported bit depth");
  const size_t stride =
      static_cast<size_t>(raw.width) * raw.channels * (raw.bit_depth / 8);
  raw.rows.resize(stride * raw.height);
  for (int y = 0; y < raw.height; ++y) png_read_row(png, raw.rows.data() + y * stride, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return raw;
}

}  // namespace

void WritePng16(const std::filesystem::path& path, const FloatImage& img) {
  POLARGS_CHECK(img.channels() == 1 || img.channels() == 3, ErrorKind::kFormat,
                "png: only 1 or 3 channels are supported");
  std::vector<uint8_t> rows(img.size() * 2);
  for (size_t i = 0; i < img.size(); ++i) {
    const double v = std::clamp(static_cast<double>(img.data()[i]), 0.0, 1.0);
    const auto q = static_cast<uint16_t>(std::lround(v * 65535.0));
    rows[2 * i] = static_cast<uint8_t>(q >> 8);  // PNG is big-endian
    rows[2 * i + 1] = static_cast<uint8_t>(q & 0xff);
  }
  WritePngRaw(path, img.width(), img.height(), img.channels(), 16, rows);
}

FloatImage ReadPng16(const std::filesystem::path& path) {
  const RawPng raw = ReadPngRaw(path);
  FloatImage img(raw.width, raw.height, raw.channels);
  for (size_t i = 0; i < img.size(); ++i) {
    if (raw.bit_depth == 16) {
      const uint16_t q = static_cast<uint16_t>((raw.rows[2 * i] << 8) | raw.rows[2 * i + 1]);
      img.data()[i] = static_cast<float>(q / 65535.0);
    } else {
      img.data()[i] = static_cast<float>(raw.rows[i] / 255.0);
    }
  }
  return img;
}

void WriteMaskPng(const std::filesystem::path& path, const Mask& mask) {
  std::vector<uint8_t> rows(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) rows[i] = mask.data()[i] ? 255 : 0;
  WritePngRaw(path, mask.width(), mask.height(), 1, 8, rows);
}

Mask ReadMaskPng(const std::filesystem::path& path) {
  const RawPng raw = ReadPngRaw(path);
  POLARGS_CHECK(raw.channels == 1 && raw.bit_depth == 8, ErrorKind::kFormat,
                "mask png must be 8-bit gray: " + path.string());
  Mask mask(raw.width, raw.height, 1);
  for (size_t i = 0; i < mask.size(); ++i) mask.data()[i] = raw.rows[i] >= 128 ? 1 : 0;
  return mask;
}

std::string CameraToJson(const CameraModel& cam) {
  nlohmann::ordered_json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  std::vector<double> m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m.push_back(cam.world_to_cam(r, c));
  }
  j["world_to_cam"] = m;
  return j.dump(2) + "\n";
}

CameraModel CameraFromJson(const std::string& text) {
  CameraModel cam;
  try {
    const auto j = nlohmann::json::parse(text);
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    const auto m = j.at("world_to_cam").get<std::vector<double>>();
    POLARGS_CHECK(m.size() == 16, ErrorKind::kFormat,
                  "camera json: world_to_cam needs 16 values");
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) cam.world_to_cam(r, c) = m[r * 4 + c];
    }
  } catch (const nlohmann::json::exception& e) {
    Throw(ErrorKind::kFormat, std::string("camera json: ") + e.what());
  }
  cam.Validate();
  return cam;
}

void WriteCameraJson(const std::filesystem::path& path, const CameraModel& cam) {
  WriteTextFile(path, CameraToJson(cam));
}

CameraModel ReadCameraJson(const std::filesystem::path& path) {
  return CameraFromJson(ReadTextFile(path));
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  POLARGS_CHECK(in.good(), ErrorKind::kFormat, "cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  POLARGS_CHECK(out.good(), ErrorKind::kFormat, "cannot write " + path.string());
  out << text;
}

}  // namespace polargs
