#include "mugmatch/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mugmatch/errors.hpp"

namespace mugmatch {

namespace {

bool has_png_magic(std::span<const std::uint8_t> bytes) {
  static const std::uint8_t magic[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), magic, 8) == 0;
}

ColorImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::CorruptFile, std::string("png: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::CorruptFile, "png: " + msg);
  }

  ColorImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    out.pixels[i] = static_cast<float>(buffer[i]) / 255.0f;
  }
  return out;
}

class ByteReader {
public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool eof() const { return pos_ >= bytes_.size(); }
  std::uint8_t next() {
    if (eof()) throw Error(ErrorCode::CorruptFile, "pnm: unexpected end of data");
    return bytes_[pos_++];
  }
  std::uint8_t peek() const {
    if (eof()) throw Error(ErrorCode::CorruptFile, "pnm: unexpected end of data");
    return bytes_[pos_];
  }
  std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }
  void advance(std::size_t n) { pos_ += n; }

  /* Skips whitespace and '#' comments, then reads a non-negative integer. */
  long read_pnm_int() {
    for (;;) {
      const std::uint8_t c = peek();
      if (c == '#') {
        while (next() != '\n') {
          if (eof()) throw Error(ErrorCode::CorruptFile, "pnm: unterminated comment");
        }
      } else if (std::isspace(c)) {
        advance(1);
      } else {
        break;
      }
    }
    if (!std::isdigit(peek())) throw Error(ErrorCode::CorruptFile, "pnm: expected integer");
    long value = 0;
    while (!eof() && std::isdigit(peek())) {
      value = value * 10 + (next() - '0');
      if (value > 1'000'000'000L) throw Error(ErrorCode::CorruptFile, "pnm: integer overflow");
    }
    return value;
  }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void check_dims(long w, long h) {
  if (w < 1 || h < 1 || w > 1'000'000 || h > 1'000'000 || w * h > 100'000'000L) {
    throw Error(ErrorCode::CorruptFile,
                "implausible dimensions " + std::to_string(w) + "x" + std::to_string(h));
  }
}

ColorImage decode_pnm(std::span<const std::uint8_t> bytes) {
  ByteReader reader(bytes);
  reader.advance(1);  // 'P'
  const char type = static_cast<char>(reader.next());
  const bool color = (type == '3' || type == '6');
  const bool binary = (type == '5' || type == '6');

  const long w = reader.read_pnm_int();
  const long h = reader.read_pnm_int();
  check_dims(w, h);
  const long maxval = reader.read_pnm_int();
  if (maxval < 1 || maxval > 65535) {
    throw Error(ErrorCode::CorruptFile, "pnm: bad maxval " + std::to_string(maxval));
  }

  ColorImage out(static_cast<int>(w), static_cast<int>(h));
  const std::size_t samples = static_cast<std::size_t>(w) * h * (color ? 3 : 1);
  const float scale = 1.0f / static_cast<float>(maxval);

  std::vector<float> raw(samples);
  if (binary) {
    reader.next();  // single whitespace byte between maxval and the raster
    const int bytes_per_sample = maxval > 255 ? 2 : 1;
    std::span<const std::uint8_t> data = reader.rest();
    if (data.size() < samples * bytes_per_sample) {
      throw Error(ErrorCode::CorruptFile, "pnm: truncated pixel data");
    }
    for (std::size_t i = 0; i < samples; ++i) {
      unsigned v = data[i * bytes_per_sample];
      if (bytes_per_sample == 2) v = (v << 8) | data[i * 2 + 1];  // big endian per PNM
      raw[i] = static_cast<float>(v) * scale;
    }
  } else {
    for (std::size_t i = 0; i < samples; ++i) {
      const long v = reader.read_pnm_int();
      if (v > maxval) throw Error(ErrorCode::CorruptFile, "pnm: sample exceeds maxval");
      raw[i] = static_cast<float>(v) * scale;
    }
  }

  const std::size_t n = static_cast<std::size_t>(w) * h;
  for (std::size_t i = 0; i < n; ++i) {
    if (color) {
      out.pixels[3 * i + 0] = raw[3 * i + 0];
      out.pixels[3 * i + 1] = raw[3 * i + 1];
      out.pixels[3 * i + 2] = raw[3 * i + 2];
    } else {
      out.pixels[3 * i + 0] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = raw[i];
    }
  }
  return out;
}

float float_from_bits(std::uint32_t bits) { return std::bit_cast<float>(bits); }

ColorImage decode_pfm(std::span<const std::uint8_t> bytes) {
  ByteReader reader(bytes);
  reader.advance(1);  // 'P'
  const char type = static_cast<char>(reader.next());
  const bool color = (type == 'F');

  const long w = reader.read_pnm_int();
  const long h = reader.read_pnm_int();
  check_dims(w, h);

  // Scale line: a float whose sign encodes the byte order.
  while (!reader.eof() && std::isspace(reader.peek())) reader.advance(1);
  std::string scale_text;
  while (!reader.eof() && !std::isspace(reader.peek())) {
    scale_text.push_back(static_cast<char>(reader.next()));
  }
  double scale = 0.0;
  try {
    scale = std::stod(scale_text);
  } catch (const std::exception&) {
    throw Error(ErrorCode::CorruptFile, "pfm: bad scale '" + scale_text + "'");
  }
  if (scale == 0.0) throw Error(ErrorCode::CorruptFile, "pfm: zero scale");
  const bool little_endian = scale < 0.0;
  reader.next();  // single whitespace byte before the raster

  const std::size_t channels = color ? 3 : 1;
  const std::size_t samples = static_cast<std::size_t>(w) * h * channels;
  std::span<const std::uint8_t> data = reader.rest();
  if (data.size() < samples * 4) {
    throw Error(ErrorCode::CorruptFile, "pfm: truncated raster");
  }

  ColorImage out(static_cast<int>(w), static_cast<int>(h));
  for (long row = 0; row < h; ++row) {
    const long y = h - 1 - row;  // PFM rasters run bottom to top
    for (long x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t si = (static_cast<std::size_t>(row) * w + x) * channels + c;
        const std::uint8_t* p = data.data() + si * 4;
        std::uint32_t bits;
        if (little_endian) {
          bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                 (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
        } else {
          bits = static_cast<std::uint32_t>(p[3]) | (static_cast<std::uint32_t>(p[2]) << 8) |
                 (static_cast<std::uint32_t>(p[1]) << 16) | (static_cast<std::uint32_t>(p[0]) << 24);
        }
        const float v = float_from_bits(bits);
        if (color) {
          out.at(static_cast<int>(x), static_cast<int>(y), static_cast<int>(c)) = v;
        } else {
          out.at(static_cast<int>(x), static_cast<int>(y), 0) = v;
          out.at(static_cast<int>(x), static_cast<int>(y), 1) = v;
          out.at(static_cast<int>(x), static_cast<int>(y), 2) = v;
        }
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed for " + path.string());
  return bytes;
}

}  // namespace

ColorImage decode_image(std::span<const std::uint8_t> bytes) {
  if (has_png_magic(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') {
    const char t = static_cast<char>(bytes[1]);
    if (t >= '2' && t <= '6') return decode_pnm(bytes);
    if (t == 'f' || t == 'F') return decode_pfm(bytes);
  }
  throw Error(ErrorCode::UnsupportedFormat, "unrecognised image magic");
}

ColorImage load_color(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  return decode_image(bytes);
}

GrayImage load_gray(const std::filesystem::path& path) {
  return to_grayscale(load_color(path));
}

void write_png_gray(const std::filesystem::path& path, const GrayImage& img) {
  std::vector<std::uint8_t> buffer(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
    buffer[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("png write: ") + image.message);
  }
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  for (float p : img.pixels) {
    const float v = std::clamp(p, 0.0f, 1.0f);
    out.put(static_cast<char>(std::lround(v * 255.0f)));
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void write_pfm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  out << "Pf\n" << img.width << " " << img.height << "\n-1.0\n";
  for (int row = img.height - 1; row >= 0; --row) {
    for (int x = 0; x < img.width; ++x) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(img.at(x, row));
      const char le[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                          static_cast<char>((bits >> 16) & 0xff),
                          static_cast<char>((bits >> 24) & 0xff)};
      out.write(le, 4);
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace mugmatch
