#include "swarmsense/pnm.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "swarmsense/error.h"

namespace swarmsense {

namespace {

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::string header(const char* magic, int w, int h) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

}  // namespace

std::string encode_pnm(const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorCategory::InvalidArgument, "portable any-map needs 1 or 3 channels");
  }
  std::string out = header(image.channels == 1 ? "P5" : "P6", image.width, image.height);
  out.reserve(out.size() + image.data.size());
  for (double v : image.data) out.push_back(static_cast<char>(to_byte(v)));
  return out;
}

std::string encode_pgm(const BinaryGrid& mask) {
  std::string out = header("P5", mask.width, mask.height);
  for (std::uint8_t v : mask.data) out.push_back(static_cast<char>(v ? 255 : 0));
  return out;
}

std::string encode_pgm_normalized(const std::vector<double>& values, int width, int height) {
  double lo = 0.0, hi = 0.0;
  if (!values.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
  }
  std::string out = header("P5", width, height);
  for (double v : values) out.push_back(static_cast<char>(to_byte(hi > lo ? (v - lo) / (hi - lo) : 0.0)));
  return out;
}

Image decode_pnm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if ((magic != "P5" && magic != "P6") || w <= 0 || h <= 0 || maxval != 255) {
    throw Error(ErrorCategory::InvalidArgument, "unsupported portable any-map");
  }
  in.get();
  const int ch = magic == "P5" ? 1 : 3;
  Image img(w, h, ch);
  const std::size_t offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() < offset + img.data.size()) throw Error(ErrorCategory::InvalidArgument, "truncated any-map");
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] = static_cast<unsigned char>(bytes[offset + i]) / 255.0;
  }
  return img;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCategory::Io, "write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string base64_encode(const std::string& bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < bytes.size()) {
    unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

Image downscale(const Image& image, int max_side) {
  const int longest = std::max(image.width, image.height);
  if (longest <= max_side) return image;
  const int factor = (longest + max_side - 1) / max_side;
  const int w = std::max(1, image.width / factor);
  const int h = std::max(1, image.height / factor);
  Image out(w, h, image.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        double s = 0.0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx) s += image.at(x * factor + dx, y * factor + dy, c);
        out.at(x, y, c) = s / (factor * factor);
      }
    }
  }
  return out;
}

}  // namespace swarmsense
