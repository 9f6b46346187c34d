#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "swarmsense/raster.h"

namespace swarmsense {

// 8-bit portable any-map encoding: P5 for one channel, P6 for three.
// Values are clamped to [0,1] and scaled by 255 with rounding.
std::string encode_pnm(const Image& image);
std::string encode_pgm(const BinaryGrid& mask);

// Min-max normalized graymap (display only).
std::string encode_pgm_normalized(const std::vector<double>& values, int width, int height);

Image decode_pnm(const std::string& bytes);

void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

std::string base64_encode(const std::string& bytes);

// Box-averages down so the longer side is at most max_side.
Image downscale(const Image& image, int max_side);

}  // namespace swarmsense
