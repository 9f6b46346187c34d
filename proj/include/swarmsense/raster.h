#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace swarmsense {

// Row-major grid of per-pixel channel tuples.
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, int c = 1, T fill = T{})
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool empty() const { return pixel_count() == 0; }

  T& at(int x, int y, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  const T& at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Grid& o) const { return width == o.width && height == o.height; }
  bool operator==(const Grid&) const = default;
};

using Image = Grid<double>;
using BinaryGrid = Grid<std::uint8_t>;

}  // namespace swarmsense
