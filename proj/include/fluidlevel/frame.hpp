#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace fluidlevel {

/// 8-bit grayscale image, row-major. The unit of ingestion and analysis.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  std::optional<double> timestamp;  // seconds; epoch is source-defined

  bool valid() const {
    return width >= 1 && height >= 1 &&
           pixels.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

inline Frame make_frame(int width, int height, std::uint8_t fill = 0) {
  Frame f;
  f.width = width;
  f.height = height;
  f.pixels.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  return f;
}

}  // namespace fluidlevel
