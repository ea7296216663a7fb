#include <cctype>
#include <cstdio>
#include <fstream>
#include <string>

#include "fluidlevel/errors.hpp"
#include "fluidlevel/ingest.hpp"

namespace fluidlevel::ingest {

namespace {

bool is_pnm_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

// Token reader over the header region: skips whitespace and '#' comments.
struct TokenReader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos;

  long next_int() {
    for (;;) {
      while (pos < bytes.size() && is_pnm_space(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
      raise(Errc::malformed_header, "pgm: expected integer header token");
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1000000000L) raise(Errc::malformed_header, "pgm: header value too large");
      ++pos;
    }
    return value;
  }
};

}  // namespace

Frame read_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    raise(Errc::bad_magic, "pgm: not a binary P5 file");

  TokenReader reader{bytes, 2};
  const long width = reader.next_int();
  const long height = reader.next_int();
  const long maxval = reader.next_int();
  if (width < 1 || height < 1)
    raise(Errc::malformed_header, "pgm: dimensions must be at least 1x1");
  if (maxval != 255)
    raise(Errc::unsupported_maxval, "pgm: only maxval 255 is supported, got " +
                                        std::to_string(maxval));
  // Exactly one whitespace byte separates the header from the raster.
  if (reader.pos >= bytes.size() || !is_pnm_space(bytes[reader.pos]))
    raise(Errc::malformed_header, "pgm: missing whitespace after maxval");
  const std::size_t raster_start = reader.pos + 1;

  const std::size_t expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - raster_start < expected)
    raise(Errc::truncated_raster,
          "pgm: raster holds " + std::to_string(bytes.size() - raster_start) + " of " +
              std::to_string(expected) + " bytes");

  Frame frame;
  frame.width = static_cast<int>(width);
  frame.height = static_cast<int>(height);
  frame.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(raster_start),
                      bytes.begin() + static_cast<std::ptrdiff_t>(raster_start + expected));
  return frame;
}

std::vector<std::uint8_t> write_pgm(const Frame& frame) {
  if (!frame.valid()) raise(Errc::bad_config, "write_pgm: invalid frame");
  char header[64];
  const int len = std::snprintf(header, sizeof header, "P5\n%d %d\n255\n", frame.width,
                                frame.height);
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(len) + frame.pixels.size());
  out.insert(out.end(), header, header + len);
  out.insert(out.end(), frame.pixels.begin(), frame.pixels.end());
  return out;
}

Frame read_pgm_file(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  return read_pgm(bytes);
}

void write_pgm_file(const std::string& path, const Frame& frame) {
  const std::vector<std::uint8_t> bytes = write_pgm(frame);
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_error, "write_pgm_file: cannot open '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(Errc::io_error, "write_pgm_file: write failed for '" + path + "'");
}

}  // namespace fluidlevel::ingest
