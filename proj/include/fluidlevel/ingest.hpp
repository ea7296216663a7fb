#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fluidlevel/frame.hpp"

namespace fluidlevel::ingest {

/// Sequential, single-consumer stream of frames. next() returns nullopt at
/// a clean end of stream and throws on source failures.
class FrameSource {
public:
  virtual ~FrameSource() = default;
  virtual std::optional<Frame> next() = 0;
};

// --- PGM (binary P5, maxval 255) -------------------------------------------

/// Whitespace- and comment-tolerant P5 reader.
Frame read_pgm(std::span<const std::uint8_t> bytes);

/// Canonical form: "P5\n<w> <h>\n255\n" + raster.
std::vector<std::uint8_t> write_pgm(const Frame& frame);

Frame read_pgm_file(const std::string& path);
void write_pgm_file(const std::string& path, const Frame& frame);

// --- encoded images ----------------------------------------------------------

enum class ImageFormat { autodetect, pgm, jpeg, png };

/// Decode JPEG/PNG (or PGM) to 8-bit grayscale. Color inputs go through the
/// integer BT.601 luma; grayscale inputs pass through unchanged.
Frame decode_image(std::span<const std::uint8_t> bytes,
                   ImageFormat hint = ImageFormat::autodetect);

// --- sources ----------------------------------------------------------------

struct DirectorySourceOptions {
  std::string pattern = "*";        // shell-style, '*' and '?' wildcards
  bool strict = true;               // false: skip undecodable files
  double frame_interval_s = 1.0 / 30.0;
  std::function<void(const std::string& path, const std::string& reason)> on_skip;
};

/// Frames from matching files in strict lexicographic byte order of their
/// names. Throws Errc::no_matches when nothing matches.
std::unique_ptr<FrameSource> directory_source(const std::string& path,
                                              const DirectorySourceOptions& options = {});

std::unique_ptr<FrameSource> single_file_source(const std::string& path);

struct MjpegOptions {
  double read_timeout_s = 15.0;
};

/// Client for an MJPEG-over-HTTP stream (multipart/x-mixed-replace). Each
/// JPEG part becomes a frame stamped with its local receipt time.
std::unique_ptr<FrameSource> mjpeg_source(const std::string& url,
                                          const MjpegOptions& options = {});

/// "dir:<path>", "file:<path>" or "http://..." -> the matching source.
std::unique_ptr<FrameSource> open_source(const std::string& spec,
                                         const DirectorySourceOptions& dir_options = {},
                                         const MjpegOptions& mjpeg_options = {});

std::vector<std::uint8_t> read_file(const std::string& path);

}  // namespace fluidlevel::ingest
