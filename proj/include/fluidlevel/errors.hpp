#pragma once

#include <stdexcept>
#include <string>

namespace fluidlevel {

/// Failure conditions surfaced by the library. One enum across modules so
/// the CLI can map them onto exit codes without catching per-module types.
enum class Errc {
  // optics
  total_internal_reflection,
  invalid_angle,
  out_of_range,
  degenerate_projection,
  // vision
  degenerate_image,
  no_contour,
  insufficient_points,
  degenerate_conic,
  // stabilize
  non_finite_input,
  // calibrate
  degenerate_points,
  rank_deficient,
  region_not_covered,
  not_monotone,
  // ingest
  bad_magic,
  malformed_header,
  unsupported_maxval,
  truncated_raster,
  unsupported_format,
  corrupt_image,
  no_matches,
  connect_error,
  not_multipart,
  protocol_error,
  truncated_frame,
  // configuration / environment
  bad_config,
  io_error,
};

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

const char* errc_name(Errc code);

}  // namespace fluidlevel
