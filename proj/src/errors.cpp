#include "fluidlevel/errors.hpp"

namespace fluidlevel {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::total_internal_reflection: return "total_internal_reflection";
    case Errc::invalid_angle: return "invalid_angle";
    case Errc::out_of_range: return "out_of_range";
    case Errc::degenerate_projection: return "degenerate_projection";
    case Errc::degenerate_image: return "degenerate_image";
    case Errc::no_contour: return "no_contour";
    case Errc::insufficient_points: return "insufficient_points";
    case Errc::degenerate_conic: return "degenerate_conic";
    case Errc::non_finite_input: return "non_finite_input";
    case Errc::degenerate_points: return "degenerate_points";
    case Errc::rank_deficient: return "rank_deficient";
    case Errc::region_not_covered: return "region_not_covered";
    case Errc::not_monotone: return "not_monotone";
    case Errc::bad_magic: return "bad_magic";
    case Errc::malformed_header: return "malformed_header";
    case Errc::unsupported_maxval: return "unsupported_maxval";
    case Errc::truncated_raster: return "truncated_raster";
    case Errc::unsupported_format: return "unsupported_format";
    case Errc::corrupt_image: return "corrupt_image";
    case Errc::no_matches: return "no_matches";
    case Errc::connect_error: return "connect_error";
    case Errc::not_multipart: return "not_multipart";
    case Errc::protocol_error: return "protocol_error";
    case Errc::truncated_frame: return "truncated_frame";
    case Errc::bad_config: return "bad_config";
    case Errc::io_error: return "io_error";
  }
  return "unknown";
}

}  // namespace fluidlevel
