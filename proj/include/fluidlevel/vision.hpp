#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fluidlevel/frame.hpp"

namespace fluidlevel::vision {

/// Binary mask, 255 = foreground.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

struct Point2d {
  double x = 0.0;
  double y = 0.0;
};

/// Closed outer boundary of one 8-connected foreground component, traced in
/// clockwise image order (y down). Area is the shoelace magnitude of the
/// traced polygon.
struct Contour {
  std::vector<Point2d> points;
  double area = 0.0;

  Point2d centroid() const;
};

/// Center / axes / rotation of a fitted ellipse plus its perimeter.
struct EllipseFit {
  double center_x = 0.0;
  double center_y = 0.0;
  double semi_major = 0.0;   // a >= b
  double semi_minor = 0.0;
  double rotation = 0.0;     // radians in [0, pi)
  double perimeter = 0.0;
};

struct VisionParams {
  enum class ThresholdMode { automatic, fixed };

  ThresholdMode threshold_mode = ThresholdMode::automatic;
  std::uint8_t fixed_level = 128;
  double min_contour_area = 25.0;  // px^2, shoelace
  double center_weight = 1.0;      // reserved for weighted contour selection

  void validate() const;
};

/// Threshold selection by maximizing between-class histogram variance.
/// Returns the level t such that foreground = {pixel >= t}.
std::uint8_t otsu_threshold(const std::uint32_t hist[256]);

/// Frame -> mask. Automatic mode throws Errc::degenerate_image when every
/// pixel has the same intensity.
Mask binarize(const Frame& frame, const VisionParams& params);

/// Outer boundaries of all 8-connected components; holes are not traced.
/// Boundaries with fewer than 4 points (sub-pixel specks) are dropped.
std::vector<Contour> extract_contours(const Mask& mask);

/// The qualifying contour nearest the image center (ties: larger area).
/// Throws Errc::no_contour when nothing passes the area floor.
Contour central_contour(const std::vector<Contour>& contours, int width, int height,
                        const VisionParams& params);

/// Direct least-squares conic fit constrained to an ellipse, on centered and
/// scaled coordinates, then converted to geometric parameters.
EllipseFit fit_ellipse(std::span<const Point2d> points);
EllipseFit fit_ellipse(const Contour& contour);

/// Ramanujan's second approximation of the ellipse perimeter.
double ellipse_perimeter(double a, double b);

/// Full pipeline: binarize -> contours -> central contour -> ellipse fit.
EllipseFit measure_frame(const Frame& frame, const VisionParams& params);

}  // namespace fluidlevel::vision
