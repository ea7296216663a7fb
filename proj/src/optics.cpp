#include "fluidlevel/optics.hpp"

#include <cmath>
#include <string>

#include "fluidlevel/errors.hpp"

namespace fluidlevel {

void CameraModel::validate() const {
  if (!(focal_length_mm > 0.0) || !(pixel_pitch_mm > 0.0))
    raise(Errc::bad_config, "camera: focal length and pixel pitch must be positive");
  if (width_px < 1 || height_px < 1)
    raise(Errc::bad_config, "camera: image dimensions must be at least 1x1");
  if (principal_x_px < 0.0 || principal_x_px >= width_px || principal_y_px < 0.0 ||
      principal_y_px >= height_px)
    raise(Errc::bad_config, "camera: principal point outside image bounds");
}

namespace optics {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void WellGeometry::validate() const {
  if (!(source_height_mm > 0.0) || !(bottom_offset_mm > 0.0) || !(well_radius_mm > 0.0) ||
      !(well_depth_mm > 0.0) || !(capacity_ml > 0.0))
    raise(Errc::bad_config, "well geometry: all fields must be strictly positive");
  if (!(source_height_mm > bottom_offset_mm))
    raise(Errc::bad_config, "well geometry: source height must exceed bottom offset");
  if (well_depth_mm * kPi * well_radius_mm * well_radius_mm < capacity_ml * 1000.0)
    raise(Errc::bad_config, "well geometry: capacity exceeds cylinder volume");
}

void MediumPair::validate() const {
  if (!(n_ambient > 0.0) || !(n_fluid > 0.0))
    raise(Errc::bad_config, "media: refractive indices must be positive");
}

double snell_refract(double theta_in, double n_in, double n_out) {
  if (!(theta_in >= 0.0) || !(theta_in < kPi / 2.0))
    raise(Errc::invalid_angle, "snell_refract: incidence angle must be in [0, pi/2)");
  if (!(n_in > 0.0) || !(n_out > 0.0))
    raise(Errc::out_of_range, "snell_refract: refractive indices must be positive");
  const double s = n_in * std::sin(theta_in) / n_out;
  if (s > 1.0)
    raise(Errc::total_internal_reflection,
          "snell_refract: total internal reflection (n_in/n_out * sin(theta) = " +
              std::to_string(s) + ")");
  return std::asin(s);
}

double volume_to_level(double volume_ml, const WellGeometry& geom) {
  if (volume_ml < 0.0 || volume_ml > geom.capacity_ml)
    raise(Errc::out_of_range, "volume_to_level: volume outside [0, capacity]");
  const double area_mm2 = kPi * geom.well_radius_mm * geom.well_radius_mm;
  return 1000.0 * volume_ml / area_mm2;
}

double level_to_volume(double level_mm, const WellGeometry& geom) {
  if (level_mm < 0.0 || level_mm > geom.well_depth_mm)
    raise(Errc::out_of_range, "level_to_volume: level outside [0, depth]");
  const double area_mm2 = kPi * geom.well_radius_mm * geom.well_radius_mm;
  return level_mm * area_mm2 / 1000.0;
}

TransferConstants transfer_constants(const WellGeometry& geom, const MediumPair& media,
                                     double theta1) {
  if (!(theta1 > 0.0) || !(theta1 < kPi / 2.0))
    raise(Errc::invalid_angle, "transfer_constants: theta1 must be in (0, pi/2)");
  TransferConstants tc;
  tc.c0 = geom.source_height_mm - geom.bottom_offset_mm;
  tc.c1 = std::tan(theta1);
  tc.c2 = std::tan(snell_refract(theta1, media.n_ambient, media.n_fluid));
  return tc;
}

RayPath apparent_distance_exact(const WellGeometry& geom, const MediumPair& media,
                                double level_mm, double theta1) {
  if (level_mm < 0.0 || level_mm > geom.well_depth_mm)
    raise(Errc::out_of_range, "apparent_distance_exact: level outside [0, depth]");
  const TransferConstants tc = transfer_constants(geom, media, theta1);

  RayPath path;
  path.x0_mm = (tc.c0 - level_mm) * tc.c1;
  path.x1_mm = path.x0_mm + level_mm * tc.c2;
  path.xf_mm = path.x1_mm + geom.bottom_offset_mm * tc.c1;
  // With tan(theta1) = xf / I the apparent distance is xf / c1; this is the
  // only denominator for which level 0 gives back the physical height h.
  path.apparent_distance_mm = path.xf_mm / tc.c1;
  return path;
}

double apparent_distance_paraxial(const WellGeometry& geom, const MediumPair& media,
                                  double level_mm) {
  if (level_mm < 0.0 || level_mm > geom.well_depth_mm)
    raise(Errc::out_of_range, "apparent_distance_paraxial: level outside [0, depth]");
  return geom.source_height_mm - level_mm * (1.0 - media.n_ambient / media.n_fluid);
}

double expected_spot_radius(double apparent_distance_mm, const CameraModel& camera,
                            double source_radius_mm) {
  if (!(source_radius_mm > 0.0))
    raise(Errc::out_of_range, "expected_spot_radius: source radius must be positive");
  if (!(apparent_distance_mm > camera.focal_length_mm))
    raise(Errc::degenerate_projection,
          "expected_spot_radius: apparent distance must exceed focal length");
  return source_radius_mm * camera.focal_length_mm / apparent_distance_mm /
         camera.pixel_pitch_mm;
}

}  // namespace optics
}  // namespace fluidlevel
