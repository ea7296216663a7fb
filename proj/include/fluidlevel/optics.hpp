#pragma once

#include "fluidlevel/camera.hpp"

namespace fluidlevel::optics {

/// Physical constants of one well. Lengths in mm, volume in ml.
struct WellGeometry {
  double source_height_mm = 60.0;   // h: light source to measurement plane
  double bottom_offset_mm = 5.0;    // h1: fluid bottom to measurement plane
  double well_radius_mm = 7.8;
  double well_depth_mm = 17.4;
  double capacity_ml = 3.2;

  void validate() const;
};

/// Refractive indices of the two media the ray crosses.
struct MediumPair {
  double n_ambient = 1.0;  // n1
  double n_fluid = 1.333;  // n2

  void validate() const;
};

/// Constants of the level->apparent-distance transfer function for a fixed
/// entry angle: c0 = h - h1, c1 = tan(theta1), c2 = tan(theta2).
struct TransferConstants {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

/// One traced ray: lateral offsets at the fluid surface, fluid bottom and
/// measurement plane, plus the apparent source distance they imply.
struct RayPath {
  double x0_mm = 0.0;
  double x1_mm = 0.0;
  double xf_mm = 0.0;
  double apparent_distance_mm = 0.0;
};

/// Snell refraction across an interface. Angles in radians from the normal.
/// Throws Errc::total_internal_reflection when no real refracted ray exists.
double snell_refract(double theta_in, double n_in, double n_out);

/// Fluid depth in a right circular cylinder, mm from volume in ml.
double volume_to_level(double volume_ml, const WellGeometry& geom);
double level_to_volume(double level_mm, const WellGeometry& geom);

TransferConstants transfer_constants(const WellGeometry& geom, const MediumPair& media,
                                     double theta1);

/// Trace a single ray entering the fluid at theta1 and return the full path,
/// including the apparent distance I = xf / tan(theta1). At level 0 this
/// reduces to I = h for any theta1.
RayPath apparent_distance_exact(const WellGeometry& geom, const MediumPair& media,
                                double level_mm, double theta1);

/// Small-angle limit of the same transfer function: I = h - L(1 - n1/n2).
/// Affine in level; what the calibration curve is built on.
double apparent_distance_paraxial(const WellGeometry& geom, const MediumPair& media,
                                  double level_mm);

/// Radius in pixels of the projected source disk at a given apparent distance.
double expected_spot_radius(double apparent_distance_mm, const CameraModel& camera,
                            double source_radius_mm);

}  // namespace fluidlevel::optics
