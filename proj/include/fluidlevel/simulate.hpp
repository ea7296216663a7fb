#pragma once

#include <cstdint>
#include <vector>

#include "fluidlevel/camera.hpp"
#include "fluidlevel/frame.hpp"
#include "fluidlevel/optics.hpp"

namespace fluidlevel::simulate {

/// Segments of the perimeter-vs-volume response curve:
/// A = developing meniscus, B = stable/linear, C = meniscus inversion,
/// D = overflow (frozen).
enum class Region { A, B, C, D };

char region_letter(Region r);

/// Volume thresholds and shape factors of the meniscus response. Below
/// v_dry_ml the fluid sits as droplets and no coherent spot exists.
struct MeniscusProfile {
  double v_dry_ml = 0.3;
  double v_film_ml = 0.5;     // A -> B boundary
  double v_invert_ml = 2.2;   // B -> C boundary (inversion onset)
  double v_overflow_ml = 2.6; // C -> D boundary (spill-over)
  double developing_slope_factor = 0.6;  // in (0,1)
  double inversion_gain = 4.0;           // > 1

  void validate() const;
};

Region region_of(double volume_ml, const MeniscusProfile& profile);

/// Everything needed to render one well deterministically.
struct SceneConfig {
  optics::WellGeometry geometry{};
  optics::MediumPair media{};
  CameraModel camera{};
  double source_radius_mm = 4.0;
  MeniscusProfile meniscus{};
  double noise_sigma = 0.0;        // gray levels
  double occlusion_fraction = 0.0; // [0, 1)
  double astigmatism_ratio = 1.0;  // semi-minor / semi-major of the spot
  std::uint64_t seed = 0;

  void validate() const;
};

/// Spot perimeter predicted by the paraxial model alone (no meniscus terms).
double base_perimeter(const SceneConfig& scene, double volume_ml);

/// d(base_perimeter)/dV by the chain rule; the region-B slope of the
/// response curve.
double base_perimeter_slope(const SceneConfig& scene, double volume_ml);

/// Analytic, noise-free expected spot perimeter with the four-region
/// meniscus response applied. Continuous and nondecreasing in volume;
/// strictly increasing below v_overflow, frozen above it.
double effective_perimeter(const SceneConfig& scene, double volume_ml);

/// Render one synthetic frame. Deterministic in (scene, volume, salt); the
/// salt lets a sweep vary noise and droplet layout frame to frame.
Frame render_frame(const SceneConfig& scene, double volume_ml, std::uint64_t salt = 0);

struct SweepEntry {
  double volume_ml = 0.0;
  Frame frame;
  double expected_perimeter_px = 0.0;
};

/// Evenly spaced volumes (endpoints included), rendered frames and oracle
/// perimeters; the raw material of calibration and evaluation datasets.
std::vector<SweepEntry> sweep(const SceneConfig& scene, double v_start, double v_end,
                              int steps);

}  // namespace fluidlevel::simulate
