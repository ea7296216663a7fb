#pragma once

namespace fluidlevel {

/// Pinhole camera intrinsics. Defaults are a Pi-camera-class module.
struct CameraModel {
  double focal_length_mm = 3.0;
  double pixel_pitch_mm = 0.0014;  // mm per pixel
  int width_px = 640;
  int height_px = 480;
  double principal_x_px = 320.0;
  double principal_y_px = 240.0;

  void validate() const;
};

}  // namespace fluidlevel
