#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fluidlevel/simulate.hpp"

namespace fluidlevel::calibrate {

using simulate::MeniscusProfile;
using simulate::Region;

struct CalibrationPoint {
  double volume_ml = 0.0;
  double perimeter_px = 0.0;
  std::optional<Region> region;
};

enum class ModelKind { linear_2pt, poly_least_squares };

/// Which variable the polynomial takes as input.
enum class Direction { volume_to_perimeter, perimeter_to_volume };

/// Fitted transfer curve with its validity range and provenance metadata.
/// Coefficients are ascending powers of the independent variable.
struct CalibrationModel {
  ModelKind kind = ModelKind::poly_least_squares;
  int order = 1;
  Direction direction = Direction::perimeter_to_volume;
  std::vector<double> coefficients;
  double range_min = 0.0;
  double range_max = 0.0;
  std::string well_id = "default";
  std::string created_utc;
  int points_used = 0;
};

struct EvalResult {
  double value = 0.0;
  bool extrapolated = false;
};

/// Exact line through two points. Throws Errc::degenerate_points when the
/// independent values coincide.
CalibrationModel fit_linear_2pt(const CalibrationPoint& p1, const CalibrationPoint& p2,
                                Direction direction);

/// Least-squares polynomial via Householder QR of the design matrix, solved
/// on a shifted/scaled abscissa and expanded back to raw coefficients.
/// Interpolates exactly when the point count equals order + 1.
CalibrationModel fit_poly_ls(const std::vector<CalibrationPoint>& points, int order,
                             Direction direction);

/// Two points per region A, B and C: the sweep points nearest 25% and 75%
/// through the span each region actually covers. Region D is excluded.
std::array<CalibrationPoint, 6> select_calibration_points(
    const std::vector<std::pair<double, double>>& sweep_points,
    const MeniscusProfile& profile);

/// Horner evaluation; flags results outside the model's validity range.
EvalResult evaluate(const CalibrationModel& model, double x);

/// Root of f(x) = y by bisection over the validity range. Requires the model
/// to be monotone there (derivative sign checked at 64 samples).
double invert(const CalibrationModel& model, double y);

/// Volume estimate from a measured perimeter: direct evaluation for
/// perimeter->volume models, inversion for volume->perimeter models.
EvalResult volume_from_perimeter(const CalibrationModel& model, double perimeter_px);

struct ErrorReport {
  struct PointError {
    double volume_ml = 0.0;
    double perimeter_px = 0.0;
    double estimated_ml = 0.0;
    double error_ul = 0.0;  // signed, estimated - true
    std::optional<Region> region;
  };
  struct RegionStats {
    int count = 0;
    double mean_abs_error_ul = 0.0;
    double max_abs_error_ul = 0.0;
  };

  std::vector<PointError> points;
  double mean_abs_error_ul = 0.0;
  double max_abs_error_ul = 0.0;
  std::map<Region, RegionStats> by_region;  // populated when a profile is given
};

ErrorReport error_report(const CalibrationModel& model,
                         const std::vector<std::pair<double, double>>& truth,
                         const std::optional<MeniscusProfile>& profile = std::nullopt);

// JSON persistence. The document layout is fixed: version, well_id, kind,
// order, direction, coefficients, valid_range, created_utc, points_used.
// Unknown or missing fields are rejected.
std::string model_to_json(const CalibrationModel& model);
CalibrationModel model_from_json(const std::string& text);
void save_model(const std::string& path, const CalibrationModel& model);
CalibrationModel load_model(const std::string& path);

/// Current time formatted as an ISO-8601 UTC stamp.
std::string utc_timestamp();

}  // namespace fluidlevel::calibrate
