#include "fluidlevel/calibrate.hpp"

#include <json.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "fluidlevel/errors.hpp"

namespace fluidlevel::calibrate {

namespace {

double independent(const CalibrationPoint& p, Direction d) {
  return d == Direction::volume_to_perimeter ? p.volume_ml : p.perimeter_px;
}

double dependent(const CalibrationPoint& p, Direction d) {
  return d == Direction::volume_to_perimeter ? p.perimeter_px : p.volume_ml;
}

double horner(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double horner_derivative(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 1;)
    acc = acc * x + static_cast<double>(k) * coeffs[k];
  return acc;
}

// Expand sum_k c_k ((x - shift)/scale)^k into raw ascending powers of x.
std::vector<double> expand_shifted(const std::vector<double>& c, double shift, double scale) {
  const std::size_t m = c.size();
  std::vector<double> out(m, 0.0);
  std::vector<double> binom(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    // Binomial row C(k, j), built iteratively.
    binom[0] = 1.0;
    for (std::size_t j = 1; j <= k; ++j)
      binom[j] = binom[j - 1] * static_cast<double>(k - j + 1) / static_cast<double>(j);
    const double ck = c[k] / std::pow(scale, static_cast<double>(k));
    for (std::size_t j = 0; j <= k; ++j)
      out[j] += ck * binom[j] * std::pow(-shift, static_cast<double>(k - j));
  }
  return out;
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

CalibrationModel fit_linear_2pt(const CalibrationPoint& p1, const CalibrationPoint& p2,
                                Direction direction) {
  const double x1 = independent(p1, direction), y1 = dependent(p1, direction);
  const double x2 = independent(p2, direction), y2 = dependent(p2, direction);
  if (x1 == x2)
    raise(Errc::degenerate_points, "fit_linear_2pt: independent values coincide");

  const double slope = (y2 - y1) / (x2 - x1);
  CalibrationModel model;
  model.kind = ModelKind::linear_2pt;
  model.order = 1;
  model.direction = direction;
  model.coefficients = {y1 - slope * x1, slope};
  model.range_min = std::min(x1, x2);
  model.range_max = std::max(x1, x2);
  model.created_utc = utc_timestamp();
  model.points_used = 2;
  return model;
}

CalibrationModel fit_poly_ls(const std::vector<CalibrationPoint>& points, int order,
                             Direction direction) {
  if (order < 1 || order > 16)
    raise(Errc::bad_config, "fit_poly_ls: order must be in [1, 16]");
  const int n = static_cast<int>(points.size());
  if (n < order + 1)
    raise(Errc::insufficient_points,
          "fit_poly_ls: " + std::to_string(n) + " points cannot determine order " +
              std::to_string(order));

  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    x_min = std::min(x_min, independent(p, direction));
    x_max = std::max(x_max, independent(p, direction));
  }
  if (!(x_min < x_max))
    raise(Errc::rank_deficient, "fit_poly_ls: independent values all equal");

  const double shift = (x_min + x_max) / 2.0;
  const double scale = (x_max - x_min) / 2.0;

  Eigen::MatrixXd design(n, order + 1);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    const double u = (independent(points[i], direction) - shift) / scale;
    double pw = 1.0;
    for (int j = 0; j <= order; ++j) {
      design(i, j) = pw;
      pw *= u;
    }
    rhs(i) = dependent(points[i], direction);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < order + 1)
    raise(Errc::rank_deficient,
          "fit_poly_ls: design matrix rank " + std::to_string(qr.rank()) +
              " below " + std::to_string(order + 1) + " (duplicate abscissae?)");
  const Eigen::VectorXd solution = qr.solve(rhs);

  CalibrationModel model;
  model.kind = ModelKind::poly_least_squares;
  model.order = order;
  model.direction = direction;
  model.coefficients = expand_shifted(
      std::vector<double>(solution.data(), solution.data() + solution.size()), shift, scale);
  model.range_min = x_min;
  model.range_max = x_max;
  model.created_utc = utc_timestamp();
  model.points_used = n;
  return model;
}

std::array<CalibrationPoint, 6> select_calibration_points(
    const std::vector<std::pair<double, double>>& sweep_points,
    const MeniscusProfile& profile) {
  std::map<Region, std::vector<CalibrationPoint>> grouped;
  for (const auto& [v, p] : sweep_points) {
    CalibrationPoint cp{v, p, region_of(v, profile)};
    grouped[*cp.region].push_back(cp);
  }

  std::array<CalibrationPoint, 6> out;
  int slot = 0;
  for (Region r : {Region::A, Region::B, Region::C}) {
    auto it = grouped.find(r);
    if (it == grouped.end() || it->second.empty())
      raise(Errc::region_not_covered,
            std::string("select_calibration_points: no sweep points in region ") +
                simulate::region_letter(r));
    auto& pts = it->second;
    std::sort(pts.begin(), pts.end(), [](const CalibrationPoint& a, const CalibrationPoint& b) {
      return a.volume_ml < b.volume_ml;
    });
    const double lo = pts.front().volume_ml;
    const double hi = pts.back().volume_ml;
    for (double frac : {0.25, 0.75}) {
      const double target = lo + frac * (hi - lo);
      std::size_t best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = std::abs(pts[i].volume_ml - target);
        if (d < best_dist) {
          best_dist = d;
          best = i;
        }
      }
      // Keep the two picks distinct when the region has the points for it.
      if (frac == 0.75 && pts.size() > 1 &&
          pts[best].volume_ml == out[slot - 1].volume_ml) {
        best = (best + 1 < pts.size()) ? best + 1 : best - 1;
      }
      out[slot++] = pts[best];
    }
  }
  return out;
}

EvalResult evaluate(const CalibrationModel& model, double x) {
  EvalResult r;
  r.value = horner(model.coefficients, x);
  r.extrapolated = x < model.range_min || x > model.range_max;
  return r;
}

double invert(const CalibrationModel& model, double y) {
  // Monotonicity: the derivative must keep one sign across the range.
  const int kSamples = 64;
  int sign = 0;
  for (int i = 0; i < kSamples; ++i) {
    const double x = model.range_min +
                     (model.range_max - model.range_min) * i / (kSamples - 1);
    const double d = horner_derivative(model.coefficients, x);
    const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (s == 0) raise(Errc::not_monotone, "invert: zero derivative inside range");
    if (sign == 0) sign = s;
    else if (s != sign) raise(Errc::not_monotone, "invert: derivative changes sign");
  }

  double lo = model.range_min, hi = model.range_max;
  double f_lo = horner(model.coefficients, lo);
  double f_hi = horner(model.coefficients, hi);
  const double y_min = std::min(f_lo, f_hi), y_max = std::max(f_lo, f_hi);
  if (y < y_min || y > y_max)
    raise(Errc::out_of_range, "invert: target outside the model's image");

  const bool increasing = f_hi > f_lo;
  const double tol = 1e-9 * std::abs(y) + 1e-15;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = (lo + hi) / 2.0;
    const double f_mid = horner(model.coefficients, mid);
    if (std::abs(f_mid - y) < tol) return mid;
    if ((f_mid < y) == increasing) lo = mid;
    else hi = mid;
  }
  return (lo + hi) / 2.0;
}

EvalResult volume_from_perimeter(const CalibrationModel& model, double perimeter_px) {
  if (model.direction == Direction::perimeter_to_volume)
    return evaluate(model, perimeter_px);
  return EvalResult{invert(model, perimeter_px), false};
}

ErrorReport error_report(const CalibrationModel& model,
                         const std::vector<std::pair<double, double>>& truth,
                         const std::optional<MeniscusProfile>& profile) {
  ErrorReport report;
  double abs_sum = 0.0;
  std::map<Region, std::pair<int, double>> region_acc;  // count, abs sum

  for (const auto& [v_true, perimeter] : truth) {
    ErrorReport::PointError pe;
    pe.volume_ml = v_true;
    pe.perimeter_px = perimeter;
    pe.estimated_ml = volume_from_perimeter(model, perimeter).value;
    pe.error_ul = (pe.estimated_ml - v_true) * 1000.0;
    if (profile) pe.region = region_of(v_true, *profile);
    report.points.push_back(pe);

    const double abs_err = std::abs(pe.error_ul);
    abs_sum += abs_err;
    report.max_abs_error_ul = std::max(report.max_abs_error_ul, abs_err);
    if (pe.region) {
      auto& [count, sum] = region_acc[*pe.region];
      ++count;
      sum += abs_err;
      auto& stats = report.by_region[*pe.region];
      ++stats.count;
      stats.max_abs_error_ul = std::max(stats.max_abs_error_ul, abs_err);
    }
  }
  if (!report.points.empty())
    report.mean_abs_error_ul = abs_sum / static_cast<double>(report.points.size());
  for (auto& [region, stats] : report.by_region)
    stats.mean_abs_error_ul = region_acc[region].second / stats.count;
  return report;
}

namespace {

const char* kind_string(ModelKind kind) {
  return kind == ModelKind::linear_2pt ? "linear_2pt" : "poly_ls";
}

const char* direction_string(Direction direction) {
  return direction == Direction::volume_to_perimeter ? "v2p" : "p2v";
}

}  // namespace

std::string model_to_json(const CalibrationModel& model) {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["well_id"] = model.well_id;
  doc["kind"] = kind_string(model.kind);
  doc["order"] = model.order;
  doc["direction"] = direction_string(model.direction);
  doc["coefficients"] = model.coefficients;
  doc["valid_range"] = {model.range_min, model.range_max};
  doc["created_utc"] = model.created_utc;
  doc["points_used"] = model.points_used;
  return doc.dump(2) + "\n";
}

CalibrationModel model_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::bad_config, std::string("model JSON parse error: ") + e.what());
  }
  if (!doc.is_object()) raise(Errc::bad_config, "model JSON: not an object");

  static const char* kFields[] = {"version",      "well_id",     "kind",
                                  "order",        "direction",   "coefficients",
                                  "valid_range",  "created_utc", "points_used"};
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (const char* f : kFields) known = known || key == f;
    if (!known) raise(Errc::bad_config, "model JSON: unknown field '" + key + "'");
  }
  for (const char* f : kFields)
    if (!doc.contains(f)) raise(Errc::bad_config, std::string("model JSON: missing field '") + f + "'");

  try {
    if (doc["version"].get<int>() != 1)
      raise(Errc::bad_config, "model JSON: unsupported version");
    CalibrationModel model;
    model.well_id = doc["well_id"].get<std::string>();
    const std::string kind = doc["kind"].get<std::string>();
    if (kind == "linear_2pt") model.kind = ModelKind::linear_2pt;
    else if (kind == "poly_ls") model.kind = ModelKind::poly_least_squares;
    else raise(Errc::bad_config, "model JSON: unknown kind '" + kind + "'");
    model.order = doc["order"].get<int>();
    const std::string direction = doc["direction"].get<std::string>();
    if (direction == "v2p") model.direction = Direction::volume_to_perimeter;
    else if (direction == "p2v") model.direction = Direction::perimeter_to_volume;
    else raise(Errc::bad_config, "model JSON: unknown direction '" + direction + "'");
    model.coefficients = doc["coefficients"].get<std::vector<double>>();
    const auto range = doc["valid_range"].get<std::vector<double>>();
    if (range.size() != 2) raise(Errc::bad_config, "model JSON: valid_range must hold 2 values");
    model.range_min = range[0];
    model.range_max = range[1];
    model.created_utc = doc["created_utc"].get<std::string>();
    model.points_used = doc["points_used"].get<int>();

    if (model.order < 1 || model.coefficients.size() != static_cast<std::size_t>(model.order) + 1)
      raise(Errc::bad_config, "model JSON: coefficients length must equal order + 1");
    if (!(model.range_min < model.range_max))
      raise(Errc::bad_config, "model JSON: valid_range must satisfy min < max");
    return model;
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::bad_config, std::string("model JSON type error: ") + e.what());
  }
}

void save_model(const std::string& path, const CalibrationModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_error, "save_model: cannot open '" + path + "'");
  out << model_to_json(model);
  if (!out) raise(Errc::io_error, "save_model: write failed for '" + path + "'");
}

CalibrationModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "load_model: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace fluidlevel::calibrate
