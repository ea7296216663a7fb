#include <doctest.h>

#include <cmath>
#include <random>

#include "fluidlevel/calibrate.hpp"
#include "fluidlevel/errors.hpp"
#include "test_util.hpp"

using namespace fluidlevel;
using namespace fluidlevel::calibrate;
using test_util::error_code_of;

namespace {

CalibrationPoint pt(double v, double p) { return CalibrationPoint{v, p, std::nullopt}; }

double raw_power(double x, int k) {
  double acc = 1.0;
  for (int i = 0; i < k; ++i) acc *= x;
  return acc;
}

}  // namespace

TEST_CASE("two-point linear fit") {
  const auto model = fit_linear_2pt(pt(0.5, 80.0), pt(2.0, 140.0),
                                    Direction::volume_to_perimeter);
  REQUIRE(model.coefficients.size() == 2);
  CHECK(model.coefficients[1] == doctest::Approx(40.0));  // slope, px per ml
  CHECK(model.coefficients[0] == doctest::Approx(60.0));  // intercept
  CHECK(evaluate(model, 1.25).value == doctest::Approx(110.0));
  CHECK(model.range_min == 0.5);
  CHECK(model.range_max == 2.0);

  CHECK(error_code_of([] {
          fit_linear_2pt(pt(1.0, 80.0), pt(1.0, 90.0), Direction::volume_to_perimeter);
        }) == Errc::degenerate_points);
}

TEST_CASE("polynomial least squares") {
  SUBCASE("exact interpolation through order + 1 points") {
    const std::vector<CalibrationPoint> pts = {pt(0, 1), pt(1, 3), pt(2, 7)};
    const auto model = fit_poly_ls(pts, 2, Direction::volume_to_perimeter);
    REQUIRE(model.coefficients.size() == 3);
    CHECK(model.coefficients[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(model.coefficients[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(model.coefficients[2] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(evaluate(model, 2.0).value == doctest::Approx(7.0).epsilon(1e-12));
  }
  SUBCASE("a line through collinear points is exact") {
    std::vector<CalibrationPoint> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(pt(0.3 * i, 4.0 + 2.5 * 0.3 * i));
    const auto model = fit_poly_ls(pts, 1, Direction::volume_to_perimeter);
    CHECK(model.coefficients[0] == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(model.coefficients[1] == doctest::Approx(2.5).epsilon(1e-10));
    double rss = 0.0;
    for (const auto& p : pts) {
      const double r = evaluate(model, p.volume_ml).value - p.perimeter_px;
      rss += r * r;
    }
    CHECK(std::sqrt(rss) < 1e-9);
  }
  SUBCASE("too few points") {
    const std::vector<CalibrationPoint> pts = {pt(0, 1), pt(1, 3), pt(2, 7)};
    CHECK(error_code_of([&] { fit_poly_ls(pts, 3, Direction::volume_to_perimeter); }) ==
          Errc::insufficient_points);
  }
  SUBCASE("duplicate abscissae beyond the degrees of freedom") {
    const std::vector<CalibrationPoint> pts = {pt(1, 1), pt(1, 2), pt(2, 3)};
    CHECK(error_code_of([&] { fit_poly_ls(pts, 2, Direction::volume_to_perimeter); }) ==
          Errc::rank_deficient);
  }
  SUBCASE("interpolation property at random orders") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> coeff(-3.0, 3.0);
    for (int trial = 0; trial < 40; ++trial) {
      const int order = 1 + static_cast<int>(rng() % 5);
      std::vector<double> truth(order + 1);
      for (auto& c : truth) c = coeff(rng);
      std::vector<CalibrationPoint> pts;
      for (int i = 0; i <= order; ++i) {
        const double x = 500.0 + 10.0 * i;  // perimeter-scale abscissae
        double y = 0.0;
        for (int k = order; k >= 0; --k) y = y * x + truth[k];
        pts.push_back(pt(y, x));
      }
      const auto model = fit_poly_ls(pts, order, Direction::perimeter_to_volume);
      for (const auto& p : pts) {
        const double got = evaluate(model, p.perimeter_px).value;
        CHECK(std::abs(got - p.volume_ml) <=
              1e-9 * std::max(1.0, std::abs(p.volume_ml)));
      }
    }
  }
  SUBCASE("residual is orthogonal to the design columns") {
    std::mt19937_64 rng(37);
    std::normal_distribution<double> noise(0.0, 0.4);
    std::vector<CalibrationPoint> pts;
    std::vector<double> xs;
    for (int i = 0; i < 24; ++i) {
      const double x = -2.0 + i * (4.0 / 23.0);
      const double y = 1.0 + 0.5 * x - 0.8 * x * x + noise(rng);
      pts.push_back(pt(x, y));
      xs.push_back(x);
    }
    const int order = 3;
    const auto model = fit_poly_ls(pts, order, Direction::volume_to_perimeter);
    std::vector<double> residual;
    for (const auto& p : pts)
      residual.push_back(p.perimeter_px - evaluate(model, p.volume_ml).value);
    double res_norm = 0.0;
    for (const double r : residual) res_norm += r * r;
    res_norm = std::sqrt(res_norm);
    for (int k = 0; k <= order; ++k) {
      double dot = 0.0, col_norm = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double c = raw_power(xs[i], k);
        dot += residual[i] * c;
        col_norm += c * c;
      }
      col_norm = std::sqrt(col_norm);
      CHECK(std::abs(dot) < 1e-8 * std::max(1.0, res_norm * col_norm));
    }
  }
  SUBCASE("residual sum of squares is nonincreasing in order") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<CalibrationPoint> pts;
    for (int i = 0; i < 30; ++i) {
      const double x = 0.1 * i;
      pts.push_back(pt(x, 5.0 + 3.0 * x - 0.2 * x * x + noise(rng)));
    }
    double prev = std::numeric_limits<double>::infinity();
    for (int order = 1; order <= 5; ++order) {
      const auto model = fit_poly_ls(pts, order, Direction::volume_to_perimeter);
      double rss = 0.0;
      for (const auto& p : pts) {
        const double r = evaluate(model, p.volume_ml).value - p.perimeter_px;
        rss += r * r;
      }
      CHECK(rss <= prev * (1.0 + 1e-9));
      prev = rss;
    }
  }
}

TEST_CASE("calibration point selection") {
  simulate::MeniscusProfile profile;  // 0.5 / 2.2 / 2.6, dry 0.3

  SUBCASE("21-step sweep over 0.2..2.5 yields 2 points per region") {
    std::vector<std::pair<double, double>> sweep_points;
    for (int i = 0; i < 21; ++i) {
      const double v = 0.2 + (2.5 - 0.2) * i / 20.0;
      sweep_points.emplace_back(v, 500.0 + 100.0 * v);
    }
    const auto six = select_calibration_points(sweep_points, profile);
    CHECK(six[0].volume_ml < 0.5);
    CHECK(six[1].volume_ml < 0.5);
    CHECK(six[2].volume_ml >= 0.5);
    CHECK(six[3].volume_ml < 2.2);
    CHECK(six[4].volume_ml >= 2.2);
    CHECK(six[5].volume_ml <= 2.5);
    CHECK(six[0].volume_ml < six[1].volume_ml);
    CHECK(six[2].volume_ml < six[3].volume_ml);
    CHECK(six[4].volume_ml < six[5].volume_ml);
    for (int i = 0; i < 6; ++i) REQUIRE(six[i].region.has_value());
    CHECK(*six[0].region == simulate::Region::A);
    CHECK(*six[2].region == simulate::Region::B);
    CHECK(*six[4].region == simulate::Region::C);
  }
  SUBCASE("sweep confined to one region is rejected") {
    std::vector<std::pair<double, double>> sweep_points;
    for (int i = 0; i < 10; ++i) sweep_points.emplace_back(1.0 + 0.1 * i, 600.0 + i);
    CHECK(error_code_of([&] { select_calibration_points(sweep_points, profile); }) ==
          Errc::region_not_covered);
  }
  SUBCASE("boundary volumes follow the half-open region intervals") {
    std::vector<std::pair<double, double>> sweep_points = {
        {0.2, 1.0}, {0.4, 2.0}, {0.5, 3.0}, {1.0, 4.0},
        {2.2, 5.0}, {2.5, 6.0}, {0.3, 1.5}, {1.8, 4.5}};
    const auto six = select_calibration_points(sweep_points, profile);
    // 0.5 belongs to B, 2.2 belongs to C
    for (const auto& p : six) {
      if (p.volume_ml == 0.5) CHECK(*p.region == simulate::Region::B);
      if (p.volume_ml == 2.2) CHECK(*p.region == simulate::Region::C);
    }
  }
}

TEST_CASE("evaluate and invert") {
  const auto line = fit_linear_2pt(pt(0.5, 80.0), pt(2.0, 140.0),
                                   Direction::volume_to_perimeter);

  SUBCASE("extrapolation flag") {
    CHECK(!evaluate(line, 0.5).extrapolated);   // at range min: in range
    CHECK(!evaluate(line, 2.0).extrapolated);
    CHECK(evaluate(line, 2.1).extrapolated);
    CHECK(evaluate(line, 0.4).extrapolated);
    CHECK(evaluate(line, 2.1).value == doctest::Approx(60.0 + 40.0 * 2.1));
  }
  SUBCASE("closed-form line inversion") {
    CHECK(invert(line, 110.0) == doctest::Approx(1.25).epsilon(1e-9));
  }
  SUBCASE("round trip on random in-range values") {
    std::vector<CalibrationPoint> pts;
    for (int i = 0; i < 12; ++i) {
      const double x = 0.2 * i;
      pts.push_back(pt(x, 300.0 + 40.0 * x + 2.0 * x * x));
    }
    const auto model = fit_poly_ls(pts, 2, Direction::volume_to_perimeter);
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> x_dist(model.range_min, model.range_max);
    for (int i = 0; i < 100; ++i) {
      const double x = x_dist(rng);
      const double y = evaluate(model, x).value;
      CHECK(std::abs(invert(model, y) - x) < 1e-6);
    }
  }
  SUBCASE("non-monotone model is rejected") {
    // parabola with the vertex inside the range
    std::vector<CalibrationPoint> pts = {pt(-1, 1), pt(0, 0), pt(1, 1)};
    const auto model = fit_poly_ls(pts, 2, Direction::volume_to_perimeter);
    CHECK(error_code_of([&] { invert(model, 0.5); }) == Errc::not_monotone);
  }
  SUBCASE("target outside the model image") {
    CHECK(error_code_of([&] { invert(line, 1000.0); }) == Errc::out_of_range);
  }
  SUBCASE("volume_from_perimeter uses the model direction") {
    const auto p2v = fit_linear_2pt(pt(0.5, 80.0), pt(2.0, 140.0),
                                    Direction::perimeter_to_volume);
    CHECK(volume_from_perimeter(p2v, 110.0).value == doctest::Approx(1.25));
    CHECK(volume_from_perimeter(line, 110.0).value == doctest::Approx(1.25).epsilon(1e-9));
  }
}

TEST_CASE("two-point fit predicts every region-B point of the analytic curve") {
  simulate::SceneConfig scene;
  std::vector<std::pair<double, double>> region_b;
  for (int i = 0; i < 100; ++i) {
    const double v = 0.52 + (2.18 - 0.52) * i / 99.0;
    region_b.emplace_back(v, simulate::effective_perimeter(scene, v));
  }
  const auto p1 = region_b[25], p2 = region_b[75];
  const auto model = fit_linear_2pt(pt(p1.first, p1.second), pt(p2.first, p2.second),
                                    Direction::volume_to_perimeter);
  for (const auto& [v, perimeter] : region_b) {
    CHECK(std::abs(evaluate(model, v).value - perimeter) < 1e-3 * perimeter);
  }
}

TEST_CASE("error report") {
  const auto model = fit_linear_2pt(pt(80.0, 0.5), pt(140.0, 2.0),
                                    Direction::perimeter_to_volume);

  SUBCASE("self-consistent truth has zero error") {
    std::vector<std::pair<double, double>> truth;
    for (double p : {80.0, 95.0, 110.0, 140.0})
      truth.emplace_back(evaluate(model, p).value, p);
    const auto report = error_report(model, truth);
    CHECK(report.mean_abs_error_ul == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(report.max_abs_error_ul == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("constant offset shows up one-to-one in microliters") {
    std::vector<std::pair<double, double>> truth;
    for (double p : {80.0, 95.0, 110.0, 140.0})
      truth.emplace_back(evaluate(model, p).value - 0.05, p);
    const auto report = error_report(model, truth);
    CHECK(report.mean_abs_error_ul == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(report.max_abs_error_ul == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(report.points.size() == 4);
    for (const auto& pe : report.points)
      CHECK(pe.error_ul == doctest::Approx(50.0).epsilon(1e-9));
  }
  SUBCASE("per-region breakdown") {
    simulate::MeniscusProfile profile;
    std::vector<std::pair<double, double>> truth = {{0.4, 90.0}, {1.0, 100.0}, {2.3, 120.0}};
    const auto report = error_report(model, truth, profile);
    CHECK(report.by_region.size() == 3);
    CHECK(report.by_region.at(simulate::Region::A).count == 1);
    CHECK(report.by_region.at(simulate::Region::B).count == 1);
    CHECK(report.by_region.at(simulate::Region::C).count == 1);
    CHECK(report.max_abs_error_ul >=
          report.by_region.at(simulate::Region::B).max_abs_error_ul);
  }
}

TEST_CASE("model JSON persistence") {
  CalibrationModel model;
  model.kind = ModelKind::poly_least_squares;
  model.order = 2;
  model.direction = Direction::perimeter_to_volume;
  model.coefficients = {1.5, -0.25, 0.003};
  model.range_min = 500.0;
  model.range_max = 620.0;
  model.well_id = "w3";
  model.created_utc = "2026-08-08T10:00:00Z";
  model.points_used = 6;

  SUBCASE("round trip") {
    const std::string text = model_to_json(model);
    const CalibrationModel back = model_from_json(text);
    CHECK(back.kind == model.kind);
    CHECK(back.order == model.order);
    CHECK(back.direction == model.direction);
    CHECK(back.coefficients == model.coefficients);
    CHECK(back.range_min == model.range_min);
    CHECK(back.range_max == model.range_max);
    CHECK(back.well_id == model.well_id);
    CHECK(back.created_utc == model.created_utc);
    CHECK(back.points_used == model.points_used);
  }
  SUBCASE("field order is pinned") {
    const std::string text = model_to_json(model);
    std::size_t pos = 0;
    for (const char* field :
         {"\"version\"", "\"well_id\"", "\"kind\"", "\"order\"", "\"direction\"",
          "\"coefficients\"", "\"valid_range\"", "\"created_utc\"", "\"points_used\""}) {
      const std::size_t at = text.find(field);
      REQUIRE(at != std::string::npos);
      CHECK(at > pos);
      pos = at;
    }
  }
  SUBCASE("unknown fields are rejected") {
    std::string text = model_to_json(model);
    text.insert(text.find("\"version\""), "\"extra\": 1,\n  ");
    CHECK(error_code_of([&] { model_from_json(text); }) == Errc::bad_config);
  }
  SUBCASE("missing fields are rejected") {
    const std::string text = model_to_json(model);
    const std::size_t at = text.find("  \"order\": 2,\n");
    REQUIRE(at != std::string::npos);
    std::string broken = text;
    broken.erase(at, std::string("  \"order\": 2,\n").size());
    CHECK(error_code_of([&] { model_from_json(broken); }) == Errc::bad_config);
  }
  SUBCASE("coefficient count must match the order") {
    std::string text = model_to_json(model);
    const std::size_t at = text.find("\"order\": 2");
    std::string broken = text;
    broken.replace(at, std::string("\"order\": 2").size(), "\"order\": 3");
    CHECK(error_code_of([&] { model_from_json(broken); }) == Errc::bad_config);
  }
  SUBCASE("file round trip") {
    test_util::TempDir dir("model");
    const std::string path = (dir.path() / "model.json").string();
    save_model(path, model);
    const CalibrationModel back = load_model(path);
    CHECK(back.coefficients == model.coefficients);
    CHECK(error_code_of([&] { load_model((dir.path() / "nope.json").string()); }) ==
          Errc::io_error);
  }
}
