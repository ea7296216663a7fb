#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "codec_helpers.hpp"
#include "fixture_server.hpp"
#include "fluidlevel/cli.hpp"
#include "fluidlevel/errors.hpp"
#include "fluidlevel/ingest.hpp"
#include "fluidlevel/simulate.hpp"
#include "test_util.hpp"

using namespace fluidlevel;
using namespace fluidlevel::cli;
using test_util::error_code_of;

namespace {

// Small camera and source so CLI-level tests stay fast.
RunConfig small_config() {
  RunConfig config;
  config.scene.camera.width_px = 320;
  config.scene.camera.height_px = 240;
  config.scene.camera.principal_x_px = 160.0;
  config.scene.camera.principal_y_px = 120.0;
  config.scene.source_radius_mm = 2.5;
  // absolute threshold: the tests script exact perimeter plateaus
  config.stabilizer.relative_threshold = false;
  config.stabilizer.sigma_threshold = 0.8;
  return config;
}

std::vector<std::string> file_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::uint8_t> slurp(const std::string& path) {
  return ingest::read_file(path);
}

int run_simulate(const test_util::TempDir& dir, const std::string& out_name, double v0,
                 double v1, int steps, std::uint64_t seed = 7) {
  SimulateArgs args;
  args.config = small_config();
  args.config.scene.seed = seed;
  args.v_start = v0;
  args.v_end = v1;
  args.steps = steps;
  args.out_dir = (dir.path() / out_name).string();
  std::ostringstream out, err;
  return cmd_simulate(args, out, err);
}

}  // namespace

TEST_CASE("cmd_simulate writes frames and a manifest") {
  test_util::TempDir dir("sim");
  REQUIRE(run_simulate(dir, "sweep", 0.2, 3.0, 12) == kExitOk);

  const auto manifest = file_lines((dir.path() / "sweep" / "manifest.csv").string());
  REQUIRE(manifest.size() == 13);
  CHECK(manifest[0] == "volume_ml,frame_path,expected_perimeter_px");
  for (int i = 0; i < 12; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.pgm", i);
    CHECK(std::filesystem::exists(dir.path() / "sweep" / name));
    CHECK(manifest[i + 1].find(name) != std::string::npos);
  }

  SUBCASE("same seed reruns byte-identically") {
    REQUIRE(run_simulate(dir, "again", 0.2, 3.0, 12) == kExitOk);
    for (int i = 0; i < 12; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%04d.pgm", i);
      CHECK(slurp((dir.path() / "sweep" / name).string()) ==
            slurp((dir.path() / "again" / name).string()));
    }
    CHECK(slurp((dir.path() / "sweep" / "manifest.csv").string()) ==
          slurp((dir.path() / "again" / "manifest.csv").string()));
  }
  SUBCASE("bad arguments exit 2, unwritable output exits 3") {
    SimulateArgs bad;
    bad.config = small_config();
    bad.v_start = 2.0;
    bad.v_end = 1.0;
    bad.out_dir = (dir.path() / "x").string();
    std::ostringstream out, err;
    CHECK(cmd_simulate(bad, out, err) == kExitConfig);

    const std::string blocker = (dir.path() / "blocker").string();
    std::ofstream(blocker) << "occupied";
    SimulateArgs io;
    io.config = small_config();
    io.v_start = 0.5;
    io.v_end = 1.0;
    io.steps = 2;
    io.out_dir = blocker + "/nested";
    CHECK(cmd_simulate(io, out, err) == kExitIo);
  }
}

TEST_CASE("cmd_analyze measures wet frames and skips dry ones") {
  test_util::TempDir dir("analyze");
  // volumes 0.1 .. 1.0 in 10 steps: 0.1 and 0.2 are below the droplet bound
  REQUIRE(run_simulate(dir, "sweep", 0.1, 1.0, 10) == kExitOk);

  AnalyzeArgs args;
  args.config = small_config();
  args.config.vision.min_contour_area = 300.0;  // droplets cannot pass this floor
  args.source = "dir:" + (dir.path() / "sweep").string();
  args.out_csv = (dir.path() / "fits.csv").string();
  std::ostringstream out, err;
  REQUIRE(cmd_analyze(args, out, err) == kExitOk);

  const auto lines = file_lines(args.out_csv);
  CHECK(lines[0] == "timestamp,cx,cy,a,b,rotation,perimeter");
  CHECK(lines.size() == 1 + 8);  // 8 frames at or above v_dry
  CHECK(err.str().find("skipped") != std::string::npos);

  SUBCASE("a directory of blank frames yields exit 4") {
    test_util::TempDir blank("blank");
    for (int i = 0; i < 3; ++i) {
      std::ofstream f(blank.path() / ("b" + std::to_string(i) + ".pgm"), std::ios::binary);
      const auto bytes = ingest::write_pgm(make_frame(32, 32, 0));
      f.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    }
    AnalyzeArgs null_args;
    null_args.config = small_config();
    null_args.source = "dir:" + blank.str();
    null_args.out_csv = (blank.path() / "fits.csv").string();
    std::ostringstream out2, err2;
    CHECK(cmd_analyze(null_args, out2, err2) == kExitNoData);
  }
  SUBCASE("missing directory is a config error") {
    AnalyzeArgs missing;
    missing.config = small_config();
    missing.source = "dir:" + (dir.path() / "not_there").string();
    std::ostringstream out2, err2;
    CHECK(cmd_analyze(missing, out2, err2) == kExitConfig);
  }
}

TEST_CASE("cmd_analyze over an MJPEG stream uses the same CSV schema") {
  test_util::TempDir dir("analyze_mjpeg");
  RunConfig config = small_config();

  std::vector<test_util::MjpegPartSpec> parts;
  for (int i = 0; i < 5; ++i) {
    const Frame frame = simulate::render_frame(config.scene, 1.2 + 0.2 * i, i);
    parts.push_back({test_util::encode_jpeg_gray(frame, 92), i % 2 == 0});
  }
  auto response = test_util::mjpeg_response_head("wellcam");
  const auto body = test_util::mjpeg_body("wellcam", parts, true);
  response.insert(response.end(), body.begin(), body.end());
  test_util::FixtureServer server(response);

  AnalyzeArgs args;
  args.config = config;
  args.source = server.url();
  args.out_csv = (dir.path() / "stream.csv").string();
  std::ostringstream out, err;
  REQUIRE(cmd_analyze(args, out, err) == kExitOk);

  const auto lines = file_lines(args.out_csv);
  CHECK(lines[0] == "timestamp,cx,cy,a,b,rotation,perimeter");
  CHECK(lines.size() == 1 + 5);
  // perimeters grow with the swept volume despite JPEG loss
  std::vector<double> perims;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream row(lines[i]);
    std::string field;
    for (int f = 0; f < 7; ++f) std::getline(row, field, ',');
    perims.push_back(std::stod(field));
  }
  for (std::size_t i = 1; i < perims.size(); ++i) CHECK(perims[i] > perims[i - 1]);
}

TEST_CASE("cmd_calibrate") {
  test_util::TempDir dir("calibrate");

  SUBCASE("manifest input with auto 6-point selection") {
    REQUIRE(run_simulate(dir, "sweep", 0.3, 2.59, 24) == kExitOk);
    CalibrateArgs args;
    args.config = small_config();
    args.manifest_csv = (dir.path() / "sweep" / "manifest.csv").string();
    args.kind = "poly";
    args.order = 4;
    args.out_model = (dir.path() / "model.json").string();
    std::ostringstream out, err;
    REQUIRE(cmd_calibrate(args, out, err) == kExitOk);

    const auto model = calibrate::load_model(args.out_model);
    CHECK(model.order == 4);
    CHECK(model.coefficients.size() == 5);
    CHECK(model.points_used == 6);
    CHECK(model.direction == calibrate::Direction::perimeter_to_volume);
  }
  SUBCASE("two points with linear2 make an exact line") {
    const std::string csv = (dir.path() / "two.csv").string();
    std::ofstream(csv) << "volume_ml,perimeter_px\n0.5,80\n2.0,140\n";
    CalibrateArgs args;
    args.config = small_config();
    args.points_csv = csv;
    args.kind = "linear2";
    args.direction = "v2p";
    args.out_model = (dir.path() / "line.json").string();
    std::ostringstream out, err;
    REQUIRE(cmd_calibrate(args, out, err) == kExitOk);
    const auto model = calibrate::load_model(args.out_model);
    CHECK(model.coefficients[1] == doctest::Approx(40.0));
    CHECK(model.coefficients[0] == doctest::Approx(60.0));
  }
  SUBCASE("too few points for the order exits 5") {
    const std::string csv = (dir.path() / "three.csv").string();
    std::ofstream(csv) << "0.5,80\n1.0,100\n2.0,140\n";
    CalibrateArgs args;
    args.config = small_config();
    args.points_csv = csv;
    args.kind = "poly";
    args.order = 5;
    std::ostringstream out, err;
    CHECK(cmd_calibrate(args, out, err) == kExitNumeric);
  }
  SUBCASE("bad kind exits 2") {
    CalibrateArgs args;
    args.config = small_config();
    args.points_csv = "/nonexistent.csv";
    args.kind = "spline";
    std::ostringstream out, err;
    CHECK(cmd_calibrate(args, out, err) != kExitOk);
  }
}

namespace {

// Renders `count` frames at a fixed volume into dir (distinct salts).
void write_constant_frames(const std::filesystem::path& dir, const RunConfig& config,
                           double volume, int count, int name_offset = 0,
                           std::uint64_t salt_offset = 0) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    const Frame frame =
        simulate::render_frame(config.scene, volume, salt_offset + i);
    char name[32];
    std::snprintf(name, sizeof name, "f%04d.pgm", name_offset + i);
    const auto bytes = ingest::write_pgm(frame);
    std::ofstream f(dir / name, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  }
}

// Two-point model calibrated through the measurement pipeline itself, so the
// pipeline's constant quantization bias cancels between fit and use.
calibrate::CalibrationModel measured_p2v_model(const RunConfig& config, double v1, double v2) {
  vision::VisionParams vp = config.vision;
  const auto measure = [&](double v) {
    const Frame frame = simulate::render_frame(config.scene, v, 9999);
    return vision::measure_frame(frame, vp).perimeter;
  };
  calibrate::CalibrationPoint p1{v1, measure(v1), std::nullopt};
  calibrate::CalibrationPoint p2{v2, measure(v2), std::nullopt};
  return calibrate::fit_linear_2pt(p1, p2, calibrate::Direction::perimeter_to_volume);
}

}  // namespace

TEST_CASE("cmd_measure emits stabilized NDJSON readings") {
  test_util::TempDir dir("measure");
  RunConfig config = small_config();

  const auto model = measured_p2v_model(config, 0.6, 2.1);
  const std::string model_path = (dir.path() / "model.json").string();
  calibrate::save_model(model_path, model);

  SUBCASE("a settled stream gives exactly one reading near the true volume") {
    write_constant_frames(dir.path() / "constant", config, 1.5, 14);
    MeasureArgs args;
    args.config = config;
    args.source = "dir:" + (dir.path() / "constant").string();
    args.model_path = model_path;
    args.out_ndjson = (dir.path() / "readings.ndjson").string();
    std::ostringstream out, err;
    REQUIRE(cmd_measure(args, out, err) == kExitOk);

    const auto lines = file_lines(args.out_ndjson);
    REQUIRE(lines.size() == 1);
    const auto doc = nlohmann::json::parse(lines[0]);
    CHECK(doc.at("stabilized").get<bool>());
    CHECK(doc.at("volume_ml").get<double>() == doctest::Approx(1.5).epsilon(0.03));
    CHECK(doc.at("region").get<std::string>() == "B");
    CHECK(!doc.at("extrapolated").get<bool>());
    // field order is part of the schema
    const std::string& line = lines[0];
    CHECK(line.find("\"ts\"") < line.find("\"perimeter_px\""));
    CHECK(line.find("\"perimeter_px\"") < line.find("\"volume_ml\""));
    CHECK(line.find("\"volume_ml\"") < line.find("\"region\""));
    CHECK(line.find("\"region\"") < line.find("\"stabilized\""));
    CHECK(line.find("\"stabilized\"") < line.find("\"sigma_px\""));
    CHECK(line.find("\"sigma_px\"") < line.find("\"extrapolated\""));
  }
  SUBCASE("two plateaus give exactly two readings") {
    write_constant_frames(dir.path() / "plateaus", config, 1.0, 14, 0, 100);
    write_constant_frames(dir.path() / "plateaus", config, 2.0, 14, 50, 200);
    MeasureArgs args;
    args.config = config;
    args.source = "dir:" + (dir.path() / "plateaus").string();
    args.model_path = model_path;
    args.out_ndjson = (dir.path() / "two.ndjson").string();
    std::ostringstream out, err;
    REQUIRE(cmd_measure(args, out, err) == kExitOk);
    const auto lines = file_lines(args.out_ndjson);
    REQUIRE(lines.size() == 2);
    CHECK(nlohmann::json::parse(lines[0]).at("volume_ml").get<double>() ==
          doctest::Approx(1.0).epsilon(0.05));
    CHECK(nlohmann::json::parse(lines[1]).at("volume_ml").get<double>() ==
          doctest::Approx(2.0).epsilon(0.05));
  }
  SUBCASE("readings outside the model range are flagged extrapolated") {
    const auto narrow = measured_p2v_model(config, 1.4, 1.6);
    const std::string narrow_path = (dir.path() / "narrow.json").string();
    calibrate::save_model(narrow_path, narrow);
    write_constant_frames(dir.path() / "beyond", config, 2.2, 14);
    MeasureArgs args;
    args.config = config;
    args.source = "dir:" + (dir.path() / "beyond").string();
    args.model_path = narrow_path;
    args.out_ndjson = (dir.path() / "extrap.ndjson").string();
    std::ostringstream out, err;
    REQUIRE(cmd_measure(args, out, err) == kExitOk);
    const auto lines = file_lines(args.out_ndjson);
    REQUIRE(lines.size() == 1);
    CHECK(nlohmann::json::parse(lines[0]).at("extrapolated").get<bool>());
  }
  SUBCASE("verbose mode adds per-frame raw readings") {
    write_constant_frames(dir.path() / "verbose", config, 1.5, 12);
    MeasureArgs args;
    args.config = config;
    args.verbose = true;
    args.source = "dir:" + (dir.path() / "verbose").string();
    args.model_path = model_path;
    args.out_ndjson = (dir.path() / "verbose.ndjson").string();
    std::ostringstream out, err;
    REQUIRE(cmd_measure(args, out, err) == kExitOk);
    const auto lines = file_lines(args.out_ndjson);
    CHECK(lines.size() == 12);  // 11 raw + 1 stabilized
    int stabilized = 0;
    for (const auto& line : lines)
      stabilized += nlohmann::json::parse(line).at("stabilized").get<bool>() ? 1 : 0;
    CHECK(stabilized == 1);
  }
  SUBCASE("bad model exits 2, empty source exits 4") {
    MeasureArgs args;
    args.config = config;
    args.source = "dir:" + dir.str();
    args.model_path = (dir.path() / "nope.json").string();
    std::ostringstream out, err;
    CHECK(cmd_measure(args, out, err) == kExitConfig);

    test_util::TempDir empty("empty");
    MeasureArgs no_frames;
    no_frames.config = config;
    no_frames.source = "dir:" + empty.str();
    no_frames.model_path = model_path;
    std::ostringstream out2, err2;
    CHECK(cmd_measure(no_frames, out2, err2) == kExitNoData);
  }
}

TEST_CASE("cmd_measure wells mode runs isolated concurrent pipelines") {
  test_util::TempDir dir("wells");
  RunConfig config = small_config();
  const auto model = measured_p2v_model(config, 0.6, 2.1);
  const std::string model_path = (dir.path() / "model.json").string();
  calibrate::save_model(model_path, model);

  write_constant_frames(dir.path() / "w1", config, 1.0, 14);
  write_constant_frames(dir.path() / "w2", config, 2.0, 14, 0, 500);

  MeasureArgs args;
  args.config = config;
  args.model_path = model_path;
  args.wells = {{"w1", "dir:" + (dir.path() / "w1").string()},
                {"w2", "dir:" + (dir.path() / "w2").string()}};
  args.out_ndjson = (dir.path() / "wells.ndjson").string();
  std::ostringstream out, err;
  REQUIRE(cmd_measure(args, out, err) == kExitOk);

  const auto lines = file_lines(args.out_ndjson);
  REQUIRE(lines.size() == 2);
  int w1 = 0, w2 = 0;
  for (const auto& line : lines) {
    const auto doc = nlohmann::json::parse(line);  // every line is complete JSON
    const std::string well = doc.at("well").get<std::string>();
    if (well == "w1") {
      ++w1;
      CHECK(doc.at("volume_ml").get<double>() == doctest::Approx(1.0).epsilon(0.05));
    } else if (well == "w2") {
      ++w2;
      CHECK(doc.at("volume_ml").get<double>() == doctest::Approx(2.0).epsilon(0.05));
    }
    CHECK(line.find("\"well\"") == 1);  // well id leads the record
  }
  CHECK(w1 == 1);
  CHECK(w2 == 1);
}

TEST_CASE("cmd_evaluate") {
  test_util::TempDir dir("evaluate");
  RunConfig config = small_config();
  const auto model = measured_p2v_model(config, 0.6, 2.1);
  const std::string model_path = (dir.path() / "model.json").string();
  calibrate::save_model(model_path, model);

  SUBCASE("model against its own curve has zero error") {
    const std::string truth = (dir.path() / "truth.csv").string();
    {
      std::ofstream f(truth);
      f << std::setprecision(15);
      f << "volume_ml,perimeter_px\n";
      for (int i = 0; i < 5; ++i) {
        const double p = model.range_min + (model.range_max - model.range_min) * i / 4.0;
        f << calibrate::evaluate(model, p).value << ',' << p << "\n";
      }
    }
    EvaluateArgs args;
    args.config = config;
    args.model_paths = {model_path};
    args.truth_csv = truth;
    args.out_csv = (dir.path() / "report.csv").string();
    std::ostringstream out, err;
    REQUIRE(cmd_evaluate(args, out, err) == kExitOk);

    const auto report = file_lines(args.out_csv);
    CHECK(report[0] == "model,volume_ml,perimeter_px,estimated_ml,error_ul,region");
    REQUIRE(report.size() == 6);
    for (std::size_t i = 1; i < report.size(); ++i) {
      // error_ul is the fifth column
      std::istringstream row(report[i]);
      std::string field;
      for (int f = 0; f < 5; ++f) std::getline(row, field, ',');
      CHECK(std::abs(std::stod(field)) < 1e-3);
    }

    const auto summary = out.str();
    CHECK(summary.find("model,points,mae_ul,max_abs_ul") != std::string::npos);
  }
  SUBCASE("constant 0.05 ml offset reads as 50 microliters") {
    auto shifted = model;
    shifted.coefficients[0] += 0.05;
    const std::string shifted_path = (dir.path() / "shifted.json").string();
    calibrate::save_model(shifted_path, shifted);

    const std::string truth = (dir.path() / "truth2.csv").string();
    {
      std::ofstream f(truth);
      f << std::setprecision(15);
      for (int i = 0; i < 5; ++i) {
        const double p = model.range_min + (model.range_max - model.range_min) * i / 4.0;
        f << calibrate::evaluate(model, p).value << ',' << p << "\n";
      }
    }
    EvaluateArgs args;
    args.config = config;
    args.model_paths = {shifted_path};
    args.truth_csv = truth;
    args.out_csv = (dir.path() / "report2.csv").string();
    std::ostringstream out, err;
    REQUIRE(cmd_evaluate(args, out, err) == kExitOk);
    std::istringstream summary(out.str());
    std::string line;
    std::getline(summary, line);  // header
    REQUIRE(std::getline(summary, line));
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ',');  // model path
    std::getline(row, field, ',');  // points
    std::getline(row, field, ',');
    CHECK(std::stod(field) == doctest::Approx(50.0).epsilon(1e-4));  // mae_ul
    std::getline(row, field, ',');
    CHECK(std::stod(field) == doctest::Approx(50.0).epsilon(1e-4));  // max_abs_ul
  }
  SUBCASE("several models give one summary row each") {
    // five polynomial orders fitted to a gently curved synthetic set
    const std::string truth = (dir.path() / "truth3.csv").string();
    std::vector<calibrate::CalibrationPoint> pts;
    {
      std::ofstream f(truth);
      for (int i = 0; i < 12; ++i) {
        const double v = 0.4 + 0.18 * i;
        const double p = 500.0 + 42.0 * v + 3.0 * v * v;
        pts.push_back({v, p, std::nullopt});
        f << v << ',' << p << "\n";
      }
    }
    EvaluateArgs args;
    args.config = config;
    args.truth_csv = truth;
    args.out_csv = (dir.path() / "report3.csv").string();
    for (int order = 1; order <= 5; ++order) {
      const auto poly =
          calibrate::fit_poly_ls(pts, order, calibrate::Direction::perimeter_to_volume);
      const std::string path = (dir.path() / ("m" + std::to_string(order) + ".json")).string();
      calibrate::save_model(path, poly);
      args.model_paths.push_back(path);
    }
    std::ostringstream out, err;
    REQUIRE(cmd_evaluate(args, out, err) == kExitOk);
    int rows = 0;
    std::istringstream summary(out.str());
    std::string line;
    while (std::getline(summary, line))
      if (line.find(".json,") != std::string::npos) ++rows;
    CHECK(rows == 5);
  }
}

TEST_CASE("run configuration file") {
  test_util::TempDir dir("config");
  const std::string path = (dir.path() / "run.json").string();
  std::ofstream(path) << R"({
    "scene": {
      "camera": {"width_px": 320, "height_px": 240, "principal_x_px": 160, "principal_y_px": 120},
      "source_radius_mm": 2.0,
      "noise_sigma": 1.5,
      "seed": 99
    },
    "vision": {"threshold": "auto", "min_contour_area": 40.0},
    "stabilizer": {"window": 6, "sigma_threshold": 0.01}
  })";

  const RunConfig config = load_run_config(path);
  CHECK(config.scene.camera.width_px == 320);
  CHECK(config.scene.source_radius_mm == 2.0);
  CHECK(config.scene.noise_sigma == 1.5);
  CHECK(config.scene.seed == 99);
  CHECK(config.vision.min_contour_area == 40.0);
  CHECK(config.stabilizer.window == 6);
  // untouched fields keep their defaults
  CHECK(config.scene.meniscus.v_film_ml == 0.5);

  SUBCASE("unknown fields are rejected") {
    CHECK(error_code_of([] { config_from_json_text(R"({"scene": {"wavelength": 5}})"); }) ==
          Errc::bad_config);
    CHECK(error_code_of([] { config_from_json_text(R"({"screne": {}})"); }) ==
          Errc::bad_config);
  }
  SUBCASE("invalid values are rejected") {
    CHECK(error_code_of([] {
            config_from_json_text(R"({"vision": {"threshold": 300}})");
          }) == Errc::bad_config);
    CHECK(error_code_of([] {
            config_from_json_text(R"({"stabilizer": {"window": 1}})");
          }) == Errc::bad_config);
  }
}

TEST_CASE("installed binary smoke test") {
  const std::string binary = FLUIDLEVEL_CLI_PATH;
  test_util::TempDir dir("smoke");

  const auto run = [&](const std::string& args) {
    const std::string cmd = binary + " " + args + " > " + (dir.path() / "out.txt").string() +
                            " 2> " + (dir.path() / "err.txt").string();
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };

  CHECK(run("--help") == 0);
  CHECK(run("simulate --v-start 0.5 --v-end 1.0 --steps 2 --out " +
            (dir.path() / "mini").string()) == 0);
  CHECK(std::filesystem::exists(dir.path() / "mini" / "manifest.csv"));
  // config/model errors surface as exit 2
  CHECK(run("measure --model " + (dir.path() / "missing.json").string() + " --source dir:" +
            dir.str()) == 2);
  // no subcommand is a usage error
  CHECK(run("") != 0);
}
