#include "fluidlevel/cli.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "fluidlevel/errors.hpp"
#include "fluidlevel/ingest.hpp"

namespace fluidlevel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::bad_config:
      return kExitConfig;
    case Errc::io_error:
      return kExitIo;
    case Errc::no_matches:
    case Errc::no_contour:
      return kExitNoData;
    default:
      return kExitNumeric;
  }
}

// --- configuration ----------------------------------------------------------

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> keys,
                const std::string& where) {
  if (!obj.is_object()) raise(Errc::bad_config, "config: " + where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known)
      raise(Errc::bad_config, "config: unknown field '" + key + "' in " + where);
  }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    raise(Errc::bad_config, "config: bad value for '" + std::string(key) + "' in " + where);
  }
}

void parse_scene(const json& obj, simulate::SceneConfig& scene) {
  check_keys(obj,
             {"geometry", "media", "camera", "source_radius_mm", "meniscus", "noise_sigma",
              "occlusion_fraction", "astigmatism_ratio", "seed"},
             "scene");
  if (obj.contains("geometry")) {
    const json& g = obj.at("geometry");
    check_keys(g,
               {"source_height_mm", "bottom_offset_mm", "well_radius_mm", "well_depth_mm",
                "capacity_ml"},
               "scene.geometry");
    get_if(g, "source_height_mm", scene.geometry.source_height_mm, "scene.geometry");
    get_if(g, "bottom_offset_mm", scene.geometry.bottom_offset_mm, "scene.geometry");
    get_if(g, "well_radius_mm", scene.geometry.well_radius_mm, "scene.geometry");
    get_if(g, "well_depth_mm", scene.geometry.well_depth_mm, "scene.geometry");
    get_if(g, "capacity_ml", scene.geometry.capacity_ml, "scene.geometry");
  }
  if (obj.contains("media")) {
    const json& m = obj.at("media");
    check_keys(m, {"n_ambient", "n_fluid"}, "scene.media");
    get_if(m, "n_ambient", scene.media.n_ambient, "scene.media");
    get_if(m, "n_fluid", scene.media.n_fluid, "scene.media");
  }
  if (obj.contains("camera")) {
    const json& c = obj.at("camera");
    check_keys(c,
               {"focal_length_mm", "pixel_pitch_mm", "width_px", "height_px",
                "principal_x_px", "principal_y_px"},
               "scene.camera");
    get_if(c, "focal_length_mm", scene.camera.focal_length_mm, "scene.camera");
    get_if(c, "pixel_pitch_mm", scene.camera.pixel_pitch_mm, "scene.camera");
    get_if(c, "width_px", scene.camera.width_px, "scene.camera");
    get_if(c, "height_px", scene.camera.height_px, "scene.camera");
    get_if(c, "principal_x_px", scene.camera.principal_x_px, "scene.camera");
    get_if(c, "principal_y_px", scene.camera.principal_y_px, "scene.camera");
  }
  if (obj.contains("meniscus")) {
    const json& m = obj.at("meniscus");
    check_keys(m,
               {"v_dry_ml", "v_film_ml", "v_invert_ml", "v_overflow_ml",
                "developing_slope_factor", "inversion_gain"},
               "scene.meniscus");
    get_if(m, "v_dry_ml", scene.meniscus.v_dry_ml, "scene.meniscus");
    get_if(m, "v_film_ml", scene.meniscus.v_film_ml, "scene.meniscus");
    get_if(m, "v_invert_ml", scene.meniscus.v_invert_ml, "scene.meniscus");
    get_if(m, "v_overflow_ml", scene.meniscus.v_overflow_ml, "scene.meniscus");
    get_if(m, "developing_slope_factor", scene.meniscus.developing_slope_factor,
           "scene.meniscus");
    get_if(m, "inversion_gain", scene.meniscus.inversion_gain, "scene.meniscus");
  }
  get_if(obj, "source_radius_mm", scene.source_radius_mm, "scene");
  get_if(obj, "noise_sigma", scene.noise_sigma, "scene");
  get_if(obj, "occlusion_fraction", scene.occlusion_fraction, "scene");
  get_if(obj, "astigmatism_ratio", scene.astigmatism_ratio, "scene");
  get_if(obj, "seed", scene.seed, "scene");
}

void parse_vision(const json& obj, vision::VisionParams& params) {
  check_keys(obj, {"threshold", "min_contour_area", "center_weight"}, "vision");
  if (obj.contains("threshold")) {
    const json& t = obj.at("threshold");
    if (t.is_string() && t.get<std::string>() == "auto") {
      params.threshold_mode = vision::VisionParams::ThresholdMode::automatic;
    } else if (t.is_number_integer()) {
      const int level = t.get<int>();
      if (level < 0 || level > 255)
        raise(Errc::bad_config, "config: vision.threshold must be 'auto' or 0..255");
      params.threshold_mode = vision::VisionParams::ThresholdMode::fixed;
      params.fixed_level = static_cast<std::uint8_t>(level);
    } else {
      raise(Errc::bad_config, "config: vision.threshold must be 'auto' or 0..255");
    }
  }
  get_if(obj, "min_contour_area", params.min_contour_area, "vision");
  get_if(obj, "center_weight", params.center_weight, "vision");
}

void parse_stabilizer(const json& obj, stabilize::StabilizerConfig& config) {
  check_keys(obj, {"window", "sigma_threshold", "relative_threshold", "rearm_factor"},
             "stabilizer");
  get_if(obj, "window", config.window, "stabilizer");
  get_if(obj, "sigma_threshold", config.sigma_threshold, "stabilizer");
  get_if(obj, "relative_threshold", config.relative_threshold, "stabilizer");
  get_if(obj, "rearm_factor", config.rearm_factor, "stabilizer");
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    raise(Errc::bad_config, std::string("config: JSON parse error: ") + e.what());
  }
  check_keys(doc, {"scene", "vision", "stabilizer", "model_path", "source", "output"},
             "config");
  RunConfig config;
  if (doc.contains("scene")) parse_scene(doc.at("scene"), config.scene);
  if (doc.contains("vision")) parse_vision(doc.at("vision"), config.vision);
  if (doc.contains("stabilizer")) parse_stabilizer(doc.at("stabilizer"), config.stabilizer);
  get_if(doc, "model_path", config.model_path, "config");
  get_if(doc, "source", config.source, "config");
  get_if(doc, "output", config.output, "config");
  config.scene.validate();
  config.vision.validate();
  config.stabilizer.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::bad_config, "config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str());
}

// --- CSV --------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    return used == s.size();
  } catch (...) {
    return false;
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "csv: cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

ingest::DirectorySourceOptions lenient_dir_options(std::ostream& err) {
  ingest::DirectorySourceOptions options;
  options.strict = false;
  options.on_skip = [&err](const std::string& path, const std::string& reason) {
    err << "skip " << path << ": " << reason << "\n";
  };
  return options;
}

// Writes to a file, or to the fallback stream when path is "-" or empty.
class OutputTarget {
public:
  OutputTarget(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      os_ = &fallback;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) raise(Errc::io_error, "output: cannot open '" + path + "'");
      os_ = &file_;
    }
  }

  std::ostream& stream() { return *os_; }

  void close() {
    if (file_.is_open()) {
      file_.close();
      if (!file_) raise(Errc::io_error, "output: write failed");
    }
  }

private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

}  // namespace

std::vector<std::pair<double, double>> read_points_csv(const std::string& path) {
  std::vector<std::pair<double, double>> points;
  bool first = true;
  for (const std::string& line : read_lines(path)) {
    const auto fields = split_csv_line(line);
    double v = 0.0, p = 0.0;
    if (fields.size() < 2 || !parse_double(fields[0], v) || !parse_double(fields[1], p)) {
      if (first) {
        first = false;  // header row
        continue;
      }
      raise(Errc::bad_config, "csv: bad row '" + line + "' in " + path);
    }
    first = false;
    points.emplace_back(v, p);
  }
  return points;
}

std::vector<ManifestRow> read_manifest_csv(const std::string& path) {
  std::vector<ManifestRow> rows;
  bool first = true;
  for (const std::string& line : read_lines(path)) {
    const auto fields = split_csv_line(line);
    ManifestRow row;
    if (fields.size() != 3 || !parse_double(fields[0], row.volume_ml) ||
        !parse_double(fields[2], row.expected_perimeter_px)) {
      if (first) {
        first = false;
        continue;
      }
      raise(Errc::bad_config, "manifest: bad row '" + line + "' in " + path);
    }
    first = false;
    row.frame_path = fields[1];
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- simulate ----------------------------------------------------------------

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  try {
    args.config.scene.validate();
    if (!(args.v_start < args.v_end) || args.steps < 2 || args.v_start < 0.0)
      raise(Errc::bad_config, "simulate: need 0 <= v_start < v_end and steps >= 2");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    fs::create_directories(args.out_dir);
    std::ostringstream manifest;
    manifest << "volume_ml,frame_path,expected_perimeter_px\n";
    const double dv = (args.v_end - args.v_start) / (args.steps - 1);
    for (int i = 0; i < args.steps; ++i) {
      const double v = (i == args.steps - 1) ? args.v_end : args.v_start + i * dv;
      const Frame frame =
          simulate::render_frame(args.config.scene, v, static_cast<std::uint64_t>(i));
      char name[32];
      std::snprintf(name, sizeof name, "frame_%04d.pgm", i);
      ingest::write_pgm_file((fs::path(args.out_dir) / name).string(), frame);
      manifest << format_number(v) << ',' << name << ','
               << format_number(simulate::effective_perimeter(args.config.scene, v)) << "\n";
    }
    std::ofstream mf(fs::path(args.out_dir) / "manifest.csv", std::ios::binary);
    if (!mf) raise(Errc::io_error, "simulate: cannot write manifest.csv");
    mf << manifest.str();
    if (!mf) raise(Errc::io_error, "simulate: manifest write failed");
    out << "wrote " << args.steps << " frames + manifest.csv to " << args.out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

// --- analyze ----------------------------------------------------------------

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
  std::unique_ptr<ingest::FrameSource> source;
  try {
    source = ingest::open_source(args.source, lenient_dir_options(err));
  } catch (const Error& e) {
    err << "error: cannot open source: " << e.what() << "\n";
    return e.code() == Errc::bad_config ? kExitConfig : kExitNoData;
  }

  try {
    OutputTarget target(args.out_csv, out);
    target.stream() << "timestamp,cx,cy,a,b,rotation,perimeter\n";
    std::size_t index = 0, measured = 0;
    for (;;) {
      std::optional<Frame> frame;
      try {
        frame = source->next();
      } catch (const Error& e) {
        err << "source error: " << e.what() << "\n";
        break;
      }
      if (!frame) break;
      const double ts = frame->timestamp.value_or(static_cast<double>(index) / 30.0);
      ++index;
      try {
        const vision::EllipseFit fit = vision::measure_frame(*frame, args.config.vision);
        target.stream() << format_number(ts) << ',' << format_number(fit.center_x) << ','
                        << format_number(fit.center_y) << ',' << format_number(fit.semi_major)
                        << ',' << format_number(fit.semi_minor) << ','
                        << format_number(fit.rotation) << ',' << format_number(fit.perimeter)
                        << "\n";
        ++measured;
      } catch (const Error& e) {
        err << "frame " << index - 1 << " skipped: " << errc_name(e.code()) << ": "
            << e.what() << "\n";
      }
    }
    target.close();
    if (measured == 0) {
      err << "error: no frames measured\n";
      return kExitNoData;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

// --- calibrate ----------------------------------------------------------------

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err) {
  try {
    std::vector<calibrate::CalibrationPoint> points;
    if (!args.manifest_csv.empty()) {
      std::vector<std::pair<double, double>> sweep_points;
      for (const auto& row : read_manifest_csv(args.manifest_csv))
        sweep_points.emplace_back(row.volume_ml, row.expected_perimeter_px);
      const auto selected =
          calibrate::select_calibration_points(sweep_points, args.config.scene.meniscus);
      points.assign(selected.begin(), selected.end());
    } else if (!args.points_csv.empty()) {
      for (const auto& [v, p] : read_points_csv(args.points_csv))
        points.push_back({v, p, std::nullopt});
    } else {
      raise(Errc::bad_config, "calibrate: need --points or --manifest");
    }

    const calibrate::Direction direction = [&] {
      if (args.direction == "p2v") return calibrate::Direction::perimeter_to_volume;
      if (args.direction == "v2p") return calibrate::Direction::volume_to_perimeter;
      raise(Errc::bad_config, "calibrate: direction must be p2v or v2p");
    }();

    calibrate::CalibrationModel model;
    if (args.kind == "linear2") {
      if (!args.manifest_csv.empty()) {
        // Two-point fit wants the linear region: use the region-B picks.
        model = calibrate::fit_linear_2pt(points[2], points[3], direction);
      } else {
        if (points.size() != 2)
          raise(Errc::bad_config, "calibrate: --kind linear2 expects exactly 2 points");
        model = calibrate::fit_linear_2pt(points[0], points[1], direction);
      }
    } else if (args.kind == "poly") {
      model = calibrate::fit_poly_ls(points, args.order, direction);
    } else {
      raise(Errc::bad_config, "calibrate: kind must be poly or linear2");
    }
    model.well_id = args.well_id;

    if (!args.out_model.empty()) calibrate::save_model(args.out_model, model);

    out << "kind=" << (model.kind == calibrate::ModelKind::linear_2pt ? "linear_2pt" : "poly_ls")
        << " order=" << model.order << " direction=" << args.direction
        << " points=" << model.points_used << "\n";
    double rss = 0.0, max_abs = 0.0;
    for (const auto& p : points) {
      const double x = direction == calibrate::Direction::volume_to_perimeter ? p.volume_ml
                                                                              : p.perimeter_px;
      const double y = direction == calibrate::Direction::volume_to_perimeter ? p.perimeter_px
                                                                              : p.volume_ml;
      const double r = calibrate::evaluate(model, x).value - y;
      rss += r * r;
      max_abs = std::max(max_abs, std::abs(r));
    }
    out << "residual rss=" << format_number(rss) << " max_abs=" << format_number(max_abs)
        << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

// --- measure ----------------------------------------------------------------

namespace {

class LineSink {
public:
  explicit LineSink(std::ostream& os) : os_(os) {}

  void write(const std::string& line) {
    const std::lock_guard<std::mutex> lock(mutex_);
    os_ << line << "\n";
    os_.flush();
  }

private:
  std::ostream& os_;
  std::mutex mutex_;
};

std::string reading_line(const std::string& well_id, double ts, double perimeter,
                         double volume, char region, bool stabilized, double sigma,
                         bool extrapolated) {
  std::ostringstream line;
  line << '{';
  if (!well_id.empty()) line << "\"well\":\"" << well_id << "\",";
  line << "\"ts\":" << format_number(ts) << ",\"perimeter_px\":" << format_number(perimeter)
       << ",\"volume_ml\":" << format_number(volume) << ",\"region\":\"" << region
       << "\",\"stabilized\":" << (stabilized ? "true" : "false")
       << ",\"sigma_px\":" << format_number(sigma)
       << ",\"extrapolated\":" << (extrapolated ? "true" : "false") << '}';
  return line.str();
}

struct MeasureOutcome {
  std::size_t frames = 0;
  std::size_t measured = 0;
  std::size_t emitted = 0;
};

MeasureOutcome run_measure_pipeline(ingest::FrameSource& source,
                                    const calibrate::CalibrationModel& model,
                                    const RunConfig& config, bool verbose,
                                    const std::string& well_id, LineSink& sink,
                                    std::ostream& err) {
  stabilize::Stabilizer stabilizer(config.stabilizer);
  const simulate::MeniscusProfile& profile = config.scene.meniscus;
  MeasureOutcome outcome;

  for (;;) {
    std::optional<Frame> frame;
    try {
      frame = source.next();
    } catch (const Error& e) {
      err << (well_id.empty() ? std::string() : well_id + ": ") << "source error: "
          << e.what() << "\n";
      break;
    }
    if (!frame) break;
    const double ts =
        frame->timestamp.value_or(static_cast<double>(outcome.frames) / 30.0);
    ++outcome.frames;

    double perimeter = 0.0;
    try {
      perimeter = vision::measure_frame(*frame, config.vision).perimeter;
    } catch (const Error& e) {
      err << (well_id.empty() ? std::string() : well_id + ": ") << "frame "
          << outcome.frames - 1 << " skipped: " << errc_name(e.code()) << "\n";
      continue;
    }
    ++outcome.measured;

    const auto emit = [&](double value_px, bool stabilized, double sigma) {
      try {
        const calibrate::EvalResult estimate =
            calibrate::volume_from_perimeter(model, value_px);
        const char region =
            simulate::region_letter(simulate::region_of(std::max(estimate.value, 0.0), profile));
        sink.write(reading_line(well_id, ts, value_px, estimate.value, region, stabilized,
                                sigma, estimate.extrapolated));
        if (stabilized) ++outcome.emitted;
      } catch (const Error& e) {
        err << (well_id.empty() ? std::string() : well_id + ": ")
            << "reading dropped: " << errc_name(e.code()) << ": " << e.what() << "\n";
      }
    };

    const std::optional<stabilize::StableReading> reading = stabilizer.push(perimeter, ts);
    if (verbose && !reading)
      emit(perimeter, false, stabilizer.window_sigma().value_or(0.0));
    if (reading) emit(reading->value, true, reading->sigma);
  }
  return outcome;
}

}  // namespace

int cmd_measure(const MeasureArgs& args, std::ostream& out, std::ostream& err) {
  calibrate::CalibrationModel model;
  try {
    if (args.model_path.empty())
      raise(Errc::bad_config, "measure: a calibration model is required (--model)");
    model = calibrate::load_model(args.model_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    OutputTarget target(args.out_ndjson, out);
    LineSink sink(target.stream());

    if (!args.wells.empty()) {
      std::vector<std::thread> threads;
      std::vector<MeasureOutcome> outcomes(args.wells.size());
      std::mutex err_mutex;
      for (std::size_t i = 0; i < args.wells.size(); ++i) {
        threads.emplace_back([&, i] {
          const auto& [well_id, spec] = args.wells[i];
          std::ostringstream local_err;
          try {
            const auto source = ingest::open_source(spec, lenient_dir_options(local_err));
            outcomes[i] = run_measure_pipeline(*source, model, args.config, args.verbose,
                                               well_id, sink, local_err);
          } catch (const Error& e) {
            local_err << well_id << ": cannot open source: " << e.what() << "\n";
          }
          const std::lock_guard<std::mutex> lock(err_mutex);
          err << local_err.str();
        });
      }
      for (auto& t : threads) t.join();
      target.close();
      std::size_t measured = 0;
      for (const auto& o : outcomes) measured += o.measured;
      return measured > 0 ? kExitOk : kExitNoData;
    }

    std::unique_ptr<ingest::FrameSource> source;
    try {
      source = ingest::open_source(args.source, lenient_dir_options(err));
    } catch (const Error& e) {
      err << "error: cannot open source: " << e.what() << "\n";
      return e.code() == Errc::bad_config ? kExitConfig : kExitNoData;
    }
    const MeasureOutcome outcome =
        run_measure_pipeline(*source, model, args.config, args.verbose, "", sink, err);
    target.close();
    return outcome.measured > 0 ? kExitOk : kExitNoData;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

// --- evaluate ----------------------------------------------------------------

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  try {
    if (args.model_paths.empty())
      raise(Errc::bad_config, "evaluate: at least one --model is required");
    const auto truth = read_points_csv(args.truth_csv);
    if (truth.empty()) raise(Errc::bad_config, "evaluate: empty truth csv");

    OutputTarget target(args.out_csv, out);
    target.stream() << "model,volume_ml,perimeter_px,estimated_ml,error_ul,region\n";
    out << "model,points,mae_ul,max_abs_ul\n";
    for (const std::string& path : args.model_paths) {
      const calibrate::CalibrationModel model = calibrate::load_model(path);
      const calibrate::ErrorReport report =
          calibrate::error_report(model, truth, args.config.scene.meniscus);
      for (const auto& pe : report.points) {
        target.stream() << path << ',' << format_number(pe.volume_ml) << ','
                        << format_number(pe.perimeter_px) << ','
                        << format_number(pe.estimated_ml) << ','
                        << format_number(pe.error_ul) << ','
                        << (pe.region ? simulate::region_letter(*pe.region) : '?') << "\n";
      }
      out << path << ',' << report.points.size() << ','
          << format_number(report.mean_abs_error_ul) << ','
          << format_number(report.max_abs_error_ul) << "\n";
    }
    target.close();
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

}  // namespace fluidlevel::cli
