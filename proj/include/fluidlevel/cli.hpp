#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fluidlevel/calibrate.hpp"
#include "fluidlevel/errors.hpp"
#include "fluidlevel/simulate.hpp"
#include "fluidlevel/stabilize.hpp"
#include "fluidlevel/vision.hpp"

namespace fluidlevel::cli {

// Exit codes, shared across subcommands and kept disjoint:
// 0 success, 2 config/model error, 3 I/O error, 4 no data, 5 numeric/fit failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNoData = 4;
inline constexpr int kExitNumeric = 5;

int exit_code_for(Errc code);

/// One JSON document mirroring the pipeline configuration; flags override
/// individual fields after the file is loaded.
struct RunConfig {
  simulate::SceneConfig scene{};
  vision::VisionParams vision{};
  stabilize::StabilizerConfig stabilizer{};
  std::string model_path;
  std::string source;
  std::string output;
};

RunConfig config_from_json_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

struct SimulateArgs {
  RunConfig config;
  double v_start = 0.2;
  double v_end = 3.0;
  int steps = 57;
  std::string out_dir;
};

struct AnalyzeArgs {
  RunConfig config;
  std::string source;       // dir:<path>, file:<path> or http(s)://
  std::string out_csv;      // "-" = stdout
};

struct CalibrateArgs {
  RunConfig config;
  std::string points_csv;    // rows volume_ml,perimeter_px
  std::string manifest_csv;  // simulate output; 6-point auto selection
  std::string kind = "poly"; // "poly" | "linear2"
  int order = 4;
  std::string direction = "p2v";  // "p2v" | "v2p"
  std::string well_id = "default";
  std::string out_model;
};

struct MeasureArgs {
  RunConfig config;
  std::string source;
  std::string model_path;
  std::string out_ndjson;  // "-" = stdout
  bool verbose = false;    // also emit per-frame raw readings
  std::vector<std::pair<std::string, std::string>> wells;  // id -> source spec
};

struct EvaluateArgs {
  RunConfig config;
  std::vector<std::string> model_paths;
  std::string truth_csv;    // rows volume_ml,perimeter_px
  std::string out_csv;      // per-point errors; "-" = stdout
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err);
int cmd_measure(const MeasureArgs& args, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);

/// Rows of (volume_ml, perimeter_px). Skips a leading header line.
std::vector<std::pair<double, double>> read_points_csv(const std::string& path);

/// Manifest rows from cmd_simulate: volume, frame path, expected perimeter.
struct ManifestRow {
  double volume_ml = 0.0;
  std::string frame_path;
  double expected_perimeter_px = 0.0;
};
std::vector<ManifestRow> read_manifest_csv(const std::string& path);

}  // namespace fluidlevel::cli
