#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "fluidlevel/cli.hpp"
#include "fluidlevel/errors.hpp"

namespace cli = fluidlevel::cli;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

cli::RunConfig resolve_config(const CommonFlags& flags) {
  cli::RunConfig config;
  if (!flags.config_path.empty()) config = cli::load_run_config(flags.config_path);
  if (flags.seed) config.scene.seed = *flags.seed;
  return config;
}

void add_common(CLI::App* app, CommonFlags& flags) {
  app->add_option("--config", flags.config_path,
                  "JSON run configuration; flags override file values");
  app->add_option("--seed", flags.seed, "Scene seed (overrides config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Camera-based fluid level measurement: simulate wells, analyze frames,\n"
      "calibrate perimeter<->volume models and measure volumes from streams."};
  app.require_subcommand(1);

  // simulate
  CommonFlags sim_flags;
  cli::SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "Render a synthetic volume sweep dataset");
  add_common(sim, sim_flags);
  sim->add_option("--v-start", sim_args.v_start, "Start volume, ml")->capture_default_str();
  sim->add_option("--v-end", sim_args.v_end, "End volume, ml")->capture_default_str();
  sim->add_option("--steps", sim_args.steps, "Number of frames")->capture_default_str();
  sim->add_option("--out", sim_args.out_dir, "Output directory")->required();
  sim->add_option("--noise-sigma", sim_args.config.scene.noise_sigma,
                  "Gaussian noise sigma, gray levels");
  sim->add_option("--occlusion", sim_args.config.scene.occlusion_fraction,
                  "Occluded fraction of the spot, [0,1)");

  // analyze
  CommonFlags ana_flags;
  cli::AnalyzeArgs ana_args;
  std::optional<int> ana_threshold;
  CLI::App* ana = app.add_subcommand("analyze", "Measure frames into a CSV of ellipse fits");
  add_common(ana, ana_flags);
  ana->add_option("--source", ana_args.source,
                  "dir:<path>, file:<path> or http://host/stream (default: config)");
  ana->add_option("--out", ana_args.out_csv, "Output CSV path ('-' = stdout)")
      ->capture_default_str();
  ana->add_option("--threshold", ana_threshold, "Fixed binarization level (default: auto)");
  ana->add_option("--min-area", ana_args.config.vision.min_contour_area,
                  "Minimum contour area, px^2");

  // calibrate
  CommonFlags cal_flags;
  cli::CalibrateArgs cal_args;
  CLI::App* cal = app.add_subcommand("calibrate", "Fit a perimeter<->volume model");
  add_common(cal, cal_flags);
  cal->add_option("--points", cal_args.points_csv, "CSV of volume_ml,perimeter_px rows");
  cal->add_option("--manifest", cal_args.manifest_csv,
                  "simulate manifest.csv; selects 2 points per region A/B/C");
  cal->add_option("--kind", cal_args.kind, "poly | linear2")->capture_default_str();
  cal->add_option("--order", cal_args.order, "Polynomial order (1..5 typical)")
      ->capture_default_str();
  cal->add_option("--direction", cal_args.direction, "p2v | v2p")->capture_default_str();
  cal->add_option("--well-id", cal_args.well_id, "Well identifier stored in the model")
      ->capture_default_str();
  cal->add_option("--out", cal_args.out_model, "Output model JSON path");

  // measure
  CommonFlags mea_flags;
  cli::MeasureArgs mea_args;
  std::vector<std::string> well_specs;
  CLI::App* mea = app.add_subcommand("measure", "Stream stabilized volume readings as NDJSON");
  add_common(mea, mea_flags);
  mea->add_option("--source", mea_args.source, "dir:<path>, file:<path> or http://host/stream");
  mea->add_option("--model", mea_args.model_path, "Calibration model JSON (default: config)");
  mea->add_option("--out", mea_args.out_ndjson, "Output NDJSON path ('-' = stdout)")
      ->capture_default_str();
  mea->add_flag("--verbose", mea_args.verbose, "Also emit per-frame raw readings");
  mea->add_option("--wells", well_specs,
                  "Batch mode: <id>=<source>, repeatable; one pipeline per well");
  mea->add_option("--window", mea_args.config.stabilizer.window, "Stabilizer window size");
  mea->add_option("--sigma-rel", mea_args.config.stabilizer.sigma_threshold,
                  "Relative sigma threshold (fraction of window mean)");

  // evaluate
  CommonFlags eva_flags;
  cli::EvaluateArgs eva_args;
  CLI::App* eva = app.add_subcommand("evaluate", "Error report of model(s) against truth data");
  add_common(eva, eva_flags);
  eva->add_option("--model", eva_args.model_paths, "Model JSON path, repeatable")->required();
  eva->add_option("--truth", eva_args.truth_csv, "CSV of volume_ml,perimeter_px rows")
      ->required();
  eva->add_option("--out", eva_args.out_csv, "Per-point error CSV ('-' = stdout)")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const double noise = sim_args.config.scene.noise_sigma;
      const double occlusion = sim_args.config.scene.occlusion_fraction;
      sim_args.config = resolve_config(sim_flags);
      if (sim->count("--noise-sigma")) sim_args.config.scene.noise_sigma = noise;
      if (sim->count("--occlusion")) sim_args.config.scene.occlusion_fraction = occlusion;
      return cli::cmd_simulate(sim_args, std::cout, std::cerr);
    }
    if (ana->parsed()) {
      const double min_area = ana_args.config.vision.min_contour_area;
      ana_args.config = resolve_config(ana_flags);
      if (ana->count("--min-area")) ana_args.config.vision.min_contour_area = min_area;
      if (ana_args.source.empty()) ana_args.source = ana_args.config.source;
      if (ana_args.out_csv.empty()) ana_args.out_csv = ana_args.config.output;
      if (ana_args.source.empty()) {
        std::cerr << "error: analyze needs --source (or a config with one)\n";
        return cli::kExitConfig;
      }
      if (ana_threshold) {
        if (*ana_threshold < 0 || *ana_threshold > 255) {
          std::cerr << "error: --threshold must be 0..255\n";
          return cli::kExitConfig;
        }
        ana_args.config.vision.threshold_mode =
            fluidlevel::vision::VisionParams::ThresholdMode::fixed;
        ana_args.config.vision.fixed_level = static_cast<std::uint8_t>(*ana_threshold);
      }
      return cli::cmd_analyze(ana_args, std::cout, std::cerr);
    }
    if (cal->parsed()) {
      cal_args.config = resolve_config(cal_flags);
      return cli::cmd_calibrate(cal_args, std::cout, std::cerr);
    }
    if (mea->parsed()) {
      const int window = mea_args.config.stabilizer.window;
      const double sigma = mea_args.config.stabilizer.sigma_threshold;
      mea_args.config = resolve_config(mea_flags);
      if (mea->count("--window")) mea_args.config.stabilizer.window = window;
      if (mea->count("--sigma-rel")) mea_args.config.stabilizer.sigma_threshold = sigma;
      for (const std::string& spec : well_specs) {
        const std::size_t eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) {
          std::cerr << "error: --wells expects <id>=<source>\n";
          return cli::kExitConfig;
        }
        mea_args.wells.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
      }
      if (mea_args.source.empty()) mea_args.source = mea_args.config.source;
      if (mea_args.model_path.empty()) mea_args.model_path = mea_args.config.model_path;
      if (mea_args.out_ndjson.empty()) mea_args.out_ndjson = mea_args.config.output;
      if (mea_args.wells.empty() && mea_args.source.empty()) {
        std::cerr << "error: measure needs --source or --wells\n";
        return cli::kExitConfig;
      }
      return cli::cmd_measure(mea_args, std::cout, std::cerr);
    }
    if (eva->parsed()) {
      eva_args.config = resolve_config(eva_flags);
      return cli::cmd_evaluate(eva_args, std::cout, std::cerr);
    }
  } catch (const fluidlevel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitIo;
  }
  return cli::kExitConfig;
}
