#pragma once

#include <deque>
#include <optional>

namespace fluidlevel::stabilize {

struct StabilizerConfig {
  int window = 10;                  // samples
  double sigma_threshold = 0.005;   // absolute, or fraction of window mean
  bool relative_threshold = true;
  double rearm_factor = 3.0;        // > 1

  void validate() const;
};

/// One accepted reading: the window mean at the moment the window settled.
struct StableReading {
  double value = 0.0;
  double sigma = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
};

/// Rolling-buffer acceptance filter. Emits the window mean once the sample
/// standard deviation drops below threshold, then stays quiet until the
/// window has been disturbed past rearm_factor * threshold — one reading per
/// stabilization episode. Single-owner; not safe for concurrent mutation.
class Stabilizer {
public:
  explicit Stabilizer(StabilizerConfig config);

  /// Feed one measurement. Returns a reading when this push completes a
  /// stabilization episode. Throws Errc::non_finite_input on NaN/inf.
  /// Omitted timestamps default to the running sample index.
  std::optional<StableReading> push(double value);
  std::optional<StableReading> push(double value, double timestamp);

  bool armed() const { return armed_; }
  const StabilizerConfig& config() const { return config_; }

  /// Sample standard deviation of the current window; nullopt until full.
  std::optional<double> window_sigma() const;

private:
  StabilizerConfig config_;
  std::deque<std::pair<double, double>> window_;  // (value, timestamp)
  bool armed_ = true;
  long long pushed_ = 0;
};

}  // namespace fluidlevel::stabilize
