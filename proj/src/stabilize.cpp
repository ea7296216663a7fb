#include "fluidlevel/stabilize.hpp"

#include <cmath>

#include "fluidlevel/errors.hpp"

namespace fluidlevel::stabilize {

void StabilizerConfig::validate() const {
  if (window < 2) raise(Errc::bad_config, "stabilizer: window must hold at least 2 samples");
  if (!(sigma_threshold > 0.0))
    raise(Errc::bad_config, "stabilizer: sigma threshold must be positive");
  if (!(rearm_factor > 1.0))
    raise(Errc::bad_config, "stabilizer: rearm factor must exceed 1");
}

Stabilizer::Stabilizer(StabilizerConfig config) : config_(config) { config_.validate(); }

std::optional<StableReading> Stabilizer::push(double value) {
  return push(value, static_cast<double>(pushed_));
}

std::optional<double> Stabilizer::window_sigma() const {
  if (window_.size() < static_cast<std::size_t>(config_.window)) return std::nullopt;
  const double n = static_cast<double>(window_.size());
  double mean = 0.0;
  for (const auto& [v, t] : window_) mean += v;
  mean /= n;
  double ss = 0.0;
  for (const auto& [v, t] : window_) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

std::optional<StableReading> Stabilizer::push(double value, double timestamp) {
  if (!std::isfinite(value)) raise(Errc::non_finite_input, "stabilizer: non-finite value");
  ++pushed_;
  window_.emplace_back(value, timestamp);
  if (window_.size() > static_cast<std::size_t>(config_.window)) window_.pop_front();
  if (window_.size() < static_cast<std::size_t>(config_.window)) return std::nullopt;

  // Two-pass mean and sample (n-1) standard deviation; windows are small.
  const double n = static_cast<double>(window_.size());
  double mean = 0.0;
  for (const auto& [v, t] : window_) mean += v;
  mean /= n;
  double ss = 0.0;
  for (const auto& [v, t] : window_) ss += (v - mean) * (v - mean);
  const double sigma = std::sqrt(ss / (n - 1.0));

  const double threshold = config_.relative_threshold
                               ? config_.sigma_threshold * std::abs(mean)
                               : config_.sigma_threshold;

  if (armed_) {
    if (sigma < threshold) {
      armed_ = false;
      return StableReading{mean, sigma, window_.front().second, window_.back().second};
    }
  } else if (sigma > config_.rearm_factor * threshold) {
    armed_ = true;
  }
  return std::nullopt;
}

}  // namespace fluidlevel::stabilize
