#include "fluidlevel/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fluidlevel/errors.hpp"

namespace fluidlevel::simulate {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint8_t kBackground = 12;
constexpr std::uint8_t kForeground = 235;

// Small deterministic generator; std:: distributions are not pinned across
// library versions, and rendered bytes must be reproducible.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Marsaglia polar method, one value per call with a cached mate.
  bool has_spare = false;
  double spare = 0.0;
  double gaussian() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare = v * m;
    has_spare = true;
    return u * m;
  }
};

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
  z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDull;
  return z ^ (z >> 33);
}

std::uint64_t volume_bits(double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  return bits;
}

// Semi-axes of a spot with the given perimeter and axis ratio b/a.
std::pair<double, double> spot_axes(double perimeter, double ratio) {
  if (ratio == 1.0) {
    const double r = perimeter / (2.0 * kPi);
    return {r, r};
  }
  const double t = ((1.0 - ratio) / (1.0 + ratio)) * ((1.0 - ratio) / (1.0 + ratio));
  const double unit = kPi * (1.0 + ratio) * (1.0 + 3.0 * t / (10.0 + std::sqrt(4.0 - 3.0 * t)));
  const double a = perimeter / unit;
  return {a, ratio * a};
}

// Coverage-shaded filled ellipse, axis-aligned, pixel centers on the integer
// lattice. Edge pixels are 4x4 supersampled.
void draw_ellipse(Frame& frame, double cx, double cy, double a, double b,
                  std::uint8_t value) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - a - 2.0)));
  const int x1 = std::min(frame.width - 1, static_cast<int>(std::ceil(cx + a + 2.0)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - b - 2.0)));
  const int y1 = std::min(frame.height - 1, static_cast<int>(std::ceil(cy + b + 2.0)));
  const double margin = 1.5 / std::min(a, b);

  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x - cx) / a;
      const double dy = (y - cy) / b;
      const double r = std::sqrt(dx * dx + dy * dy);
      double coverage;
      if (r <= 1.0 - margin) {
        coverage = 1.0;
      } else if (r >= 1.0 + margin) {
        continue;
      } else {
        int inside = 0;
        for (int sy = 0; sy < 4; ++sy) {
          for (int sx = 0; sx < 4; ++sx) {
            const double px = x - 0.375 + sx * 0.25;
            const double py = y - 0.375 + sy * 0.25;
            const double qx = (px - cx) / a;
            const double qy = (py - cy) / b;
            if (qx * qx + qy * qy <= 1.0) ++inside;
          }
        }
        coverage = inside / 16.0;
      }
      const std::uint8_t base = frame.at(x, y);
      const double shaded = base + (static_cast<double>(value) - base) * coverage;
      frame.at(x, y) = static_cast<std::uint8_t>(std::lround(shaded));
    }
  }
}

void add_noise(Frame& frame, double sigma, SplitMix64& rng) {
  if (sigma <= 0.0) return;
  for (auto& px : frame.pixels) {
    const double v = px + sigma * rng.gaussian();
    px = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
  }
}

}  // namespace

char region_letter(Region r) {
  switch (r) {
    case Region::A: return 'A';
    case Region::B: return 'B';
    case Region::C: return 'C';
    case Region::D: return 'D';
  }
  return '?';
}

void MeniscusProfile::validate() const {
  if (!(v_dry_ml >= 0.0) || !(v_dry_ml < v_film_ml) || !(v_film_ml < v_invert_ml) ||
      !(v_invert_ml < v_overflow_ml))
    raise(Errc::bad_config,
          "meniscus profile: need 0 <= v_dry < v_film < v_invert < v_overflow");
  if (!(developing_slope_factor > 0.0) || !(developing_slope_factor < 1.0))
    raise(Errc::bad_config, "meniscus profile: developing_slope_factor must be in (0,1)");
  if (!(inversion_gain > 1.0))
    raise(Errc::bad_config, "meniscus profile: inversion_gain must exceed 1");
}

Region region_of(double volume_ml, const MeniscusProfile& profile) {
  if (volume_ml < 0.0) raise(Errc::out_of_range, "region_of: negative volume");
  if (volume_ml < profile.v_film_ml) return Region::A;
  if (volume_ml < profile.v_invert_ml) return Region::B;
  if (volume_ml < profile.v_overflow_ml) return Region::C;
  return Region::D;
}

void SceneConfig::validate() const {
  geometry.validate();
  media.validate();
  camera.validate();
  meniscus.validate();
  if (!(source_radius_mm > 0.0))
    raise(Errc::bad_config, "scene: source radius must be positive");
  if (noise_sigma < 0.0) raise(Errc::bad_config, "scene: noise sigma must be >= 0");
  if (occlusion_fraction < 0.0 || occlusion_fraction >= 1.0)
    raise(Errc::bad_config, "scene: occlusion fraction must be in [0,1)");
  if (!(astigmatism_ratio > 0.0) || astigmatism_ratio > 1.0)
    raise(Errc::bad_config, "scene: astigmatism ratio must be in (0,1]");
  if (meniscus.v_overflow_ml > geometry.capacity_ml)
    raise(Errc::bad_config, "scene: overflow volume exceeds well capacity");
  // The largest spot (at overflow) must fit in the frame, or rendered sweeps
  // would clip and stop tracking the analytic perimeter.
  const auto [a, b] = spot_axes(effective_perimeter(*this, meniscus.v_overflow_ml),
                                astigmatism_ratio);
  if (camera.principal_x_px - a < 2.0 || camera.principal_x_px + a > camera.width_px - 3.0 ||
      camera.principal_y_px - b < 2.0 || camera.principal_y_px + b > camera.height_px - 3.0)
    raise(Errc::bad_config, "scene: spot at overflow does not fit in the frame");
}

double base_perimeter(const SceneConfig& scene, double volume_ml) {
  const double level = optics::volume_to_level(volume_ml, scene.geometry);
  const double apparent =
      optics::apparent_distance_paraxial(scene.geometry, scene.media, level);
  return 2.0 * kPi *
         optics::expected_spot_radius(apparent, scene.camera, scene.source_radius_mm);
}

double base_perimeter_slope(const SceneConfig& scene, double volume_ml) {
  const double area_mm2 = kPi * scene.geometry.well_radius_mm * scene.geometry.well_radius_mm;
  const double dlevel_dv = 1000.0 / area_mm2;                               // mm per ml
  const double di_dlevel = -(1.0 - scene.media.n_ambient / scene.media.n_fluid);
  const double level = optics::volume_to_level(volume_ml, scene.geometry);
  const double apparent =
      optics::apparent_distance_paraxial(scene.geometry, scene.media, level);
  const double k = 2.0 * kPi * scene.source_radius_mm * scene.camera.focal_length_mm /
                   scene.camera.pixel_pitch_mm;
  return -k / (apparent * apparent) * di_dlevel * dlevel_dv;
}

double effective_perimeter(const SceneConfig& scene, double volume_ml) {
  if (volume_ml < 0.0) raise(Errc::out_of_range, "effective_perimeter: negative volume");
  const MeniscusProfile& mp = scene.meniscus;
  const double v = std::min(volume_ml, mp.v_overflow_ml);  // region D is frozen

  const double dry = base_perimeter(scene, 0.0);
  const double factor = mp.developing_slope_factor;
  // Increment over the dry baseline grows at a reduced rate until the film
  // is complete; region B then tracks the paraxial curve shifted by the
  // region-A deficit, keeping the response continuous.
  const double offset = (1.0 - factor) * (base_perimeter(scene, mp.v_film_ml) - dry);

  if (v < mp.v_film_ml) return dry + factor * (base_perimeter(scene, v) - dry);
  const double stable = base_perimeter(scene, v) - offset;
  if (v < mp.v_invert_ml) return stable;

  // Inversion: the growth since onset is magnified by a factor ramping
  // linearly from 1 at v_invert to inversion_gain at v_overflow.
  const double onset = base_perimeter(scene, mp.v_invert_ml) - offset;
  const double ramp =
      1.0 + (mp.inversion_gain - 1.0) * (v - mp.v_invert_ml) / (mp.v_overflow_ml - mp.v_invert_ml);
  return onset + ramp * (stable - onset);
}

Frame render_frame(const SceneConfig& scene, double volume_ml, std::uint64_t salt) {
  if (volume_ml < 0.0) raise(Errc::out_of_range, "render_frame: negative volume");
  Frame frame = make_frame(scene.camera.width_px, scene.camera.height_px, kBackground);
  SplitMix64 rng(mix64(mix64(scene.seed, volume_bits(volume_ml)), salt));

  const double cx = scene.camera.principal_x_px;
  const double cy = scene.camera.principal_y_px;

  if (volume_ml < scene.meniscus.v_dry_ml) {
    // No coherent film yet: scattered droplets whose layout has no relation
    // to the volume.
    const int count = 5 + static_cast<int>(rng.next() % 6);
    const double spread = 0.35 * std::min(frame.width, frame.height);
    for (int i = 0; i < count; ++i) {
      const double ang = 2.0 * kPi * rng.uniform01();
      const double rad = spread * std::sqrt(rng.uniform01());
      const double r = 2.0 + 5.0 * rng.uniform01();
      draw_ellipse(frame, cx + rad * std::cos(ang), cy + rad * std::sin(ang), r, r,
                   kForeground);
    }
    add_noise(frame, scene.noise_sigma, rng);
    return frame;
  }

  const auto [a, b] = spot_axes(effective_perimeter(scene, volume_ml),
                                scene.astigmatism_ratio);
  draw_ellipse(frame, cx, cy, a, b, kForeground);

  if (scene.occlusion_fraction > 0.0) {
    // Debris in the fluid column shadows patches inside the spot; keep the
    // blobs clear of the rim so they punch holes rather than notch the
    // outer boundary.
    const double target = scene.occlusion_fraction * kPi * a * b;
    double covered = 0.0;
    int blobs = 0;
    while (covered < target && blobs < 64) {
      const double ang = 2.0 * kPi * rng.uniform01();
      const double br = (0.04 + 0.04 * rng.uniform01()) * b;
      const double rad = std::sqrt(rng.uniform01()) * (1.0 - (br + 2.0) / b);
      draw_ellipse(frame, cx + rad * a * std::cos(ang), cy + rad * b * std::sin(ang), br,
                   br, kBackground);
      covered += kPi * br * br;
      ++blobs;
    }
  }

  add_noise(frame, scene.noise_sigma, rng);
  return frame;
}

std::vector<SweepEntry> sweep(const SceneConfig& scene, double v_start, double v_end,
                              int steps) {
  if (!(v_start < v_end) || steps < 2)
    raise(Errc::out_of_range, "sweep: need v_start < v_end and steps >= 2");
  if (v_start < 0.0) raise(Errc::out_of_range, "sweep: negative start volume");

  std::vector<SweepEntry> entries;
  entries.reserve(static_cast<std::size_t>(steps));
  const double dv = (v_end - v_start) / (steps - 1);
  for (int i = 0; i < steps; ++i) {
    const double v = (i == steps - 1) ? v_end : v_start + i * dv;
    SweepEntry e;
    e.volume_ml = v;
    e.frame = render_frame(scene, v, static_cast<std::uint64_t>(i));
    e.expected_perimeter_px = effective_perimeter(scene, v);
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace fluidlevel::simulate
