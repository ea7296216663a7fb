#include "fluidlevel/vision.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "fluidlevel/errors.hpp"
#include "fluidlevel/kernels.hpp"

namespace fluidlevel::vision {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void VisionParams::validate() const {
  if (min_contour_area < 5.0)
    raise(Errc::bad_config, "vision: min_contour_area must be at least 5 px^2");
}

Point2d Contour::centroid() const {
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    sx += p.x;
    sy += p.y;
  }
  const double n = static_cast<double>(points.size());
  return {sx / n, sy / n};
}

std::uint8_t otsu_threshold(const std::uint32_t hist[256]) {
  std::uint64_t total = 0, weighted = 0;
  for (int i = 0; i < 256; ++i) {
    total += hist[i];
    weighted += static_cast<std::uint64_t>(i) * hist[i];
  }
  if (total == 0) raise(Errc::degenerate_image, "otsu: empty histogram");

  double best_var = -1.0;
  int best_split = -1;
  std::uint64_t w0 = 0, sum0 = 0;
  // Split t: class 0 = [0, t), class 1 = [t, 255]. Foreground is class 1.
  for (int t = 1; t <= 255; ++t) {
    w0 += hist[t - 1];
    sum0 += static_cast<std::uint64_t>(t - 1) * hist[t - 1];
    const std::uint64_t w1 = total - w0;
    if (w0 == 0) continue;
    if (w1 == 0) break;
    const double mu0 = static_cast<double>(sum0) / static_cast<double>(w0);
    const double mu1 =
        static_cast<double>(weighted - sum0) / static_cast<double>(w1);
    const double d = mu0 - mu1;
    const double var = static_cast<double>(w0) * static_cast<double>(w1) * d * d;
    if (var > best_var) {
      best_var = var;
      best_split = t;
    }
  }
  if (best_split < 0)
    raise(Errc::degenerate_image, "otsu: all pixels share one intensity");
  return static_cast<std::uint8_t>(best_split);
}

Mask binarize(const Frame& frame, const VisionParams& params) {
  if (!frame.valid()) raise(Errc::bad_config, "binarize: invalid frame");
  std::uint8_t level = params.fixed_level;
  if (params.threshold_mode == VisionParams::ThresholdMode::automatic) {
    std::uint64_t sum = 0, sum_sq = 0;
    kernels::sum_sumsq_u8(frame.pixels.data(), frame.pixels.size(), sum, sum_sq);
    if (sum_sq * frame.pixels.size() == sum * sum)
      raise(Errc::degenerate_image, "binarize: all pixels share one intensity");
    std::uint32_t hist[256] = {0};
    kernels::histogram256(frame.pixels.data(), frame.pixels.size(), hist);
    level = otsu_threshold(hist);
  }
  Mask mask;
  mask.width = frame.width;
  mask.height = frame.height;
  mask.data.resize(frame.pixels.size());
  kernels::threshold_mask(frame.pixels.data(), frame.pixels.size(), level, mask.data.data());
  return mask;
}

namespace {

// Clockwise 8-neighborhood in image coordinates (y grows downward).
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

int direction_index(int dx, int dy) {
  for (int d = 0; d < 8; ++d)
    if (kDx[d] == dx && kDy[d] == dy) return d;
  return 0;
}

// Moore-neighbor boundary trace from the component's topmost-leftmost pixel,
// stopping when the first move is about to repeat (Jacob's criterion).
std::vector<Point2d> trace_boundary(const Mask& mask, int sx, int sy) {
  const auto fg = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < mask.width && y < mask.height && mask.at(x, y) != 0;
  };

  std::vector<Point2d> pts;
  pts.push_back({static_cast<double>(sx), static_cast<double>(sy)});

  int cx = sx, cy = sy;
  int bx = sx - 1, by = sy;  // west neighbor is background for a raster-scan start
  bool have_second = false;
  int second_x = 0, second_y = 0;

  const std::size_t cap = 8 * mask.data.size() + 64;
  for (std::size_t step = 0; step < cap; ++step) {
    const int k = direction_index(bx - cx, by - cy);
    int found = -1, found_j = 0;
    for (int j = 1; j <= 8; ++j) {
      const int d = (k + j) % 8;
      if (fg(cx + kDx[d], cy + kDy[d])) {
        found = d;
        found_j = j;
        break;
      }
    }
    if (found < 0) break;  // isolated pixel

    const int nx = cx + kDx[found];
    const int ny = cy + kDy[found];
    if (!have_second) {
      have_second = true;
      second_x = nx;
      second_y = ny;
    } else if (cx == sx && cy == sy && nx == second_x && ny == second_y) {
      break;
    }
    const int bd = (k + found_j - 1) % 8;
    bx = cx + kDx[bd];
    by = cy + kDy[bd];
    cx = nx;
    cy = ny;
    pts.push_back({static_cast<double>(cx), static_cast<double>(cy)});
  }
  return pts;
}

double shoelace_area(const std::vector<Point2d>& pts) {
  double acc = 0.0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pts[i];
    const auto& q = pts[(i + 1) % n];
    acc += p.x * q.y - q.x * p.y;
  }
  return std::abs(acc) / 2.0;
}

}  // namespace

std::vector<Contour> extract_contours(const Mask& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::pair<int, int>> seeds;
  std::vector<std::size_t> stack;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (mask.data[idx] == 0 || label[idx] != 0) continue;
      const std::int32_t id = static_cast<std::int32_t>(seeds.size()) + 1;
      seeds.emplace_back(x, y);
      label[idx] = id;
      stack.push_back(idx);
      while (!stack.empty()) {
        const std::size_t cur = stack.back();
        stack.pop_back();
        const int cx = static_cast<int>(cur % w);
        const int cy = static_cast<int>(cur / w);
        for (int d = 0; d < 8; ++d) {
          const int nx = cx + kDx[d], ny = cy + kDy[d];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
          if (mask.data[nidx] != 0 && label[nidx] == 0) {
            label[nidx] = id;
            stack.push_back(nidx);
          }
        }
      }
    }
  }

  std::vector<Contour> contours;
  contours.reserve(seeds.size());
  for (const auto& [sx, sy] : seeds) {
    Contour c;
    c.points = trace_boundary(mask, sx, sy);
    if (c.points.size() < 4) continue;
    c.area = shoelace_area(c.points);
    contours.push_back(std::move(c));
  }
  return contours;
}

Contour central_contour(const std::vector<Contour>& contours, int width, int height,
                        const VisionParams& params) {
  const double cx = width / 2.0, cy = height / 2.0;
  const Contour* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& c : contours) {
    if (c.area < params.min_contour_area) continue;
    const Point2d cen = c.centroid();
    const double dist = std::hypot(cen.x - cx, cen.y - cy);
    if (!best || dist < best_dist || (dist == best_dist && c.area > best->area)) {
      best = &c;
      best_dist = dist;
    }
  }
  if (!best)
    raise(Errc::no_contour, "central_contour: no contour passes the area floor");
  return *best;
}

double ellipse_perimeter(double a, double b) {
  if (!(a > 0.0) || b < 0.0 || b > a)
    raise(Errc::out_of_range, "ellipse_perimeter: requires a >= b >= 0 and a > 0");
  const double t = ((a - b) / (a + b)) * ((a - b) / (a + b));
  return kPi * (a + b) * (1.0 + 3.0 * t / (10.0 + std::sqrt(4.0 - 3.0 * t)));
}

EllipseFit fit_ellipse(std::span<const Point2d> points) {
  if (points.size() < 5)
    raise(Errc::insufficient_points, "fit_ellipse: a conic needs 5 points");
  {
    std::set<std::pair<double, double>> distinct;
    for (const auto& p : points) distinct.emplace(p.x, p.y);
    if (distinct.size() < 5)
      raise(Errc::insufficient_points, "fit_ellipse: fewer than 5 distinct points");
  }

  // Center and scale for conditioning; the conic is solved in normalized
  // coordinates and the geometric parameters mapped back afterwards.
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double msq = 0.0;
  for (const auto& p : points)
    msq += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
  const double scale = std::sqrt(msq / (2.0 * n));
  if (!(scale > 0.0))
    raise(Errc::degenerate_conic, "fit_ellipse: zero spread");

  Eigen::Matrix3d s1 = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d s2 = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d s3 = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const double x = (p.x - mx) / scale;
    const double y = (p.y - my) / scale;
    const Eigen::Vector3d quad(x * x, x * y, y * y);
    const Eigen::Vector3d lin(x, y, 1.0);
    s1 += quad * quad.transpose();
    s2 += quad * lin.transpose();
    s3 += lin * lin.transpose();
  }

  Eigen::FullPivLU<Eigen::Matrix3d> lu(s3);
  if (!lu.isInvertible())
    raise(Errc::degenerate_conic, "fit_ellipse: collinear or degenerate point set");
  const Eigen::Matrix3d t_mat = -lu.solve(s2.transpose());

  Eigen::Matrix3d c1_inv;
  c1_inv << 0.0, 0.0, 0.5, 0.0, -1.0, 0.0, 0.5, 0.0, 0.0;
  const Eigen::Matrix3d reduced = c1_inv * (s1 + s2 * t_mat);

  Eigen::EigenSolver<Eigen::Matrix3d> solver(reduced);
  if (solver.info() != Eigen::Success)
    raise(Errc::degenerate_conic, "fit_ellipse: eigensolver failed");

  // The ellipse solution is the eigenvector satisfying 4ac - b^2 > 0.
  Eigen::Vector3d a1 = Eigen::Vector3d::Zero();
  bool found = false;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d v = solver.eigenvectors().col(i).real();
    const double cond = 4.0 * v(0) * v(2) - v(1) * v(1);
    if (cond > 0.0) {
      a1 = v;
      found = true;
      break;
    }
  }
  if (!found)
    raise(Errc::degenerate_conic, "fit_ellipse: no elliptical solution");
  const Eigen::Vector3d a2 = t_mat * a1;

  const double A = a1(0), B = a1(1), C = a1(2);
  const double D = a2(0), E = a2(1), F = a2(2);

  const double det2 = 4.0 * A * C - B * B;
  if (!(det2 > 0.0))
    raise(Errc::degenerate_conic, "fit_ellipse: non-elliptical conic");
  const double ncx = (B * E - 2.0 * C * D) / det2;
  const double ncy = (B * D - 2.0 * A * E) / det2;
  const double fc = A * ncx * ncx + B * ncx * ncy + C * ncy * ncy + D * ncx + E * ncy + F;

  const double theta = 0.5 * std::atan2(B, A - C);
  const double cos2t = std::cos(2.0 * theta);
  const double sin2t = std::sin(2.0 * theta);
  const double a_rot = (A + C) / 2.0 + (A - C) / 2.0 * cos2t + B / 2.0 * sin2t;
  const double c_rot = (A + C) - a_rot;
  const double ax_sq = -fc / a_rot;
  const double ay_sq = -fc / c_rot;
  if (!(ax_sq > 0.0) || !(ay_sq > 0.0))
    raise(Errc::degenerate_conic, "fit_ellipse: non-positive axis lengths");

  double semi_x = std::sqrt(ax_sq);
  double semi_y = std::sqrt(ay_sq);
  double rotation = theta;
  if (semi_y > semi_x) {
    std::swap(semi_x, semi_y);
    rotation += kPi / 2.0;
  }
  rotation = std::fmod(rotation, kPi);
  if (rotation < 0.0) rotation += kPi;

  EllipseFit fit;
  fit.center_x = mx + scale * ncx;
  fit.center_y = my + scale * ncy;
  fit.semi_major = scale * semi_x;
  fit.semi_minor = scale * semi_y;
  fit.rotation = rotation;
  fit.perimeter = ellipse_perimeter(fit.semi_major, fit.semi_minor);
  return fit;
}

EllipseFit fit_ellipse(const Contour& contour) {
  return fit_ellipse(std::span<const Point2d>(contour.points));
}

EllipseFit measure_frame(const Frame& frame, const VisionParams& params) {
  const Mask mask = binarize(frame, params);
  const std::vector<Contour> contours = extract_contours(mask);
  const Contour central = central_contour(contours, frame.width, frame.height, params);
  return fit_ellipse(central);
}

}  // namespace fluidlevel::vision
