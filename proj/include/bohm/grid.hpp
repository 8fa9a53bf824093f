#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "bohm/errors.hpp"

namespace bohm {

// Uniform spatial grid in reduced length units. Node k sits at
// x_min + k * dx; the last node is pinned to x_max exactly.
class Grid1D {
 public:
  Grid1D(double x_min, double x_max, std::size_t n_points)
      : x_min_(x_min), x_max_(x_max), n_(n_points) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max))
      throw config_error("grid bounds must be finite");
    if (!(x_min < x_max))
      throw config_error("grid requires x_min < x_max");
    if (n_points < 3)
      throw config_error("grid requires at least 3 points");
    dx_ = (x_max - x_min) / static_cast<double>(n_points - 1);
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double dx() const { return dx_; }
  std::size_t size() const { return n_; }

  double node(std::size_t k) const {
    return k + 1 == n_ ? x_max_ : x_min_ + static_cast<double>(k) * dx_;
  }

  bool contains(double x) const { return x >= x_min_ && x <= x_max_; }

  // Cell index k (0 <= k <= n-2) and offset w in [0,1] with
  // x = (1-w) node(k) + w node(k+1). Caller guarantees contains(x).
  std::pair<std::size_t, double> locate(double x) const {
    double s = (x - x_min_) / dx_;
    if (s <= 0.0) return {0, 0.0};
    auto k = static_cast<std::size_t>(s);
    if (k >= n_ - 1) return {n_ - 2, 1.0};
    return {k, s - static_cast<double>(k)};
  }

  bool operator==(const Grid1D& o) const {
    return x_min_ == o.x_min_ && x_max_ == o.x_max_ && n_ == o.n_;
  }

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double dx_;
};

inline Grid1D build_grid(double x_min, double x_max, std::size_t n_points) {
  return Grid1D(x_min, x_max, n_points);
}

// Uniform time axis starting at the detector activation time.
struct TimeGrid {
  double t_start = 0.0;
  double dt = 0.0;
  std::size_t n_steps = 0;

  TimeGrid() = default;
  TimeGrid(double t0, double step, std::size_t steps)
      : t_start(t0), dt(step), n_steps(steps) {
    if (!std::isfinite(t0) || !std::isfinite(step))
      throw config_error("time grid values must be finite");
    if (!(step > 0.0)) throw config_error("time step must be positive");
  }

  // Smallest uniform grid with step <= max_dt that ends exactly at t_end.
  static TimeGrid covering(double t_end, double max_dt) {
    if (!(t_end > 0.0) || !(max_dt > 0.0))
      throw config_error("time window and step must be positive");
    auto steps = static_cast<std::size_t>(std::ceil(t_end / max_dt - 1e-9));
    if (steps == 0) steps = 1;
    return TimeGrid(0.0, t_end / static_cast<double>(steps), steps);
  }

  double time(std::size_t k) const {
    return t_start + static_cast<double>(k) * dt;
  }
  double t_end() const { return time(n_steps); }
};

// Detector occupying [a, b] from t = 0 on; a == b is a point detector.
struct DetectorRegion {
  double a = 0.0;
  double b = 0.0;

  DetectorRegion() = default;
  DetectorRegion(double left, double right) : a(left), b(right) {
    if (!std::isfinite(left) || !std::isfinite(right))
      throw config_error("detector edges must be finite");
    if (left > right) throw config_error("detector requires a <= b");
  }
  static DetectorRegion point(double x) { return DetectorRegion(x, x); }

  bool is_point() const { return a == b; }
  bool contains(double x) const { return x >= a && x <= b; }
};

inline void require_inside(const Grid1D& g, const DetectorRegion& d) {
  if (!g.contains(d.a) || !g.contains(d.b))
    throw config_error("detector [" + std::to_string(d.a) + ", " +
                       std::to_string(d.b) + "] lies outside the grid");
}

}  // namespace bohm
