#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "bohm/errors.hpp"
#include "bohm/grid.hpp"
#include "bohm/propagator.hpp"
#include "bohm/wave_field.hpp"

namespace bohm {

// Real samples on a grid (rho or j) at one instant.
struct RealField {
  Grid1D grid;
  double time = 0.0;
  std::vector<double> values;

  // Linear interpolation between neighbouring nodes.
  double at(double x) const {
    if (!grid.contains(x)) throw config_error("position outside grid");
    auto [k, w] = grid.locate(x);
    return (1.0 - w) * values[k] + w * values[k + 1];
  }
};

inline RealField probability_density(const WaveField& f) {
  RealField rho{f.grid, f.time, std::vector<double>(f.values.size())};
  for (std::size_t k = 0; k < f.values.size(); ++k) rho.values[k] = std::norm(f.values[k]);
  return rho;
}

// j_k = Im(conj(psi_k) dpsi/dx) with central differences inside and
// second-order one-sided differences at the two walls.
inline double nodal_current(std::span<const complex> psi, double dx, std::size_t k) {
  const std::size_t n = psi.size();
  complex deriv;
  if (k == 0)
    deriv = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * dx);
  else if (k + 1 == n)
    deriv = (3.0 * psi[n - 1] - 4.0 * psi[n - 2] + psi[n - 3]) / (2.0 * dx);
  else
    deriv = (psi[k + 1] - psi[k - 1]) / (2.0 * dx);
  return std::imag(std::conj(psi[k]) * deriv);
}

inline RealField current_density(const WaveField& f) {
  RealField j{f.grid, f.time, std::vector<double>(f.values.size())};
  for (std::size_t k = 0; k < f.values.size(); ++k)
    j.values[k] = nodal_current(f.values, f.grid.dx(), k);
  return j;
}

// Current at an arbitrary position: nodal currents of the enclosing cell,
// linearly interpolated. A node position returns the nodal value exactly.
inline double current_at(const WaveField& f, double x) {
  if (!f.grid.contains(x)) throw config_error("position outside grid");
  auto [k, w] = f.grid.locate(x);
  const double jl = nodal_current(f.values, f.grid.dx(), k);
  if (w == 0.0) return jl;
  const double jr = nodal_current(f.values, f.grid.dx(), k + 1);
  if (w == 1.0) return jr;
  return (1.0 - w) * jl + w * jr;
}

// Trapezoid integral of rho over [a, b], with rho linearly interpolated at
// endpoints that fall between nodes.
inline double interval_probability(const WaveField& f, double a, double b) {
  if (a > b) throw config_error("interval requires a <= b");
  if (!f.grid.contains(a) || !f.grid.contains(b))
    throw config_error("interval endpoints lie outside the grid");
  if (a == b) return 0.0;
  const auto rho = probability_density(f);
  const Grid1D& g = f.grid;
  auto [ka, wa] = g.locate(a);
  auto [kb, wb] = g.locate(b);
  if (ka == kb) return 0.5 * (rho.at(a) + rho.at(b)) * (b - a);
  // [a, node(ka+1)], full cells, [node(kb), b]
  double total = 0.5 * (rho.at(a) + rho.values[ka + 1]) * (g.node(ka + 1) - a);
  for (std::size_t k = ka + 1; k < kb; ++k)
    total += 0.5 * (rho.values[k] + rho.values[k + 1]) * (g.node(k + 1) - g.node(k));
  total += 0.5 * (rho.values[kb] + rho.at(b)) * (b - g.node(kb));
  return total;
}

// Time series of j at the two detector edges.
struct BoundaryRecord {
  DetectorRegion detector;
  std::vector<double> times;
  std::vector<double> j_a;
  std::vector<double> j_b;

  void validate() const {
    if (times.empty()) throw config_error("boundary record is empty");
    if (j_a.size() != times.size() || j_b.size() != times.size())
      throw config_error("boundary record series lengths differ");
    if (times.front() != 0.0) throw config_error("boundary record must start at t = 0");
    for (std::size_t k = 1; k < times.size(); ++k)
      if (!(times[k] > times[k - 1]))
        throw config_error("boundary record times must be strictly increasing");
  }
};

class BoundaryCurrentRecorder : public PropagationRecorder {
 public:
  BoundaryCurrentRecorder(const Grid1D& grid, DetectorRegion det) {
    require_inside(grid, det);
    rec_.detector = det;
  }

  void record(std::size_t, double t, const WaveField& f) override {
    const double ja = current_at(f, rec_.detector.a);
    rec_.times.push_back(t);
    rec_.j_a.push_back(ja);
    rec_.j_b.push_back(rec_.detector.is_point() ? ja : current_at(f, rec_.detector.b));
  }

  const BoundaryRecord& result() const { return rec_; }
  BoundaryRecord take() { return std::move(rec_); }

 private:
  BoundaryRecord rec_;
};

inline BoundaryCurrentRecorder record_boundary_currents(const Grid1D& grid, DetectorRegion det) {
  return BoundaryCurrentRecorder(grid, det);
}

}  // namespace bohm
