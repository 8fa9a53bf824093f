#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "bohm/errors.hpp"
#include "bohm/grid.hpp"
#include "bohm/wave_field.hpp"

namespace bohm {

struct GaussianPacketParams {
  double k0 = 0.0;      // wave number
  double x0 = 0.0;      // center at t = 0
  double d = 1.0;       // position standard deviation at t = 0
  double weight = 1.0;  // real superposition coefficient
};

// Free Gaussian packet in reduced units (hbar = m = 1):
//
//   Phi = (d^2/2pi)^(1/4) exp(-k0^2 d^2) / sqrt(d^2 + i t/2)
//         * exp((2 d^2 k0 + i (x - x0))^2 / (4 d^2 + 2 i t))
//
// The two real exponentials are merged into one complex exponent so large
// k0*d does not overflow.
inline complex gaussian_packet(double t, double x, const GaussianPacketParams& p) {
  if (!(p.d > 0.0)) throw config_error("gaussian packet width must be positive");
  using namespace std::complex_literals;
  const double d2 = p.d * p.d;
  const complex num = 2.0 * d2 * p.k0 + 1i * (x - p.x0);
  const complex exponent = -p.k0 * p.k0 * d2 + num * num / (4.0 * d2 + 2.0i * t);
  const double prefactor = std::pow(d2 / (2.0 * std::numbers::pi), 0.25);
  return prefactor * std::exp(exponent) / std::sqrt(d2 + 0.5i * t);
}

// Weighted sum of packets sampled on the grid, renormalized so the discrete
// norm is exactly one (overlapping packets are only approximately normalized).
inline WaveField superpose(std::span<const GaussianPacketParams> packets,
                           const Grid1D& grid, double t = 0.0) {
  if (packets.empty()) throw config_error("superposition needs at least one packet");
  double w2 = 0.0;
  for (const auto& p : packets) w2 += p.weight * p.weight;
  if (std::abs(w2 - 1.0) > 1e-6)
    throw config_error("packet weights must satisfy sum(weight^2) = 1");

  std::vector<complex> values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double x = grid.node(k);
    complex s = 0.0;
    for (const auto& p : packets) s += p.weight * gaussian_packet(t, x, p);
    values[k] = s;
  }
  WaveField field(grid, t, std::move(values));
  field.normalize();
  return field;
}

}  // namespace bohm
