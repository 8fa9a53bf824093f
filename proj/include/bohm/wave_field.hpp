#pragma once

#include <complex>
#include <numeric>
#include <vector>

#include "bohm/errors.hpp"
#include "bohm/grid.hpp"

namespace bohm {

using complex = std::complex<double>;

// Wavefunction samples on a grid at one instant.
struct WaveField {
  Grid1D grid;
  double time = 0.0;
  std::vector<complex> values;

  WaveField(Grid1D g, double t, std::vector<complex> v)
      : grid(g), time(t), values(std::move(v)) {
    if (values.size() != grid.size())
      throw config_error("wave field size does not match its grid");
  }

  // Discrete norm sum |psi_k|^2 dx. This is the quantity the
  // Crank-Nicolson step conserves exactly.
  double norm() const {
    double s = std::accumulate(values.begin(), values.end(), 0.0,
                               [](double acc, complex z) { return acc + std::norm(z); });
    return s * grid.dx();
  }

  void normalize() {
    double n = norm();
    if (!(n > 0.0)) throw config_error("cannot normalize a zero wave field");
    double scale = 1.0 / std::sqrt(n);
    for (auto& z : values) z *= scale;
  }
};

}  // namespace bohm
