#pragma once

#include <string>
#include <variant>
#include <vector>

#include "bohm/errors.hpp"
#include "bohm/grid.hpp"

namespace bohm {

// Step function with the convention Theta(0) = 1.
inline double heaviside(double s) { return s < 0.0 ? 0.0 : 1.0; }

struct FreePotential {};

// height * (Theta(x - a) - Theta(x - b)), i.e. nonzero on [a, b).
struct BarrierPotential {
  double a = 0.0;
  double b = 0.0;
  double height = 0.5;
};

// height * Theta(x - x_s)
struct StepPotential {
  double x_s = 0.0;
  double height = 0.5;
};

// One value per node of `grid`, linearly interpolated in between.
struct TabulatedPotential {
  Grid1D grid;
  std::vector<double> values;
};

using PotentialSpec =
    std::variant<FreePotential, BarrierPotential, StepPotential, TabulatedPotential>;

inline void validate(const PotentialSpec& spec) {
  if (auto* b = std::get_if<BarrierPotential>(&spec); b && !(b->a < b->b))
    throw config_error("barrier requires a < b");
  if (auto* t = std::get_if<TabulatedPotential>(&spec); t && t->values.size() != t->grid.size())
    throw config_error("tabulated potential size does not match its grid");
}

inline double evaluate_potential(const PotentialSpec& spec, double x) {
  struct Visitor {
    double x;
    double operator()(const FreePotential&) const { return 0.0; }
    double operator()(const BarrierPotential& p) const {
      return p.height * (heaviside(x - p.a) - heaviside(x - p.b));
    }
    double operator()(const StepPotential& p) const { return p.height * heaviside(x - p.x_s); }
    double operator()(const TabulatedPotential& p) const {
      if (!p.grid.contains(x)) throw config_error("x outside tabulated potential grid");
      auto [k, w] = p.grid.locate(x);
      return (1.0 - w) * p.values[k] + w * p.values[k + 1];
    }
  };
  return std::visit(Visitor{x}, spec);
}

// Pointwise samples at the grid nodes; discontinuities are not smoothed.
inline std::vector<double> sample_potential(const PotentialSpec& spec, const Grid1D& grid) {
  validate(spec);
  if (auto* t = std::get_if<TabulatedPotential>(&spec); t && t->grid == grid) return t->values;
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) v[k] = evaluate_potential(spec, grid.node(k));
  return v;
}

inline std::string potential_name(const PotentialSpec& spec) {
  static const char* names[] = {"free", "barrier", "step", "tabulated"};
  return names[spec.index()];
}

}  // namespace bohm
