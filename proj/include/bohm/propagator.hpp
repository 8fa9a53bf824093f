#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bohm/errors.hpp"
#include "bohm/grid.hpp"
#include "bohm/potential.hpp"
#include "bohm/wave_field.hpp"

namespace bohm {

// Observer invoked once per propagation step, including step 0. Receives the
// field read-only; implementations keep their own series.
class PropagationRecorder {
 public:
  virtual ~PropagationRecorder() = default;
  virtual void record(std::size_t step, double t, const WaveField& field) = 0;
};

// Adapter for ad-hoc observers.
class CallbackRecorder : public PropagationRecorder {
 public:
  using Callback = std::function<void(std::size_t, double, const WaveField&)>;
  explicit CallbackRecorder(Callback cb) : cb_(std::move(cb)) {}
  void record(std::size_t step, double t, const WaveField& f) override { cb_(step, t, f); }

 private:
  Callback cb_;
};

// Crank-Nicolson step for H = -1/2 d^2/dx^2 + V with the three-point
// Laplacian and psi = 0 just outside the grid (hard walls):
//
//   (1 + i dt/2 H) psi^{n+1} = (1 - i dt/2 H) psi^n
//
// H is real symmetric, so the step is a Cayley transform and preserves
// sum |psi_k|^2 up to round-off. A negative dt runs the dynamics backward.
class CrankNicolsonStepper {
 public:
  CrankNicolsonStepper(const Grid1D& grid, std::span<const double> potential, double dt)
      : n_(grid.size()), dt_(dt) {
    if (potential.size() != n_) throw config_error("potential size does not match grid");
    if (!std::isfinite(dt) || dt == 0.0) throw config_error("time step must be finite and nonzero");
    using namespace std::complex_literals;
    const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    const complex half = 0.5i * dt;
    off_ = half * (-0.5 * inv_dx2);
    rhs_diag_.resize(n_);
    inv_pivot_.resize(n_);
    c_prime_.resize(n_);
    scratch_.resize(n_);
    complex prev_c = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      const complex h_kk = inv_dx2 + potential[k];
      rhs_diag_[k] = 1.0 - half * h_kk;
      const complex pivot = (1.0 + half * h_kk) - (k == 0 ? complex(0.0) : off_ * prev_c);
      inv_pivot_[k] = 1.0 / pivot;
      prev_c = off_ * inv_pivot_[k];
      c_prime_[k] = prev_c;
    }
  }

  double dt() const { return dt_; }

  void step(std::span<complex> psi) {
    // rhs = (1 - i dt/2 H) psi; the off-diagonal of that matrix is -off_.
    auto& d = scratch_;
    for (std::size_t k = 0; k < n_; ++k) {
      complex r = rhs_diag_[k] * psi[k];
      if (k > 0) r -= off_ * psi[k - 1];
      if (k + 1 < n_) r -= off_ * psi[k + 1];
      d[k] = (r - (k == 0 ? complex(0.0) : off_ * d[k - 1])) * inv_pivot_[k];
    }
    psi[n_ - 1] = d[n_ - 1];
    for (std::size_t k = n_ - 1; k-- > 0;) psi[k] = d[k] - c_prime_[k] * psi[k + 1];
  }

 private:
  std::size_t n_;
  double dt_;
  complex off_;
  std::vector<complex> rhs_diag_;
  std::vector<complex> inv_pivot_;
  std::vector<complex> c_prime_;
  std::vector<complex> scratch_;
};

struct PropagationOptions {
  double norm_tolerance = 1e-6;   // drift beyond this throws
  double edge_threshold = 1e-8;   // |psi| at the walls beyond this sets a warning
};

struct PropagationStats {
  double max_norm_drift = 0.0;
  double max_edge_amplitude = 0.0;
  bool edge_warning = false;
};

struct PropagationReport : PropagationStats {
  WaveField field;
};

// Advance `initial` through tg.n_steps steps. Every recorder sees the field
// at step 0 and after each step. Throws invariant_violation if the discrete
// norm drifts by more than opts.norm_tolerance.
inline PropagationReport propagate(const WaveField& initial, const PotentialSpec& spec,
                                   const TimeGrid& tg,
                                   std::span<PropagationRecorder* const> recorders = {},
                                   const PropagationOptions& opts = {}) {
  const double norm0 = initial.norm();
  if (std::abs(norm0 - 1.0) > 1e-8) throw config_error("initial wave field is not normalized");
  if (!(tg.dt > 0.0)) throw config_error("time step must be positive");

  PropagationReport rep{{}, initial};
  WaveField& psi = rep.field;
  psi.time = tg.t_start;
  auto edges = [&] {
    rep.max_edge_amplitude = std::max(
        {rep.max_edge_amplitude, std::abs(psi.values.front()), std::abs(psi.values.back())});
  };
  edges();
  for (auto* r : recorders) r->record(0, psi.time, psi);
  if (tg.n_steps == 0) return rep;

  const auto potential = sample_potential(spec, initial.grid);
  CrankNicolsonStepper stepper(initial.grid, potential, tg.dt);
  for (std::size_t s = 1; s <= tg.n_steps; ++s) {
    stepper.step(psi.values);
    psi.time = tg.time(s);
    const double drift = std::abs(psi.norm() - norm0);
    rep.max_norm_drift = std::max(rep.max_norm_drift, drift);
    if (drift > opts.norm_tolerance)
      throw invariant_violation("norm drift " + std::to_string(drift) + " at t = " +
                                std::to_string(psi.time) + " exceeds tolerance");
    edges();
    for (auto* r : recorders) r->record(s, psi.time, psi);
  }
  rep.edge_warning = rep.max_edge_amplitude > opts.edge_threshold;
  return rep;
}

}  // namespace bohm
