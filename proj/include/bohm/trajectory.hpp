#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "bohm/errors.hpp"
#include "bohm/grid.hpp"
#include "bohm/observables.hpp"
#include "bohm/propagator.hpp"

namespace bohm {

// Snapshots of rho and j at increasing times, interpolated bilinearly in
// (t, x). Storing rho and j instead of psi keeps velocity evaluation cheap.
class FieldHistory {
 public:
  explicit FieldHistory(Grid1D grid) : grid_(grid) {}

  void append(double t, std::span<const double> rho, std::span<const double> j) {
    if (rho.size() != grid_.size() || j.size() != grid_.size())
      throw config_error("snapshot size does not match the history grid");
    if (!times_.empty() && !(t > times_.back()))
      throw config_error("snapshot times must be strictly increasing");
    times_.push_back(t);
    rho_.insert(rho_.end(), rho.begin(), rho.end());
    j_.insert(j_.end(), j.begin(), j.end());
  }

  void append(const WaveField& f) {
    if (!(f.grid == grid_)) throw config_error("wave field grid differs from history grid");
    append(f.time, probability_density(f).values, current_density(f).values);
  }

  const Grid1D& grid() const { return grid_; }
  std::span<const double> times() const { return times_; }
  std::size_t size() const { return times_.size(); }
  double t_first() const { return times_.front(); }
  double t_last() const { return times_.back(); }

  RealField density(std::size_t snapshot) const {
    auto first = rho_.begin() + static_cast<std::ptrdiff_t>(snapshot * grid_.size());
    return {grid_, times_[snapshot], {first, first + static_cast<std::ptrdiff_t>(grid_.size())}};
  }

  struct Sample {
    double rho;
    double j;
  };

  // Bilinear sample; t and x are clamped into the covered window.
  Sample sample(double t, double x) const {
    if (times_.empty()) throw config_error("field history is empty");
    x = std::clamp(x, grid_.x_min(), grid_.x_max());
    auto [k, w] = grid_.locate(x);
    const std::size_t n = grid_.size();
    auto at = [&](const std::vector<double>& v, std::size_t snap) {
      const std::size_t base = snap * n + k;
      return (1.0 - w) * v[base] + w * v[base + 1];
    };
    if (times_.size() == 1 || t <= times_.front()) return {at(rho_, 0), at(j_, 0)};
    if (t >= times_.back()) return {at(rho_, times_.size() - 1), at(j_, times_.size() - 1)};
    const auto hi = static_cast<std::size_t>(
        std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
    const std::size_t lo = hi - 1;
    const double u = (t - times_[lo]) / (times_[hi] - times_[lo]);
    return {(1.0 - u) * at(rho_, lo) + u * at(rho_, hi), (1.0 - u) * at(j_, lo) + u * at(j_, hi)};
  }

 private:
  Grid1D grid_;
  std::vector<double> times_;
  std::vector<double> rho_;
  std::vector<double> j_;
};

// Stores every `stride`-th step plus the final one.
class FieldHistoryRecorder : public PropagationRecorder {
 public:
  FieldHistoryRecorder(const Grid1D& grid, std::size_t stride, std::size_t final_step)
      : history_(grid), stride_(stride), final_step_(final_step) {
    if (stride == 0) throw config_error("snapshot stride must be positive");
  }

  void record(std::size_t step, double, const WaveField& f) override {
    if (step % stride_ == 0 || step == final_step_) history_.append(f);
  }

  const FieldHistory& history() const { return history_; }
  FieldHistory take() { return std::move(history_); }

 private:
  FieldHistory history_;
  std::size_t stride_;
  std::size_t final_step_;
};

inline constexpr double default_rho_floor = 1e-12;

// Bohmian velocity j / rho.
inline double velocity(double t, double x, const FieldHistory& h,
                       double rho_floor = default_rho_floor) {
  if (!h.grid().contains(x)) throw config_error("velocity requested outside the grid");
  if (t < h.t_first() || t > h.t_last()) throw config_error("velocity requested outside the recorded window");
  const auto s = h.sample(t, x);
  if (!(s.rho > rho_floor)) throw singular_velocity("density below floor near a wavefunction node");
  return s.j / s.rho;
}

namespace detail {

// Cumulative trapezoid of rho, normalized so its last entry is exactly 1.
inline std::vector<double> normalized_cdf(const RealField& rho) {
  const auto& g = rho.grid;
  std::vector<double> cdf(g.size(), 0.0);
  for (std::size_t k = 1; k < g.size(); ++k)
    cdf[k] = cdf[k - 1] + 0.5 * (rho.values[k - 1] + rho.values[k]) * (g.node(k) - g.node(k - 1));
  if (std::abs(cdf.back() - 1.0) > 1e-6)
    throw config_error("initial density is not normalized");
  for (auto& c : cdf) c /= cdf.back();
  return cdf;
}

inline double invert_cdf(const Grid1D& g, std::span<const double> cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.begin()) return g.x_min();
  if (it == cdf.end()) return g.x_max();
  const auto k = static_cast<std::size_t>(it - cdf.begin()) - 1;
  const double w = (u - cdf[k]) / (cdf[k + 1] - cdf[k]);
  return g.node(k) + w * (g.node(k + 1) - g.node(k));
}

}  // namespace detail

// Inverse-transform sampling with the piecewise-linear CDF of rho0.
inline std::vector<double> sample_initial_positions(const RealField& rho0,
                                                    std::span<const double> quantiles) {
  const auto cdf = detail::normalized_cdf(rho0);
  std::vector<double> out;
  out.reserve(quantiles.size());
  for (double u : quantiles) out.push_back(detail::invert_cdf(rho0.grid, cdf, u));
  return out;
}

inline std::vector<double> sample_initial_positions(const RealField& rho0, std::size_t count,
                                                    std::uint64_t seed) {
  if (count == 0) throw config_error("sample count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> u(count);
  for (auto& q : u) q = uniform(rng);
  return sample_initial_positions(rho0, u);
}

enum class TrajectoryStatus { completed, aborted_near_node };

struct Trajectory {
  double x0 = 0.0;
  std::vector<double> times;
  std::vector<double> positions;
  TrajectoryStatus status = TrajectoryStatus::completed;
  bool exited_grid = false;
};

struct IntegrationOptions {
  double rtol = 1e-6;
  double atol = 1e-9;
  double output_dt = 0.0;  // 0: use the snapshot spacing of the history
  double rho_floor = default_rho_floor;
};

// Integrates dx/dt = j/rho with the Dormand-Prince 5(4) pair and dense output
// sampled every output_dt. Steps never exceed output_dt. A density below the
// floor aborts the path; leaving the grid ends it with exited_grid set.
inline Trajectory integrate_trajectory(double x0, const FieldHistory& h, double t_end,
                                       const IntegrationOptions& opts = {}) {
  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 1>;
  const Grid1D& g = h.grid();
  if (!g.contains(x0)) throw config_error("trajectory start outside the grid");
  if (!(t_end > 0.0)) throw config_error("integration window must be positive");

  double out_dt = opts.output_dt;
  if (!(out_dt > 0.0))
    out_dt = h.size() > 1 ? (h.t_last() - h.t_first()) / static_cast<double>(h.size() - 1) : t_end;
  out_dt = std::min(out_dt, t_end);

  Trajectory traj;
  traj.x0 = x0;
  traj.times.push_back(0.0);
  traj.positions.push_back(x0);

  auto rhs = [&](const State& x, State& dxdt, double t) {
    const auto s = h.sample(t, x[0]);
    if (!(s.rho > opts.rho_floor)) throw singular_velocity("density below floor");
    dxdt[0] = s.j / s.rho;
  };
  auto stepper = ode::make_dense_output(opts.atol, opts.rtol, out_dt,
                                        ode::runge_kutta_dopri5<State>());
  stepper.initialize(State{x0}, 0.0, std::min(out_dt, 1e-3));

  const auto n_out = static_cast<std::size_t>(std::ceil(t_end / out_dt - 1e-9));
  try {
    for (std::size_t k = 1; k <= n_out; ++k) {
      const double tk = k == n_out ? t_end : static_cast<double>(k) * out_dt;
      while (stepper.current_time() < tk) {
        stepper.do_step(rhs);
        const double x = stepper.current_state()[0];
        if (x < g.x_min() || x > g.x_max()) {
          traj.times.push_back(stepper.current_time());
          traj.positions.push_back(x);
          traj.exited_grid = true;
          return traj;
        }
      }
      State xk;
      stepper.calc_state(tk, xk);
      traj.times.push_back(tk);
      traj.positions.push_back(xk[0]);
    }
  } catch (const singular_velocity&) {
    traj.status = TrajectoryStatus::aborted_near_node;
  }
  return traj;
}

// Earliest time the path lies in [a, b]: 0 if it starts inside, otherwise the
// first crossing of the edge it approaches, refined linearly between samples.
inline std::optional<double> first_entry_time(const Trajectory& traj, const DetectorRegion& det) {
  const auto& t = traj.times;
  const auto& x = traj.positions;
  if (x.empty()) return std::nullopt;
  if (det.contains(x[0])) return t[0];
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double x0 = x[k];
    const double x1 = x[k + 1];
    double edge;
    if (x0 < det.a && x1 >= det.a)
      edge = det.a;
    else if (x0 > det.b && x1 <= det.b)
      edge = det.b;
    else
      continue;
    return t[k] + (edge - x0) / (x1 - x0) * (t[k + 1] - t[k]);
  }
  return std::nullopt;
}

struct EmpiricalCdf {
  std::vector<double> times;
  std::vector<double> p_hat;
  std::vector<double> std_error;  // binomial sqrt(p(1-p)/n)
  std::size_t count = 0;
};

inline EmpiricalCdf empirical_detection_cdf(std::span<const std::optional<double>> entries,
                                            std::span<const double> eval_times) {
  if (entries.empty()) throw config_error("empirical CDF needs at least one sample");
  std::vector<double> hits;
  for (const auto& e : entries)
    if (e) hits.push_back(*e);
  std::sort(hits.begin(), hits.end());
  EmpiricalCdf cdf;
  cdf.count = entries.size();
  const auto n = static_cast<double>(entries.size());
  for (double tau : eval_times) {
    const auto c = std::upper_bound(hits.begin(), hits.end(), tau) - hits.begin();
    const double p = static_cast<double>(c) / n;
    cdf.times.push_back(tau);
    cdf.p_hat.push_back(p);
    cdf.std_error.push_back(std::sqrt(p * (1.0 - p) / n));
  }
  return cdf;
}

struct EnsembleOptions {
  std::size_t samples = 2000;
  std::uint64_t seed = 1;
  double t_end = 0.0;
  IntegrationOptions integration;
  unsigned threads = 0;                 // 0: hardware concurrency
  double abort_warning_fraction = 1e-3; // warn when more paths than this abort
};

struct EnsembleResult {
  std::vector<Trajectory> trajectories;
  std::vector<std::optional<double>> entry_times;  // per trajectory
  std::size_t sample_count = 0;                     // completed trajectories
  std::size_t aborted = 0;
  std::uint64_t seed = 0;
  bool aborted_warning = false;

  // Entry times of completed trajectories only; aborted ones are excluded.
  std::vector<std::optional<double>> valid_entries() const {
    std::vector<std::optional<double>> out;
    out.reserve(sample_count);
    for (std::size_t i = 0; i < trajectories.size(); ++i)
      if (trajectories[i].status == TrajectoryStatus::completed) out.push_back(entry_times[i]);
    return out;
  }
};

inline EnsembleResult run_ensemble(const FieldHistory& h, const RealField& rho0,
                                   const DetectorRegion& det, const EnsembleOptions& opts) {
  require_inside(h.grid(), det);
  const double t_end = opts.t_end > 0.0 ? opts.t_end : h.t_last();
  const auto starts = sample_initial_positions(rho0, opts.samples, opts.seed);

  EnsembleResult res;
  res.seed = opts.seed;
  res.trajectories.resize(starts.size());
  res.entry_times.resize(starts.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < starts.size(); i = next++) {
      res.trajectories[i] = integrate_trajectory(starts[i], h, t_end, opts.integration);
      res.entry_times[i] = first_entry_time(res.trajectories[i], det);
    }
  };
  unsigned n_threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(starts.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  for (const auto& tr : res.trajectories)
    if (tr.status == TrajectoryStatus::aborted_near_node) ++res.aborted;
  res.sample_count = res.trajectories.size() - res.aborted;
  res.aborted_warning =
      static_cast<double>(res.aborted) > opts.abort_warning_fraction * static_cast<double>(starts.size());
  return res;
}

// Detection probability against the empirical first-entry CDF: each
// evaluation time passes when |P - P_hat| <= sigmas * sqrt(P (1 - P) / n),
// with P linearly interpolated onto the evaluation times.
struct OracleComparison {
  std::vector<double> times;
  std::vector<double> P;
  std::vector<double> P_hat;
  std::vector<double> bound;
  std::size_t samples = 0;
  std::size_t failures = 0;
  double max_abs_diff = 0.0;
  bool pass = false;
};

inline double interpolate_series(std::span<const double> times, std::span<const double> v, double t) {
  if (t <= times.front()) return v.front();
  if (t >= times.back()) return v.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  const std::size_t lo = hi - 1;
  const double u = (t - times[lo]) / (times[hi] - times[lo]);
  return (1.0 - u) * v[lo] + u * v[hi];
}

inline OracleComparison compare_with_oracle(std::span<const double> times, std::span<const double> p,
                                            const EmpiricalCdf& emp, double sigmas = 3.0) {
  OracleComparison c;
  c.samples = emp.count;
  const auto n = static_cast<double>(emp.count);
  for (std::size_t i = 0; i < emp.times.size(); ++i) {
    const double pm = std::clamp(interpolate_series(times, p, emp.times[i]), 0.0, 1.0);
    const double bound = sigmas * std::sqrt(pm * (1.0 - pm) / n);
    const double diff = std::abs(pm - emp.p_hat[i]);
    c.times.push_back(emp.times[i]);
    c.P.push_back(pm);
    c.P_hat.push_back(emp.p_hat[i]);
    c.bound.push_back(bound);
    c.max_abs_diff = std::max(c.max_abs_diff, diff);
    if (diff > bound) ++c.failures;
  }
  c.pass = c.failures == 0 && !c.times.empty();
  return c;
}

}  // namespace bohm
