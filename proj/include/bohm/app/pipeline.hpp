#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohm/arrival.hpp"
#include "bohm/gaussian.hpp"
#include "bohm/observables.hpp"
#include "bohm/propagator.hpp"
#include "bohm/trajectory.hpp"
#include "bohm/app/config.hpp"
#include "bohm/app/csv.hpp"

namespace bohm::app {

struct RunOptions {
  bool arrival = true;  // boundary currents and detection probability
  bool oracle = true;   // trajectory ensemble and empirical CDF
  unsigned threads = 0;
};

struct ScenarioRun {
  ScenarioConfig config;
  std::string hash;
  PropagationStats propagation;
  double p0 = 0.0;
  BoundaryRecord boundary;
  std::optional<ArrivalResult> arrival;
  std::optional<EnsembleResult> ensemble;
  std::optional<EmpiricalCdf> empirical;
  std::optional<OracleComparison> comparison;
  std::vector<std::string> warnings;
};

// Evaluation times for the oracle comparison: n uniform instants in (0, t_end].
inline std::vector<double> evaluation_times(double t_end, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = t_end * static_cast<double>(i + 1) / static_cast<double>(n);
  return out;
}

namespace detail {

template <typename Fn>
auto with_context(const std::string& scenario, Fn&& fn) {
  try {
    return fn();
  } catch (const zero_detection& e) {
    throw zero_detection(scenario + ": " + e.what());
  } catch (const invariant_violation& e) {
    throw invariant_violation(scenario + ": " + e.what());
  } catch (const config_error& e) {
    throw config_error(scenario + ": " + e.what());
  }
}

}  // namespace detail

// Propagation with the boundary-current recorder (and the field history when
// the oracle is requested), then detection probability, then the ensemble.
inline ScenarioRun run_scenario(const ScenarioConfig& config, const RunOptions& opts = {}) {
  const std::string name = to_string(config.tag);
  return detail::with_context(name, [&] {
    config.validate();
    ScenarioRun run;
    run.config = config;
    run.hash = config_hash(config);

    const Grid1D grid = config.grid();
    const TimeGrid tg = config.time_grid();
    const WaveField initial = superpose(config.packets, grid, 0.0);

    BoundaryCurrentRecorder boundary(grid, config.detector);
    std::optional<FieldHistoryRecorder> history;
    std::vector<PropagationRecorder*> recorders{&boundary};
    if (opts.oracle) {
      history.emplace(grid, config.stride(), tg.n_steps);
      recorders.push_back(&*history);
    }
    run.propagation = propagate(initial, config.potential, tg, recorders);
    if (run.propagation.edge_warning)
      run.warnings.push_back("wave function reaches the grid walls (|psi| = " +
                             fmt_num(run.propagation.max_edge_amplitude) + ")");
    run.boundary = boundary.take();
    run.p0 = config.detector.is_point()
                 ? 0.0
                 : interval_probability(initial, config.detector.a, config.detector.b);

    if (opts.arrival) {
      run.arrival = compute_arrival(run.boundary, run.p0);
      if (!run.arrival->tail_converged)
        run.warnings.push_back("detection probability still rising at the end of the window");
      if (run.arrival->moments.truncated)
        run.warnings.push_back("arrival density truncated by the time window");
    }

    if (opts.oracle) {
      const FieldHistory hist = history->take();
      EnsembleOptions eo;
      eo.samples = config.samples;
      eo.seed = config.seed;
      eo.t_end = tg.t_end();
      eo.integration.rtol = config.rtol;
      eo.threads = opts.threads;
      run.ensemble = run_ensemble(hist, probability_density(initial), config.detector, eo);
      if (run.ensemble->aborted_warning)
        run.warnings.push_back(std::to_string(run.ensemble->aborted) +
                               " trajectories aborted near wavefunction nodes");
      const auto entries = run.ensemble->valid_entries();
      run.empirical = empirical_detection_cdf(entries, evaluation_times(tg.t_end(), config.eval_times));
      if (run.arrival) run.comparison = compare_with_oracle(run.arrival->times, run.arrival->P, *run.empirical);
    }
    return run;
  });
}

inline nlohmann::json config_json(const ScenarioConfig& c) {
  nlohmann::json packets = nlohmann::json::array();
  for (const auto& p : c.packets)
    packets.push_back({{"k0", p.k0}, {"x0", p.x0}, {"d", p.d}, {"weight", p.weight}});
  nlohmann::json potential = {{"kind", potential_name(c.potential)}};
  if (auto* b = std::get_if<BarrierPotential>(&c.potential)) {
    potential["a"] = b->a;
    potential["b"] = b->b;
    potential["height"] = b->height;
  } else if (auto* s = std::get_if<StepPotential>(&c.potential)) {
    potential["x_s"] = s->x_s;
    potential["height"] = s->height;
  } else if (std::holds_alternative<TabulatedPotential>(c.potential)) {
    potential["file"] = c.potential_file;
  }
  const auto tg = c.time_grid();
  return {{"scenario", to_string(c.tag)},
          {"grid", {{"x_min", c.x_min}, {"x_max", c.x_max}, {"n_points", c.n_points}}},
          {"time", {{"t_end", c.t_end}, {"dt", tg.dt}, {"n_steps", tg.n_steps}}},
          {"potential", potential},
          {"packets", packets},
          {"detector", {{"a", c.detector.a}, {"b", c.detector.b}}},
          {"oracle",
           {{"enabled", c.oracle},
            {"samples", c.samples},
            {"seed", c.seed},
            {"snapshot_stride", c.stride()},
            {"eval_times", c.eval_times},
            {"rtol", c.rtol}}}};
}

inline nlohmann::json summarize(const ScenarioRun& run) {
  nlohmann::json j;
  j["config_hash"] = run.hash;
  j["config"] = config_json(run.config);
  j["seed"] = run.config.seed;
  j["P0"] = run.p0;
  j["propagation"] = {{"max_norm_drift", run.propagation.max_norm_drift},
                      {"max_edge_amplitude", run.propagation.max_edge_amplitude},
                      {"edge_warning", run.propagation.edge_warning}};
  if (run.arrival) {
    const auto& a = *run.arrival;
    j["N"] = a.N;
    j["point_mass"] = a.point_mass;
    j["detected_density"] = a.detected_density;
    j["tail_converged"] = a.tail_converged;
    j["tail_increase"] = a.tail_increase;
    j["moments"] = {{"mean", a.moments.mean},
                    {"variance", a.moments.variance},
                    {"conditional_on_detection", true},
                    {"truncated", a.moments.truncated}};
  }
  if (run.ensemble) {
    nlohmann::json o = {{"samples", run.ensemble->sample_count},
                        {"aborted", run.ensemble->aborted},
                        {"aborted_warning", run.ensemble->aborted_warning}};
    if (run.comparison) {
      o["pass"] = run.comparison->pass;
      o["failures"] = run.comparison->failures;
      o["max_abs_diff"] = run.comparison->max_abs_diff;
      o["eval_times"] = run.comparison->times.size();
    }
    j["oracle"] = o;
  }
  j["warnings"] = run.warnings;
  return j;
}

// Writes boundary.csv, arrival.csv, trajectories.csv, empirical.csv,
// comparison.csv, config.ini and summary.json (whichever apply).
inline void write_artifacts(const ScenarioRun& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto path = [&](const char* name) { return (dir / name).string(); };
  {
    std::ofstream cfg(path("config.ini"));
    cfg << to_ini(run.config);
  }
  write_boundary_csv(path("boundary.csv"), run.boundary, run.p0, run.hash);
  if (run.arrival) write_arrival_csv(path("arrival.csv"), *run.arrival, run.hash);
  if (run.ensemble) {
    const auto n_samples = run.ensemble->trajectories.empty() ? 0 : run.ensemble->trajectories[0].times.size();
    write_trajectories_csv(path("trajectories.csv"), *run.ensemble, std::max<std::size_t>(1, n_samples / 200),
                           run.hash);
    write_empirical_csv(path("empirical.csv"), *run.empirical, run.config.seed, run.hash);
  }
  if (run.comparison) write_comparison_csv(path("comparison.csv"), *run.comparison);
  std::ofstream(path("summary.json")) << summarize(run).dump(2) << "\n";
}

}  // namespace bohm::app
