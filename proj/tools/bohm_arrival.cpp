// Command-line front end: runs scenarios, evaluates recorded boundary
// currents, integrates trajectory ensembles and compares the two.
//
// Exit codes: 0 success, 1 config error, 2 invariant violation,
// 3 oracle mismatch.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bohm/app/config.hpp"
#include "bohm/app/csv.hpp"
#include "bohm/app/pipeline.hpp"

namespace {

enum ExitCode { ok = 0, config_failure = 1, invariant_failure = 2, oracle_mismatch = 3 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> stride;
  std::optional<std::string> out;
  unsigned threads = 0;
};

void apply(const Overrides& o, bohm::app::ScenarioConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.samples) c.samples = *o.samples;
  if (o.stride) c.snapshot_stride = *o.stride;
  if (o.out) c.output_dir = *o.out;
  c.validate();
}

void print_warnings(const bohm::app::ScenarioRun& run) {
  for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";
}

int report_comparison(const bohm::OracleComparison& c) {
  std::cout << "oracle comparison: " << (c.pass ? "pass" : "FAIL") << " (" << c.times.size()
            << " times, " << c.failures << " outside 3 sigma, max |P - P_hat| = "
            << bohm::app::fmt_num(c.max_abs_diff) << ", n = " << c.samples << ")\n";
  return c.pass ? ok : oracle_mismatch;
}

int cmd_run(const std::string& target, const Overrides& o, bool no_oracle) {
  auto config = bohm::app::resolve_config(target);
  apply(o, config);
  if (no_oracle) config.oracle = false;
  bohm::app::RunOptions opts;
  opts.oracle = config.oracle;
  opts.threads = o.threads;
  const auto run = bohm::app::run_scenario(config, opts);
  bohm::app::write_artifacts(run, config.output_dir);
  print_warnings(run);
  std::cout << bohm::app::summarize(run).dump(2) << "\n";
  return run.comparison ? report_comparison(*run.comparison) : ok;
}

int cmd_trajectories(const std::string& target, const Overrides& o) {
  auto config = bohm::app::resolve_config(target);
  apply(o, config);
  bohm::app::RunOptions opts;
  opts.arrival = false;
  opts.threads = o.threads;
  const auto run = bohm::app::run_scenario(config, opts);
  bohm::app::write_artifacts(run, config.output_dir);
  print_warnings(run);
  std::cout << "wrote " << run.ensemble->trajectories.size() << " trajectories ("
            << run.ensemble->aborted << " aborted) to " << config.output_dir << "\n";
  return ok;
}

int cmd_arrival(const std::string& file, const std::string& out, std::optional<double> p0) {
  const auto bf = bohm::app::read_boundary_csv(file);
  const auto result = bohm::compute_arrival(bf.record, p0.value_or(bf.p0));
  std::filesystem::create_directories(out);
  bohm::app::write_arrival_csv((std::filesystem::path(out) / "arrival.csv").string(), result,
                               bf.config_hash);
  nlohmann::json j = {{"P0", result.P0},
                      {"N", result.N},
                      {"point_mass", result.point_mass},
                      {"detected_density", result.detected_density},
                      {"tail_converged", result.tail_converged},
                      {"tail_increase", result.tail_increase},
                      {"moments",
                       {{"mean", result.moments.mean},
                        {"variance", result.moments.variance},
                        {"conditional_on_detection", true},
                        {"truncated", result.moments.truncated}}}};
  std::ofstream(std::filesystem::path(out) / "summary.json") << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return ok;
}

int cmd_compare(const std::string& arrival_file, const std::string& empirical_file,
                const std::string& out, double sigmas) {
  const auto table = bohm::app::read_csv(arrival_file);
  const auto times = table.column("t");
  const auto p = table.column("P");
  const auto emp = bohm::app::read_empirical_csv(empirical_file);
  const auto cmp = bohm::compare_with_oracle(times, p, emp, sigmas);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    bohm::app::write_comparison_csv((std::filesystem::path(out) / "comparison.csv").string(), cmp);
  }
  return report_comparison(cmp);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmian arrival-time distributions from boundary currents"};
  app.require_subcommand(1);

  Overrides o;
  bool no_oracle = false;
  std::string target;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Seed for the initial-position sampler");
    sub->add_option("--samples", o.samples, "Number of trajectories");
    sub->add_option("--stride", o.stride, "Store every n-th propagation step for the oracle");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--threads", o.threads, "Worker threads for the ensemble (0: all cores)");
  };

  auto* run = app.add_subcommand("run", "Propagate, compute P(tau) and (optionally) run the oracle");
  run->add_option("config", target, "Config file or preset name (free, barrier, step)")->required();
  add_overrides(run);
  run->add_flag("--no-oracle", no_oracle, "Skip the trajectory ensemble");

  auto* traj = app.add_subcommand("trajectories", "Run only the trajectory oracle");
  traj->add_option("config", target, "Config file or preset name")->required();
  add_overrides(traj);

  std::string boundary_file;
  std::string arrival_out = "out";
  std::optional<double> p0;
  auto* arr = app.add_subcommand("arrival", "Detection probability from a boundary-current CSV");
  arr->add_option("boundary", boundary_file, "boundary.csv with columns t,j_a,j_b")->required();
  arr->add_option("--out", arrival_out, "Output directory");
  arr->add_option("--p0", p0, "Override P(0) from the file header");

  std::string arrival_file;
  std::string empirical_file;
  std::string compare_out;
  double sigmas = 3.0;
  auto* cmp = app.add_subcommand("compare", "Check P(tau) against an empirical first-entry CDF");
  cmp->add_option("arrival", arrival_file, "arrival.csv")->required();
  cmp->add_option("empirical", empirical_file, "empirical.csv")->required();
  cmp->add_option("--out", compare_out, "Directory for comparison.csv");
  cmp->add_option("--sigmas", sigmas, "Allowed deviation in binomial standard errors");

  std::string preset_name;
  auto* show = app.add_subcommand("preset", "Print a preset as a config file");
  show->add_option("name", preset_name, "free, barrier or step")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_failure;
  }

  try {
    if (*run) return cmd_run(target, o, no_oracle);
    if (*traj) return cmd_trajectories(target, o);
    if (*arr) return cmd_arrival(boundary_file, arrival_out, p0);
    if (*cmp) return cmd_compare(arrival_file, empirical_file, compare_out, sigmas);
    if (*show) {
      std::cout << bohm::app::to_ini(bohm::app::preset(preset_name));
      return ok;
    }
  } catch (const bohm::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_failure;
  } catch (const bohm::invariant_violation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return invariant_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return config_failure;
  }
  return ok;
}
