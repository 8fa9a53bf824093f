#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bohm/errors.hpp"
#include "bohm/gaussian.hpp"
#include "bohm/grid.hpp"
#include "bohm/potential.hpp"
#include "bohm/app/format.hpp"

namespace bohm::app {

enum class ScenarioTag { free_six_gaussians, barrier, step, custom };

inline std::string to_string(ScenarioTag t) {
  switch (t) {
    case ScenarioTag::free_six_gaussians: return "free_six_gaussians";
    case ScenarioTag::barrier: return "barrier";
    case ScenarioTag::step: return "step";
    case ScenarioTag::custom: return "custom";
  }
  return "custom";
}

inline std::optional<ScenarioTag> parse_tag(const std::string& s) {
  if (s == "free_six_gaussians" || s == "free") return ScenarioTag::free_six_gaussians;
  if (s == "barrier") return ScenarioTag::barrier;
  if (s == "step") return ScenarioTag::step;
  if (s == "custom") return ScenarioTag::custom;
  return std::nullopt;
}

// Everything needed to reproduce one run, in reduced units (hbar = m = 1).
struct ScenarioConfig {
  ScenarioTag tag = ScenarioTag::custom;

  double x_min = -50.0;
  double x_max = 50.0;
  std::size_t n_points = 2001;

  double t_end = 10.0;
  double dt = 0.0;          // 0: dt_factor * dx^2
  double dt_factor = 0.5;

  PotentialSpec potential = FreePotential{};
  std::string potential_file;  // source of a tabulated potential, echoed only
  std::vector<GaussianPacketParams> packets;
  DetectorRegion detector;

  bool oracle = true;
  std::size_t samples = 2000;
  std::uint64_t seed = 1;
  std::size_t snapshot_stride = 0;  // 0: about 1000 snapshots over the window
  std::size_t eval_times = 40;
  double rtol = 1e-6;

  std::string output_dir = "out";

  Grid1D grid() const { return Grid1D(x_min, x_max, n_points); }

  TimeGrid time_grid() const {
    const double dx = grid().dx();
    return TimeGrid::covering(t_end, dt > 0.0 ? dt : dt_factor * dx * dx);
  }

  std::size_t stride() const {
    if (snapshot_stride > 0) return snapshot_stride;
    return std::max<std::size_t>(1, time_grid().n_steps / 1000);
  }

  void validate() const {
    const Grid1D g = grid();
    if (!(t_end > 0.0)) throw config_error("time window must be positive");
    if (dt < 0.0 || !(dt_factor > 0.0)) throw config_error("time step settings must be positive");
    bohm::validate(potential);
    if (packets.empty()) throw config_error("scenario needs at least one packet");
    for (const auto& p : packets) {
      if (!(p.d > 0.0)) throw config_error("packet width must be positive");
      if (!g.contains(p.x0)) throw config_error("packet center lies outside the grid");
    }
    require_inside(g, detector);
    if (samples == 0) throw config_error("oracle sample count must be positive");
    if (eval_times == 0) throw config_error("need at least one evaluation time");
    if (!(rtol > 0.0)) throw config_error("rtol must be positive");
  }
};

// The six-packet free state: weights sqrt(1/9) for the right movers centred
// at x0, 3x0, 5x0 and sqrt(2/9) for the left movers at -x0, -3x0, -5x0.
inline std::vector<GaussianPacketParams> six_gaussian_packets(double k0, double d, double x0) {
  const double w1 = std::sqrt(1.0 / 9.0);
  const double w2 = std::sqrt(2.0 / 9.0);
  return {{k0, x0, d, w1},        {k0, 3 * x0, d, w1},        {k0, 5 * x0, d, w1},
          {-k0, -x0, d, w2},      {-k0, -3 * x0, d, w2},      {-k0, -5 * x0, d, w2}};
}

// Preset scenarios. Only the free scenario has fully published parameters;
// the barrier and step packets are reconstructions that reproduce the
// qualitative behaviour (see comments below).
inline ScenarioConfig preset(ScenarioTag tag) {
  ScenarioConfig c;
  c.tag = tag;
  switch (tag) {
    case ScenarioTag::free_six_gaussians:
      // k0 = 5, d = 1, x0 = -4; point detector at -2.5. By t = 8 every packet
      // has cleared the detector; [-90, 90] keeps |psi| at the walls tiny.
      c.x_min = -90.0;
      c.x_max = 90.0;
      c.n_points = 7201;  // dx = 0.025, k0 dx = 0.125
      c.t_end = 8.0;
      c.potential = FreePotential{};
      c.packets = six_gaussian_packets(5.0, 1.0, -4.0);
      c.detector = DetectorRegion::point(-2.5);
      c.snapshot_stride = 32;  // snapshots every 0.01
      break;
    case ScenarioTag::barrier:
      // Barrier of height 1/2 on [0, 2). Packet k0 = 1.2 (energy 0.72), d = 3,
      // centred at -25 so its overlap with the detector at t = 0 is ~1e-17.
      // Part of the packet is reflected from inside the barrier, so f_a dips
      // after its maximum, while the right edge only sees outgoing flux.
      c.x_min = -200.0;
      c.x_max = 200.0;
      c.n_points = 4001;  // dx = 0.1
      c.t_end = 60.0;
      c.potential = BarrierPotential{0.0, 2.0, 0.5};
      c.packets = {{1.2, -25.0, 3.0, 1.0}};
      c.detector = DetectorRegion(0.0, 2.0);
      c.snapshot_stride = 10;  // snapshots every 0.05
      break;
    case ScenarioTag::step:
      // Step of height 1/2 at x = 0. Packet k0 = 0.7, d = 5 (momentum spread
      // 0.1, so k < 1 and the packet is reflected up to a ~1e-3 tail) centred
      // at -20; detector [-30, -20] holds about half the packet at t = 0.
      c.x_min = -300.0;
      c.x_max = 150.0;
      c.n_points = 4501;  // dx = 0.1
      c.t_end = 150.0;
      c.potential = StepPotential{0.0, 0.5};
      c.packets = {{0.7, -20.0, 5.0, 1.0}};
      c.detector = DetectorRegion(-30.0, -20.0);
      c.snapshot_stride = 20;  // snapshots every 0.1
      break;
    case ScenarioTag::custom:
      throw config_error("no preset for the custom scenario");
  }
  return c;
}

inline ScenarioConfig preset(const std::string& name) {
  auto tag = parse_tag(name);
  if (!tag || *tag == ScenarioTag::custom) throw config_error("unknown preset '" + name + "'");
  return preset(*tag);
}

// ---------------------------------------------------------------------------
// Config files: INI-style key = value lines grouped in [sections], comments
// start with ';' or '#'. Keys absent from the file keep the value of the
// preset named by the top-level `preset` key (or the built-in defaults).
//
//   preset = barrier
//   [grid]      x_min, x_max, n_points
//   [time]      t_end, dt, dt_factor
//   [potential] kind = free|barrier|step|tabulated; a, b, height, x_s, file
//   [detector]  a, b            (point = x for a point detector)
//   [packets]   count           then [packet1] ... [packetN] with k0, x0, d, weight
//   [oracle]    enabled, samples, seed, snapshot_stride, eval_times, rtol
//   [output]    dir
// ---------------------------------------------------------------------------

namespace detail {

namespace pt = boost::property_tree;

template <typename T>
void read_key(const pt::ptree& tree, const std::string& path, T& value) {
  if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '/'))) {
    std::istringstream in(*v);
    T parsed{};
    if constexpr (std::is_same_v<T, std::string>) {
      parsed = *v;
    } else if constexpr (std::is_same_v<T, bool>) {
      std::string s;
      in >> s;
      if (s == "true" || s == "1" || s == "yes") parsed = true;
      else if (s == "false" || s == "0" || s == "no") parsed = false;
      else throw config_error("bad boolean for '" + path + "': " + *v);
    } else {
      in >> parsed;
      if (in.fail()) throw config_error("bad value for '" + path + "': " + *v);
    }
    value = parsed;
  }
}

inline std::vector<double> read_column(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw config_error("cannot open potential table '" + file + "'");
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(std::stod(line));
  }
  return out;
}

}  // namespace detail

inline ScenarioConfig parse_config(std::istream& in, const std::string& base_dir = ".") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw config_error(std::string("config parse error: ") + e.what());
  }
  using detail::read_key;

  ScenarioConfig c;
  std::string base;
  read_key(tree, "preset", base);
  if (!base.empty()) c = preset(base);
  // A bare preset keeps its tag; anything touching the physics is custom
  // unless the file names its scenario explicitly (as to_ini does).
  const bool overrides_physics = tree.get_child_optional("potential") ||
                                 tree.get_child_optional("packets") ||
                                 tree.get_child_optional("packet1");
  c.tag = (!base.empty() && !overrides_physics) ? *parse_tag(base) : ScenarioTag::custom;
  std::string scenario;
  read_key(tree, "scenario", scenario);
  if (!scenario.empty()) {
    auto tag = parse_tag(scenario);
    if (!tag) throw config_error("unknown scenario '" + scenario + "'");
    c.tag = *tag;
  }

  read_key(tree, "grid/x_min", c.x_min);
  read_key(tree, "grid/x_max", c.x_max);
  read_key(tree, "grid/n_points", c.n_points);
  read_key(tree, "time/t_end", c.t_end);
  read_key(tree, "time/dt", c.dt);
  read_key(tree, "time/dt_factor", c.dt_factor);

  if (tree.get_child_optional("potential")) {
    std::string kind = "free";
    read_key(tree, "potential/kind", kind);
    double height = 0.5;
    read_key(tree, "potential/height", height);
    if (kind == "free") {
      c.potential = FreePotential{};
    } else if (kind == "barrier") {
      BarrierPotential b{0.0, 0.0, height};
      read_key(tree, "potential/a", b.a);
      read_key(tree, "potential/b", b.b);
      c.potential = b;
    } else if (kind == "step") {
      StepPotential s{0.0, height};
      read_key(tree, "potential/x_s", s.x_s);
      c.potential = s;
    } else if (kind == "tabulated") {
      read_key(tree, "potential/file", c.potential_file);
      std::string path = c.potential_file;
      if (!path.empty() && path[0] != '/') path = base_dir + "/" + path;
      c.potential = TabulatedPotential{c.grid(), detail::read_column(path)};
    } else {
      throw config_error("unknown potential kind '" + kind + "'");
    }
  }

  if (tree.get_child_optional("detector")) {
    double a = c.detector.a;
    double b = c.detector.b;
    if (auto p = tree.get_optional<double>(pt::ptree::path_type("detector/point", '/'))) {
      a = b = *p;
    } else {
      read_key(tree, "detector/a", a);
      read_key(tree, "detector/b", b);
    }
    c.detector = DetectorRegion(a, b);
  }

  std::size_t count = 0;
  read_key(tree, "packets/count", count);
  if (count == 0 && tree.get_child_optional("packet1")) {
    while (tree.get_child_optional("packet" + std::to_string(count + 1))) ++count;
  }
  if (count > 0) {
    c.packets.clear();
    for (std::size_t i = 1; i <= count; ++i) {
      const std::string sec = "packet" + std::to_string(i);
      if (!tree.get_child_optional(sec)) throw config_error("missing section [" + sec + "]");
      GaussianPacketParams p;
      read_key(tree, sec + "/k0", p.k0);
      read_key(tree, sec + "/x0", p.x0);
      read_key(tree, sec + "/d", p.d);
      read_key(tree, sec + "/weight", p.weight);
      c.packets.push_back(p);
    }
  }

  read_key(tree, "oracle/enabled", c.oracle);
  read_key(tree, "oracle/samples", c.samples);
  read_key(tree, "oracle/seed", c.seed);
  read_key(tree, "oracle/snapshot_stride", c.snapshot_stride);
  read_key(tree, "oracle/eval_times", c.eval_times);
  read_key(tree, "oracle/rtol", c.rtol);
  read_key(tree, "output/dir", c.output_dir);
  c.validate();
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  const auto slash = path.find_last_of('/');
  return parse_config(in, slash == std::string::npos ? "." : path.substr(0, slash));
}

// A preset name or a path to a config file.
inline ScenarioConfig resolve_config(const std::string& arg) {
  if (auto tag = parse_tag(arg); tag && *tag != ScenarioTag::custom) return preset(*tag);
  return load_config(arg);
}

// Canonical INI text of a config; round-trips through parse_config and is
// the input of the config hash. The output directory is not part of it.
inline std::string to_ini(const ScenarioConfig& c) {
  std::ostringstream o;
  o << "scenario = " << to_string(c.tag) << "\n\n";
  o << "[grid]\nx_min = " << fmt_num(c.x_min) << "\nx_max = " << fmt_num(c.x_max)
    << "\nn_points = " << c.n_points << "\n\n";
  o << "[time]\nt_end = " << fmt_num(c.t_end) << "\ndt = " << fmt_num(c.dt)
    << "\ndt_factor = " << fmt_num(c.dt_factor) << "\n\n";
  o << "[potential]\nkind = " << potential_name(c.potential) << "\n";
  if (auto* b = std::get_if<BarrierPotential>(&c.potential))
    o << "a = " << fmt_num(b->a) << "\nb = " << fmt_num(b->b) << "\nheight = " << fmt_num(b->height) << "\n";
  if (auto* s = std::get_if<StepPotential>(&c.potential))
    o << "x_s = " << fmt_num(s->x_s) << "\nheight = " << fmt_num(s->height) << "\n";
  if (std::holds_alternative<TabulatedPotential>(c.potential)) o << "file = " << c.potential_file << "\n";
  o << "\n[detector]\na = " << fmt_num(c.detector.a) << "\nb = " << fmt_num(c.detector.b) << "\n\n";
  o << "[packets]\ncount = " << c.packets.size() << "\n\n";
  for (std::size_t i = 0; i < c.packets.size(); ++i) {
    const auto& p = c.packets[i];
    o << "[packet" << i + 1 << "]\nk0 = " << fmt_num(p.k0) << "\nx0 = " << fmt_num(p.x0)
      << "\nd = " << fmt_num(p.d) << "\nweight = " << fmt_num(p.weight) << "\n\n";
  }
  o << "[oracle]\nenabled = " << (c.oracle ? "true" : "false") << "\nsamples = " << c.samples
    << "\nseed = " << c.seed << "\nsnapshot_stride = " << c.snapshot_stride
    << "\neval_times = " << c.eval_times << "\nrtol = " << fmt_num(c.rtol) << "\n";
  return o.str();
}

inline std::string config_hash(const ScenarioConfig& c) { return fnv1a_hex(to_ini(c)); }

}  // namespace bohm::app
