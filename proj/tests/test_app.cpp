#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bohm/app/config.hpp"
#include "bohm/app/csv.hpp"
#include "bohm/app/pipeline.hpp"

using namespace bohm;
using namespace bohm::app;

namespace {

const std::string data_dir = BOHM_TEST_DATA_DIR;

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("bohm_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, data_dir);
}

}  // namespace

TEST(Presets, Free) {
  auto c = preset("free_six_gaussians");
  EXPECT_EQ(c.tag, ScenarioTag::free_six_gaussians);
  EXPECT_TRUE(c.detector.is_point());
  EXPECT_EQ(c.detector.a, -2.5);
  ASSERT_EQ(c.packets.size(), 6u);
  double w2 = 0.0;
  for (const auto& p : c.packets) w2 += p.weight * p.weight;
  EXPECT_NEAR(w2, 1.0, 1e-15);
  EXPECT_EQ(c.packets[0].k0, 5.0);
  EXPECT_EQ(c.packets[0].x0, -4.0);
  EXPECT_EQ(c.packets[3].k0, -5.0);
  EXPECT_EQ(c.packets[5].x0, 20.0);
}

TEST(Presets, BarrierAndStep) {
  auto b = preset(ScenarioTag::barrier);
  EXPECT_LT(b.detector.a, b.detector.b);
  ASSERT_TRUE(std::holds_alternative<BarrierPotential>(b.potential));
  auto s = preset(ScenarioTag::step);
  ASSERT_TRUE(std::holds_alternative<StepPotential>(s.potential));
  EXPECT_GT(std::get<StepPotential>(s.potential).height, 0.0);
  EXPECT_NO_THROW(b.validate());
  EXPECT_NO_THROW(s.validate());
}

TEST(Presets, UnknownName) {
  EXPECT_THROW(preset("tunnel"), config_error);
  EXPECT_THROW(preset("custom"), config_error);
  EXPECT_THROW(resolve_config("no_such_file.ini"), config_error);
}

TEST(Config, PresetWithOverrides) {
  auto c = parse("preset = barrier\n[oracle]\nsamples = 10\nseed = 9\n");
  EXPECT_EQ(c.tag, ScenarioTag::barrier);
  EXPECT_EQ(c.samples, 10u);
  EXPECT_EQ(c.seed, 9u);
  c = parse("preset = barrier\n[potential]\nkind = barrier\na = 0\nb = 3\nheight = 0.4\n");
  EXPECT_EQ(c.tag, ScenarioTag::custom);
  EXPECT_EQ(std::get<BarrierPotential>(c.potential).b, 3.0);
}

TEST(Config, PointDetectorAndPackets) {
  auto c = load_config(data_dir + "/small.ini");
  EXPECT_EQ(c.tag, ScenarioTag::custom);
  EXPECT_EQ(c.n_points, 801u);
  EXPECT_EQ(c.detector.b, 1.0);
  ASSERT_EQ(c.packets.size(), 1u);
  EXPECT_EQ(c.packets[0].x0, -4.0);
  c = parse("[grid]\nn_points = 101\n[detector]\npoint = 1.5\n[packet1]\nk0 = 1\nx0 = 0\nd = 1\n");
  EXPECT_TRUE(c.detector.is_point());
  EXPECT_EQ(c.detector.a, 1.5);
}

TEST(Config, Errors) {
  EXPECT_THROW(load_config(data_dir + "/bad.ini"), config_error);
  EXPECT_THROW(parse("scenario = tunnel\n"), config_error);
  EXPECT_THROW(parse("preset = barrier\n[oracle]\nenabled = maybe\n"), config_error);
  EXPECT_THROW(parse("preset = barrier\n[grid]\nn_points = many\n"), config_error);
  EXPECT_THROW(parse("preset = barrier\n[potential]\nkind = well\n"), config_error);
  EXPECT_THROW(parse("preset = barrier\n[detector]\na = 250\nb = 260\n"), config_error);
  EXPECT_THROW(parse("preset = barrier\n[potential]\nkind = tabulated\nfile = short_table.txt\n"), config_error);
}

TEST(Config, RoundTripAndHash) {
  for (auto tag : {ScenarioTag::free_six_gaussians, ScenarioTag::barrier, ScenarioTag::step}) {
    auto c = preset(tag);
    auto back = parse(to_ini(c));
    EXPECT_EQ(back.tag, tag);
    EXPECT_EQ(to_ini(back), to_ini(c));
    EXPECT_EQ(config_hash(back), config_hash(c));
  }
  auto a = preset(ScenarioTag::barrier);
  auto b = a;
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
}

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 0.0, 1e22}) EXPECT_EQ(std::stod(fmt_num(v)), v);
  EXPECT_EQ(fmt_num(0.1), "0.1");
}

TEST(Csv, BoundaryRoundTrip) {
  auto dir = scratch_dir("csv");
  BoundaryRecord rec{DetectorRegion(-1.0, 2.0), {0.0, 0.1, 0.2}, {0.5, 1.0 / 3.0, -1e-17}, {0.0, 0.25, 0.125}};
  write_boundary_csv((dir / "b.csv").string(), rec, 0.125, "abc");
  auto f = read_boundary_csv((dir / "b.csv").string());
  EXPECT_EQ(f.record.times, rec.times);
  EXPECT_EQ(f.record.j_a, rec.j_a);
  EXPECT_EQ(f.record.j_b, rec.j_b);
  EXPECT_EQ(f.record.detector.a, -1.0);
  EXPECT_EQ(f.p0, 0.125);
  EXPECT_EQ(f.config_hash, "abc");
  auto t = read_csv((dir / "b.csv").string());
  EXPECT_EQ(t.columns, (std::vector<std::string>{"t", "j_a", "j_b"}));
}

TEST(Csv, EmpiricalRoundTripAndErrors) {
  auto dir = scratch_dir("csv2");
  std::vector<std::optional<double>> e{0.5, std::nullopt, 1.5};
  auto cdf = empirical_detection_cdf(e, std::vector<double>{1.0, 2.0});
  write_empirical_csv((dir / "e.csv").string(), cdf, 7, "h");
  auto back = read_empirical_csv((dir / "e.csv").string());
  EXPECT_EQ(back.count, 3u);
  EXPECT_EQ(back.p_hat, cdf.p_hat);
  EXPECT_THROW(read_csv((dir / "missing.csv").string()), config_error);
  std::ofstream(dir / "broken.csv") << "t,j_a,j_b\n0,1\n";
  EXPECT_THROW(read_csv((dir / "broken.csv").string()), config_error);
}

TEST(Pipeline, SmallScenarioEndToEnd) {
  auto c = load_config(data_dir + "/small.ini");
  auto run = run_scenario(c, {.threads = 1});
  ASSERT_TRUE(run.arrival && run.comparison && run.empirical);
  EXPECT_LT(run.p0, 1e-3);
  EXPECT_GT(run.arrival->N, 0.5);
  EXPECT_TRUE(run.comparison->pass) << run.comparison->max_abs_diff;
  EXPECT_EQ(run.empirical->times.size(), 20u);
  auto s = summarize(run);
  EXPECT_EQ(s["config_hash"], run.hash);
  EXPECT_TRUE(s.contains("N"));
}

TEST(Pipeline, ArtifactsAreBitStable) {
  auto c = load_config(data_dir + "/small.ini");
  c.samples = 50;
  auto d1 = scratch_dir("run1");
  auto d2 = scratch_dir("run2");
  write_artifacts(run_scenario(c, {.threads = 1}), d1);
  write_artifacts(run_scenario(c, {.threads = 2}), d2);
  for (const char* f : {"boundary.csv", "arrival.csv", "trajectories.csv", "summary.json", "config.ini"}) {
    ASSERT_TRUE(std::filesystem::exists(d1 / f)) << f;
    EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
  }
  auto arrival = read_csv((d1 / "arrival.csv").string());
  EXPECT_EQ(arrival.columns,
            (std::vector<std::string>{"t", "f_a", "f_b", "runmax_fa", "runmax_negfb", "P", "Pc", "delta"}));
  EXPECT_EQ(read_csv((d1 / "trajectories.csv").string()).columns, (std::vector<std::string>{"id", "t", "x"}));
}

TEST(Pipeline, ErrorsNameTheScenario) {
  auto c = load_config(data_dir + "/small.ini");
  c.packets = {{2.0, -4.0, 1.0, 0.5}};
  try {
    run_scenario(c, {.oracle = false});
    FAIL() << "expected a config error";
  } catch (const config_error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("custom: ", 0), 0u) << e.what();
  }
}
