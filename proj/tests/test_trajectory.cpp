#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "bohm/gaussian.hpp"
#include "bohm/trajectory.hpp"

using namespace bohm;

namespace {

WaveField plane_wave(const Grid1D& g, double k, double t = 0.0) {
  WaveField f{g, t, std::vector<complex>(g.size())};
  for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = std::exp(complex(0.0, k * g.node(i)));
  return f;
}

// History built from the closed-form free packet at every snapshot time.
FieldHistory analytic_history(const Grid1D& g, const GaussianPacketParams& p, double t_end, std::size_t n_snap) {
  FieldHistory h(g);
  for (std::size_t s = 0; s <= n_snap; ++s) {
    const double t = t_end * static_cast<double>(s) / static_cast<double>(n_snap);
    WaveField f{g, t, std::vector<complex>(g.size())};
    for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = gaussian_packet(t, g.node(i), p);
    h.append(f);
  }
  return h;
}

double gaussian_path(double x0, double t, const GaussianPacketParams& p) {
  return p.x0 + p.k0 * t + (x0 - p.x0) * std::sqrt(1.0 + t * t / (4.0 * std::pow(p.d, 4)));
}

Trajectory straight_path(std::vector<double> t, std::vector<double> x) {
  Trajectory tr;
  tr.x0 = x.front();
  tr.times = std::move(t);
  tr.positions = std::move(x);
  return tr;
}

}  // namespace

TEST(Velocity, PlaneWaveMovesAtWavenumber) {
  auto g = build_grid(-10.0, 10.0, 4001);
  FieldHistory h(g);
  h.append(plane_wave(g, 2.0, 0.0));
  h.append(plane_wave(g, 2.0, 1.0));
  for (double x : {-5.0, 0.0, 3.3})
    EXPECT_NEAR(velocity(0.5, x, h), std::sin(2.0 * g.dx()) / g.dx(), 1e-12);
  EXPECT_NEAR(velocity(0.5, 0.0, h), 2.0, 1e-4);
}

TEST(Velocity, RealFieldIsAtRest) {
  auto g = build_grid(-10.0, 10.0, 2001);
  auto f = superpose(std::vector{GaussianPacketParams{0.0, 0.0, 1.0, 1.0}}, g);
  FieldHistory h(g);
  h.append(f);
  EXPECT_EQ(velocity(0.0, 0.7, h), 0.0);
}

TEST(Velocity, GaussianCenterMovesAtGroupVelocity) {
  auto g = build_grid(-10.0, 10.0, 4001);
  FieldHistory h(g);
  h.append(superpose(std::vector{GaussianPacketParams{5.0, 0.0, 1.0, 1.0}}, g));
  EXPECT_NEAR(velocity(0.0, 0.0, h), 5.0, 2e-3);
}

TEST(Velocity, Errors) {
  auto g = build_grid(-1.0, 1.0, 11);
  FieldHistory h(g);
  std::vector<double> zero(g.size(), 0.0), one(g.size(), 1.0);
  h.append(0.0, zero, one);
  h.append(1.0, zero, one);
  EXPECT_THROW(velocity(0.5, 0.0, h), singular_velocity);
  EXPECT_THROW(velocity(0.5, 2.0, h), config_error);
  EXPECT_THROW(velocity(1.5, 0.0, h), config_error);
  EXPECT_THROW(h.append(1.0, one, one), config_error);
}

TEST(InitialSampling, UniformQuantiles) {
  auto g = build_grid(0.0, 1.0, 101);
  RealField rho{g, 0.0, std::vector<double>(g.size(), 1.0)};
  auto x = sample_initial_positions(rho, std::vector<double>{0.25, 0.5, 0.75});
  EXPECT_NEAR(x[0], 0.25, 1e-12);
  EXPECT_NEAR(x[1], 0.5, 1e-12);
  EXPECT_NEAR(x[2], 0.75, 1e-12);
}

TEST(InitialSampling, DeterministicForSeed) {
  auto g = build_grid(-10.0, 10.0, 2001);
  auto rho = probability_density(superpose(std::vector{GaussianPacketParams{0.0, 0.0, 1.0, 1.0}}, g));
  EXPECT_EQ(sample_initial_positions(rho, 100, 7), sample_initial_positions(rho, 100, 7));
  EXPECT_NE(sample_initial_positions(rho, 100, 7), sample_initial_positions(rho, 100, 8));
}

TEST(InitialSampling, GaussianMoments) {
  auto g = build_grid(-10.0, 10.0, 4001);
  auto rho = probability_density(superpose(std::vector{GaussianPacketParams{0.0, 1.0, 1.0, 1.0}}, g));
  auto x = sample_initial_positions(rho, 100000, 3);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size() - 1);
  EXPECT_NEAR(mean, 1.0, 0.02);
  EXPECT_NEAR(std::sqrt(var), 1.0, 0.02);
}

TEST(InitialSampling, RejectsUnnormalizedDensity) {
  auto g = build_grid(0.0, 1.0, 11);
  RealField rho{g, 0.0, std::vector<double>(g.size(), 2.0)};
  EXPECT_THROW(sample_initial_positions(rho, std::vector<double>{0.5}), config_error);
}

TEST(Integration, PlaneWaveStraightLine) {
  auto g = build_grid(-10.0, 10.0, 2001);
  FieldHistory h(g);
  std::vector<double> rho(g.size(), 1.0), j(g.size(), 2.0);
  for (int s = 0; s <= 30; ++s) h.append(0.1 * s, rho, j);
  auto tr = integrate_trajectory(0.0, h, 3.0);
  EXPECT_EQ(tr.status, TrajectoryStatus::completed);
  EXPECT_FALSE(tr.exited_grid);
  EXPECT_NEAR(tr.times.back(), 3.0, 1e-12);
  EXPECT_NEAR(tr.positions.back(), 6.0, 1e-9);
}

TEST(Integration, ZeroVelocityStaysPut) {
  auto g = build_grid(-1.0, 1.0, 21);
  FieldHistory h(g);
  std::vector<double> rho(g.size(), 0.5), j(g.size(), 0.0);
  h.append(0.0, rho, j);
  h.append(1.0, rho, j);
  auto tr = integrate_trajectory(0.3, h, 1.0);
  for (double x : tr.positions) EXPECT_EQ(x, 0.3);
}

TEST(Integration, FollowsAnalyticGaussianPath) {
  const GaussianPacketParams p{1.0, -2.0, 0.7, 1.0};
  auto g = build_grid(-12.0, 12.0, 4801);
  auto h = analytic_history(g, p, 4.0, 400);
  for (double x0 : {-3.0, -2.0, -1.2}) {
    auto tr = integrate_trajectory(x0, h, 4.0);
    ASSERT_EQ(tr.status, TrajectoryStatus::completed);
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.times.size(); ++k)
      worst = std::max(worst, std::abs(tr.positions[k] - gaussian_path(x0, tr.times[k], p)));
    EXPECT_LT(worst, 1e-3) << x0;
  }
}

TEST(Integration, AgreesWithTightToleranceReference) {
  const GaussianPacketParams p{1.5, 0.0, 1.0, 1.0};
  auto g = build_grid(-10.0, 14.0, 2401);
  auto h = analytic_history(g, p, 3.0, 150);
  IntegrationOptions tight;
  tight.rtol = 1e-10;
  tight.atol = 1e-12;
  for (double x0 : {-1.0, 0.4, 1.3}) {
    auto a = integrate_trajectory(x0, h, 3.0);
    auto b = integrate_trajectory(x0, h, 3.0, tight);
    ASSERT_EQ(a.positions.size(), b.positions.size());
    for (std::size_t k = 0; k < a.positions.size(); ++k) EXPECT_NEAR(a.positions[k], b.positions[k], 1e-5);
  }
}

TEST(Integration, LeavingTheGridIsFlagged) {
  auto g = build_grid(-1.0, 1.0, 21);
  FieldHistory h(g);
  std::vector<double> rho(g.size(), 1.0), j(g.size(), 1.0);
  h.append(0.0, rho, j);
  h.append(5.0, rho, j);
  auto tr = integrate_trajectory(0.0, h, 5.0);
  EXPECT_TRUE(tr.exited_grid);
  EXPECT_LT(tr.times.back(), 5.0);
}

TEST(Integration, NodeAborts) {
  auto g = build_grid(-1.0, 1.0, 21);
  FieldHistory h(g);
  std::vector<double> rho(g.size(), 1.0), j(g.size(), 1.0);
  for (std::size_t i = 14; i < g.size(); ++i) rho[i] = 0.0;
  h.append(0.0, rho, j);
  h.append(2.0, rho, j);
  auto tr = integrate_trajectory(0.0, h, 2.0);
  EXPECT_EQ(tr.status, TrajectoryStatus::aborted_near_node);
}

TEST(FirstEntry, Examples) {
  const DetectorRegion det(0.0, 1.0);
  EXPECT_EQ(first_entry_time(straight_path({0.0, 1.0}, {0.5, 0.6}), det), 0.0);
  auto t = first_entry_time(straight_path({0.0, 1.0, 2.0}, {-1.0, -0.5, 0.5}), det);
  ASSERT_TRUE(t);
  EXPECT_DOUBLE_EQ(*t, 1.5);
  t = first_entry_time(straight_path({0.0, 1.0}, {3.0, 0.0}), det);
  ASSERT_TRUE(t);
  EXPECT_DOUBLE_EQ(*t, 2.0 / 3.0);
  EXPECT_FALSE(first_entry_time(straight_path({0.0, 1.0}, {-1.0, -2.0}), det));
  t = first_entry_time(straight_path({0.0, 1.0}, {-0.5, 0.5}), DetectorRegion::point(0.0));
  ASSERT_TRUE(t);
  EXPECT_DOUBLE_EQ(*t, 0.5);
}

TEST(EmpiricalCdf, Examples) {
  std::vector<std::optional<double>> e{1.0, 2.0, 3.0};
  auto c = empirical_detection_cdf(e, std::vector<double>{2.0});
  EXPECT_DOUBLE_EQ(c.p_hat[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.std_error[0], std::sqrt(2.0 / 9.0 / 3.0));

  std::vector<std::optional<double>> all{0.0, 0.0, 0.0, 0.0};
  c = empirical_detection_cdf(all, std::vector<double>{0.0, 1.0});
  EXPECT_EQ(c.p_hat, (std::vector<double>{1.0, 1.0}));

  std::vector<std::optional<double>> some{std::nullopt, 0.5};
  c = empirical_detection_cdf(some, std::vector<double>{1.0});
  EXPECT_EQ(c.p_hat[0], 0.5);
  EXPECT_THROW(empirical_detection_cdf(std::vector<std::optional<double>>{}, std::vector<double>{1.0}),
               config_error);
}

TEST(Comparison, BoundAndFailures) {
  EmpiricalCdf emp{{1.0, 2.0}, {0.5, 0.5}, {0.0, 0.0}, 100};
  std::vector<double> t{0.0, 1.0, 2.0}, p{0.0, 0.52, 0.9};
  auto c = compare_with_oracle(t, p, emp);
  EXPECT_NEAR(c.bound[0], 3.0 * std::sqrt(0.52 * 0.48 / 100.0), 1e-15);
  EXPECT_EQ(c.failures, 1u);
  EXPECT_FALSE(c.pass);
  EXPECT_NEAR(c.max_abs_diff, 0.4, 1e-12);
}

// Paths of a single history never cross, and entry order follows start order.
TEST(TrajectoryProperties, NonCrossingAndOrderedEntries) {
  const GaussianPacketParams p{2.0, -4.0, 1.0, 1.0};
  auto g = build_grid(-15.0, 15.0, 3001);
  auto h = analytic_history(g, p, 4.0, 200);
  std::vector<Trajectory> paths;
  for (double x0 = -6.0; x0 <= -2.0; x0 += 0.25) paths.push_back(integrate_trajectory(x0, h, 4.0));
  for (std::size_t i = 1; i < paths.size(); ++i)
    for (std::size_t k = 0; k < paths[i].positions.size(); ++k)
      EXPECT_GT(paths[i].positions[k], paths[i - 1].positions[k]);
  const DetectorRegion det = DetectorRegion::point(0.0);
  std::optional<double> prev;
  for (auto it = paths.rbegin(); it != paths.rend(); ++it) {
    auto e = first_entry_time(*it, det);
    if (prev && e) EXPECT_GE(*e, *prev);
    if (!prev) EXPECT_TRUE(e.has_value());
    if (e) prev = e;
  }
}

// Positions sampled from rho(0) and carried along are distributed as rho(t).
TEST(TrajectoryProperties, FlowTransportsDensity) {
  const GaussianPacketParams p{1.0, 0.0, 1.0, 1.0};
  auto g = build_grid(-12.0, 16.0, 2801);
  auto h = analytic_history(g, p, 3.0, 150);
  EnsembleOptions opts;
  opts.samples = 4000;
  opts.seed = 11;
  opts.threads = 1;
  auto ens = run_ensemble(h, h.density(0), DetectorRegion::point(15.0), opts);
  EXPECT_EQ(ens.aborted, 0u);
  WaveField psi_t{g, 3.0, std::vector<complex>(g.size())};
  for (std::size_t i = 0; i < g.size(); ++i) psi_t.values[i] = gaussian_packet(3.0, g.node(i), p);
  for (double cut : {1.0, 3.0, 5.0}) {
    double emp = 0.0;
    for (const auto& tr : ens.trajectories) emp += tr.positions.back() <= cut ? 1.0 : 0.0;
    emp /= static_cast<double>(ens.trajectories.size());
    const double model = interval_probability(psi_t, g.x_min(), cut);
    EXPECT_NEAR(emp, model, 4.0 * std::sqrt(model * (1 - model) / 4000.0) + 1e-3) << cut;
  }
}

TEST(Ensemble, DeterministicForSeed) {
  const GaussianPacketParams p{1.0, -2.0, 1.0, 1.0};
  auto g = build_grid(-12.0, 12.0, 1201);
  auto h = analytic_history(g, p, 2.0, 100);
  EnsembleOptions opts;
  opts.samples = 50;
  opts.seed = 4;
  opts.threads = 1;
  auto a = run_ensemble(h, h.density(0), DetectorRegion(0.0, 1.0), opts);
  opts.threads = 3;
  auto b = run_ensemble(h, h.density(0), DetectorRegion(0.0, 1.0), opts);
  EXPECT_EQ(a.entry_times, b.entry_times);
  EXPECT_EQ(a.sample_count, 50u);
}
