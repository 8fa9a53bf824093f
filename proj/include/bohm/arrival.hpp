#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bohm/errors.hpp"
#include "bohm/grid.hpp"
#include "bohm/observables.hpp"

namespace bohm {

// Antiderivative of a sampled current, f(0) = 0.
struct CumulativeSeries {
  std::vector<double> times;
  std::vector<double> values;
};

namespace detail {

inline void check_time_axis(std::span<const double> times) {
  if (times.empty()) throw config_error("time axis is empty");
  if (times.front() != 0.0) throw config_error("time axis must start at 0");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw config_error("time axis must be strictly increasing");
}

inline void check_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw config_error(std::string("length mismatch: ") + what);
}

// Theta(f - M) with Theta(0) = 1 and a relative equality tolerance.
inline bool at_running_max(double f, double m) {
  return f >= m - 1e-12 * std::max(std::abs(m), std::abs(f));
}

}  // namespace detail

// Trapezoid antiderivative of j over the time axis.
inline CumulativeSeries cumulative_current(std::span<const double> times,
                                           std::span<const double> j) {
  detail::check_same_length(times.size(), j.size(), "times vs current");
  detail::check_time_axis(times);
  CumulativeSeries out{{times.begin(), times.end()}, std::vector<double>(times.size(), 0.0)};
  for (std::size_t k = 1; k < times.size(); ++k)
    out.values[k] = out.values[k - 1] + 0.5 * (j[k - 1] + j[k]) * (times[k] - times[k - 1]);
  return out;
}

inline std::vector<double> running_max(std::span<const double> series) {
  std::vector<double> out(series.begin(), series.end());
  for (std::size_t k = 1; k < out.size(); ++k) out[k] = std::max(out[k - 1], out[k]);
  return out;
}

inline std::vector<double> negated(std::span<const double> v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return -x; });
  return out;
}

// Detection probability of an interval detector [a, b] sensitive from t = 0:
//
//   P(tau) = P(0) + max_{s <= tau} f_a(s) + max_{s <= tau} (-f_b(s))
//
// Values above 1 + overshoot_tolerance mean the currents are inconsistent
// with the initial density; that is reported, never clipped.
inline std::vector<double> detection_probability(const CumulativeSeries& f_a,
                                                 const CumulativeSeries& f_b, double p0,
                                                 double overshoot_tolerance = 1e-6) {
  detail::check_same_length(f_a.values.size(), f_a.times.size(), "f_a");
  detail::check_same_length(f_b.values.size(), f_b.times.size(), "f_b");
  if (f_a.times != f_b.times) throw config_error("f_a and f_b are on different time axes");
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw config_error("P(0) must lie in [0, 1]");

  const auto max_a = running_max(f_a.values);
  const auto max_nb = running_max(negated(f_b.values));
  std::vector<double> p(max_a.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = p0 + max_a[k] + max_nb[k];
    if (p[k] > 1.0 + overshoot_tolerance)
      throw invariant_violation("detection probability " + std::to_string(p[k]) +
                                " exceeds 1 at t = " + std::to_string(f_a.times[k]));
  }
  return p;
}

// Point detector at a: the b -> a limit of detection_probability.
inline std::vector<double> point_detection_probability(const CumulativeSeries& f_a,
                                                       double overshoot_tolerance = 1e-6) {
  return detection_probability(f_a, f_a, 0.0, overshoot_tolerance);
}

struct TailOptions {
  double window_fraction = 0.1;  // trailing share of the time axis
  double tolerance = 1e-3;       // allowed rise of P inside that window
};

struct Conditional {
  double N = 0.0;
  std::vector<double> Pc;
  bool tail_converged = false;
  double tail_increase = 0.0;
};

// N is read off the final sample; it stands in for lim P only when P has
// flattened over the trailing window, which tail_converged reports.
inline Conditional conditionalize(std::span<const double> times, std::span<const double> p,
                                  const TailOptions& tail = {}) {
  detail::check_same_length(times.size(), p.size(), "times vs P");
  if (p.empty()) throw config_error("empty detection probability series");
  for (std::size_t k = 1; k < p.size(); ++k)
    if (p[k] < p[k - 1]) throw invariant_violation("detection probability decreases");

  Conditional c;
  c.N = p.back();
  if (!(c.N > 0.0)) throw zero_detection("zero detection probability");
  const double t_end = times.back();
  const double t_tail = t_end - tail.window_fraction * (t_end - times.front());
  const auto it = std::upper_bound(times.begin(), times.end(), t_tail);
  c.tail_increase = p.back() - p[static_cast<std::size_t>(it - times.begin()) - 1];
  c.tail_converged = c.tail_increase < tail.tolerance;
  c.Pc.resize(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) c.Pc[k] = p[k] / c.N;
  c.Pc.back() = 1.0;
  return c;
}

// Arrival density on tau > 0 sampled at the nodes:
//
//   delta = N^-1 [ j_a Theta(f_a - max f_a) - j_b Theta(-f_b - max(-f_b)) ]
//
// Each edge term is the cut-off current: it counts only while the edge's
// antiderivative sits at its running maximum, where the exact current is
// non-negative. Negative node values from the discretization are clamped.
// For a point detector pass the same series for a and b.
inline std::vector<double> arrival_density(std::span<const double> j_a,
                                           std::span<const double> j_b,
                                           std::span<const double> f_a,
                                           std::span<const double> f_b, double n) {
  const std::size_t len = j_a.size();
  detail::check_same_length(len, j_b.size(), "j_b");
  detail::check_same_length(len, f_a.size(), "f_a");
  detail::check_same_length(len, f_b.size(), "f_b");
  if (!(n > 0.0)) throw config_error("arrival density requires N > 0");

  std::vector<double> delta(len);
  double max_a = -INFINITY;
  double max_nb = -INFINITY;
  for (std::size_t k = 0; k < len; ++k) {
    max_a = std::max(max_a, f_a[k]);
    max_nb = std::max(max_nb, -f_b[k]);
    double v = 0.0;
    if (detail::at_running_max(f_a[k], max_a)) v += std::max(0.0, j_a[k]);
    if (detail::at_running_max(-f_b[k], max_nb)) v += std::max(0.0, -j_b[k]);
    delta[k] = v / n;
  }
  return delta;
}

struct ArrivalMoments {
  double mean = 0.0;      // conditional on detection
  double variance = 0.0;  // conditional on detection
  bool truncated = false; // delta still significant at the end of the window
};

namespace detail {

inline ArrivalMoments finish_moments(double mean, double m2, std::span<const double> delta) {
  ArrivalMoments m;
  m.mean = mean;
  m.variance = m2 - mean * mean;
  if (m.variance < -1e-10) throw invariant_violation("negative arrival-time variance");
  m.variance = std::max(m.variance, 0.0);
  const double peak = delta.empty() ? 0.0 : *std::max_element(delta.begin(), delta.end());
  m.truncated = !delta.empty() && delta.back() > 1e-4 * peak;
  return m;
}

}  // namespace detail

// Trapezoid moments of the arrival density. The point mass at tau = 0
// contributes nothing to either moment.
inline ArrivalMoments arrival_moments(std::span<const double> times,
                                      std::span<const double> delta, double point_mass) {
  detail::check_same_length(times.size(), delta.size(), "times vs delta");
  if (!(point_mass >= 0.0 && point_mass <= 1.0))
    throw config_error("point mass must lie in [0, 1]");
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double h = times[k] - times[k - 1];
    m1 += 0.5 * h * (times[k - 1] * delta[k - 1] + times[k] * delta[k]);
    m2 += 0.5 * h * (times[k - 1] * times[k - 1] * delta[k - 1] + times[k] * times[k] * delta[k]);
  }
  return detail::finish_moments(m1, m2, delta);
}

// Integral of tau^power * j(tau) restricted to the instants where the edge is
// at its running maximum, with j piecewise linear and f its exact
// (piecewise quadratic) antiderivative. Inside each step the set
// {f(s) >= running max at the step start} is found from the roots of the
// quadratic, so crossings between samples are resolved instead of being
// smeared over a whole step. power = 0 gives the cut-off flux of one edge.
inline double cutoff_current_moment(std::span<const double> times, std::span<const double> j,
                                    std::span<const double> f, int power) {
  detail::check_same_length(times.size(), j.size(), "times vs j");
  detail::check_same_length(times.size(), f.size(), "times vs f");
  auto weight = [power](double t) { return power == 0 ? 1.0 : std::pow(t, power); };

  double total = 0.0;
  double m = f.empty() ? 0.0 : f[0];
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    m = std::max(m, f[k]);
    const double t0 = times[k];
    const double h = times[k + 1] - t0;
    const double slope = (j[k + 1] - j[k]) / h;
    const double qa = 0.5 * slope;  // g(s) = c + b s + qa s^2
    const double qb = j[k];
    const double qc = f[k] - m;
    const double scale = std::max({std::abs(m), std::abs(f[k]), std::abs(f[k + 1]), 1e-300});
    auto g = [&](double s) { return qc + s * (qb + s * qa); };

    std::array<double, 4> cuts{0.0, h, h, h};
    std::size_t n_cuts = 1;
    auto add_root = [&](double s) {
      if (s > 0.0 && s < h) cuts[n_cuts++] = s;
    };
    if (std::abs(qa) * h * h <= 1e-14 * (std::abs(qb) * h + std::abs(qc))) {
      if (qb != 0.0) add_root(-qc / qb);
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
        if (q != 0.0) {
          add_root(q / qa);
          add_root(qc / q);
        } else {
          add_root(0.0);
        }
      }
    }
    std::sort(cuts.begin(), cuts.begin() + n_cuts);
    cuts[n_cuts++] = h;

    for (std::size_t i = 0; i + 1 < n_cuts; ++i) {
      const double s0 = cuts[i];
      const double s1 = cuts[i + 1];
      if (!(s1 > s0)) continue;
      const double mid = 0.5 * (s0 + s1);
      if (g(mid) < -1e-12 * scale) continue;
      // Simpson is exact here: the integrand is a polynomial of degree <= 3.
      auto integrand = [&](double s) { return weight(t0 + s) * (j[k] + slope * s); };
      total += (s1 - s0) / 6.0 * (integrand(s0) + 4.0 * integrand(mid) + integrand(s1));
    }
  }
  return total;
}

struct ArrivalOptions {
  TailOptions tail;
  double overshoot_tolerance = 1e-6;
};

// Every curve of the arrival-time construction for one detector.
struct ArrivalResult {
  DetectorRegion detector;
  std::vector<double> times;
  std::vector<double> j_a;
  std::vector<double> j_b;
  std::vector<double> f_a;
  std::vector<double> f_b;
  std::vector<double> runmax_fa;
  std::vector<double> runmax_negfb;
  std::vector<double> P;
  std::vector<double> Pc;
  std::vector<double> delta;
  double P0 = 0.0;
  double N = 0.0;
  double point_mass = 0.0;       // Pc(0)
  double detected_density = 0.0; // integral of delta over the window
  bool tail_converged = false;
  double tail_increase = 0.0;
  ArrivalMoments moments;
};

// Full pipeline from recorded edge currents. p0 is the probability inside
// [a, b] at activation and must be 0 for a point detector.
inline ArrivalResult compute_arrival(const BoundaryRecord& rec, double p0,
                                     const ArrivalOptions& opts = {}) {
  rec.validate();
  if (rec.detector.is_point() && p0 != 0.0)
    throw config_error("a point detector has P(0) = 0");

  ArrivalResult r;
  r.detector = rec.detector;
  r.times = rec.times;
  r.j_a = rec.j_a;
  r.j_b = rec.detector.is_point() ? rec.j_a : rec.j_b;
  const auto fa = cumulative_current(r.times, r.j_a);
  const auto fb = rec.detector.is_point() ? fa : cumulative_current(r.times, r.j_b);
  r.f_a = fa.values;
  r.f_b = fb.values;
  r.runmax_fa = running_max(r.f_a);
  r.runmax_negfb = running_max(negated(r.f_b));
  r.P0 = p0;
  r.P = detection_probability(fa, fb, p0, opts.overshoot_tolerance);

  auto cond = conditionalize(r.times, r.P, opts.tail);
  r.N = cond.N;
  r.Pc = std::move(cond.Pc);
  r.tail_converged = cond.tail_converged;
  r.tail_increase = cond.tail_increase;
  r.point_mass = r.Pc.front();
  r.delta = arrival_density(r.j_a, r.j_b, r.f_a, r.f_b, r.N);

  const auto neg_jb = negated(r.j_b);
  const auto neg_fb = negated(r.f_b);
  auto edge_sum = [&](int power) {
    return cutoff_current_moment(r.times, r.j_a, r.f_a, power) +
           cutoff_current_moment(r.times, neg_jb, neg_fb, power);
  };
  r.detected_density = edge_sum(0) / r.N;
  r.moments = detail::finish_moments(edge_sum(1) / r.N, edge_sum(2) / r.N, r.delta);
  return r;
}

}  // namespace bohm
