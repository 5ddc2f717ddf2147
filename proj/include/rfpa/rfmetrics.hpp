#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "rfpa/mna.hpp"

namespace rfpa {

// 2x2 scattering matrix, s[i][j] = S(i+1)(j+1).
using SMatrix = std::array<std::array<cplx, 2>, 2>;

struct TwoPortPoint {
  double freq = 0.0;
  SMatrix s{};
  double z0 = 50.0;

  cplx s11() const { return s[0][0]; }
  cplx s12() const { return s[0][1]; }
  cplx s21() const { return s[1][0]; }
  cplx s22() const { return s[1][1]; }
};

struct TwoPortSet {
  std::vector<TwoPortPoint> points;

  double z0() const { return points.empty() ? 50.0 : points.front().z0; }
};

struct StabilityReport {
  double freq = 0.0;
  double k = 0.0;
  double delta_mag = 0.0;
  bool unilateral = false;  // S12*S21 == 0, k is +inf
  bool unconditionally_stable = false;
};

struct GainMetrics {
  double s21_db = 0.0;
  double s11_db = 0.0;
  double transducer_gain_db = 0.0;  // equals s21_db for Z0 terminations
};

inline double to_db20(double magnitude) {
  if (magnitude == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(magnitude);
}

// Linear frequency grid with `points` samples, both ends included.
inline std::vector<double> linear_grid(double start, double stop, int points) {
  if (points < 1) throw InvalidArgument("grid needs at least one point");
  if (points == 1) return {start};
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    g[static_cast<std::size_t>(i)] =
        start + (stop - start) * static_cast<double>(i) / (points - 1);
  return g;
}

inline void check_frequency_grid(const std::vector<double>& freqs) {
  if (freqs.empty()) throw InvalidArgument("frequency grid is empty");
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (!(freqs[i] > 0.0)) throw InvalidArgument("frequencies must be positive");
    if (i > 0 && !(freqs[i] > freqs[i - 1]))
      throw InvalidArgument("frequencies must be strictly increasing");
  }
}

// Power waves at each port for a port-driven AC solution. Current I is into
// the port's plus node from the termination side.
inline TwoPortPoint extract_point(const Circuit& c, const DcSolution& dc,
                                  double freq) {
  TwoPortPoint pt;
  pt.freq = freq;
  pt.z0 = c.ports[0].z0;
  const double root = std::sqrt(pt.z0);
  for (int j = 0; j < 2; ++j) {
    const AcSolution sol = solve_ac(c, dc, freq, PortDrive{j + 1});
    std::array<cplx, 2> a{}, b{};
    for (int i = 0; i < 2; ++i) {
      const Port& p = c.ports[static_cast<std::size_t>(i)];
      const cplx v = sol.voltage(p.plus_node) - sol.voltage(p.minus_node);
      const cplx drive = (i == j) ? cplx(1.0) : cplx(0.0);
      const cplx current = (drive - v) / p.z0;
      a[static_cast<std::size_t>(i)] = (v + pt.z0 * current) / (2.0 * root);
      b[static_cast<std::size_t>(i)] = (v - pt.z0 * current) / (2.0 * root);
    }
    for (int i = 0; i < 2; ++i)
      pt.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          b[static_cast<std::size_t>(i)] / a[static_cast<std::size_t>(j)];
  }
  return pt;
}

inline TwoPortSet extract_s_parameters(const Circuit& c, const DcSolution& dc,
                                       const std::vector<double>& freqs) {
  if (c.ports.size() != 2)
    throw InvalidArgument("S-parameter extraction needs exactly 2 ports, circuit has " +
                          std::to_string(c.ports.size()));
  if (c.ports[0].z0 != c.ports[1].z0)
    throw InvalidArgument("ports must share one reference impedance");
  check_frequency_grid(freqs);
  TwoPortSet set;
  set.points.reserve(freqs.size());
  for (double f : freqs) set.points.push_back(extract_point(c, dc, f));
  return set;
}

inline StabilityReport rollett_stability(const TwoPortPoint& p) {
  StabilityReport r;
  r.freq = p.freq;
  const cplx delta = p.s11() * p.s22() - p.s12() * p.s21();
  r.delta_mag = std::abs(delta);
  const double loop = std::abs(p.s12() * p.s21());
  if (loop == 0.0) {
    r.unilateral = true;
    r.k = std::numeric_limits<double>::infinity();
  } else {
    r.k = (1.0 - std::norm(p.s11()) - std::norm(p.s22()) + std::norm(delta)) /
          (2.0 * loop);
  }
  r.unconditionally_stable = r.k > 1.0 && r.delta_mag < 1.0;
  return r;
}

inline GainMetrics gain_metrics(const TwoPortPoint& p) {
  GainMetrics g;
  g.s21_db = to_db20(std::abs(p.s21()));
  g.s11_db = to_db20(std::abs(p.s11()));
  g.transducer_gain_db = g.s21_db;
  return g;
}

// Point of `set` nearest to `freq`.
inline const TwoPortPoint& nearest_point(const TwoPortSet& set, double freq) {
  if (set.points.empty()) throw InvalidArgument("empty two-port set");
  const TwoPortPoint* best = &set.points.front();
  for (const auto& p : set.points)
    if (std::abs(p.freq - freq) < std::abs(best->freq - freq)) best = &p;
  return *best;
}

}  // namespace rfpa
