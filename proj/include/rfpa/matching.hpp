#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string_view>
#include <vector>

#include "rfpa/error.hpp"

namespace rfpa {

enum class LMatchTopology {
  series_l_shunt_c,  // low-pass
  series_c_shunt_l,  // high-pass
};

// Which element sits next to the source. The shunt element always sits on
// the high-resistance side.
enum class LMatchOrientation { series_first, shunt_first };

enum class MatchElementKind { series_l, series_c, shunt_l, shunt_c };

struct MatchElement {
  MatchElementKind kind;
  double value = 0.0;      // henries or farads
  double reactance = 0.0;  // signed ohms at f0

  bool is_series() const {
    return kind == MatchElementKind::series_l || kind == MatchElementKind::series_c;
  }
  bool is_inductor() const {
    return kind == MatchElementKind::series_l || kind == MatchElementKind::shunt_l;
  }
};

struct LMatch {
  LMatchTopology topology = LMatchTopology::series_l_shunt_c;
  LMatchOrientation orientation = LMatchOrientation::series_first;
  double series_x = 0.0;  // signed reactance at f0
  double shunt_x = 0.0;
  double f0 = 0.0;
  double qm = 0.0;
  std::vector<MatchElement> elements;  // ordered source to load; empty if matched

  bool empty() const { return elements.empty(); }
};

inline std::string_view to_string(MatchElementKind k) {
  switch (k) {
    case MatchElementKind::series_l: return "series L";
    case MatchElementKind::series_c: return "series C";
    case MatchElementKind::shunt_l: return "shunt L";
    case MatchElementKind::shunt_c: return "shunt C";
  }
  return "?";
}

// Lossless two-element match from a real source resistance to a real load
// resistance at f0.
inline LMatch synthesize_l_match(double r_source, double r_load, double f0,
                                 LMatchTopology topology) {
  if (!(r_source > 0.0) || !(r_load > 0.0) || !(f0 > 0.0))
    throw InvalidArgument("L-match needs positive resistances and frequency");
  LMatch m;
  m.topology = topology;
  m.f0 = f0;
  if (r_source == r_load) return m;

  const double r_high = std::max(r_source, r_load);
  const double r_low = std::min(r_source, r_load);
  m.qm = std::sqrt(r_high / r_low - 1.0);
  const double xs = m.qm * r_low;
  const double xp = r_high / m.qm;
  const double w = 2.0 * std::numbers::pi * f0;

  MatchElement series, shunt;
  if (topology == LMatchTopology::series_l_shunt_c) {
    series = {MatchElementKind::series_l, xs / w, xs};
    shunt = {MatchElementKind::shunt_c, 1.0 / (w * xp), -xp};
  } else {
    series = {MatchElementKind::series_c, 1.0 / (w * xs), -xs};
    shunt = {MatchElementKind::shunt_l, xp / w, xp};
  }
  m.series_x = series.reactance;
  m.shunt_x = shunt.reactance;
  if (r_source < r_load) {
    m.orientation = LMatchOrientation::series_first;
    m.elements = {series, shunt};
  } else {
    m.orientation = LMatchOrientation::shunt_first;
    m.elements = {shunt, series};
  }
  return m;
}

// Impedance looking into the source side of `network` terminated in
// `termination`, evaluated as a ladder from the load back.
inline std::complex<double> input_impedance(const LMatch& network,
                                            std::complex<double> termination,
                                            double f) {
  if (!(f > 0.0)) throw InvalidArgument("frequency must be positive");
  const double w = 2.0 * std::numbers::pi * f;
  std::complex<double> z = termination;
  for (auto it = network.elements.rbegin(); it != network.elements.rend(); ++it) {
    const std::complex<double> ze =
        it->is_inductor() ? std::complex<double>(0.0, w * it->value)
                          : std::complex<double>(0.0, -1.0 / (w * it->value));
    if (it->is_series()) z += ze;
    else z = 1.0 / (1.0 / z + 1.0 / ze);
  }
  return z;
}

inline double reflection_magnitude(std::complex<double> z, double z0) {
  return std::abs((z - z0) / (z + z0));
}

}  // namespace rfpa
