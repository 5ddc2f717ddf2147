#pragma once

#include <cmath>
#include <numbers>
#include <string_view>

#include "rfpa/error.hpp"

namespace rfpa {

// Level-1 square-law NMOS parameters. Body effect and subthreshold
// conduction are not modelled.
struct MosfetModelCard {
  double kp = 200e-6;     // A/V^2, mu * Cox
  double vt0 = 0.5;       // V
  double lambda = 0.0;    // 1/V
  double cox = 0.0;       // F/m^2
  double cgdo = 0.0;      // F/m of width

  friend bool operator==(const MosfetModelCard&,
                         const MosfetModelCard&) = default;
};

enum class Region { cutoff, triode, saturation };

inline std::string_view to_string(Region r) {
  switch (r) {
    case Region::cutoff: return "cutoff";
    case Region::triode: return "triode";
    case Region::saturation: return "saturation";
  }
  return "?";
}

struct OperatingPoint {
  double vgs = 0.0;
  double vds = 0.0;
  double id = 0.0;
  Region region = Region::cutoff;
};

struct SmallSignalModel {
  double gm = 0.0;
  double gds = 0.0;
  double cgs = 0.0;
  double cgd = 0.0;
};

struct ChannelCurrent {
  double id = 0.0;
  Region region = Region::cutoff;
};

// Drain current together with its partial derivatives. Valid for either
// sign of vds: for vds < 0 the drain and source swap roles.
struct ChannelEval {
  double id = 0.0;
  double gm = 0.0;   // dId/dVgs
  double gds = 0.0;  // dId/dVds
  Region region = Region::cutoff;
};

namespace detail {

inline void check_geometry(double weff, double lg) {
  if (!(weff > 0.0) || !(lg > 0.0))
    throw InvalidArgument("MOSFET geometry must be positive (W=" +
                          std::to_string(weff) + ", L=" + std::to_string(lg) +
                          ")");
}

// Forward-mode evaluation, vds >= 0.
inline ChannelEval forward_channel(const MosfetModelCard& card, double weff,
                                   double lg, double vgs, double vds) {
  const double beta = card.kp * weff / lg;
  const double vov = vgs - card.vt0;
  const double clm = 1.0 + card.lambda * vds;
  ChannelEval e;
  if (vov <= 0.0) {
    e.region = Region::cutoff;
    return e;
  }
  if (vds < vov) {
    e.region = Region::triode;
    const double core = vov * vds - 0.5 * vds * vds;
    e.id = beta * core * clm;
    e.gm = beta * vds * clm;
    e.gds = beta * (vov - vds) * clm + beta * core * card.lambda;
  } else {
    e.region = Region::saturation;
    e.id = 0.5 * beta * vov * vov * clm;
    e.gm = beta * vov * clm;
    e.gds = 0.5 * beta * vov * vov * card.lambda;
  }
  return e;
}

}  // namespace detail

inline ChannelEval evaluate_channel(const MosfetModelCard& card, double weff,
                                    double lg, double vgs, double vds) {
  detail::check_geometry(weff, lg);
  if (vds >= 0.0) return detail::forward_channel(card, weff, lg, vgs, vds);
  // Reverse mode: Id(vgs, vds) = -Id_f(vgs - vds, -vds).
  ChannelEval f = detail::forward_channel(card, weff, lg, vgs - vds, -vds);
  ChannelEval r;
  r.region = f.region;
  r.id = -f.id;
  r.gm = -f.gm;
  r.gds = f.gm + f.gds;
  return r;
}

inline ChannelCurrent mosfet_dc_current(const MosfetModelCard& card,
                                        double weff, double lg, double vgs,
                                        double vds) {
  ChannelEval e = evaluate_channel(card, weff, lg, vgs, vds);
  return {e.id, e.region};
}

inline OperatingPoint make_operating_point(const MosfetModelCard& card,
                                           double weff, double lg, double vgs,
                                           double vds) {
  ChannelEval e = evaluate_channel(card, weff, lg, vgs, vds);
  return {vgs, vds, e.id, e.region};
}

// Linearization at `op`. The operating point is re-evaluated from its
// terminal voltages; op.id and op.region are not trusted.
inline SmallSignalModel mosfet_small_signal(const MosfetModelCard& card,
                                            double weff, double lg,
                                            const OperatingPoint& op) {
  ChannelEval e = evaluate_channel(card, weff, lg, op.vgs, op.vds);
  const double overlap = card.cgdo * weff;
  const double gate = weff * lg * card.cox;
  SmallSignalModel ss;
  ss.gm = e.gm;
  ss.gds = e.gds;
  switch (e.region) {
    case Region::cutoff:
      ss.gm = 0.0;
      ss.gds = 0.0;
      ss.cgs = overlap;
      ss.cgd = overlap;
      break;
    case Region::triode:
      ss.cgs = 0.5 * gate + overlap;
      ss.cgd = 0.5 * gate + overlap;
      break;
    case Region::saturation:
      ss.cgs = (2.0 / 3.0) * gate + overlap;
      ss.cgd = overlap;
      break;
  }
  if (op.vds < 0.0 && e.region == Region::saturation) std::swap(ss.cgs, ss.cgd);
  return ss;
}

// Series loss resistance of an inductor with quality factor q quoted at
// f_ref. Held constant over frequency.
inline double inductor_parasitic_resistance(double inductance, double q,
                                            double f_ref) {
  if (!(inductance > 0.0) || !(q > 0.0) || !(f_ref > 0.0))
    throw InvalidArgument("inductor L, Q and f_ref must be positive");
  if (std::isinf(q)) return 0.0;
  return 2.0 * std::numbers::pi * f_ref * inductance / q;
}

}  // namespace rfpa
