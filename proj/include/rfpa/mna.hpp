#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rfpa/devices.hpp"
#include "rfpa/linalg.hpp"
#include "rfpa/netlist.hpp"

namespace rfpa {

using cplx = std::complex<double>;

// Row layout of the MNA system: non-ground nodes in sorted order, then one
// auxiliary current per voltage source, inductor and polynomial VCVS in
// component order.
struct UnknownMap {
  std::map<std::string, int> node_index;
  std::map<std::string, int> branch_index;
  int n_unknowns = 0;

  static UnknownMap build(const Circuit& c) {
    UnknownMap m;
    for (const auto& n : c.nodes)
      if (n != kGround) m.node_index[n] = m.n_unknowns++;
    for (const auto& comp : c.components)
      if (comp.is<VSource>() || comp.is<Inductor>() || comp.is<PolyVcvs>())
        m.branch_index[comp.id] = m.n_unknowns++;
    return m;
  }

  int node(const std::string& n) const {
    if (n == kGround) return -1;
    auto it = node_index.find(n);
    if (it == node_index.end())
      throw InvalidArgument("unknown node '" + n + "'");
    return it->second;
  }

  int branch(const std::string& id) const {
    auto it = branch_index.find(id);
    if (it == branch_index.end())
      throw InvalidArgument("component '" + id + "' has no branch current");
    return it->second;
  }

  std::string describe(Eigen::Index row) const {
    for (const auto& [n, i] : node_index)
      if (i == row) return n;
    for (const auto& [id, i] : branch_index)
      if (i == row) return id;
    return "?";
  }

  bool is_node_row(Eigen::Index row) const {
    return row < static_cast<Eigen::Index>(node_index.size());
  }
};

// Branch currents follow the MNA convention: positive current enters the
// first terminal and leaves the second. A supply delivering power therefore
// reports a negative current.
struct DcSolution {
  UnknownMap map;
  Eigen::VectorXd x;
  std::map<std::string, double> node_voltages;
  std::map<std::string, double> branch_currents;
  std::map<std::string, OperatingPoint> device_ops;
  int iterations = 0;
  double residual_norm = 0.0;
  std::vector<double> residual_history;  // final Newton run
  std::string strategy;                  // newton | gmin | source

  double voltage(const std::string& node) const {
    if (node == kGround) return 0.0;
    return node_voltages.at(node);
  }
};

struct DcOptions {
  double residual_tol = 1e-9;  // A
  double update_tol = 1e-6;    // V
  double max_step = 0.5;       // V, per-device Vgs/Vds limit
  int max_iterations = 150;
};

namespace detail {

inline double node_value(const Eigen::VectorXd& x, int i) {
  return i < 0 ? 0.0 : x[i];
}

// Linear capacitor between two rows (-1 is ground), used by transient
// companion models.
struct CapBranch {
  int a = -1;
  int b = -1;
  double c = 0.0;
};

// History terms for one trapezoidal step. The first step of a run is
// backward Euler, because the capacitor currents at t = 0 are unknown when a
// source jumps there.
struct TransientStep {
  double h = 0.0;
  double t = 0.0;  // time at the end of the step
  bool backward_euler = false;
  const std::vector<CapBranch>* caps = nullptr;
  const std::vector<double>* cap_current_prev = nullptr;
  const Eigen::VectorXd* x_prev = nullptr;
};

struct ResolvedMosfet {
  int d, g, s;
  const MosfetModelCard* card;
  double weff, length;
};

// Nonlinear real-valued MNA residual and Jacobian for DC and transient.
class RealAssembler {
 public:
  RealAssembler(const Circuit& c, const UnknownMap& map) : c_(c), map_(map) {
    for (const auto& comp : c.components) {
      if (!comp.is<Mosfet>()) continue;
      const auto& m = comp.as<Mosfet>();
      const MosfetModelCard* card = c.model(m.model);
      if (!card) throw InvalidArgument("undeclared model '" + m.model + "'");
      mosfets_.push_back({map.node(comp.terminals[0]), map.node(comp.terminals[1]),
                          map.node(comp.terminals[2]), card, m.effective_width(),
                          m.length});
    }
  }

  const std::vector<ResolvedMosfet>& mosfets() const { return mosfets_; }

  void assemble(const Eigen::VectorXd& x, double gmin, double source_scale,
                const TransientStep* tr, Eigen::MatrixXd& jac,
                Eigen::VectorXd& f) const {
    const int n = map_.n_unknowns;
    jac.setZero(n, n);
    f.setZero(n);
    auto add_j = [&](int r, int col, double v) {
      if (r >= 0 && col >= 0) jac(r, col) += v;
    };
    auto add_f = [&](int r, double v) {
      if (r >= 0) f[r] += v;
    };
    auto v = [&](int i) { return node_value(x, i); };

    std::size_t mos = 0;
    for (const auto& comp : c_.components) {
      const auto& t = comp.terminals;
      if (comp.is<Resistor>()) {
        const int a = map_.node(t[0]), b = map_.node(t[1]);
        const double g = 1.0 / comp.as<Resistor>().resistance;
        const double i = g * (v(a) - v(b));
        add_f(a, i);
        add_f(b, -i);
        add_j(a, a, g); add_j(a, b, -g); add_j(b, a, -g); add_j(b, b, g);
      } else if (comp.is<Capacitor>()) {
        // Open at DC; transient companions are stamped from tr->caps.
      } else if (comp.is<Inductor>()) {
        const auto& ind = comp.as<Inductor>();
        const int a = map_.node(t[0]), b = map_.node(t[1]);
        const int k = map_.branch(comp.id);
        const double rs = ind.series_resistance();
        add_f(a, x[k]);
        add_f(b, -x[k]);
        add_j(a, k, 1.0);
        add_j(b, k, -1.0);
        add_j(k, a, 1.0);
        add_j(k, b, -1.0);
        if (!tr) {
          f[k] += v(a) - v(b) - rs * x[k];
          jac(k, k) -= rs;
        } else {
          const Eigen::VectorXd& xp = *tr->x_prev;
          const double lh = ind.inductance / tr->h;
          double z = 0.0, hist = 0.0;
          if (tr->backward_euler) {
            z = rs + lh;
            hist = -lh * xp[k];
          } else {
            z = rs + 2.0 * lh;
            hist = (rs - 2.0 * lh) * xp[k] - (node_value(xp, a) - node_value(xp, b));
          }
          f[k] += v(a) - v(b) - z * x[k] - hist;
          jac(k, k) -= z;
        }
      } else if (comp.is<VSource>()) {
        const auto& src = comp.as<VSource>();
        const int a = map_.node(t[0]), b = map_.node(t[1]);
        const int k = map_.branch(comp.id);
        const double value = tr ? src.value_at(tr->t) : src.dc;
        add_f(a, x[k]);
        add_f(b, -x[k]);
        add_j(a, k, 1.0);
        add_j(b, k, -1.0);
        f[k] += v(a) - v(b) - source_scale * value;
        add_j(k, a, 1.0);
        add_j(k, b, -1.0);
      } else if (comp.is<PolyVcvs>()) {
        const auto& e = comp.as<PolyVcvs>();
        const int op = map_.node(t[0]), on = map_.node(t[1]);
        const int cp = map_.node(t[2]), cn = map_.node(t[3]);
        const int k = map_.branch(comp.id);
        const double vc = v(cp) - v(cn);
        add_f(op, x[k]);
        add_f(on, -x[k]);
        add_j(op, k, 1.0);
        add_j(on, k, -1.0);
        f[k] += v(op) - v(on) - e.value(vc);
        add_j(k, op, 1.0);
        add_j(k, on, -1.0);
        const double d = e.derivative(vc);
        add_j(k, cp, -d);
        add_j(k, cn, d);
      } else if (comp.is<Mosfet>()) {
        const ResolvedMosfet& m = mosfets_[mos++];
        const double vgs = v(m.g) - v(m.s), vds = v(m.d) - v(m.s);
        const ChannelEval e = evaluate_channel(*m.card, m.weff, m.length, vgs, vds);
        add_f(m.d, e.id);
        add_f(m.s, -e.id);
        const double gs = -(e.gm + e.gds);
        add_j(m.d, m.d, e.gds); add_j(m.d, m.g, e.gm); add_j(m.d, m.s, gs);
        add_j(m.s, m.d, -e.gds); add_j(m.s, m.g, -e.gm); add_j(m.s, m.s, -gs);
      }
    }

    if (tr) {
      const auto& caps = *tr->caps;
      const auto& iprev = *tr->cap_current_prev;
      const Eigen::VectorXd& xp = *tr->x_prev;
      for (std::size_t i = 0; i < caps.size(); ++i) {
        const auto& cb = caps[i];
        const double g = (tr->backward_euler ? 1.0 : 2.0) * cb.c / tr->h;
        const double dv = v(cb.a) - v(cb.b);
        const double dvp = node_value(xp, cb.a) - node_value(xp, cb.b);
        const double cur = g * (dv - dvp) - (tr->backward_euler ? 0.0 : iprev[i]);
        add_f(cb.a, cur);
        add_f(cb.b, -cur);
        add_j(cb.a, cb.a, g); add_j(cb.a, cb.b, -g);
        add_j(cb.b, cb.a, -g); add_j(cb.b, cb.b, g);
      }
    }

    if (gmin > 0.0) {
      for (const auto& [name, i] : map_.node_index) {
        f[i] += gmin * x[i];
        jac(i, i) += gmin;
      }
    }
  }

  // Largest |f| over KCL rows and over branch rows.
  std::pair<double, double> residual_norms(const Eigen::VectorXd& f) const {
    double kcl = 0.0, branch = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      if (map_.is_node_row(i)) kcl = std::max(kcl, std::abs(f[i]));
      else branch = std::max(branch, std::abs(f[i]));
    }
    return {kcl, branch};
  }

  // Scale factor in (0, 1] keeping every device's Vgs and Vds update within
  // max_step.
  double step_limit(const Eigen::VectorXd& dx, double max_step) const {
    double alpha = 1.0;
    for (const auto& m : mosfets_) {
      const double dvgs = std::abs(node_value(dx, m.g) - node_value(dx, m.s));
      const double dvds = std::abs(node_value(dx, m.d) - node_value(dx, m.s));
      const double worst = std::max(dvgs, dvds);
      if (worst > max_step) alpha = std::min(alpha, max_step / worst);
    }
    return alpha;
  }

  double max_voltage_update(const Eigen::VectorXd& dx) const {
    double m = 0.0;
    for (const auto& [name, i] : map_.node_index) m = std::max(m, std::abs(dx[i]));
    return m;
  }

 private:
  const Circuit& c_;
  const UnknownMap& map_;
  std::vector<ResolvedMosfet> mosfets_;
};

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  std::vector<double> history;
};

// Damped Newton iteration. Singular Jacobians propagate as exceptions.
inline NewtonOutcome newton(const RealAssembler& sys, const UnknownMap& map,
                            Eigen::VectorXd& x, double gmin, double scale,
                            const TransientStep* tr, const DcOptions& opt) {
  NewtonOutcome out;
  Eigen::MatrixXd jac;
  Eigen::VectorXd f;
  double last_update = std::numeric_limits<double>::infinity();
  auto describe = [&](Eigen::Index i) { return map.describe(i); };
  for (int it = 0; it <= opt.max_iterations; ++it) {
    sys.assemble(x, gmin, scale, tr, jac, f);
    if (!f.allFinite()) return out;
    auto [kcl, branch] = sys.residual_norms(f);
    out.residual = std::max(kcl, branch);
    out.history.push_back(out.residual);
    out.iterations = it;
    if (kcl < opt.residual_tol && branch < opt.residual_tol &&
        (last_update < opt.update_tol || out.residual == 0.0)) {
      // Zero residual on entry: factor once anyway so a structurally
      // singular system is still reported.
      if (it == 0) solve_dense<double>(jac, f, describe);
      out.converged = true;
      return out;
    }
    if (it == opt.max_iterations) break;
    Eigen::VectorXd dx = solve_dense<double>(jac, -f, describe);
    const double alpha = sys.step_limit(dx, opt.max_step);
    dx *= alpha;
    last_update = sys.max_voltage_update(dx);
    x += dx;
  }
  return out;
}

}  // namespace detail

inline DcSolution make_dc_solution(const Circuit& c, const UnknownMap& map,
                                   const Eigen::VectorXd& x) {
  DcSolution s;
  s.map = map;
  s.x = x;
  s.node_voltages[std::string(kGround)] = 0.0;
  for (const auto& [n, i] : map.node_index) s.node_voltages[n] = x[i];
  for (const auto& [id, i] : map.branch_index) s.branch_currents[id] = x[i];
  for (const auto& comp : c.components) {
    if (!comp.is<Mosfet>()) continue;
    const auto& m = comp.as<Mosfet>();
    const auto& t = comp.terminals;
    const double vg = s.voltage(t[1]), vd = s.voltage(t[0]), vs = s.voltage(t[2]);
    s.device_ops[comp.id] = make_operating_point(
        *c.model(m.model), m.effective_width(), m.length, vg - vs, vd - vs);
  }
  return s;
}

// DC operating point. Inductors are their series loss resistance,
// capacitors are open. Plain Newton from all-zero node voltages, then gmin
// stepping (1e-3 S down to 1e-12 S, then removed), then source stepping
// (0.1 to 1.0 of every source value).
inline DcSolution solve_dc(const Circuit& c, const DcOptions& opt = {}) {
  const UnknownMap map = UnknownMap::build(c);
  const detail::RealAssembler sys(c, map);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(map.n_unknowns);

  auto finish = [&](const Eigen::VectorXd& x, const detail::NewtonOutcome& o,
                    int total, const char* strategy) {
    DcSolution s = make_dc_solution(c, map, x);
    s.iterations = total;
    s.residual_norm = o.residual;
    s.residual_history = o.history;
    s.strategy = strategy;
    return s;
  };

  double last_residual = std::numeric_limits<double>::infinity();
  int total = 0;

  // Plain Newton. A singular Jacobian here may come from devices in cutoff,
  // so it falls through to gmin stepping.
  {
    Eigen::VectorXd x = zero;
    try {
      auto o = detail::newton(sys, map, x, 0.0, 1.0, nullptr, opt);
      total += o.iterations;
      if (o.converged) return finish(x, o, total, "newton");
      last_residual = o.residual;
    } catch (const SingularMatrixError&) {
    }
  }

  // gmin stepping. A singular matrix once gmin is removed is structural.
  {
    Eigen::VectorXd x = zero;
    bool ok = true;
    try {
      for (double gmin = 1e-3; gmin >= 0.99e-12 && ok; gmin /= 10.0) {
        auto o = detail::newton(sys, map, x, gmin, 1.0, nullptr, opt);
        total += o.iterations;
        ok = o.converged;
        last_residual = o.residual;
      }
    } catch (const SingularMatrixError&) {
      ok = false;
    }
    if (ok) {
      auto o = detail::newton(sys, map, x, 0.0, 1.0, nullptr, opt);
      total += o.iterations;
      if (o.converged) return finish(x, o, total, "gmin");
      last_residual = o.residual;
    }
  }

  // Source stepping.
  {
    Eigen::VectorXd x = zero;
    detail::NewtonOutcome o;
    for (int step = 1; step <= 10; ++step) {
      o = detail::newton(sys, map, x, 0.0, step / 10.0, nullptr, opt);
      total += o.iterations;
      last_residual = o.residual;
      if (!o.converged) break;
    }
    if (o.converged) return finish(x, o, total, "source");
  }

  throw ConvergenceError("DC operating point did not converge after gmin and "
                         "source stepping",
                         last_residual);
}

// All-zero bias point for circuits without MOSFETs. Lets AC analysis run
// on passive networks whose nodes have no DC path of their own, such as a
// bare series element between two ports.
inline DcSolution zero_bias_solution(const Circuit& c) {
  for (const auto& comp : c.components)
    if (comp.is<Mosfet>())
      throw InvalidArgument("zero bias is only defined without MOSFETs ('" + comp.id + "')");
  const UnknownMap map = UnknownMap::build(c);
  DcSolution s = make_dc_solution(c, map, Eigen::VectorXd::Zero(map.n_unknowns));
  s.strategy = "zero";
  return s;
}

// ---------------------------------------------------------------------------
// AC small-signal analysis

struct PortDrive {
  int port = 1;
};
struct SourceDrive {
  std::string id;
};
// Port drive: unit source behind Z0 at that port, every other port
// terminated in its Z0. Source drive: the named voltage source gets unit
// amplitude, every other source is zeroed, ports stay open.
using AcExcitation = std::variant<PortDrive, SourceDrive>;

struct AcSolution {
  double freq = 0.0;
  std::map<std::string, cplx> node_phasors;
  std::map<std::string, cplx> branch_currents;
  std::string source_excitation;
  double residual = 0.0;  // |Ax - b|_inf / |b|_inf

  cplx voltage(const std::string& node) const {
    if (node == kGround) return 0.0;
    return node_phasors.at(node);
  }
};

// Small-signal parameters of every MOSFET at a DC solution.
inline std::map<std::string, SmallSignalModel> linearize(const Circuit& c,
                                                         const DcSolution& dc) {
  std::map<std::string, SmallSignalModel> out;
  for (const auto& comp : c.components) {
    if (!comp.is<Mosfet>()) continue;
    const auto& m = comp.as<Mosfet>();
    out[comp.id] = mosfet_small_signal(*c.model(m.model), m.effective_width(),
                                       m.length, dc.device_ops.at(comp.id));
  }
  return out;
}

inline AcSolution solve_ac(const Circuit& c, const DcSolution& dc, double freq,
                           const AcExcitation& excitation) {
  if (!(freq > 0.0)) throw InvalidArgument("AC frequency must be positive");
  const UnknownMap& map = dc.map;
  const int n = map.n_unknowns;
  const double w = 2.0 * std::numbers::pi * freq;
  const cplx jw(0.0, w);
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n);
  auto add = [&](int r, int col, cplx v) {
    if (r >= 0 && col >= 0) a(r, col) += v;
  };
  auto admittance = [&](int p, int q, cplx y) {
    add(p, p, y); add(p, q, -y); add(q, p, -y); add(q, q, y);
  };
  const auto small = linearize(c, dc);

  std::string drive_source;
  std::string description;
  if (const auto* sd = std::get_if<SourceDrive>(&excitation)) {
    const Component* comp = c.find(sd->id);
    if (!comp || !comp->is<VSource>())
      throw InvalidArgument("AC excitation '" + sd->id + "' is not a voltage source");
    drive_source = comp->id;
    description = "source " + comp->id;
  } else {
    const int pn = std::get<PortDrive>(excitation).port;
    if (!c.port(pn)) throw InvalidArgument("no port " + std::to_string(pn));
    description = "port " + std::to_string(pn);
    for (const auto& p : c.ports) {
      const int pp = map.node(p.plus_node), pm = map.node(p.minus_node);
      admittance(pp, pm, 1.0 / p.z0);
      if (p.number == pn) {
        // Norton form of a unit source behind Z0.
        if (pp >= 0) b[pp] += 1.0 / p.z0;
        if (pm >= 0) b[pm] -= 1.0 / p.z0;
      }
    }
  }

  for (const auto& comp : c.components) {
    const auto& t = comp.terminals;
    if (comp.is<Resistor>()) {
      admittance(map.node(t[0]), map.node(t[1]), 1.0 / comp.as<Resistor>().resistance);
    } else if (comp.is<Capacitor>()) {
      admittance(map.node(t[0]), map.node(t[1]), jw * comp.as<Capacitor>().capacitance);
    } else if (comp.is<Inductor>()) {
      const auto& ind = comp.as<Inductor>();
      const int p = map.node(t[0]), q = map.node(t[1]), k = map.branch(comp.id);
      add(p, k, 1.0); add(q, k, -1.0);
      add(k, p, 1.0); add(k, q, -1.0);
      a(k, k) -= ind.series_resistance() + jw * ind.inductance;
    } else if (comp.is<VSource>()) {
      const int p = map.node(t[0]), q = map.node(t[1]), k = map.branch(comp.id);
      add(p, k, 1.0); add(q, k, -1.0);
      add(k, p, 1.0); add(k, q, -1.0);
      if (comp.id == drive_source) b[k] = 1.0;
    } else if (comp.is<PolyVcvs>()) {
      const auto& e = comp.as<PolyVcvs>();
      const int op = map.node(t[0]), on = map.node(t[1]);
      const int cp = map.node(t[2]), cn = map.node(t[3]);
      const int k = map.branch(comp.id);
      const double d = e.derivative(dc.voltage(t[2]) - dc.voltage(t[3]));
      add(op, k, 1.0); add(on, k, -1.0);
      add(k, op, 1.0); add(k, on, -1.0);
      add(k, cp, -d); add(k, cn, d);
    } else if (comp.is<Mosfet>()) {
      const auto& ss = small.at(comp.id);
      const int d = map.node(t[0]), g = map.node(t[1]), s = map.node(t[2]);
      add(d, g, ss.gm); add(d, s, -ss.gm);
      add(s, g, -ss.gm); add(s, s, ss.gm);
      admittance(d, s, ss.gds);
      admittance(g, s, jw * ss.cgs);
      admittance(g, d, jw * ss.cgd);
    }
  }

  Eigen::VectorXcd x = solve_dense<cplx>(
      a, b, [&](Eigen::Index i) { return map.describe(i); });

  AcSolution sol;
  sol.freq = freq;
  sol.source_excitation = description;
  const double bnorm = b.cwiseAbs().maxCoeff();
  sol.residual = bnorm > 0.0 ? (a * x - b).cwiseAbs().maxCoeff() / bnorm : 0.0;
  sol.node_phasors[std::string(kGround)] = 0.0;
  for (const auto& [name, i] : map.node_index) sol.node_phasors[name] = x[i];
  for (const auto& [id, i] : map.branch_index) sol.branch_currents[id] = x[i];
  return sol;
}

}  // namespace rfpa
