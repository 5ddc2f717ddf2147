#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rfpa/mna.hpp"

namespace rfpa {

struct TransientResult {
  std::vector<double> times;
  std::vector<std::string> node_names;               // includes ground
  std::vector<std::vector<double>> node_voltages;    // [node][sample]
  std::map<std::string, std::vector<double>> branch_currents;  // MNA sign
  std::map<std::string, std::vector<double>> supply_currents;  // delivered
  double dt = 0.0;
  int periods_run = 0;
  bool converged_to_periodic = false;

  const std::vector<double>& voltage(const std::string& node) const {
    auto it = std::find(node_names.begin(), node_names.end(), node);
    if (it == node_names.end()) throw InvalidArgument("unknown node '" + node + "'");
    return node_voltages[static_cast<std::size_t>(it - node_names.begin())];
  }
};

struct TransientOptions {
  DcOptions newton{};
  int max_halvings = 8;
};

namespace detail {

// Trapezoidal time stepper. MOSFET gate capacitances are linear, frozen at
// their values at the DC operating point the run starts from.
class TransientEngine {
 public:
  TransientEngine(const Circuit& c, const DcSolution& dc, TransientOptions opt)
      : c_(c), map_(dc.map), sys_(c, map_), opt_(opt), x_(dc.x) {
    if (x_.size() != map_.n_unknowns)
      throw InvalidArgument("DC solution does not belong to this circuit");
    for (const auto& comp : c.components) {
      const auto& t = comp.terminals;
      if (comp.is<Capacitor>()) {
        caps_.push_back({map_.node(t[0]), map_.node(t[1]),
                         comp.as<Capacitor>().capacitance});
      } else if (comp.is<Mosfet>()) {
        const auto& m = comp.as<Mosfet>();
        const auto ss = mosfet_small_signal(*c.model(m.model), m.effective_width(),
                                            m.length, dc.device_ops.at(comp.id));
        const int d = map_.node(t[0]), g = map_.node(t[1]), s = map_.node(t[2]);
        if (ss.cgs > 0.0) caps_.push_back({g, s, ss.cgs});
        if (ss.cgd > 0.0) caps_.push_back({g, d, ss.cgd});
      }
    }
    cap_i_.assign(caps_.size(), 0.0);
  }

  const Eigen::VectorXd& state() const { return x_; }
  const UnknownMap& map() const { return map_; }

  // Advances from t to t + h, halving the step on Newton failure.
  void advance(double t, double h) {
    if (!step(t, h, 0))
      throw ConvergenceError("transient Newton failed at t=" + std::to_string(t + h) +
                                 " s after " + std::to_string(opt_.max_halvings) +
                                 " step halvings",
                             last_residual_);
  }

 private:
  bool step(double t, double h, int depth) {
    Eigen::VectorXd x = x_;
    TransientStep tr{h, t + h, !started_, &caps_, &cap_i_, &x_};
    bool ok = false;
    try {
      NewtonOutcome o = newton(sys_, map_, x, 0.0, 1.0, &tr, opt_.newton);
      ok = o.converged;
      last_residual_ = o.residual;
    } catch (const SingularMatrixError&) {
      ok = false;
    }
    if (ok) {
      for (std::size_t i = 0; i < caps_.size(); ++i) {
        const auto& cb = caps_[i];
        const double dv = node_value(x, cb.a) - node_value(x, cb.b);
        const double dvp = node_value(x_, cb.a) - node_value(x_, cb.b);
        cap_i_[i] = started_ ? 2.0 * cb.c / h * (dv - dvp) - cap_i_[i]
                             : cb.c / h * (dv - dvp);
      }
      x_ = std::move(x);
      started_ = true;
      return true;
    }
    if (depth >= opt_.max_halvings) return false;
    return step(t, h / 2.0, depth + 1) && step(t + h / 2.0, h / 2.0, depth + 1);
  }

  const Circuit& c_;
  UnknownMap map_;
  RealAssembler sys_;
  TransientOptions opt_;
  Eigen::VectorXd x_;
  std::vector<CapBranch> caps_;
  std::vector<double> cap_i_;
  double last_residual_ = 0.0;
  bool started_ = false;
};

class Recorder {
 public:
  Recorder(const Circuit& c, const UnknownMap& map) : c_(c), map_(map) {
    for (const auto& n : c.nodes) names_.push_back(n);
  }

  TransientResult start(std::size_t reserve) const {
    TransientResult r;
    r.node_names = names_;
    r.node_voltages.assign(names_.size(), {});
    for (auto& v : r.node_voltages) v.reserve(reserve);
    return r;
  }

  void record(TransientResult& r, double t, const Eigen::VectorXd& x) const {
    r.times.push_back(t);
    for (std::size_t i = 0; i < names_.size(); ++i)
      r.node_voltages[i].push_back(names_[i] == kGround ? 0.0 : x[map_.node(names_[i])]);
    for (const auto& [id, k] : map_.branch_index) r.branch_currents[id].push_back(x[k]);
    for (const auto& s : c_.supplies) {
      const Component* comp = c_.find(s);
      r.supply_currents[comp->id].push_back(-x[map_.branch(comp->id)]);
    }
  }

 private:
  const Circuit& c_;
  const UnknownMap& map_;
  std::vector<std::string> names_;
};

}  // namespace detail

// Trapezoidal integration from the DC operating point to tstop on a uniform
// grid of step dt. Samples include t = 0.
inline TransientResult run_transient(const Circuit& c, const DcSolution& dc,
                                     double tstop, double dt,
                                     const TransientOptions& opt = {}) {
  if (!(dt > 0.0) || !(tstop >= 10.0 * dt))
    throw InvalidArgument("transient needs dt > 0 and tstop >= 10*dt");
  detail::TransientEngine engine(c, dc, opt);
  detail::Recorder rec(c, engine.map());
  const auto steps = static_cast<std::size_t>(std::llround(tstop / dt));
  TransientResult r = rec.start(steps + 1);
  r.dt = dt;
  rec.record(r, 0.0, engine.state());
  for (std::size_t k = 0; k < steps; ++k) {
    engine.advance(static_cast<double>(k) * dt, dt);
    rec.record(r, static_cast<double>(k + 1) * dt, engine.state());
  }
  return r;
}

struct SteadyStateOptions {
  double rel_tol = 1e-6;
  double abs_floor = 1e-12;  // V, lets an undriven circuit settle at zero swing
  TransientOptions transient{};
};

// Marches whole periods of 1/f0 from the DC point until two consecutive
// periods agree. The returned result holds the final period only,
// dt_per_period samples starting at the period boundary.
inline TransientResult steady_state(const Circuit& c, const DcSolution& dc,
                                    double f0, int dt_per_period, int max_periods,
                                    const SteadyStateOptions& opt = {}) {
  if (!(f0 > 0.0)) throw InvalidArgument("steady state needs f0 > 0");
  if (dt_per_period < 64) throw InvalidArgument("steady state needs >= 64 steps per period");
  if (max_periods < 1) throw InvalidArgument("max_periods must be >= 1");
  const auto n = static_cast<std::size_t>(dt_per_period);
  const double h = 1.0 / (f0 * static_cast<double>(dt_per_period));

  detail::TransientEngine engine(c, dc, opt.transient);
  detail::Recorder rec(c, engine.map());

  // Period 0 is the constant DC waveform.
  TransientResult prev = rec.start(n);
  for (std::size_t k = 0; k < n; ++k) rec.record(prev, 0.0, engine.state());

  std::size_t index = 0;
  for (int p = 1; p <= max_periods; ++p) {
    TransientResult cur = rec.start(n);
    cur.dt = h;
    for (std::size_t k = 0; k < n; ++k) {
      rec.record(cur, static_cast<double>(index) * h, engine.state());
      engine.advance(static_cast<double>(index) * h, h);
      ++index;
    }
    double diff = 0.0, swing = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < cur.node_names.size(); ++i) {
      if (cur.node_names[i] == kGround) continue;
      const auto& v = cur.node_voltages[i];
      const auto& w = prev.node_voltages[i];
      double mean = 0.0;
      for (double s : v) mean += s;
      mean /= static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) {
        diff += (v[k] - w[k]) * (v[k] - w[k]);
        swing += (v[k] - mean) * (v[k] - mean);
      }
      count += n;
    }
    if (count > 0) {
      diff = std::sqrt(diff / static_cast<double>(count));
      swing = std::sqrt(swing / static_cast<double>(count));
    }
    cur.periods_run = p;
    if (diff <= opt.rel_tol * swing + opt.abs_floor) {
      cur.converged_to_periodic = true;
      return cur;
    }
    prev = std::move(cur);
  }
  prev.converged_to_periodic = false;
  return prev;
}

// Power at f0 of one uniformly sampled period of a voltage across r_load,
// from a single-bin Fourier projection.
inline double fundamental_power(std::span<const double> period, double dt, double f0,
                                double r_load) {
  const std::size_t n = period.size();
  if (n < 2 || !(dt > 0.0) || !(f0 > 0.0) || !(r_load > 0.0))
    throw InvalidArgument("fundamental_power needs >= 2 samples and positive dt, f0, R");
  if (std::abs(static_cast<double>(n) * dt * f0 - 1.0) > 1e-9)
    throw InvalidArgument("grid/period mismatch: samples do not span one period");
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
    re += period[k] * std::cos(phase);
    im += period[k] * std::sin(phase);
  }
  const double v1 = 2.0 * std::hypot(re, im) / static_cast<double>(n);
  return v1 * v1 / (2.0 * r_load);
}

inline double compute_pae(double pout_w, double pin_w, double pdc_w) {
  if (!(pdc_w > 0.0)) throw InvalidArgument("PAE needs positive DC power");
  if (pout_w < 0.0 || pin_w < 0.0) throw InvalidArgument("powers must be non-negative");
  return (pout_w - pin_w) / pdc_w;
}

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watts_to_dbm(double w) {
  return w > 0.0 ? 10.0 * std::log10(w / 1e-3) : -std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Power sweep

struct PowerSweepPoint {
  double pin_dbm = 0.0;
  double pout_dbm = 0.0;
  double gain_db = 0.0;
  double pdc_w = 0.0;
  double pae = std::numeric_limits<double>::quiet_NaN();  // NaN without supplies
  bool converged = false;
  int periods = 0;
};

struct CompressionReport {
  bool compressed = false;
  double p1db_in_dbm = std::numeric_limits<double>::quiet_NaN();
  double p1db_out_dbm = std::numeric_limits<double>::quiet_NaN();
  double small_signal_gain_db = std::numeric_limits<double>::quiet_NaN();
  double pae_at_p1db = std::numeric_limits<double>::quiet_NaN();
  double pdc_at_p1db = std::numeric_limits<double>::quiet_NaN();
  std::vector<PowerSweepPoint> sweep;  // grid points in Pin order
};

struct SweepOptions {
  int dt_per_period = 256;
  int max_periods = 400;
  int threads = 0;           // 0: RFPA_THREADS or hardware concurrency
  double refine_db = 0.01;   // final P1dB bracket width on the Pin axis
  SteadyStateOptions steady{};
};

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RFPA_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline constexpr std::string_view kDriveSource = "V__drive";

// Copy of `c` with a sine source of internal resistance Z0 at port 1 and a
// Z0 load across port 2.
inline Circuit build_power_testbench(const Circuit& c, double f0) {
  if (c.ports.size() != 2) throw InvalidArgument("power sweep needs exactly 2 ports");
  const Port& in = c.ports[0];
  const Port& out = c.ports[1];
  Circuit tb = c;
  const std::string src_node = "__rfsrc";
  VSource drive;
  drive.sine = Sine{0.0, f0, 0.0};
  tb.add({std::string(kDriveSource), drive, {src_node, in.minus_node}});
  tb.add({"R__src", Resistor{in.z0}, {src_node, in.plus_node}});
  tb.add({"R__load", Resistor{out.z0}, {out.plus_node, out.minus_node}});
  return tb;
}

inline void set_available_power(Circuit& tb, double pin_dbm) {
  for (auto& comp : tb.components) {
    if (comp.id != kDriveSource) continue;
    auto& src = std::get<VSource>(comp.kind);
    src.sine->amplitude = std::sqrt(8.0 * tb.ports[0].z0 * dbm_to_watts(pin_dbm));
  }
}

// One large-signal measurement on a testbench from build_power_testbench.
inline PowerSweepPoint measure_power_point(const Circuit& testbench, const DcSolution& dc,
                                           double f0, double pin_dbm,
                                           const SweepOptions& opt = {}) {
  Circuit tb = testbench;
  set_available_power(tb, pin_dbm);
  const TransientResult r =
      steady_state(tb, dc, f0, opt.dt_per_period, opt.max_periods, opt.steady);
  const Port& out = tb.ports[1];
  std::vector<double> vload(r.times.size());
  const auto& vp = r.voltage(out.plus_node);
  const auto& vm = r.voltage(out.minus_node);
  for (std::size_t k = 0; k < vload.size(); ++k) vload[k] = vp[k] - vm[k];

  PowerSweepPoint pt;
  pt.pin_dbm = pin_dbm;
  pt.converged = r.converged_to_periodic;
  pt.periods = r.periods_run;
  const double pout = fundamental_power(vload, r.dt, f0, out.z0);
  pt.pout_dbm = watts_to_dbm(pout);
  pt.gain_db = pt.pout_dbm - pin_dbm;

  double pdc = 0.0;
  for (const auto& s : tb.supplies) {
    const auto& src = tb.find(s)->as<VSource>();
    const auto& cur = r.supply_currents.at(tb.find(s)->id);
    double acc = 0.0;
    for (std::size_t k = 0; k < cur.size(); ++k) acc += src.value_at(r.times[k]) * cur[k];
    pdc += acc / static_cast<double>(cur.size());
  }
  pt.pdc_w = pdc;
  if (pdc > 0.0) pt.pae = compute_pae(pout, dbm_to_watts(pin_dbm), pdc);
  return pt;
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

inline std::vector<double> power_grid(double start_dbm, double stop_dbm, double step_db) {
  if (!(step_db > 0.0) || !(step_db <= 1.0))
    throw InvalidArgument("power step must be in (0, 1] dB");
  if (!(stop_dbm > start_dbm)) throw InvalidArgument("power sweep stop must exceed start");
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((stop_dbm - start_dbm) / step_db + 1e-9));
  for (long i = 0; i <= n; ++i) grid.push_back(start_dbm + static_cast<double>(i) * step_db);
  return grid;
}

// Available-power sweep at f0 with P1dB located on the gain curve and
// refined by bisection to opt.refine_db.
inline CompressionReport power_sweep_p1db(const Circuit& c, double f0, double pin_start_dbm,
                                          double pin_stop_dbm, double step_db,
                                          const SweepOptions& opt = {}) {
  if (!(f0 > 0.0)) throw InvalidArgument("sweep frequency must be positive");
  const std::vector<double> grid = power_grid(pin_start_dbm, pin_stop_dbm, step_db);
  const Circuit tb = build_power_testbench(c, f0);
  const DcSolution dc = solve_dc(tb, opt.steady.transient.newton);

  CompressionReport rep;
  rep.sweep.resize(grid.size());
  detail::parallel_for(grid.size(), resolve_thread_count(opt.threads), [&](std::size_t i) {
    rep.sweep[i] = measure_power_point(tb, dc, f0, grid[i], opt);
  });

  std::vector<const PowerSweepPoint*> valid;
  for (const auto& p : rep.sweep)
    if (p.converged) valid.push_back(&p);
  if (valid.empty()) return rep;
  rep.small_signal_gain_db = valid.front()->gain_db;
  const double target = rep.small_signal_gain_db - 1.0;

  std::size_t hit = 0;
  for (std::size_t i = 1; i < valid.size(); ++i)
    if (valid[i]->gain_db <= target) {
      hit = i;
      break;
    }
  if (hit == 0) return rep;

  PowerSweepPoint lo = *valid[hit - 1], hi = *valid[hit];
  while (hi.pin_dbm - lo.pin_dbm > opt.refine_db) {
    const PowerSweepPoint mid =
        measure_power_point(tb, dc, f0, 0.5 * (lo.pin_dbm + hi.pin_dbm), opt);
    if (!mid.converged) break;
    (mid.gain_db <= target ? hi : lo) = mid;
  }
  const double span = lo.gain_db - hi.gain_db;
  const double frac = span > 0.0 ? (lo.gain_db - target) / span : 0.0;
  rep.compressed = true;
  rep.p1db_in_dbm = lo.pin_dbm + frac * (hi.pin_dbm - lo.pin_dbm);
  rep.p1db_out_dbm = rep.p1db_in_dbm + target;
  rep.pae_at_p1db = lo.pae + frac * (hi.pae - lo.pae);
  rep.pdc_at_p1db = lo.pdc_w + frac * (hi.pdc_w - lo.pdc_w);
  return rep;
}

}  // namespace rfpa
