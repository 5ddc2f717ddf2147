#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rfpa/builtins.hpp"
#include "rfpa/largesignal.hpp"
#include "rfpa/matching.hpp"
#include "rfpa/reports.hpp"
#include "rfpa/rfmetrics.hpp"

namespace rfpa {

struct OpAnalysis {};

struct AcAnalysis {
  std::vector<double> freqs;
  AcExcitation excitation = PortDrive{1};
};

struct SpAnalysis {
  std::vector<double> freqs;
  double report_freq = 2.4e9;  // gain and match are quoted at the nearest grid point
};

struct TranAnalysis {
  double tstop = 0.0;
  double dt = 0.0;
};

struct SweepAnalysis {
  double f0 = 2.4e9;
  double pin_start_dbm = -20.0;
  double pin_stop_dbm = 10.0;
  double step_db = 1.0;
  SweepOptions options{};
};

struct MatchAnalysis {
  double r_source = 50.0;
  double r_load = 50.0;
  double f0 = 2.4e9;
  LMatchTopology topology = LMatchTopology::series_l_shunt_c;
};

using Analysis =
    std::variant<OpAnalysis, AcAnalysis, SpAnalysis, TranAnalysis, SweepAnalysis, MatchAnalysis>;

enum class OutputFormat { touchstone, csv, summary };

struct OutputSpec {
  OutputFormat format = OutputFormat::summary;
  std::string path;
};

struct AnalysisJob {
  std::string circuit_source;  // file path or "builtin:NAME"; unused by match
  Analysis analysis;
  std::vector<OutputSpec> outputs;
};

struct JobResult {
  std::vector<std::string> written;
};

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,     // bad flags, bad job, bad analysis arguments
  kExitCircuit = 3,   // netlist parse or validation failure
  kExitSolver = 4,    // singular matrix or no convergence
  kExitIo = 5,        // unreadable input or unwritable output
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e))
    return kExitCircuit;
  if (dynamic_cast<const SingularMatrixError*>(&e) || dynamic_cast<const ConvergenceError*>(&e))
    return kExitSolver;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  return kExitUsage;
}

inline std::string_view analysis_name(const Analysis& a) {
  constexpr std::string_view names[] = {"op", "ac", "sp", "tran", "sweep", "match"};
  return names[a.index()];
}

inline std::string_view to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::touchstone: return "touchstone";
    case OutputFormat::csv: return "csv";
    case OutputFormat::summary: return "summary";
  }
  return "?";
}

inline OutputFormat parse_output_format(std::string_view s) {
  const std::string k = detail::to_lower(s);
  if (k == "touchstone" || k == "s2p") return OutputFormat::touchstone;
  if (k == "csv") return OutputFormat::csv;
  if (k == "summary") return OutputFormat::summary;
  throw InvalidArgument("unknown output format '" + std::string(s) + "'");
}

// "fmt=path" as given to --out.
inline OutputSpec parse_output_spec(std::string_view s) {
  const auto eq = s.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == s.size())
    throw InvalidArgument("output must look like FORMAT=PATH, got '" + std::string(s) + "'");
  return {parse_output_format(s.substr(0, eq)), std::string(s.substr(eq + 1))};
}

inline bool format_supported(const Analysis& a, OutputFormat f) {
  if (f == OutputFormat::summary) return true;
  if (f == OutputFormat::touchstone) return std::holds_alternative<SpAnalysis>(a);
  return std::holds_alternative<SweepAnalysis>(a);
}

// Structural checks that need no circuit and no solving.
inline void check_job(const AnalysisJob& job) {
  if (job.outputs.empty()) throw InvalidArgument("job has no outputs");
  for (std::size_t i = 0; i < job.outputs.size(); ++i) {
    const auto& o = job.outputs[i];
    if (o.path.empty()) throw InvalidArgument("output path is empty");
    if (!format_supported(job.analysis, o.format))
      throw InvalidArgument("analysis '" + std::string(analysis_name(job.analysis)) +
                            "' cannot write " + std::string(to_string(o.format)));
    for (std::size_t j = 0; j < i; ++j)
      if (job.outputs[j].path == o.path)
        throw InvalidArgument("output path '" + o.path + "' given twice");
  }
  std::visit(
      [](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, AcAnalysis> || std::is_same_v<T, SpAnalysis>) {
          check_frequency_grid(a.freqs);
        } else if constexpr (std::is_same_v<T, TranAnalysis>) {
          if (!(a.dt > 0.0)) throw InvalidArgument("tran needs dt > 0");
          if (!(a.tstop >= 10.0 * a.dt)) throw InvalidArgument("tran needs tstop >= 10 dt");
        } else if constexpr (std::is_same_v<T, SweepAnalysis>) {
          if (!(a.f0 > 0.0)) throw InvalidArgument("sweep needs f0 > 0");
          power_grid(a.pin_start_dbm, a.pin_stop_dbm, a.step_db);
        } else if constexpr (std::is_same_v<T, MatchAnalysis>) {
          if (!(a.r_source > 0.0) || !(a.r_load > 0.0) || !(a.f0 > 0.0))
            throw InvalidArgument("match needs positive Rs, Rl and f0");
        }
      },
      job.analysis);
}

inline constexpr std::string_view kBuiltinPrefix = "builtin:";

inline Circuit load_circuit(const std::string& source) {
  if (source.empty()) throw InvalidArgument("no circuit given");
  if (source.starts_with(kBuiltinPrefix))
    return builtin_circuit(std::string_view(source).substr(kBuiltinPrefix.size()));
  return parse_netlist_file(source);
}

inline void require_valid(const Circuit& c) {
  const auto diags = validate_circuit(c);
  for (const auto& d : diags)
    if (d.severity == Severity::error)
      throw ValidationError(d.element + ": " + d.message);
}

// Engineering notation with 4 significant digits: 5.743e-9, "H" -> "5.743 nH".
inline std::string format_eng(double v, std::string_view unit) {
  static constexpr std::pair<int, std::string_view> prefixes[] = {
      {-15, "f"}, {-12, "p"}, {-9, "n"}, {-6, "u"}, {-3, "m"}, {0, ""}, {3, "k"}, {6, "M"}, {9, "G"}};
  int exp3 = 0;
  if (v != 0.0 && std::isfinite(v)) {
    exp3 = static_cast<int>(std::floor(std::log10(std::abs(v)) / 3.0)) * 3;
    exp3 = std::clamp(exp3, -15, 9);
  }
  double scaled = v / std::pow(10.0, exp3);
  // Rounding to 4 digits can carry into the next prefix (999.96 -> 1000).
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", scaled);
  if (std::abs(std::strtod(buf, nullptr)) >= 1000.0 && exp3 < 9) {
    exp3 += 3;
    scaled = v / std::pow(10.0, exp3);
    std::snprintf(buf, sizeof buf, "%.4g", scaled);
  }
  std::string_view prefix;
  for (const auto& [e, p] : prefixes)
    if (e == exp3) prefix = p;
  return std::string(buf) + " " + std::string(prefix) + std::string(unit);
}

namespace detail {

class SummaryWriter {
 public:
  void line(std::string_view key, std::string_view value) {
    text_ += std::string(key) + " " + std::string(value) + "\n";
  }
  void number(std::string_view key, double v) { line(key, format_sci9(v)); }
  void raw(std::string_view s) { text_ += std::string(s) + "\n"; }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct Rendered {
  std::string summary;
  std::string touchstone;
  std::string csv;
};

inline std::string_view yes_no(bool b) { return b ? "yes" : "no"; }

inline Rendered render_op(const Circuit& c) {
  const DcSolution dc = solve_dc(c);
  SummaryWriter w;
  w.line("circuit", c.name);
  w.line("analysis", "op");
  w.line("strategy", dc.strategy);
  w.line("iterations", std::to_string(dc.iterations));
  w.number("residual_a", dc.residual_norm);
  for (const auto& [n, v] : dc.node_voltages) w.number("node " + n, v);
  for (const auto& [id, i] : dc.branch_currents) w.number("branch " + id, i);
  for (const auto& [id, op] : dc.device_ops)
    w.raw("device " + id + " " + std::string(to_string(op.region)) + " vgs " +
          format_sci9(op.vgs) + " vds " + format_sci9(op.vds) + " id " + format_sci9(op.id));
  double pdc = 0.0;
  for (const auto& s : c.supplies)
    pdc += -c.find(s)->as<VSource>().dc * dc.branch_currents.at(c.find(s)->id);
  if (!c.supplies.empty()) w.number("pdc_w", pdc);
  return {w.text(), {}, {}};
}

inline Rendered render_ac(const Circuit& c, const AcAnalysis& a) {
  const DcSolution dc = solve_dc(c);
  SummaryWriter w;
  w.line("circuit", c.name);
  w.line("analysis", "ac");
  bool first = true;
  for (double f : a.freqs) {
    const AcSolution sol = solve_ac(c, dc, f, a.excitation);
    if (first) w.line("excitation", sol.source_excitation);
    first = false;
    for (const auto& [n, v] : sol.node_phasors) {
      if (n == kGround) continue;
      w.raw("freq " + format_sci9(f) + " node " + n + " re " + format_sci9(v.real()) +
            " im " + format_sci9(v.imag()));
    }
  }
  return {w.text(), {}, {}};
}

inline Rendered render_sp(const Circuit& c, const SpAnalysis& a) {
  const DcSolution dc = solve_dc(c);
  const TwoPortSet set = extract_s_parameters(c, dc, a.freqs);
  SummaryWriter w;
  w.line("circuit", c.name);
  w.line("analysis", "sp");
  w.line("points", std::to_string(set.points.size()));
  w.number("z0_ohm", set.z0());
  const TwoPortPoint& p = nearest_point(set, a.report_freq);
  const GainMetrics g = gain_metrics(p);
  w.number("report_freq_hz", p.freq);
  w.number("s21_db", g.s21_db);
  w.number("s11_db", g.s11_db);
  w.number("s22_db", to_db20(std::abs(p.s22())));
  double k_min = std::numeric_limits<double>::infinity(), k_freq = 0.0;
  double d_max = 0.0, d_freq = 0.0;
  bool stable = true;
  for (const auto& pt : set.points) {
    const StabilityReport r = rollett_stability(pt);
    stable = stable && r.unconditionally_stable;
    if (r.k < k_min) {
      k_min = r.k;
      k_freq = pt.freq;
    }
    if (r.delta_mag > d_max) {
      d_max = r.delta_mag;
      d_freq = pt.freq;
    }
  }
  w.number("k_min", k_min);
  w.number("k_min_freq_hz", k_freq);
  w.number("delta_max", d_max);
  w.number("delta_max_freq_hz", d_freq);
  w.line("unconditionally_stable", yes_no(stable));
  return {w.text(), touchstone_text(set, c.name), {}};
}

inline Rendered render_tran(const Circuit& c, const TranAnalysis& a) {
  const DcSolution dc = solve_dc(c);
  const TransientResult r = run_transient(c, dc, a.tstop, a.dt);
  SummaryWriter w;
  w.line("circuit", c.name);
  w.line("analysis", "tran");
  w.line("samples", std::to_string(r.times.size()));
  std::string head = "time";
  for (const auto& n : r.node_names)
    if (n != kGround) head += " v(" + n + ")";
  for (const auto& [id, cur] : r.supply_currents) head += " i(" + id + ")";
  w.raw(head);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    std::string row = format_sci9(r.times[k]);
    for (std::size_t i = 0; i < r.node_names.size(); ++i)
      if (r.node_names[i] != kGround) row += " " + format_sci9(r.node_voltages[i][k]);
    for (const auto& [id, cur] : r.supply_currents) row += " " + format_sci9(cur[k]);
    w.raw(row);
  }
  return {w.text(), {}, {}};
}

inline Rendered render_sweep(const Circuit& c, const SweepAnalysis& a) {
  const CompressionReport rep =
      power_sweep_p1db(c, a.f0, a.pin_start_dbm, a.pin_stop_dbm, a.step_db, a.options);
  SummaryWriter w;
  w.line("circuit", c.name);
  w.line("analysis", "sweep");
  w.number("f0_hz", a.f0);
  w.line("points", std::to_string(rep.sweep.size()));
  std::size_t unconverged = 0;
  for (const auto& p : rep.sweep)
    if (!p.converged) ++unconverged;
  w.line("unconverged_points", std::to_string(unconverged));
  w.number("small_signal_gain_db", rep.small_signal_gain_db);
  w.line("compressed", yes_no(rep.compressed));
  if (rep.compressed) {
    w.number("p1db_in_dbm", rep.p1db_in_dbm);
    w.number("p1db_out_dbm", rep.p1db_out_dbm);
    w.number("pae_at_p1db", rep.pae_at_p1db);
    w.number("pdc_at_p1db_w", rep.pdc_at_p1db);
  }
  return {w.text(), {}, sweep_csv_text(rep.sweep)};
}

inline Rendered render_match(const MatchAnalysis& a) {
  const LMatch m = synthesize_l_match(a.r_source, a.r_load, a.f0, a.topology);
  SummaryWriter w;
  w.line("analysis", "match");
  w.number("rs_ohm", a.r_source);
  w.number("rl_ohm", a.r_load);
  w.number("f0_hz", a.f0);
  w.line("topology", a.topology == LMatchTopology::series_l_shunt_c ? "series_l_shunt_c"
                                                                    : "series_c_shunt_l");
  w.number("qm", m.qm);
  w.line("elements", std::to_string(m.elements.size()));
  for (std::size_t i = 0; i < m.elements.size(); ++i) {
    const auto& e = m.elements[i];
    const bool ind = e.is_inductor();
    w.raw("element " + std::to_string(i + 1) + " " + std::string(to_string(e.kind)) +
          (ind ? " L = " : " C = ") + format_eng(e.value, ind ? "H" : "F") +
          " X = " + format_sci9(e.reactance) + " ohm");
  }
  const cplx zin = input_impedance(m, a.r_load, a.f0);
  w.number("zin_re_ohm", zin.real());
  w.number("zin_im_ohm", zin.imag());
  return {w.text(), {}, {}};
}

}  // namespace detail

// Runs one job: resolve and validate the circuit, solve, then write every
// requested output. Either all outputs are written or none remain.
inline JobResult run_job(const AnalysisJob& job) {
  check_job(job);
  detail::Rendered out;
  if (const auto* m = std::get_if<MatchAnalysis>(&job.analysis)) {
    out = detail::render_match(*m);
  } else {
    const Circuit c = load_circuit(job.circuit_source);
    require_valid(c);
    out = std::visit(
        [&](const auto& a) -> detail::Rendered {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, OpAnalysis>) return detail::render_op(c);
          else if constexpr (std::is_same_v<T, AcAnalysis>) return detail::render_ac(c, a);
          else if constexpr (std::is_same_v<T, SpAnalysis>) return detail::render_sp(c, a);
          else if constexpr (std::is_same_v<T, TranAnalysis>) return detail::render_tran(c, a);
          else if constexpr (std::is_same_v<T, SweepAnalysis>) return detail::render_sweep(c, a);
          else return {};
        },
        job.analysis);
  }

  JobResult result;
  try {
    for (const auto& o : job.outputs) {
      const std::string* text = o.format == OutputFormat::summary ? &out.summary
                                : o.format == OutputFormat::touchstone ? &out.touchstone
                                                                       : &out.csv;
      detail::write_file_atomically(o.path, *text);
      result.written.push_back(o.path);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : result.written) std::filesystem::remove(p, ec);
    throw;
  }
  return result;
}

}  // namespace rfpa
