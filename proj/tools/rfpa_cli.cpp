// rfpa: command-line front end. One analysis per invocation.
//
//   rfpa op    --circuit builtin:two_stage_pa --out summary=op.txt
//   rfpa sp    --circuit pa.net --start 1G --stop 3G --points 201 --out touchstone=pa.s2p
//   rfpa sweep --circuit builtin:two_stage_pa --f0 2.4G --out csv=sweep.csv
//   rfpa match Rs=50 Rl=200 f0=2.4G --out summary=match.txt
//
// Exit codes: 0 ok, 2 usage, 3 circuit parse/validation, 4 solver, 5 I/O.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rfpa/job.hpp"

namespace {

double value_of(const std::string& flag, const std::string& text) {
  const auto v = rfpa::parse_value(text);
  if (!v) throw rfpa::InvalidArgument("bad value for " + flag + ": '" + text + "'");
  return *v;
}

int count_of(const std::string& flag, const std::string& text) {
  const double v = value_of(flag, text);
  if (v != static_cast<int>(v)) throw rfpa::InvalidArgument(flag + " must be an integer");
  return static_cast<int>(v);
}

struct GridFlags {
  std::string start = "1G", stop = "3G", points = "201";

  void attach(CLI::App* app) {
    app->add_option("--start", start, "first frequency (Hz)")->capture_default_str();
    app->add_option("--stop", stop, "last frequency (Hz)")->capture_default_str();
    app->add_option("--points", points, "number of linear grid points")->capture_default_str();
  }
  std::vector<double> grid() const {
    return rfpa::linear_grid(value_of("--start", start), value_of("--stop", stop),
                             count_of("--points", points));
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rfpa: netlist DC/AC/S-parameter/transient/power-sweep workbench"};
  app.require_subcommand(1);

  std::string circuit;
  std::vector<std::string> outs;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--circuit", circuit, "netlist path or builtin:NAME");
    sub->add_option("--out", outs, "FORMAT=PATH, repeatable (touchstone, csv, summary)");
  };

  CLI::App* op = app.add_subcommand("op", "DC operating point");
  common(op);

  CLI::App* ac = app.add_subcommand("ac", "AC node phasors over a frequency grid");
  common(ac);
  GridFlags ac_grid;
  ac_grid.attach(ac);
  std::string ac_source;
  std::string ac_port = "1";
  ac->add_option("--source", ac_source, "drive this voltage source instead of a port");
  ac->add_option("--port", ac_port, "drive this port behind its Z0")->capture_default_str();

  CLI::App* sp = app.add_subcommand("sp", "two-port S-parameters and stability");
  common(sp);
  GridFlags sp_grid;
  sp_grid.attach(sp);
  std::string sp_f0 = "2.4G";
  sp->add_option("--f0", sp_f0, "frequency quoted in the summary")->capture_default_str();

  CLI::App* tran = app.add_subcommand("tran", "transient from the DC point");
  common(tran);
  std::string tstop, dt;
  tran->add_option("--tstop", tstop, "stop time (s)")->required();
  tran->add_option("--dt", dt, "time step (s)")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "available-power sweep and P1dB");
  common(sweep);
  std::string f0 = "2.4G", pin_start = "-20", pin_stop = "10", step = "1";
  std::string dt_per_period = "256", max_periods = "400", threads = "0";
  sweep->add_option("--f0", f0, "drive frequency (Hz)")->capture_default_str();
  sweep->add_option("--pin-start", pin_start, "first available power (dBm)")->capture_default_str();
  sweep->add_option("--pin-stop", pin_stop, "last available power (dBm)")->capture_default_str();
  sweep->add_option("--step", step, "power step (dB, at most 1)")->capture_default_str();
  sweep->add_option("--dt-per-period", dt_per_period, "time steps per period")->capture_default_str();
  sweep->add_option("--max-periods", max_periods, "period budget per point")->capture_default_str();
  sweep->add_option("--threads", threads, "worker threads, 0 reads RFPA_THREADS")->capture_default_str();

  CLI::App* match = app.add_subcommand("match", "two-element L-match synthesis");
  std::vector<std::string> match_params;
  std::string topology = "lowpass";
  match->add_option("params", match_params, "Rs=OHMS Rl=OHMS f0=HZ");
  match->add_option("--out", outs, "FORMAT=PATH, repeatable (summary)");
  match->add_option("--topology", topology, "lowpass (series L) or highpass (series C)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "rfpa: " << e.what() << "\n";
    return rfpa::kExitUsage;
  }

  try {
    rfpa::AnalysisJob job;
    job.circuit_source = circuit;
    for (const auto& o : outs) job.outputs.push_back(rfpa::parse_output_spec(o));

    if (op->parsed()) {
      job.analysis = rfpa::OpAnalysis{};
    } else if (ac->parsed()) {
      rfpa::AcAnalysis a;
      a.freqs = ac_grid.grid();
      if (!ac_source.empty()) a.excitation = rfpa::SourceDrive{ac_source};
      else a.excitation = rfpa::PortDrive{count_of("--port", ac_port)};
      job.analysis = a;
    } else if (sp->parsed()) {
      job.analysis = rfpa::SpAnalysis{sp_grid.grid(), value_of("--f0", sp_f0)};
    } else if (tran->parsed()) {
      job.analysis = rfpa::TranAnalysis{value_of("--tstop", tstop), value_of("--dt", dt)};
    } else if (sweep->parsed()) {
      rfpa::SweepAnalysis a;
      a.f0 = value_of("--f0", f0);
      a.pin_start_dbm = value_of("--pin-start", pin_start);
      a.pin_stop_dbm = value_of("--pin-stop", pin_stop);
      a.step_db = value_of("--step", step);
      a.options.dt_per_period = count_of("--dt-per-period", dt_per_period);
      a.options.max_periods = count_of("--max-periods", max_periods);
      a.options.threads = count_of("--threads", threads);
      job.analysis = a;
    } else {
      rfpa::MatchAnalysis a;
      std::map<std::string, double> kv;
      for (const auto& p : match_params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos)
          throw rfpa::InvalidArgument("match parameter must be KEY=VALUE, got '" + p + "'");
        const std::string key = rfpa::detail::to_lower(p.substr(0, eq));
        if (key != "rs" && key != "rl" && key != "f0")
          throw rfpa::InvalidArgument("unknown match parameter '" + p.substr(0, eq) + "'");
        kv[key] = value_of(p.substr(0, eq), p.substr(eq + 1));
      }
      for (const char* k : {"rs", "rl", "f0"})
        if (!kv.count(k)) throw rfpa::InvalidArgument(std::string("match needs ") + k + "=");
      a.r_source = kv["rs"];
      a.r_load = kv["rl"];
      a.f0 = kv["f0"];
      if (topology == "lowpass") a.topology = rfpa::LMatchTopology::series_l_shunt_c;
      else if (topology == "highpass") a.topology = rfpa::LMatchTopology::series_c_shunt_l;
      else throw rfpa::InvalidArgument("topology must be lowpass or highpass");
      job.analysis = a;
    }

    rfpa::run_job(job);
    return rfpa::kExitOk;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::cerr << "rfpa: " << msg << "\n";
    return rfpa::exit_code_for(e);
  }
}
