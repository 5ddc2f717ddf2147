#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "rfpa/job.hpp"

using namespace rfpa;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "rfpa_job_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return detail::read_file(p.string()); }

struct CliRun {
  int code;
  std::string err;
};

CliRun run_cli(const std::string& args) {
  const fs::path err = scratch_dir() / "stderr.txt";
  const std::string cmd = std::string(RFPA_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

}  // namespace

TEST(Job, NoOutputsFailsBeforeSolving) {
  // The circuit source does not exist; the error must come from the empty
  // output list, not from loading it.
  AnalysisJob job{"/nonexistent.net", OpAnalysis{}, {}};
  try {
    run_job(job);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("no outputs"), std::string::npos);
  }
}

TEST(Job, RejectsUnsupportedFormats) {
  const std::string p = (scratch_dir() / "x").string();
  EXPECT_THROW(run_job({"builtin:divider", OpAnalysis{}, {{OutputFormat::touchstone, p}}}),
               InvalidArgument);
  EXPECT_THROW(run_job({"builtin:divider", OpAnalysis{}, {{OutputFormat::csv, p}}}),
               InvalidArgument);
  EXPECT_THROW(run_job({"builtin:divider", OpAnalysis{},
                        {{OutputFormat::summary, p}, {OutputFormat::summary, p}}}),
               InvalidArgument);
  EXPECT_FALSE(fs::exists(p));
}

TEST(Job, MatchSummary) {
  const fs::path p = scratch_dir() / "match.txt";
  run_job({"", MatchAnalysis{50, 200, 2.4e9}, {{OutputFormat::summary, p.string()}}});
  const std::string s = slurp(p);
  EXPECT_NE(s.find("5.743 nH"), std::string::npos) << s;
  EXPECT_NE(s.find("574.3 fF"), std::string::npos) << s;
}

TEST(Job, SpOnPaWritesFullGrid) {
  const fs::path s2p = scratch_dir() / "pa.s2p";
  const fs::path sum = scratch_dir() / "pa_sp.txt";
  run_job({"builtin:two_stage_pa", SpAnalysis{linear_grid(1e9, 3e9, 201)},
           {{OutputFormat::touchstone, s2p.string()}, {OutputFormat::summary, sum.string()}}});
  const std::string text = slurp(s2p);
  int data = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '!' && line[0] != '#') ++data;
  EXPECT_EQ(data, 201);
  EXPECT_NE(slurp(sum).find("unconditionally_stable"), std::string::npos);
}

TEST(Job, OutputsAreDeterministic) {
  const fs::path a = scratch_dir() / "det_a.s2p", b = scratch_dir() / "det_b.s2p";
  const SpAnalysis sp{linear_grid(1e9, 3e9, 51)};
  run_job({"builtin:two_stage_pa", sp, {{OutputFormat::touchstone, a.string()}}});
  run_job({"builtin:two_stage_pa", sp, {{OutputFormat::touchstone, b.string()}}});
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Job, FailedWriteRemovesEarlierOutputs) {
  const fs::path good = scratch_dir() / "partial.txt";
  fs::remove(good);
  EXPECT_THROW(run_job({"builtin:divider", OpAnalysis{},
                        {{OutputFormat::summary, good.string()},
                         {OutputFormat::summary, "/nonexistent/dir/op.txt"}}}),
               IoError);
  EXPECT_FALSE(fs::exists(good));
}

TEST(Job, ErrorsMapToExitCodes) {
  const fs::path bad = scratch_dir() / "bad.net";
  std::ofstream(bad) << "R1 a 0\n";
  const fs::path out = scratch_dir() / "o.txt";
  auto code_of = [&](const AnalysisJob& job) {
    try {
      run_job(job);
    } catch (const std::exception& e) {
      return exit_code_for(e);
    }
    return 0;
  };
  const std::vector<OutputSpec> o = {{OutputFormat::summary, out.string()}};
  EXPECT_EQ(code_of({bad.string(), OpAnalysis{}, o}), kExitCircuit);
  EXPECT_EQ(code_of({"/nonexistent.net", OpAnalysis{}, o}), kExitIo);
  EXPECT_EQ(code_of({"builtin:nope", OpAnalysis{}, o}), kExitUsage);
  std::ofstream(bad) << "V1 a 0 DC 1\nR1 a b 1k\nR2 b 0 1k\nC1 b 0 1p\n";
  EXPECT_EQ(code_of({bad.string(), OpAnalysis{}, o}), kExitOk);
}

TEST(Job, FormatEng) {
  EXPECT_EQ(format_eng(5.7431e-9, "H"), "5.743 nH");
  EXPECT_EQ(format_eng(574.31e-15, "F"), "574.3 fF");
  EXPECT_EQ(format_eng(2.4e9, "Hz"), "2.4 GHz");
  EXPECT_EQ(format_eng(50, "ohm"), "50 ohm");
}

TEST(Job, ParseOutputSpec) {
  const OutputSpec s = parse_output_spec("s2p=a=b.s2p");
  EXPECT_EQ(s.format, OutputFormat::touchstone);
  EXPECT_EQ(s.path, "a=b.s2p");
  EXPECT_THROW(parse_output_spec("pdf=x"), InvalidArgument);
  EXPECT_THROW(parse_output_spec("summary"), InvalidArgument);
}

TEST(Cli, MatchWritesSummary) {
  const fs::path p = scratch_dir() / "cli_match.txt";
  fs::remove(p);
  const CliRun r = run_cli("match Rs=50 Rl=200 f0=2.4G --out summary=" + p.string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(p).find("5.743 nH"), std::string::npos);
}

TEST(Cli, ExitCodesWithOneLineDiagnostics) {
  const fs::path out = scratch_dir() / "cli_out.txt";
  const fs::path bad = scratch_dir() / "cli_bad.net";
  std::ofstream(bad) << "* bad\nR1 a 0 1k\nR1 a 0 2k\n";
  const fs::path floating = scratch_dir() / "cli_float.net";
  std::ofstream(floating) << "* float\nV1 a 0 DC 1\nR1 a 0 1k\nC1 b c 1p\n";
  const std::string o = " --out summary=" + out.string();
  struct Case {
    std::string args;
    int code;
  };
  const std::vector<Case> cases = {
      {"op --circuit builtin:divider", kExitUsage},
      {"bogus", kExitUsage},
      {"op --circuit builtin:nope" + o, kExitUsage},
      {"tran --circuit builtin:rc_lowpass" + o, kExitUsage},
      {"op --circuit " + bad.string() + o, kExitCircuit},
      {"op --circuit " + floating.string() + o, kExitCircuit},
      {"op --circuit /nonexistent.net" + o, kExitIo},
      {"op --circuit builtin:divider --out summary=/nonexistent/dir/x.txt", kExitIo},
      {"match Rs=0 Rl=50 f0=1G" + o, kExitUsage},
  };
  for (const auto& c : cases) {
    const CliRun r = run_cli(c.args);
    EXPECT_EQ(r.code, c.code) << c.args << "\n" << r.err;
    EXPECT_EQ(count_lines(r.err), 1) << c.args << "\n" << r.err;
  }
}

TEST(Cli, SingularCircuitIsSolverError) {
  const fs::path net = scratch_dir() / "cli_sing.net";
  std::ofstream(net) << "* loop\nV1 a 0 DC 1\nV2 a 0 DC 2\nR1 a 0 1k\n";
  const CliRun r = run_cli("op --circuit " + net.string() + " --out summary=" +
                           (scratch_dir() / "s.txt").string());
  EXPECT_EQ(r.code, kExitSolver) << r.err;
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const fs::path a = scratch_dir() / "cli_a.s2p", b = scratch_dir() / "cli_b.s2p";
  const std::string base = "sp --circuit builtin:two_stage_pa --points 41 --out touchstone=";
  ASSERT_EQ(run_cli(base + a.string()).code, 0);
  ASSERT_EQ(run_cli(base + b.string()).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
}
