#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rfpa/largesignal.hpp"
#include "rfpa/rfmetrics.hpp"

namespace rfpa {

// Scientific notation with 9 significant digits and a bare exponent:
// 1/3 -> "3.33333333e-1", 2.4e9 -> "2.40000000e9", 0 -> "0.00000000e0".
inline std::string format_sci9(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 8);
  std::string s(buf, ptr);
  const auto e = s.find('e');
  if (e == std::string::npos) return s;  // inf / nan
  std::string mant = s.substr(0, e);
  std::string exp = s.substr(e + 1);
  bool neg = false;
  if (!exp.empty() && (exp[0] == '+' || exp[0] == '-')) {
    neg = exp[0] == '-';
    exp.erase(0, 1);
  }
  exp.erase(0, std::min(exp.find_first_not_of('0'), exp.size() - 1));
  return mant + "e" + (neg ? "-" : "") + exp;
}

// printf("%#.6g") with an exact zero written as "0.000000".
inline std::string format_sig6(double v) {
  if (v == 0.0) return "0.000000";
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.6g", v);
  return buf;
}

namespace detail {

inline void write_file_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed for '" + path + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot write '" + path + "'");
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Touchstone v1, two-port, RI format

inline std::string touchstone_text(const TwoPortSet& set, const std::string& title = {}) {
  if (set.points.empty()) throw InvalidArgument("cannot write an empty two-port set");
  std::string out;
  if (!title.empty()) out += "! " + title + "\n";
  out += "# HZ S RI R " + format_exact(set.z0()) + "\n";
  for (const auto& p : set.points) {
    out += format_sci9(p.freq);
    for (const cplx& s : {p.s11(), p.s21(), p.s12(), p.s22()})
      out += " " + format_sci9(s.real()) + " " + format_sci9(s.imag());
    out += "\n";
  }
  return out;
}

inline void write_touchstone(const TwoPortSet& set, const std::string& path,
                             const std::string& title = {}) {
  detail::write_file_atomically(path, touchstone_text(set, title));
}

// Reads a Touchstone v1 two-port file. Accepts RI, MA and DB data in HZ,
// KHZ, MHZ or GHZ.
inline TwoPortSet parse_touchstone(const std::string& text) {
  double unit = 1e9;  // Touchstone default is GHz
  std::string format = "MA";
  double z0 = 50.0;
  bool header = false;
  std::vector<double> values;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto bang = line.find('!'); bang != std::string::npos) line.erase(bang);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "#") {
      if (header) throw ParseError(line_no, 1, "duplicate option line");
      header = true;
      while (ls >> tok) {
        const std::string k = detail::to_lower(tok);
        if (k == "hz") unit = 1.0;
        else if (k == "khz") unit = 1e3;
        else if (k == "mhz") unit = 1e6;
        else if (k == "ghz") unit = 1e9;
        else if (k == "s") {}
        else if (k == "ri" || k == "ma" || k == "db") format = detail::to_lower(tok);
        else if (k == "r") {
          std::string r;
          if (!(ls >> r)) throw ParseError(line_no, 1, "missing reference impedance");
          auto v = parse_value(r);
          if (!v || !(*v > 0.0)) throw ParseError(line_no, 1, "bad reference impedance");
          z0 = *v;
        } else {
          throw ParseError(line_no, 1, "unsupported option '" + tok + "'");
        }
      }
      continue;
    }
    do {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(line_no, 1, "malformed number '" + tok + "'");
      values.push_back(v);
    } while (ls >> tok);
  }
  if (values.empty() || values.size() % 9 != 0)
    throw ParseError(line_no, 1, "two-port data must come in groups of 9 numbers");
  TwoPortSet set;
  for (std::size_t i = 0; i < values.size(); i += 9) {
    TwoPortPoint p;
    p.freq = values[i] * unit;
    p.z0 = z0;
    auto pair = [&](std::size_t k) -> cplx {
      const double a = values[i + 1 + 2 * k], b = values[i + 2 + 2 * k];
      if (format == "ri") return {a, b};
      const double deg = b * std::numbers::pi / 180.0;
      const double mag = format == "db" ? std::pow(10.0, a / 20.0) : a;
      return std::polar(mag, deg);
    };
    p.s[0][0] = pair(0);
    p.s[1][0] = pair(1);
    p.s[0][1] = pair(2);
    p.s[1][1] = pair(3);
    if (!set.points.empty() && !(p.freq > set.points.back().freq))
      throw ParseError(line_no, 1, "frequencies must be strictly increasing");
    set.points.push_back(p);
  }
  return set;
}

inline TwoPortSet read_touchstone(const std::string& path) {
  return parse_touchstone(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Power sweep CSV

inline constexpr const char* kSweepCsvHeader = "pin_dbm,pout_dbm,gain_db,pdc_w,pae";

inline std::string sweep_csv_text(const std::vector<PowerSweepPoint>& sweep) {
  if (sweep.empty()) throw InvalidArgument("cannot write an empty sweep");
  std::string out = std::string(kSweepCsvHeader) + "\r\n";
  for (const auto& p : sweep) {
    out += format_sig6(p.pin_dbm) + "," + format_sig6(p.pout_dbm) + "," +
           format_sig6(p.gain_db) + "," + format_sig6(p.pdc_w) + "," + format_sig6(p.pae) +
           "\r\n";
  }
  return out;
}

inline void write_csv(const std::vector<PowerSweepPoint>& sweep, const std::string& path) {
  detail::write_file_atomically(path, sweep_csv_text(sweep));
}

inline std::vector<PowerSweepPoint> parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, 1, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSweepCsvHeader) throw ParseError(1, 1, "unexpected CSV header");
  std::vector<PowerSweepPoint> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      if (cell == "nan") {
        f.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw ParseError(line_no, 1, "malformed CSV cell '" + cell + "'");
      f.push_back(v);
    }
    if (f.size() != 5) throw ParseError(line_no, 1, "expected 5 CSV fields");
    PowerSweepPoint p;
    p.pin_dbm = f[0];
    p.pout_dbm = f[1];
    p.gain_db = f[2];
    p.pdc_w = f[3];
    p.pae = f[4];
    p.converged = true;
    out.push_back(p);
  }
  return out;
}

inline std::vector<PowerSweepPoint> read_csv(const std::string& path) {
  return parse_sweep_csv(detail::read_file(path));
}

}  // namespace rfpa
