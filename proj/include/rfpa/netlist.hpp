#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rfpa/devices.hpp"
#include "rfpa/error.hpp"
#include "rfpa/units.hpp"

namespace rfpa {

inline constexpr std::string_view kGround = "0";
inline constexpr double kDefaultInductorFref = 2.4e9;

struct Resistor {
  double resistance = 0.0;
  friend bool operator==(const Resistor&, const Resistor&) = default;
};

struct Capacitor {
  double capacitance = 0.0;
  friend bool operator==(const Capacitor&, const Capacitor&) = default;
};

// Finite-Q inductors carry a constant series resistance fixed at f_ref.
// An inductor without Q is lossless.
struct Inductor {
  double inductance = 0.0;
  std::optional<double> q;
  double f_ref = kDefaultInductorFref;

  double series_resistance() const {
    return q ? inductor_parasitic_resistance(inductance, *q, f_ref) : 0.0;
  }
  friend bool operator==(const Inductor&, const Inductor&) = default;
};

struct Mosfet {
  std::string model;
  double width = 0.0;   // per finger
  double length = 0.0;
  int fingers = 1;
  int multiplier = 1;

  double effective_width() const { return width * fingers * multiplier; }
  friend bool operator==(const Mosfet&, const Mosfet&) = default;
};

struct Sine {
  double amplitude = 0.0;
  double freq = 0.0;
  double phase = 0.0;  // radians
  friend bool operator==(const Sine&, const Sine&) = default;
};

struct VSource {
  double dc = 0.0;
  double ac_mag = 0.0;
  std::optional<Sine> sine;

  double value_at(double t) const {
    if (!sine) return dc;
    return dc + sine->amplitude *
                    std::sin(2.0 * std::numbers::pi * sine->freq * t +
                             sine->phase);
  }
  friend bool operator==(const VSource&, const VSource&) = default;
};

// Memoryless polynomial voltage-controlled voltage source:
// v(out+, out-) = sum_k c_k * v(ctrl+, ctrl-)^k.
struct PolyVcvs {
  std::vector<double> coefficients;

  double value(double x) const {
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
      acc = acc * x + *it;
    return acc;
  }
  double derivative(double x) const {
    double acc = 0.0;
    for (std::size_t k = coefficients.size(); k-- > 1;)
      acc = acc * x + static_cast<double>(k) * coefficients[k];
    return acc;
  }
  friend bool operator==(const PolyVcvs&, const PolyVcvs&) = default;
};

using ComponentKind =
    std::variant<Resistor, Capacitor, Inductor, Mosfet, VSource, PolyVcvs>;

// Terminal order: two nodes for passives and sources; drain, gate, source
// for MOSFETs; out+, out-, ctrl+, ctrl- for PolyVcvs.
struct Component {
  std::string id;
  ComponentKind kind;
  std::vector<std::string> terminals;

  template <typename T>
  bool is() const { return std::holds_alternative<T>(kind); }
  template <typename T>
  const T& as() const { return std::get<T>(kind); }

  friend bool operator==(const Component&, const Component&) = default;
};

struct Port {
  int number = 1;
  std::string plus_node;
  std::string minus_node{kGround};
  double z0 = 50.0;
  friend bool operator==(const Port&, const Port&) = default;
};

inline std::size_t terminal_count(const ComponentKind& kind) {
  return std::visit(
      [](const auto& k) -> std::size_t {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Mosfet>) return 3;
        else if constexpr (std::is_same_v<T, PolyVcvs>) return 4;
        else return 2;
      },
      kind);
}

struct Circuit {
  std::string name;
  std::set<std::string> nodes;
  std::vector<Component> components;
  std::vector<Port> ports;
  std::vector<std::string> supplies;
  std::map<std::string, MosfetModelCard> models;  // keyed by lower-case name

  // Appends a component and declares its terminal nodes.
  Component& add(Component c) {
    for (const auto& t : c.terminals) nodes.insert(t);
    components.push_back(std::move(c));
    return components.back();
  }

  const Component* find(std::string_view id) const {
    for (const auto& c : components)
      if (detail::iequals(c.id, id)) return &c;
    return nullptr;
  }

  const MosfetModelCard* model(std::string_view name) const {
    auto it = models.find(detail::to_lower(name));
    return it == models.end() ? nullptr : &it->second;
  }

  const Port* port(int number) const {
    for (const auto& p : ports)
      if (p.number == number) return &p;
    return nullptr;
  }

  friend bool operator==(const Circuit&, const Circuit&) = default;
};

// ---------------------------------------------------------------------------
// Parser

namespace detail {

struct Token {
  std::string text;
  int line = 0;
  int column = 0;
};

struct LogicalLine {
  std::vector<Token> tokens;
  int line = 0;
};

inline std::vector<Token> tokenize_line(std::string_view text, int line) {
  std::vector<Token> raw;
  std::size_t i = 0;
  while (i < text.size()) {
    char ch = text[i];
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      ++i;
      continue;
    }
    if (ch == '(' || ch == ')' || ch == '=') {
      raw.push_back({std::string(1, ch), line, static_cast<int>(i) + 1});
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[i])) &&
           text[i] != '(' && text[i] != ')' && text[i] != '=' && text[i] != ',')
      ++i;
    raw.push_back({std::string(text.substr(start, i - start)), line,
                   static_cast<int>(start) + 1});
  }
  // Fold "key = value" into a single "key=value" token.
  std::vector<Token> out;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (raw[k].text == "=" && !out.empty() && k + 1 < raw.size() &&
        raw[k + 1].text != "(" && raw[k + 1].text != ")" &&
        raw[k + 1].text != "=") {
      out.back().text += "=" + raw[k + 1].text;
      ++k;
    } else {
      out.push_back(raw[k]);
    }
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

class NetlistParser {
 public:
  NetlistParser(std::string_view text, std::string name) {
    circuit_.name = std::move(name);
    split(text);
  }

  Circuit run() {
    for (const auto& l : lines_) {
      if (ended_) break;
      statement(l);
    }
    resolve();
    return std::move(circuit_);
  }

 private:
  [[noreturn]] static void fail(const Token& t, const std::string& msg) {
    throw ParseError(t.line, t.column, msg);
  }
  [[noreturn]] static void fail_after(const Token& t, const std::string& msg) {
    throw ParseError(t.line, t.column + static_cast<int>(t.text.size()), msg);
  }

  void split(std::string_view text) {
    int line_no = 0;
    bool first_content = true;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t nl = text.find('\n', pos);
      std::string_view raw = text.substr(
          pos, nl == std::string_view::npos ? std::string_view::npos
                                            : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
      std::string_view body = trim(raw);
      if (body.empty()) continue;
      if (body.front() == '*') {
        if (first_content && circuit_.name.empty())
          circuit_.name = std::string(trim(body.substr(1)));
        first_content = false;
        continue;
      }
      first_content = false;
      std::size_t indent = raw.find_first_not_of(" \t");
      if (body.front() == '+') {
        if (lines_.empty())
          throw ParseError(line_no, static_cast<int>(indent) + 1,
                           "continuation line without a preceding element");
        std::string padded(indent + 1, ' ');
        padded += std::string(raw.substr(indent + 1));
        auto more = tokenize_line(padded, line_no);
        auto& dst = lines_.back().tokens;
        dst.insert(dst.end(), more.begin(), more.end());
        continue;
      }
      lines_.push_back({tokenize_line(raw, line_no), line_no});
    }
  }

  static double value(const Token& t, std::string_view text) {
    auto v = parse_value(text);
    if (!v) fail(t, "malformed number '" + std::string(text) + "'");
    return *v;
  }

  static double positive(const Token& t, std::string_view text,
                         std::string_view what) {
    double v = value(t, text);
    if (!(v > 0.0) || !std::isfinite(v))
      fail(t, std::string(what) + " must be positive");
    return v;
  }

  static int positive_int(const Token& t, std::string_view text,
                          std::string_view what) {
    double v = value(t, text);
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
      fail(t, std::string(what) + " must be an integer >= 1");
    return static_cast<int>(v);
  }

  // Splits "KEY=value"; returns nullopt when the token has no '='.
  static std::optional<std::pair<std::string, std::string>> keyval(
      const Token& t) {
    auto eq = t.text.find('=');
    if (eq == std::string::npos) return std::nullopt;
    if (eq == 0 || eq + 1 == t.text.size())
      fail(t, "malformed parameter '" + t.text + "'");
    return std::make_pair(to_lower(std::string_view(t.text).substr(0, eq)),
                          t.text.substr(eq + 1));
  }

  static void need(const LogicalLine& l, std::size_t count,
                   std::string_view what) {
    if (l.tokens.size() < count)
      fail_after(l.tokens.back(), "missing " + std::string(what));
  }

  void declare_id(const Token& t) {
    if (!ids_.insert(to_lower(t.text)).second)
      fail(t, "duplicate component id '" + t.text + "'");
  }

  void statement(const LogicalLine& l) {
    const Token& head = l.tokens.front();
    if (head.text.front() == '.') {
      directive(l);
      return;
    }
    if (head.text.size() < 2)
      fail(head, "component id '" + head.text + "' needs a name after the kind letter");
    switch (lower(head.text.front())) {
      case 'r': passive(l, 'r'); break;
      case 'c': passive(l, 'c'); break;
      case 'l': inductor(l); break;
      case 'm': mosfet(l); break;
      case 'v': vsource(l); break;
      case 'e': vcvs(l); break;
      default:
        fail(head, "unknown component kind '" + std::string(1, head.text.front()) + "'");
    }
  }

  std::vector<std::string> nodes(const LogicalLine& l, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= n; ++i) {
      const Token& t = l.tokens[i];
      if (t.text.find('=') != std::string::npos || t.text == "(" || t.text == ")")
        fail(t, "expected node name, got '" + t.text + "'");
      out.push_back(t.text);
    }
    return out;
  }

  void passive(const LogicalLine& l, char kind) {
    need(l, 3, "nodes");
    need(l, 4, "value");
    if (l.tokens.size() > 4) fail(l.tokens[4], "unexpected token '" + l.tokens[4].text + "'");
    declare_id(l.tokens[0]);
    double v = positive(l.tokens[3], l.tokens[3].text,
                        kind == 'r' ? "resistance" : "capacitance");
    ComponentKind k = kind == 'r' ? ComponentKind{Resistor{v}}
                                  : ComponentKind{Capacitor{v}};
    circuit_.add({l.tokens[0].text, k, nodes(l, 2)});
  }

  void inductor(const LogicalLine& l) {
    need(l, 3, "nodes");
    need(l, 4, "value");
    declare_id(l.tokens[0]);
    Inductor ind;
    ind.inductance = positive(l.tokens[3], l.tokens[3].text, "inductance");
    for (std::size_t i = 4; i < l.tokens.size(); ++i) {
      auto kv = keyval(l.tokens[i]);
      if (!kv) fail(l.tokens[i], "unexpected token '" + l.tokens[i].text + "'");
      if (kv->first == "q") ind.q = positive(l.tokens[i], kv->second, "Q");
      else if (kv->first == "fref") ind.f_ref = positive(l.tokens[i], kv->second, "FREF");
      else fail(l.tokens[i], "unknown inductor parameter '" + kv->first + "'");
    }
    circuit_.add({l.tokens[0].text, ind, nodes(l, 2)});
  }

  void mosfet(const LogicalLine& l) {
    need(l, 4, "nodes");
    need(l, 5, "model name");
    declare_id(l.tokens[0]);
    Mosfet m;
    const Token& model_tok = l.tokens[4];
    if (model_tok.text.find('=') != std::string::npos)
      fail(model_tok, "missing model name");
    m.model = model_tok.text;
    bool has_w = false, has_l = false;
    for (std::size_t i = 5; i < l.tokens.size(); ++i) {
      auto kv = keyval(l.tokens[i]);
      if (!kv) fail(l.tokens[i], "unexpected token '" + l.tokens[i].text + "'");
      if (kv->first == "w") { m.width = positive(l.tokens[i], kv->second, "W"); has_w = true; }
      else if (kv->first == "l") { m.length = positive(l.tokens[i], kv->second, "L"); has_l = true; }
      else if (kv->first == "nf") m.fingers = positive_int(l.tokens[i], kv->second, "NF");
      else if (kv->first == "m") m.multiplier = positive_int(l.tokens[i], kv->second, "M");
      else fail(l.tokens[i], "unknown MOSFET parameter '" + kv->first + "'");
    }
    if (!has_w) fail_after(l.tokens.back(), "missing W=");
    if (!has_l) fail_after(l.tokens.back(), "missing L=");
    model_refs_.push_back({model_tok, m.model});
    circuit_.add({l.tokens[0].text, m, nodes(l, 3)});
  }

  void vsource(const LogicalLine& l) {
    need(l, 3, "nodes");
    declare_id(l.tokens[0]);
    VSource v;
    std::size_t i = 3;
    const auto& tk = l.tokens;
    auto operand = [&](std::string_view what) -> const Token& {
      if (i + 1 >= tk.size()) fail_after(tk[i], "missing " + std::string(what) + " value");
      return tk[++i];
    };
    bool bare_dc_allowed = true;
    while (i < tk.size()) {
      std::string key = to_lower(tk[i].text);
      if (key == "dc") {
        const Token& t = operand("DC");
        v.dc = value(t, t.text);
      } else if (key == "ac") {
        const Token& t = operand("AC");
        v.ac_mag = value(t, t.text);
      } else if (key == "sin") {
        if (i + 1 >= tk.size() || tk[i + 1].text != "(")
          fail_after(tk[i], "expected '(' after SIN");
        i += 2;
        std::vector<double> args;
        while (i < tk.size() && tk[i].text != ")") {
          args.push_back(value(tk[i], tk[i].text));
          ++i;
        }
        if (i >= tk.size()) fail_after(tk.back(), "missing ')' in SIN");
        if (args.size() < 2 || args.size() > 3)
          fail(tk[i], "SIN expects (amplitude freq [phase])");
        if (!(args[1] > 0.0)) fail(tk[i], "SIN frequency must be positive");
        v.sine = Sine{args[0], args[1], args.size() == 3 ? args[2] : 0.0};
      } else if (bare_dc_allowed && parse_value(tk[i].text)) {
        v.dc = *parse_value(tk[i].text);
      } else {
        fail(tk[i], "unexpected token '" + tk[i].text + "'");
      }
      bare_dc_allowed = false;
      ++i;
    }
    circuit_.add({tk[0].text, v, nodes(l, 2)});
  }

  void vcvs(const LogicalLine& l) {
    need(l, 5, "nodes");
    need(l, 6, "POLY(...)");
    declare_id(l.tokens[0]);
    const auto& tk = l.tokens;
    if (to_lower(tk[5].text) != "poly") fail(tk[5], "expected POLY(...)");
    if (tk.size() < 7 || tk[6].text != "(") fail_after(tk[5], "expected '(' after POLY");
    PolyVcvs e;
    std::size_t i = 7;
    while (i < tk.size() && tk[i].text != ")") {
      e.coefficients.push_back(value(tk[i], tk[i].text));
      ++i;
    }
    if (i >= tk.size()) fail_after(tk.back(), "missing ')' in POLY");
    if (e.coefficients.empty()) fail(tk[i], "POLY needs at least one coefficient");
    if (i + 1 < tk.size()) fail(tk[i + 1], "unexpected token '" + tk[i + 1].text + "'");
    circuit_.add({tk[0].text, e, nodes(l, 4)});
  }

  void directive(const LogicalLine& l) {
    const auto& tk = l.tokens;
    std::string name = to_lower(tk[0].text);
    if (name == ".end") {
      ended_ = true;
    } else if (name == ".model") {
      need(l, 2, "model name");
      need(l, 3, "model type");
      if (to_lower(tk[2].text) != "nmos")
        fail(tk[2], "unsupported model type '" + tk[2].text + "'");
      std::string key = to_lower(tk[1].text);
      if (circuit_.models.count(key)) fail(tk[1], "duplicate model '" + tk[1].text + "'");
      MosfetModelCard card;
      bool has_kp = false, has_vt0 = false;
      card.lambda = card.cox = card.cgdo = 0.0;
      for (std::size_t i = 3; i < tk.size(); ++i) {
        auto kv = keyval(tk[i]);
        if (!kv) fail(tk[i], "unexpected token '" + tk[i].text + "'");
        double v = value(tk[i], kv->second);
        if (kv->first == "kp") { card.kp = v; has_kp = true; }
        else if (kv->first == "vt0") { card.vt0 = v; has_vt0 = true; }
        else if (kv->first == "lambda") card.lambda = v;
        else if (kv->first == "cox") card.cox = v;
        else if (kv->first == "cgdo") card.cgdo = v;
        else fail(tk[i], "unknown model parameter '" + kv->first + "'");
        if (kv->first == "kp" ? !(v > 0.0) : (kv->first != "vt0" && v < 0.0))
          fail(tk[i], "model parameter " + kv->first + " out of range");
      }
      if (!has_kp) fail_after(tk.back(), "missing KP=");
      if (!has_vt0) fail_after(tk.back(), "missing VT0=");
      circuit_.models.emplace(key, card);
    } else if (name == ".port") {
      need(l, 2, "port number");
      need(l, 4, "port nodes");
      Port p;
      p.number = positive_int(tk[1], tk[1].text, "port number");
      for (std::size_t i = 2; i <= 3; ++i)
        if (tk[i].text.find('=') != std::string::npos || tk[i].text == "(" || tk[i].text == ")")
          fail(tk[i], "expected node name, got '" + tk[i].text + "'");
      p.plus_node = tk[2].text;
      p.minus_node = tk[3].text;
      for (std::size_t i = 4; i < tk.size(); ++i) {
        auto kv = keyval(tk[i]);
        if (!kv || kv->first != "z0") fail(tk[i], "unexpected token '" + tk[i].text + "'");
        p.z0 = positive(tk[i], kv->second, "Z0");
      }
      for (const auto& q : circuit_.ports)
        if (q.number == p.number) fail(tk[1], "duplicate port " + tk[1].text);
      circuit_.ports.push_back(p);
    } else if (name == ".supply") {
      need(l, 2, "source id");
      if (tk.size() > 2) fail(tk[2], "unexpected token '" + tk[2].text + "'");
      supply_refs_.push_back(tk[1]);
      circuit_.supplies.push_back(tk[1].text);
    } else {
      fail(tk[0], "unknown directive '" + tk[0].text + "'");
    }
  }

  void resolve() {
    for (const auto& [tok, model] : model_refs_)
      if (!circuit_.model(model)) fail(tok, "undeclared model '" + model + "'");
    for (const auto& tok : supply_refs_) {
      const Component* c = circuit_.find(tok.text);
      if (!c || !c->is<VSource>())
        fail(tok, "supply '" + tok.text + "' is not a declared voltage source");
    }
    std::sort(circuit_.ports.begin(), circuit_.ports.end(),
              [](const Port& a, const Port& b) { return a.number < b.number; });
  }

  Circuit circuit_;
  std::vector<LogicalLine> lines_;
  std::set<std::string> ids_;
  std::vector<std::pair<Token, std::string>> model_refs_;
  std::vector<Token> supply_refs_;
  bool ended_ = false;
};

}  // namespace detail

// Parses netlist text. When `name` is empty the circuit takes its name from
// a leading comment line.
inline Circuit parse_netlist(std::string_view text, std::string name = {}) {
  return detail::NetlistParser(text, std::move(name)).run();
}

inline Circuit parse_netlist_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open netlist '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_netlist(ss.str());
}

// ---------------------------------------------------------------------------
// Serializer

inline std::string to_netlist(const Circuit& c) {
  std::ostringstream out;
  out << "* " << c.name << "\n";
  for (const auto& [name, m] : c.models) {
    out << ".model " << name << " NMOS KP=" << format_exact(m.kp)
        << " VT0=" << format_exact(m.vt0)
        << " LAMBDA=" << format_exact(m.lambda)
        << " COX=" << format_exact(m.cox)
        << " CGDO=" << format_exact(m.cgdo) << "\n";
  }
  for (const auto& comp : c.components) {
    out << comp.id;
    for (const auto& t : comp.terminals) out << ' ' << t;
    std::visit(
        [&](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Resistor>) {
            out << ' ' << format_exact(k.resistance);
          } else if constexpr (std::is_same_v<T, Capacitor>) {
            out << ' ' << format_exact(k.capacitance);
          } else if constexpr (std::is_same_v<T, Inductor>) {
            out << ' ' << format_exact(k.inductance);
            if (k.q) out << " Q=" << format_exact(*k.q);
            out << " FREF=" << format_exact(k.f_ref);
          } else if constexpr (std::is_same_v<T, Mosfet>) {
            out << ' ' << k.model << " W=" << format_exact(k.width)
                << " L=" << format_exact(k.length) << " NF=" << k.fingers
                << " M=" << k.multiplier;
          } else if constexpr (std::is_same_v<T, VSource>) {
            out << " DC " << format_exact(k.dc) << " AC "
                << format_exact(k.ac_mag);
            if (k.sine)
              out << " SIN(" << format_exact(k.sine->amplitude) << ' '
                  << format_exact(k.sine->freq) << ' '
                  << format_exact(k.sine->phase) << ')';
          } else {
            out << " POLY(";
            for (std::size_t i = 0; i < k.coefficients.size(); ++i)
              out << (i ? " " : "") << format_exact(k.coefficients[i]);
            out << ')';
          }
        },
        comp.kind);
    out << "\n";
  }
  for (const auto& p : c.ports)
    out << ".port " << p.number << ' ' << p.plus_node << ' ' << p.minus_node
        << " Z0=" << format_exact(p.z0) << "\n";
  for (const auto& s : c.supplies) out << ".supply " << s << "\n";
  out << ".end\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity { warning, error };

struct Diagnostic {
  Severity severity = Severity::error;
  std::string element;  // component id, node or port the finding concerns
  std::string message;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

// Empty iff every structural invariant holds and every node has a DC path to
// ground through resistors, inductors, voltage-defined branches or MOSFET
// channels.
inline std::vector<Diagnostic> validate_circuit(const Circuit& c) {
  std::vector<Diagnostic> diags;
  auto error = [&](std::string element, std::string msg) {
    diags.push_back({Severity::error, std::move(element), std::move(msg)});
  };

  std::set<std::string> referenced;
  std::set<std::string> ids;
  for (const auto& comp : c.components) {
    if (!ids.insert(detail::to_lower(comp.id)).second)
      error(comp.id, "duplicate component id");
    if (comp.terminals.size() != terminal_count(comp.kind))
      error(comp.id, "wrong number of terminals");
    for (const auto& t : comp.terminals) {
      referenced.insert(t);
      if (!c.nodes.count(t)) error(comp.id, "terminal references undeclared node '" + t + "'");
    }
    std::visit(
        [&](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Resistor>) {
            if (!(k.resistance > 0.0)) error(comp.id, "resistance must be positive");
          } else if constexpr (std::is_same_v<T, Capacitor>) {
            if (!(k.capacitance > 0.0)) error(comp.id, "capacitance must be positive");
          } else if constexpr (std::is_same_v<T, Inductor>) {
            if (!(k.inductance > 0.0)) error(comp.id, "inductance must be positive");
            if (k.q && !(*k.q > 0.0)) error(comp.id, "Q must be positive");
            if (!(k.f_ref > 0.0)) error(comp.id, "FREF must be positive");
          } else if constexpr (std::is_same_v<T, Mosfet>) {
            if (!(k.width > 0.0) || !(k.length > 0.0))
              error(comp.id, "MOSFET W and L must be positive");
            if (k.fingers < 1 || k.multiplier < 1)
              error(comp.id, "NF and M must be >= 1");
            if (!c.model(k.model)) error(comp.id, "undeclared model '" + k.model + "'");
          } else if constexpr (std::is_same_v<T, PolyVcvs>) {
            if (k.coefficients.empty()) error(comp.id, "POLY needs coefficients");
          }
        },
        comp.kind);
  }

  if (!c.nodes.count(std::string(kGround)) ||
      !referenced.count(std::string(kGround)))
    error(std::string(kGround), "no ground: node 0 is not referenced");

  for (std::size_t i = 0; i < c.ports.size(); ++i) {
    const Port& p = c.ports[i];
    const std::string tag = "port " + std::to_string(p.number);
    if (p.number != static_cast<int>(i) + 1)
      error(tag, "port numbers must be consecutive from 1");
    if (!(p.z0 > 0.0)) error(tag, "Z0 must be positive");
    if (p.plus_node == p.minus_node) error(tag, "port nodes must differ");
    for (const auto& n : {p.plus_node, p.minus_node})
      if (!c.nodes.count(n)) error(tag, "port references undeclared node '" + n + "'");
  }

  for (const auto& s : c.supplies) {
    const Component* comp = c.find(s);
    if (!comp || !comp->is<VSource>()) error(s, "supply is not a voltage source");
  }

  // DC connectivity.
  std::vector<std::string> names(c.nodes.begin(), c.nodes.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = i;
  detail::DisjointSets sets(names.size());
  auto join = [&](const std::string& a, const std::string& b) {
    auto ia = index.find(a), ib = index.find(b);
    if (ia != index.end() && ib != index.end()) sets.unite(ia->second, ib->second);
  };
  for (const auto& comp : c.components) {
    const auto& t = comp.terminals;
    if (t.size() != terminal_count(comp.kind)) continue;
    if (comp.is<Capacitor>()) continue;
    if (comp.is<Mosfet>()) join(t[0], t[2]);
    else join(t[0], t[1]);
  }
  auto ground = index.find(std::string(kGround));
  if (ground != index.end()) {
    for (const auto& n : names)
      if (sets.find(index[n]) != sets.find(ground->second))
        error(n, "floating DC node: no DC path to ground");
  }
  return diags;
}

}  // namespace rfpa
