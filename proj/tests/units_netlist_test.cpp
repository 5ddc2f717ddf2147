#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "rfpa/builtins.hpp"
#include "rfpa/netlist.hpp"

using namespace rfpa;

namespace {

bool has_diag(const std::vector<Diagnostic>& d, const std::string& needle) {
  for (const auto& x : d)
    if (x.message.find(needle) != std::string::npos) return true;
  return false;
}

const Mosfet* mosfet(const Circuit& c, const std::string& id) {
  const Component* comp = c.find(id);
  return comp && comp->is<Mosfet>() ? &comp->as<Mosfet>() : nullptr;
}

double value_of(const Circuit& c, const std::string& id) {
  const Component* comp = c.find(id);
  if (!comp) return -1.0;
  if (comp->is<Resistor>()) return comp->as<Resistor>().resistance;
  if (comp->is<Capacitor>()) return comp->as<Capacitor>().capacitance;
  if (comp->is<Inductor>()) return comp->as<Inductor>().inductance;
  return -1.0;
}

}  // namespace

TEST(ParseValue, SuffixesAreExactPowersOfTen) {
  EXPECT_EQ(*parse_value("22n"), 22e-9);
  EXPECT_EQ(*parse_value("200f"), 200e-15);
  EXPECT_EQ(*parse_value("10p"), 10e-12);
  EXPECT_EQ(*parse_value("4.8u"), 4.8e-6);
  EXPECT_EQ(*parse_value("8.5m"), 8.5e-3);
  EXPECT_EQ(*parse_value("13k"), 13e3);
  EXPECT_EQ(*parse_value("13K"), 13e3);
  EXPECT_EQ(*parse_value("1Meg"), 1e6);
  EXPECT_EQ(*parse_value("1MEG"), 1e6);
  EXPECT_EQ(*parse_value("2.4G"), 2.4e9);
  EXPECT_EQ(*parse_value("14.5"), 14.5);
  EXPECT_EQ(*parse_value("-20"), -20.0);
  EXPECT_EQ(*parse_value("1e-3k"), 1.0);
  EXPECT_EQ(*parse_value(".5"), 0.5);
}

TEST(ParseValue, RejectsJunk) {
  for (const char* bad : {"", "k", "1x", "22nH", "1.2.3", "--1", "1e", "e5", "1 k"})
    EXPECT_FALSE(parse_value(bad).has_value()) << bad;
}

TEST(ParseValue, FormatExactRoundTrips) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mant(-10.0, 10.0);
  std::uniform_int_distribution<int> ex(-18, 12);
  for (int i = 0; i < 1000; ++i) {
    const double v = mant(rng) * std::pow(10.0, ex(rng));
    EXPECT_EQ(*parse_value(format_exact(v)), v);
  }
}

TEST(Parser, ResistorLine) {
  const Circuit c = parse_netlist("R1 n1 0 14.5\n");
  ASSERT_EQ(c.components.size(), 1u);
  EXPECT_EQ(c.components[0].id, "R1");
  EXPECT_EQ(c.components[0].as<Resistor>().resistance, 14.5);
  EXPECT_EQ(c.components[0].terminals, (std::vector<std::string>{"n1", "0"}));
  EXPECT_TRUE(c.nodes.count("n1") && c.nodes.count("0"));
}

TEST(Parser, InductorWithQAndFref) {
  const Circuit c = parse_netlist("L1 n2 n3 22n Q=20 FREF=2.4G\n");
  const auto& l = c.components[0].as<Inductor>();
  EXPECT_EQ(l.inductance, 22e-9);
  EXPECT_EQ(*l.q, 20.0);
  EXPECT_EQ(l.f_ref, 2.4e9);
}

TEST(Parser, InductorDefaultsToLosslessAtDefaultFref) {
  const auto& l = parse_netlist("L1 a 0 1n\n").components[0].as<Inductor>();
  EXPECT_FALSE(l.q.has_value());
  EXPECT_EQ(l.f_ref, 2.4e9);
  EXPECT_EQ(l.series_resistance(), 0.0);
}

TEST(Parser, MosfetFingersAndMultiplier) {
  const Circuit c = parse_netlist(
      ".model nch NMOS KP=200u VT0=0.5 LAMBDA=0.1 COX=8.5m CGDO=0.3n\n"
      "M2 d g 0 nch W=4.8u L=1u NF=16 M=12\n");
  const auto& m = c.components[0].as<Mosfet>();
  EXPECT_EQ(m.fingers, 16);
  EXPECT_EQ(m.multiplier, 12);
  EXPECT_NEAR(m.effective_width(), 921.6e-6, 1e-18);
  const auto* card = c.model("NCH");
  ASSERT_NE(card, nullptr);
  EXPECT_EQ(card->kp, 200e-6);
  EXPECT_EQ(card->cox, 8.5e-3);
  EXPECT_EQ(card->cgdo, 0.3e-9);
}

TEST(Parser, VoltageSourceForms) {
  const Circuit c = parse_netlist(
      "V1 a 0 DC 1.8 AC 1 SIN(0.5 2.4G 0.25)\n"
      "V2 b 0 3.3\n"
      "v3 c 0 sin(1 1k)\n");
  const auto& v1 = c.components[0].as<VSource>();
  EXPECT_EQ(v1.dc, 1.8);
  EXPECT_EQ(v1.ac_mag, 1.0);
  ASSERT_TRUE(v1.sine.has_value());
  EXPECT_EQ(v1.sine->amplitude, 0.5);
  EXPECT_EQ(v1.sine->freq, 2.4e9);
  EXPECT_EQ(v1.sine->phase, 0.25);
  EXPECT_EQ(c.components[1].as<VSource>().dc, 3.3);
  EXPECT_EQ(c.components[2].as<VSource>().sine->phase, 0.0);
}

TEST(Parser, CommentsContinuationsAndName) {
  const Circuit c = parse_netlist(
      "* my amp\n"
      "R1 a\n"
      "+ 0 1k\n"
      "* trailing comment\n"
      "\n"
      "L1 a b 1n\n"
      "+ Q=10\n"
      ".end\n"
      "R9 junk after end 1\n");
  EXPECT_EQ(c.name, "my amp");
  ASSERT_EQ(c.components.size(), 2u);
  EXPECT_EQ(c.components[0].as<Resistor>().resistance, 1e3);
  EXPECT_EQ(*c.components[1].as<Inductor>().q, 10.0);
}

TEST(Parser, ExplicitNameWins) {
  EXPECT_EQ(parse_netlist("* title\nR1 a 0 1\n", "given").name, "given");
}

TEST(Parser, PortsAndSupplies) {
  const Circuit c = parse_netlist(
      "V1 vdd 0 DC 1.8\nR1 a 0 50\nR2 b 0 50\n"
      ".port 2 b 0\n.port 1 a 0 Z0=75\n.supply V1\n");
  ASSERT_EQ(c.ports.size(), 2u);
  EXPECT_EQ(c.ports[0].number, 1);
  EXPECT_EQ(c.ports[0].z0, 75.0);
  EXPECT_EQ(c.ports[1].z0, 50.0);
  EXPECT_EQ(c.supplies, std::vector<std::string>{"V1"});
}

TEST(Parser, PolyVcvs) {
  const Circuit c = parse_netlist("E1 o 0 i 0 POLY(0 10 0 -1)\n");
  const auto& e = c.components[0].as<PolyVcvs>();
  EXPECT_EQ(e.coefficients, (std::vector<double>{0, 10, 0, -1}));
  EXPECT_EQ(e.value(2.0), 12.0);
  EXPECT_EQ(e.derivative(2.0), -2.0);
}

TEST(ParserErrors, DuplicateIdIsCaseInsensitive) {
  EXPECT_THROW(parse_netlist("R1 n1 0 14.5\nR1 n2 0 1k\n"), ParseError);
  EXPECT_THROW(parse_netlist("R1 n1 0 14.5\nr1 n2 0 1k\n"), ParseError);
  try {
    parse_netlist("R1 n1 0 14.5\nR1 n2 0 1k\n");
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 1);
  }
}

TEST(ParserErrors, UnknownKindAndDirective) {
  EXPECT_THROW(parse_netlist("X1 a 0 1\n"), ParseError);
  EXPECT_THROW(parse_netlist(".tran 1n 1u\n"), ParseError);
}

TEST(ParserErrors, UndeclaredModel) {
  try {
    parse_netlist("M1 d g 0 nope W=1u L=1u\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_NE(std::string(e.what()).find("undeclared model"), std::string::npos);
  }
}

TEST(ParserErrors, ReportsColumnOfBadToken) {
  try {
    parse_netlist("R1 a 0 1k\nC1 a 0 1x\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 8);
  }
}

TEST(ParserErrors, SupplyMustBeVoltageSource) {
  EXPECT_THROW(parse_netlist("R1 a 0 1\n.supply R1\n"), ParseError);
  EXPECT_THROW(parse_netlist("R1 a 0 1\n.supply V9\n"), ParseError);
}

TEST(ParserErrors, NonPositiveValues) {
  EXPECT_THROW(parse_netlist("R1 a 0 0\n"), ParseError);
  EXPECT_THROW(parse_netlist("C1 a 0 -1p\n"), ParseError);
  EXPECT_THROW(parse_netlist("L1 a 0 1n Q=0\n"), ParseError);
  EXPECT_THROW(parse_netlist(".model n NMOS KP=1u VT0=0.5\nM1 d g 0 n W=1u L=1u NF=0\n"),
               ParseError);
}

// Deleting any one required field of a valid line must fail with a
// diagnostic that names that line.
TEST(ParserErrors, EveryRequiredFieldRemovalIsRejected) {
  const std::string model = ".model nch NMOS KP=200u VT0=0.5 LAMBDA=0.1\n";
  struct Case {
    std::string line;
    std::vector<int> required;  // token positions that may not be removed
  };
  const std::vector<Case> cases = {
      {"R1 a 0 14.5", {1, 2, 3}},
      {"C1 a 0 200f", {1, 2, 3}},
      {"L1 a 0 22n Q=20", {1, 2, 3}},
      {"M2 d g 0 nch W=4.8u L=1u NF=16 M=12", {1, 2, 3, 4, 5, 6}},
      {".port 1 a 0 Z0=50", {1, 2, 3}},
      {".model m2 NMOS KP=200u VT0=0.5", {1, 2, 3, 4}},
      {"E1 o 0 i 0 POLY(1 2)", {1, 2, 3, 4, 5}},
  };
  for (const auto& tc : cases) {
    std::vector<std::string> tok;
    std::istringstream ss(tc.line);
    for (std::string t; ss >> t;) tok.push_back(t);
    for (int drop : tc.required) {
      std::string mutated;
      for (int i = 0; i < static_cast<int>(tok.size()); ++i)
        if (i != drop) mutated += (mutated.empty() ? "" : " ") + tok[static_cast<std::size_t>(i)];
      const std::string text = model + "R0 a 0 1\n" + mutated + "\n";
      try {
        const Circuit c = parse_netlist(text);
        ADD_FAILURE() << "accepted '" << mutated << "'";
      } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3) << mutated;
      }
    }
  }
}

TEST(Serializer, BuiltinRoundTrip) {
  for (const auto& name : builtin_names()) {
    const Circuit c = builtin_circuit(name);
    EXPECT_EQ(parse_netlist(to_netlist(c)), c) << name;
  }
}

TEST(Serializer, RandomCircuitsRoundTrip) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pos = [&] { return std::pow(10.0, -15.0 + 18.0 * u(rng)) * (1.0 + u(rng)); };
  for (int trial = 0; trial < 200; ++trial) {
    Circuit c;
    c.name = "rand" + std::to_string(trial);
    c.models["nch"] = MosfetModelCard{pos(), 0.1 + u(rng), u(rng), pos(), pos()};
    const int n = 1 + static_cast<int>(u(rng) * 12);
    auto node = [&] {
      const int k = static_cast<int>(u(rng) * 6);
      return k == 0 ? std::string("0") : "n" + std::to_string(k);
    };
    for (int i = 0; i < n; ++i) {
      const int kind = static_cast<int>(u(rng) * 6);
      const std::string a = node(), b = node();
      const std::string id = std::to_string(i);
      if (kind == 0) c.add({"R" + id, Resistor{pos()}, {a, b}});
      else if (kind == 1) c.add({"C" + id, Capacitor{pos()}, {a, b}});
      else if (kind == 2) {
        Inductor l{pos(), std::nullopt, 1e6 + u(rng) * 1e10};
        if (u(rng) < 0.7) l.q = 1.0 + 50.0 * u(rng);
        c.add({"L" + id, l, {a, b}});
      } else if (kind == 3) {
        c.add({"M" + id,
               Mosfet{"nch", pos(), pos(), 1 + static_cast<int>(u(rng) * 20),
                      1 + static_cast<int>(u(rng) * 20)},
               {a, b, node()}});
      } else if (kind == 4) {
        VSource v{u(rng) * 5 - 2.5, u(rng), std::nullopt};
        if (u(rng) < 0.5) v.sine = Sine{u(rng), pos() * 1e12, u(rng) * 6};
        c.add({"V" + id, v, {a, b}});
        if (u(rng) < 0.5) c.supplies.push_back("V" + id);
      } else {
        c.add({"E" + id, PolyVcvs{{u(rng), -u(rng), pos()}}, {a, b, node(), node()}});
      }
    }
    if (u(rng) < 0.5) c.ports.push_back({1, "n1", "0", 10.0 + 100.0 * u(rng)});
    EXPECT_EQ(parse_netlist(to_netlist(c)), c) << to_netlist(c);
  }
}

TEST(Validate, BuiltinsAreClean) {
  for (const auto& name : builtin_names())
    EXPECT_TRUE(validate_circuit(builtin_circuit(name)).empty()) << name;
}

TEST(Validate, SeriesCapacitorsLeaveFloatingNode) {
  const Circuit c = parse_netlist("V1 a 0 DC 1\nR1 a b 1k\nC1 b x 1p\nC2 x 0 1p\n");
  const auto d = validate_circuit(c);
  EXPECT_TRUE(has_diag(d, "floating DC node"));
  bool names_x = false;
  for (const auto& x : d) names_x = names_x || x.element == "x";
  EXPECT_TRUE(names_x);
}

TEST(Validate, MissingGround) {
  const auto d = validate_circuit(parse_netlist("V1 a b DC 1\nR1 a b 1k\n"));
  EXPECT_TRUE(has_diag(d, "no ground"));
}

TEST(Validate, PortChecks) {
  Circuit c = parse_netlist("R1 a 0 50\nR2 b 0 50\n");
  c.ports = {{1, "a", "0", 50.0}, {3, "b", "0", 50.0}};
  EXPECT_TRUE(has_diag(validate_circuit(c), "consecutive"));
  c.ports = {{1, "a", "a", 50.0}};
  EXPECT_TRUE(has_diag(validate_circuit(c), "differ"));
  c.ports = {{1, "zz", "0", 50.0}};
  EXPECT_TRUE(has_diag(validate_circuit(c), "undeclared node"));
  c.ports = {{1, "a", "0", -5.0}};
  EXPECT_TRUE(has_diag(validate_circuit(c), "Z0"));
}

TEST(Validate, MosfetChannelIsADcPath) {
  const Circuit c = parse_netlist(
      ".model n NMOS KP=200u VT0=0.5\nV1 g 0 DC 1\nM1 d g 0 n W=1u L=1u\n");
  EXPECT_TRUE(validate_circuit(c).empty());
}

TEST(Builtins, DriverStageCarriesTableValues) {
  const Circuit c = builtin_circuit("driver_stage");
  EXPECT_EQ(value_of(c, "R1"), 14.5);
  EXPECT_EQ(value_of(c, "R3"), 13e3);
  EXPECT_EQ(value_of(c, "L1"), 22e-9);
  EXPECT_EQ(*c.find("L1")->as<Inductor>().q, 20.0);
  EXPECT_EQ(value_of(c, "L2"), 15e-9);
  EXPECT_EQ(*c.find("L2")->as<Inductor>().q, 20.0);
  EXPECT_EQ(value_of(c, "C1"), 200e-15);
  EXPECT_EQ(value_of(c, "C2"), 10e-12);
  const Mosfet* q2 = mosfet(c, "M2");
  ASSERT_NE(q2, nullptr);
  EXPECT_EQ(q2->width, 4.8e-6);
  EXPECT_EQ(q2->length, 1e-6);
  EXPECT_EQ(q2->fingers, 16);
  EXPECT_EQ(q2->multiplier, 12);
  const Mosfet* q3 = mosfet(c, "M3");
  ASSERT_NE(q3, nullptr);
  EXPECT_EQ(q3->width, 0.3e-6);
  EXPECT_EQ(q3->length, 1e-6);
}

TEST(Builtins, OutputStageCarriesTableValues) {
  const Circuit c = builtin_circuit("output_stage");
  EXPECT_EQ(value_of(c, "R2"), 22.2);
  EXPECT_EQ(value_of(c, "R5"), 7e3);
  EXPECT_EQ(value_of(c, "L3"), 15e-9);
  EXPECT_EQ(value_of(c, "L4"), 400e-9);
  EXPECT_EQ(value_of(c, "C6"), 800e-15);
  EXPECT_EQ(value_of(c, "C7"), 20e-12);
  const Mosfet* q4 = mosfet(c, "M4");
  ASSERT_NE(q4, nullptr);
  EXPECT_EQ(q4->width, 4.8e-6);
  EXPECT_EQ(q4->length, 3e-6);
  EXPECT_EQ(q4->fingers, 16);
  EXPECT_EQ(q4->multiplier, 12);
  const Mosfet* q5 = mosfet(c, "M5");
  ASSERT_NE(q5, nullptr);
  EXPECT_EQ(q5->width, 0.3e-6);
  EXPECT_EQ(q5->length, 1.2e-6);
}

TEST(Builtins, TwoStagePaHasBothStagesAndTwoPorts) {
  const Circuit c = builtin_circuit("two_stage_pa");
  EXPECT_TRUE(validate_circuit(c).empty());
  ASSERT_EQ(c.ports.size(), 2u);
  EXPECT_EQ(c.ports[0].number, 1);
  EXPECT_EQ(c.ports[1].number, 2);
  EXPECT_EQ(c.ports[1].z0, 50.0);
  for (const char* id : {"R1", "R2", "R3", "R5", "L1", "L2", "L3", "L4", "C1", "C2", "C6", "C7",
                         "M2", "M3", "M4", "M5"})
    EXPECT_NE(c.find(id), nullptr) << id;
  EXPECT_EQ(c.supplies, std::vector<std::string>{"VDD"});
}

TEST(Builtins, UnknownNameThrows) {
  EXPECT_THROW(builtin_circuit("three_stage_pa"), InvalidArgument);
}
