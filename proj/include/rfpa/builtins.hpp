#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>

#include "rfpa/netlist.hpp"

namespace rfpa {

namespace detail {

inline constexpr std::string_view kDefaultCard =
    ".model nch NMOS KP=200u VT0=0.5 LAMBDA=0.1 COX=8.5m CGDO=0.3n\n";

// Driver stage on its own: 50 ohm in, output taken after the C2 coupling cap.
// RT gives the output node a DC return.
inline constexpr std::string_view kDriverStage = R"(* driver_stage
VDD vdd 0 DC 1.8
* M3 mirror sets the M2 gate bias through R3
RB1 vdd b1 69.8k
M3 b1 b1 0 nch W=0.3u L=1u
R3 b1 g1 13k
* input match
LIN in 0 9.79n Q=20
C1 in x1 200f
L1 x1 x2 22n Q=20
R1 x2 g1 14.5
M2 d1 g1 0 nch W=4.8u L=1u NF=16 M=12
L2 vdd d1 15n Q=20
C2 d1 out 10p
RT out 0 10k
.port 1 in 0 Z0=50
.port 2 out 0 Z0=50
.supply VDD
.end
)";

// Output stage on its own. CIN/RIN block and return the input port so the
// M5 mirror alone sets the M4 gate bias through R5 and the L4 choke.
inline constexpr std::string_view kOutputStage = R"(* output_stage
VDD vdd 0 DC 1.8
RB2 vdd b2 20k
M5 b2 b2 0 nch W=0.3u L=1.2u
R5 b2 b5 7k
L4 b5 g2 400n Q=20
CIN in x4 10p
RIN in 0 1k
R2 x4 g2 22.2
M4 d2 g2 0 nch W=4.8u L=3u NF=16 M=12
L3 vdd d2 15n Q=20
C6 d2 0 800f
C7 d2 out 20p
LOUT out 0 2.6n Q=20
.port 1 in 0 Z0=50
.port 2 out 0 Z0=50
.supply VDD
.end
)";

// Driver and output stage in cascade. Both gates are biased from diode
// mirrors (M3, M5); the interstage is a series LG2 with an RC bias-side
// bypass, and R2 damps the L4 choke feeding it.
inline constexpr std::string_view kTwoStagePa = R"(* two_stage_pa
VDD vdd 0 DC 1.8
* driver bias
RB1 vdd b1 39k
M3 b1 b1 0 nch W=0.3u L=1u
R3 b1 g1 13k
* input match
LIN in 0 17n Q=20
C1 in x1 200f
L1 x1 x2 22n Q=20
LSER x2 x3 0.55n Q=20
R1 x3 g1 14.5
* driver
M2 d1 g1 0 nch W=4.8u L=1u NF=16 M=12
L2 vdd d1 15n Q=20
RD1 vdd d1 2.05k
C2 d1 g2 10p
* output bias
RB2 vdd b2 37.2k
M5 b2 b2 0 nch W=0.3u L=1.2u
R5 b2 b5 7k
L4 b5 x5 400n Q=20
R2 x5 xg2 22.2
* interstage
LG2 g2 xg2 315p Q=20
CG2 xg2 0 100p
RG2 g2 xg2 422
* output stage
M4 d2 g2 0 nch W=4.8u L=3u NF=16 M=12
L3 vdd d2 15n Q=20
C6 d2 0 800f
C7 d2 out 20p
LOUT out 0 3.15n Q=20
.port 1 in 0 Z0=50
.port 2 out 0 Z0=50
.supply VDD
.end
)";

// 1.8 V across two 1k resistors.
inline constexpr std::string_view kDivider = R"(* divider
V1 in 0 DC 1.8
R1 in mid 1k
R2 mid 0 1k
.end
)";

// Diode-connected device with W/L = 100 fed through 1k.
inline constexpr std::string_view kDiodeMosfet = R"(* diode_mosfet
V1 vdd 0 DC 1.8
R1 vdd d 1k
M1 d d 0 nch W=100u L=1u
.end
)";

// First-order low-pass, pole at 1/(2 pi 1k 1n) = 159.155 kHz.
inline constexpr std::string_view kRcLowpass = R"(* rc_lowpass
V1 in 0 DC 0 AC 1
R1 in out 1k
C1 out 0 1n
.end
)";

// Memoryless cubic y = 10 x - x^3 behind a matched 50 ohm input.
inline constexpr std::string_view kCubicP1db = R"(* cubic_p1db
RIN in 0 50
E1 out 0 in 0 POLY(0 10 0 -1)
.port 1 in 0 Z0=50
.port 2 out 0 Z0=50
.end
)";

inline constexpr std::array<std::pair<std::string_view, std::string_view>, 7> kBuiltins{{
    {"driver_stage", kDriverStage},
    {"output_stage", kOutputStage},
    {"two_stage_pa", kTwoStagePa},
    {"divider", kDivider},
    {"diode_mosfet", kDiodeMosfet},
    {"rc_lowpass", kRcLowpass},
    {"cubic_p1db", kCubicP1db},
}};

inline bool needs_default_card(std::string_view name) {
  return name == "driver_stage" || name == "output_stage" || name == "two_stage_pa" ||
         name == "diode_mosfet";
}

}  // namespace detail

inline std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : detail::kBuiltins) names.emplace_back(name);
  return names;
}

// Netlist text of a bundled circuit, model card included.
inline std::string builtin_netlist(std::string_view name) {
  for (const auto& [n, text] : detail::kBuiltins) {
    if (n != name) continue;
    if (!detail::needs_default_card(name)) return std::string(text);
    // Keep the title comment first so it still names the circuit.
    const auto eol = text.find('\n') + 1;
    return std::string(text.substr(0, eol)) + std::string(detail::kDefaultCard) +
           std::string(text.substr(eol));
  }
  throw InvalidArgument("unknown builtin circuit '" + std::string(name) + "'");
}

inline Circuit builtin_circuit(std::string_view name) {
  return parse_netlist(builtin_netlist(name));
}

}  // namespace rfpa
