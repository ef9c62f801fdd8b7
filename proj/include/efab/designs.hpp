// SPDX-License-Identifier: Apache-2.0
//
// Built-in firmware expressed directly as netlists.
#pragma once

#include "efab/cad_flow.hpp"
#include "efab/netlist.hpp"

namespace efab {

/// Free-running binary counter; outputs count[0..width-1], registered.
Netlist counter_design(int width = 16);

/// Stream word carried by the loopback stage: 32 data bits, last flag, 3-bit byte count.
inline constexpr int kStreamDataBits = 32;
inline constexpr int kStreamWordBits = kStreamDataBits + 1 + 3;

/// Single register stage with ready/valid backpressure.
/// Inputs: s_data[0..35], s_valid, m_ready. Outputs: m_data[0..35], m_valid, s_ready.
Netlist loopback_design();

/// One DSP slice accumulating a[0..7] * b[0..7] every cycle; outputs acc[0..19].
Netlist mac_design();

/// Fixed WEST_IO assignments used by the harnesses: count[i] -> west bit i.
PinMap counter_pins(int width = 16);
/// s_data[i] / m_data[i] -> west bit i, then s_valid / m_valid at 36, m_ready / s_ready at 37.
PinMap loopback_pins();
inline constexpr int kLoopbackValidBit = kStreamWordBits;
inline constexpr int kLoopbackReadyBit = kStreamWordBits + 1;

}  // namespace efab
