// SPDX-License-Identifier: Apache-2.0
#include "efab/designs.hpp"

#include <string>
#include <vector>

#include "efab/logic_builder.hpp"

namespace efab {

Netlist counter_design(int width) {
  LogicBuilder b;
  std::vector<NetId> q;
  for (int i = 0; i < width; ++i) {
    q.push_back(b.new_net("count_q" + std::to_string(i)));
  }
  for (int i = 0; i < width; ++i) {
    NetId next;
    if (i < 4) {
      // q_i toggles when every lower bit is set.
      std::vector<NetId> ins(q.begin(), q.begin() + i + 1);
      const unsigned lower = (1U << i) - 1;
      next = b.lut(ins, [i, lower](unsigned p) {
        const bool carry = (p & lower) == lower;
        return (((p >> i) & 1U) != 0) != carry;
      });
    } else {
      std::vector<Literal> lits;
      for (int k = 0; k < i; ++k) {
        lits.push_back({q[static_cast<std::size_t>(k)], true});
      }
      next = b.xor2(q[static_cast<std::size_t>(i)], b.and_all(lits));
    }
    b.dff(next, q[static_cast<std::size_t>(i)], "count_reg" + std::to_string(i));
  }
  b.output_bus("count", q);
  return b.take();
}

Netlist loopback_design() {
  LogicBuilder b;
  const auto s_data = b.input_bus("s_data", kStreamWordBits);
  const NetId s_valid = b.input("s_valid");
  const NetId m_ready = b.input("m_ready");

  const NetId valid_q = b.new_net("valid_q");
  std::vector<NetId> data_q;
  for (int i = 0; i < kStreamWordBits; ++i) {
    data_q.push_back(b.new_net("data_q" + std::to_string(i)));
  }

  // s_ready = !valid_q | m_ready
  const NetId ready_ins[] = {valid_q, m_ready};
  const NetId s_ready = b.lut(ready_ins, [](unsigned p) { return (p & 1U) == 0 || (p & 2U) != 0; });

  // Pattern bits: 0 valid_q, 1 m_ready, 2 new value, 3 held value.
  const auto load_or_hold = [](unsigned p) {
    const bool take = (p & 1U) == 0 || (p & 2U) != 0;
    return take ? (p & 4U) != 0 : (p & 8U) != 0;
  };
  const NetId valid_ins[] = {valid_q, m_ready, s_valid, valid_q};
  b.dff(b.lut(valid_ins, load_or_hold), valid_q, "valid_reg");
  for (int i = 0; i < kStreamWordBits; ++i) {
    const NetId ins[] = {valid_q, m_ready, s_data[static_cast<std::size_t>(i)],
                         data_q[static_cast<std::size_t>(i)]};
    b.dff(b.lut(ins, load_or_hold), data_q[static_cast<std::size_t>(i)],
          "data_reg" + std::to_string(i));
  }
  b.output_bus("m_data", data_q);
  b.output("m_valid", valid_q);
  b.output("s_ready", s_ready);
  return b.take();
}

Netlist mac_design() {
  LogicBuilder b;
  const auto a = b.input_bus("a", 8);
  const auto bb = b.input_bus("b", 8);
  std::vector<NetId> acc;
  for (int i = 0; i < 20; ++i) {
    acc.push_back(b.new_net("acc" + std::to_string(i)));
  }
  std::vector<NetId> ins(a.begin(), a.end());
  ins.insert(ins.end(), bb.begin(), bb.end());
  b.add_cell(Cell{CellKind::DspMac, "mac", 0, false, ins, acc});
  b.output_bus("acc", acc);
  return b.take();
}

PinMap counter_pins(int width) {
  PinMap pins;
  for (int i = 0; i < width; ++i) {
    pins["count[" + std::to_string(i) + "]"] = {IoSide::West, i};
  }
  return pins;
}

PinMap loopback_pins() {
  PinMap pins;
  for (int i = 0; i < kStreamWordBits; ++i) {
    pins["s_data[" + std::to_string(i) + "]"] = {IoSide::West, i};
    pins["m_data[" + std::to_string(i) + "]"] = {IoSide::West, i};
  }
  pins["s_valid"] = {IoSide::West, kLoopbackValidBit};
  pins["m_valid"] = {IoSide::West, kLoopbackValidBit};
  pins["m_ready"] = {IoSide::West, kLoopbackReadyBit};
  pins["s_ready"] = {IoSide::West, kLoopbackReadyBit};
  return pins;
}

}  // namespace efab
