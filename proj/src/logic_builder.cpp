// SPDX-License-Identifier: Apache-2.0
#include "efab/logic_builder.hpp"

#include <algorithm>
#include <numeric>

#include "efab/error.hpp"

namespace efab {

LogicBuilder::LogicBuilder() {
  zero_ = nl_.add_net("const0");
  one_ = nl_.add_net("const1");
  nl_.add_cell(Cell{CellKind::Const, "const0", 0, false, {}, {zero_}});
  nl_.add_cell(Cell{CellKind::Const, "const1", 0, true, {}, {one_}});
}

int LogicBuilder::const_value(NetId net) const {
  if (net == zero_) {
    return 0;
  }
  if (net == one_) {
    return 1;
  }
  return -1;
}

NetId LogicBuilder::input(const std::string& name) {
  const NetId n = nl_.add_net(name);
  nl_.add_cell(Cell{CellKind::InPort, name, 0, false, {}, {n}});
  return n;
}

std::vector<NetId> LogicBuilder::input_bus(const std::string& name, int width) {
  std::vector<NetId> bus;
  for (int i = 0; i < width; ++i) {
    bus.push_back(input(name + "[" + std::to_string(i) + "]"));
  }
  return bus;
}

void LogicBuilder::output(const std::string& name, NetId net) {
  nl_.add_cell(Cell{CellKind::OutPort, name, 0, false, {net}, {}});
}

void LogicBuilder::output_bus(const std::string& name, std::span<const NetId> nets) {
  for (std::size_t i = 0; i < nets.size(); ++i) {
    output(name + "[" + std::to_string(i) + "]", nets[i]);
  }
}

void LogicBuilder::dff(NetId d, NetId q, const std::string& name) {
  nl_.add_cell(Cell{CellKind::Dff, name, 0, false, {d}, {q}});
}

NetId LogicBuilder::dff(NetId d, const std::string& name) {
  const NetId q = nl_.add_net(name.empty() ? std::string{} : name + "_q");
  dff(d, q, name);
  return q;
}

NetId LogicBuilder::lut(std::span<const NetId> inputs, const std::function<bool(unsigned)>& fn) {
  if (inputs.size() > 4) {
    throw Error(Errc::InvalidArgument, "LUT with more than four inputs");
  }
  std::uint16_t truth = 0;
  for (unsigned p = 0; p < (1U << inputs.size()); ++p) {
    if (fn(p)) {
      truth |= static_cast<std::uint16_t>(1U << p);
    }
  }
  return lut(inputs, truth);
}

NetId LogicBuilder::lut(std::span<const NetId> inputs_in, std::uint16_t truth_in) {
  std::vector<NetId> ins(inputs_in.begin(), inputs_in.end());
  std::vector<bool> table(1U << ins.size());
  for (unsigned p = 0; p < table.size(); ++p) {
    table[p] = (truth_in >> p) & 1U;
  }

  // Removes input i, keeping the rows where input i equals `pick(pattern)`.
  auto restrict = [&](std::size_t i, const std::function<bool(unsigned)>& keep) {
    std::vector<bool> next(table.size() / 2);
    for (unsigned p = 0; p < table.size(); ++p) {
      if (!keep(p)) {
        continue;
      }
      const unsigned low = p & ((1U << i) - 1);
      const unsigned high = (p >> (i + 1)) << i;
      next[low | high] = table[p];
    }
    table = std::move(next);
    ins.erase(ins.begin() + static_cast<std::ptrdiff_t>(i));
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < ins.size() && !changed; ++i) {
      const int cv = const_value(ins[i]);
      if (cv >= 0) {
        restrict(i, [i, cv](unsigned p) { return static_cast<int>((p >> i) & 1U) == cv; });
        changed = true;
        break;
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (ins[j] == ins[i]) {
          restrict(i, [i, j](unsigned p) { return ((p >> i) & 1U) == ((p >> j) & 1U); });
          changed = true;
          break;
        }
      }
      if (changed) {
        break;
      }
      bool depends = false;
      for (unsigned p = 0; p < table.size(); ++p) {
        if (table[p] != table[p ^ (1U << i)]) {
          depends = true;
          break;
        }
      }
      if (!depends) {
        restrict(i, [i](unsigned p) { return ((p >> i) & 1U) == 0; });
        changed = true;
      }
    }
  }

  if (ins.empty()) {
    return constant(table[0]);
  }
  if (ins.size() == 1 && !table[0] && table[1]) {
    return ins[0];
  }

  // Canonical pin order for sharing.
  std::vector<std::size_t> perm(ins.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return ins[a] < ins[b]; });
  NetId pins[4] = {zero_, zero_, zero_, zero_};
  for (std::size_t k = 0; k < perm.size(); ++k) {
    pins[k] = ins[perm[k]];
  }
  std::uint16_t truth = 0;
  for (unsigned p = 0; p < 16; ++p) {
    unsigned orig = 0;
    for (std::size_t k = 0; k < perm.size(); ++k) {
      orig |= ((p >> k) & 1U) << perm[k];
    }
    if (table[orig]) {
      truth |= static_cast<std::uint16_t>(1U << p);
    }
  }
  const auto key = std::make_tuple(truth, pins[0], pins[1], pins[2], pins[3]);
  if (const auto it = shared_.find(key); it != shared_.end()) {
    return it->second;
  }
  const NetId out = nl_.add_net();
  nl_.add_cell(Cell{CellKind::Lut4, {}, truth, false, {pins[0], pins[1], pins[2], pins[3]}, {out}});
  shared_.emplace(key, out);
  return out;
}

NetId LogicBuilder::and_all(std::span<const Literal> lits_in) {
  std::vector<Literal> lits(lits_in.begin(), lits_in.end());
  if (lits.empty()) {
    return one_;
  }
  while (lits.size() > 1) {
    std::vector<Literal> next;
    for (std::size_t i = 0; i < lits.size(); i += 4) {
      const std::size_t n = std::min<std::size_t>(4, lits.size() - i);
      std::vector<NetId> ins;
      unsigned want = 0;
      for (std::size_t k = 0; k < n; ++k) {
        ins.push_back(lits[i + k].net);
        want |= (lits[i + k].positive ? 1U : 0U) << k;
      }
      next.push_back({lut(ins, [want](unsigned p) { return p == want; }), true});
    }
    lits = std::move(next);
  }
  if (lits[0].positive) {
    return lits[0].net;
  }
  const NetId n = lits[0].net;
  return lut(std::span(&n, 1), std::uint16_t{0b01});
}

NetId LogicBuilder::or_all(std::span<const NetId> nets_in) {
  std::vector<NetId> nets(nets_in.begin(), nets_in.end());
  if (nets.empty()) {
    return zero_;
  }
  while (nets.size() > 1) {
    std::vector<NetId> next;
    for (std::size_t i = 0; i < nets.size(); i += 4) {
      const std::size_t n = std::min<std::size_t>(4, nets.size() - i);
      next.push_back(lut(std::span(nets).subspan(i, n), [](unsigned p) { return p != 0; }));
    }
    nets = std::move(next);
  }
  return nets[0];
}

NetId LogicBuilder::xor2(NetId a, NetId b) {
  const NetId ins[] = {a, b};
  return lut(ins, std::uint16_t{0b0110});
}

}  // namespace efab
