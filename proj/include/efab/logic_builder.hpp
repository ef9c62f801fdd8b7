// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "efab/netlist.hpp"

namespace efab {

struct Literal {
  NetId net = kNoNet;
  bool positive = true;
};

/// Netlist construction helper that constant-folds LUTs, drops inputs a function does not
/// depend on, and shares structurally identical LUTs.
class LogicBuilder {
 public:
  LogicBuilder();

  const Netlist& netlist() const { return nl_; }
  Netlist take() { return std::move(nl_); }

  NetId zero() const { return zero_; }
  NetId one() const { return one_; }
  NetId constant(bool v) const { return v ? one_ : zero_; }
  /// 0 or 1 if `net` is a constant net, -1 otherwise.
  int const_value(NetId net) const;

  NetId new_net(std::string name = {}) { return nl_.add_net(std::move(name)); }
  CellId add_cell(Cell cell) { return nl_.add_cell(std::move(cell)); }

  NetId input(const std::string& name);
  std::vector<NetId> input_bus(const std::string& name, int width);
  void output(const std::string& name, NetId net);
  void output_bus(const std::string& name, std::span<const NetId> nets);

  /// Register with D = `d` driving the pre-declared net `q`.
  void dff(NetId d, NetId q, const std::string& name = {});
  NetId dff(NetId d, const std::string& name = {});

  /// Generic LUT over up to four inputs; bit p of `truth` is the output for input pattern p.
  NetId lut(std::span<const NetId> inputs, std::uint16_t truth);
  NetId lut(std::span<const NetId> inputs, const std::function<bool(unsigned)>& fn);

  NetId and_all(std::span<const Literal> lits);
  NetId or_all(std::span<const NetId> nets);
  NetId xor2(NetId a, NetId b);

 private:
  Netlist nl_;
  NetId zero_ = kNoNet;
  NetId one_ = kNoNet;
  std::map<std::tuple<std::uint16_t, NetId, NetId, NetId, NetId>, NetId> shared_;
};

}  // namespace efab
