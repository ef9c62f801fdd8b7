// SPDX-License-Identifier: Apache-2.0
//
// Pseudo-random binary sequences for link testing.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace efab {

/// Fibonacci LFSR x^order + x^tap + 1.
struct PrbsPolynomial {
  int order = 31;
  int tap = 28;
};

inline constexpr PrbsPolynomial kPrbs31{31, 28};
inline constexpr PrbsPolynomial kPrbs7{7, 6};

class PrbsGenerator {
 public:
  /// Throws ZeroState if the seed has no bits set within the register width.
  explicit PrbsGenerator(std::uint32_t seed = 0x7FFFFFFF, PrbsPolynomial poly = kPrbs31);
  std::uint8_t next_bit();
  /// Eight bits, first generated bit in the least significant position.
  std::uint8_t next_byte();
  std::uint32_t state() const { return state_; }
  PrbsPolynomial polynomial() const { return poly_; }

 private:
  PrbsPolynomial poly_;
  std::uint32_t mask_;
  std::uint32_t state_;
};

struct PrbsBits {
  std::vector<std::uint8_t> bits;
  std::uint32_t state = 0;
};

PrbsBits prbs_next(std::uint32_t state, std::size_t nbits, PrbsPolynomial poly = kPrbs31);

/// Locks onto the first `order` received bits, then free-runs its own generator and counts
/// every disagreement, so each corrupted bit is counted exactly once.
class PrbsChecker {
 public:
  explicit PrbsChecker(PrbsPolynomial poly = kPrbs31);
  void push(std::uint8_t bit);
  void push_byte(std::uint8_t byte);
  bool locked() const { return seen_ >= poly_.order; }
  std::uint64_t errors() const { return errors_; }
  std::uint64_t checked() const { return checked_; }

 private:
  PrbsPolynomial poly_;
  std::uint32_t mask_;
  std::uint32_t state_ = 0;
  int seen_ = 0;
  std::uint64_t errors_ = 0;
  std::uint64_t checked_ = 0;
};

/// Error count after lock. Throws ZeroState if the lock window is all zeros.
std::uint64_t prbs_check(std::span<const std::uint8_t> bits, PrbsPolynomial poly = kPrbs31);

}  // namespace efab
