// SPDX-License-Identifier: Apache-2.0
#include "efab/prbs.hpp"

#include "efab/error.hpp"

namespace efab {
namespace {

std::uint32_t register_mask(PrbsPolynomial p) {
  if (p.order < 2 || p.order > 32 || p.tap < 1 || p.tap >= p.order) {
    throw Error(Errc::InvalidArgument, "unsupported PRBS polynomial");
  }
  return p.order == 32 ? 0xFFFFFFFFu : (1u << p.order) - 1u;
}

std::uint32_t feedback(std::uint32_t s, PrbsPolynomial p) {
  return ((s >> (p.order - 1)) ^ (s >> (p.tap - 1))) & 1u;
}

}  // namespace

PrbsGenerator::PrbsGenerator(std::uint32_t seed, PrbsPolynomial poly)
    : poly_(poly), mask_(register_mask(poly)), state_(seed & mask_) {
  if (state_ == 0) {
    throw Error(Errc::ZeroState, "PRBS register seeded with zero");
  }
}

std::uint8_t PrbsGenerator::next_bit() {
  const std::uint32_t b = feedback(state_, poly_);
  state_ = ((state_ << 1) | b) & mask_;
  return static_cast<std::uint8_t>(b);
}

std::uint8_t PrbsGenerator::next_byte() {
  std::uint8_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v = static_cast<std::uint8_t>(v | (next_bit() << i));
  }
  return v;
}

PrbsBits prbs_next(std::uint32_t state, std::size_t nbits, PrbsPolynomial poly) {
  PrbsGenerator g(state, poly);
  PrbsBits out;
  out.bits.reserve(nbits);
  for (std::size_t i = 0; i < nbits; ++i) {
    out.bits.push_back(g.next_bit());
  }
  out.state = g.state();
  return out;
}

PrbsChecker::PrbsChecker(PrbsPolynomial poly) : poly_(poly), mask_(register_mask(poly)) {}

void PrbsChecker::push(std::uint8_t bit) {
  bit &= 1u;
  if (!locked()) {
    state_ = ((state_ << 1) | bit) & mask_;
    if (++seen_ == poly_.order && state_ == 0) {
      throw Error(Errc::ZeroState, "PRBS checker locked onto an all-zero window");
    }
    return;
  }
  const std::uint32_t expect = feedback(state_, poly_);
  ++checked_;
  errors_ += expect != bit;
  state_ = ((state_ << 1) | expect) & mask_;
}

void PrbsChecker::push_byte(std::uint8_t byte) {
  for (int i = 0; i < 8; ++i) {
    push(static_cast<std::uint8_t>(byte >> i));
  }
}

std::uint64_t prbs_check(std::span<const std::uint8_t> bits, PrbsPolynomial poly) {
  PrbsChecker c(poly);
  for (std::uint8_t b : bits) {
    c.push(b);
  }
  return c.errors();
}

}  // namespace efab
