#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmtx/common.hpp"
#include "pmtx/tx_context.hpp"

namespace pmtx::tx {

inline constexpr unsigned kRegisters = 8;

/// One step of a straight-line transaction over eight registers.
///
///   r    ADDR REG            reg = [ADDR]
///   w    ADDR VALUE          [ADDR] = VALUE
///   wr   ADDR REG ADD        [ADDR] = reg + ADD
///   wif  ADDR VALUE REG EQ   if reg == EQ: [ADDR] = VALUE
struct Op {
  enum class Kind { Read, Write, WriteReg, WriteIf };
  Kind kind = Kind::Read;
  Addr addr = 0;
  std::uint64_t value = 0;  // Write/WriteIf: value stored; WriteReg: addend
  unsigned reg = 0;
  std::uint64_t equals = 0;  // WriteIf guard

  static Op read(Addr a, unsigned reg) { return {Kind::Read, a, 0, reg, 0}; }
  static Op write(Addr a, std::uint64_t v) { return {Kind::Write, a, v, 0, 0}; }
  static Op write_reg(Addr a, unsigned reg, std::uint64_t add) { return {Kind::WriteReg, a, add, reg, 0}; }
  static Op write_if(Addr a, std::uint64_t v, unsigned reg, std::uint64_t eq) { return {Kind::WriteIf, a, v, reg, eq}; }

  friend bool operator==(const Op&, const Op&) = default;
};

using OpList = std::vector<Op>;

/// Ops separated by ';'. Numbers accept 0x prefixes; registers are r0..r7.
OpList parse_ops(const std::string& text);
std::string format_ops(const OpList& ops);

/// The body re-runs from fresh registers on every attempt.
TxBody compile(OpList ops);

}  // namespace pmtx::tx
