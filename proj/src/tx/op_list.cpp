#include "pmtx/tx/op_list.hpp"

#include <array>
#include <charconv>
#include <sstream>

namespace pmtx::tx {

namespace {

std::uint64_t number(const std::string& tok) {
  std::string_view s = tok;
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    s.remove_prefix(2);
    base = 16;
  }
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) throw UsageError("bad number '" + tok + "'");
  return v;
}

unsigned reg(const std::string& tok) {
  if (tok.size() < 2 || tok[0] != 'r') throw UsageError("bad register '" + tok + "'");
  const auto n = number(tok.substr(1));
  if (n >= kRegisters) throw UsageError("register out of range '" + tok + "'");
  return static_cast<unsigned>(n);
}

std::string hex(std::uint64_t v) {
  std::ostringstream o;
  o << "0x" << std::hex << v;
  return o.str();
}

}  // namespace

OpList parse_ops(const std::string& text) {
  OpList out;
  std::stringstream all(text);
  std::string piece;
  while (std::getline(all, piece, ';')) {
    std::istringstream in(piece);
    std::vector<std::string> tok;
    for (std::string t; in >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string& k = tok[0];
    auto need = [&](std::size_t n) {
      if (tok.size() != n) throw UsageError("op '" + k + "' takes " + std::to_string(n - 1) + " operands");
    };
    Op op;
    if (k == "r") {
      need(3);
      op = Op::read(number(tok[1]), reg(tok[2]));
    } else if (k == "w") {
      need(3);
      op = Op::write(number(tok[1]), number(tok[2]));
    } else if (k == "wr") {
      need(4);
      op = Op::write_reg(number(tok[1]), reg(tok[2]), number(tok[3]));
    } else if (k == "wif") {
      need(5);
      op = Op::write_if(number(tok[1]), number(tok[2]), reg(tok[3]), number(tok[4]));
    } else {
      throw UsageError("unknown op '" + k + "'");
    }
    if (op.addr % kWordSize != 0) throw UsageError("unaligned address " + hex(op.addr));
    out.push_back(op);
  }
  return out;
}

std::string format_ops(const OpList& ops) {
  std::string s;
  for (const Op& op : ops) {
    if (!s.empty()) s += "; ";
    const std::string r = "r" + std::to_string(op.reg);
    switch (op.kind) {
      case Op::Kind::Read: s += "r " + hex(op.addr) + " " + r; break;
      case Op::Kind::Write: s += "w " + hex(op.addr) + " " + hex(op.value); break;
      case Op::Kind::WriteReg: s += "wr " + hex(op.addr) + " " + r + " " + hex(op.value); break;
      case Op::Kind::WriteIf:
        s += "wif " + hex(op.addr) + " " + hex(op.value) + " " + r + " " + hex(op.equals);
        break;
    }
  }
  return s;
}

TxBody compile(OpList ops) {
  return [ops = std::move(ops)](TxContext& ctx) {
    std::array<std::uint64_t, kRegisters> regs{};
    for (const Op& op : ops) {
      switch (op.kind) {
        case Op::Kind::Read: regs[op.reg] = ctx.read(op.addr); break;
        case Op::Kind::Write: ctx.write(op.addr, op.value); break;
        case Op::Kind::WriteReg: ctx.write(op.addr, regs[op.reg] + op.value); break;
        case Op::Kind::WriteIf:
          if (regs[op.reg] == op.equals) ctx.write(op.addr, op.value);
          break;
      }
    }
  };
}

}  // namespace pmtx::tx
