#include "pmtx/pmem/byte_image.hpp"

#include <algorithm>
#include <cstdio>

namespace pmtx::pmem {

namespace {

bool all_zero(const Bytes& b) {
  return std::all_of(b.begin(), b.end(), [](std::uint8_t c) { return c == 0; });
}

}  // namespace

void ByteImage::read(Addr addr, std::span<std::uint8_t> out) const {
  std::size_t done = 0;
  while (done < out.size()) {
    const Addr a = addr + done;
    const Addr base = line_base(a, line_size_);
    const std::size_t off = a - base;
    const std::size_t n = std::min(out.size() - done, line_size_ - off);
    auto it = lines_.find(base);
    if (it == lines_.end()) {
      std::fill_n(out.begin() + done, n, 0);
    } else {
      std::copy_n(it->second.begin() + off, n, out.begin() + done);
    }
    done += n;
  }
}

Bytes ByteImage::read(Addr addr, std::size_t len) const {
  Bytes out(len);
  read(addr, out);
  return out;
}

std::uint64_t ByteImage::read_u64(Addr addr) const {
  std::uint8_t buf[8];
  read(addr, buf);
  return load_le64(buf);
}

Bytes& ByteImage::line_mut(Addr base) {
  auto [it, inserted] = lines_.try_emplace(base);
  if (inserted) it->second.assign(line_size_, 0);
  return it->second;
}

void ByteImage::write(Addr addr, std::span<const std::uint8_t> data) {
  std::size_t done = 0;
  while (done < data.size()) {
    const Addr a = addr + done;
    const Addr base = line_base(a, line_size_);
    const std::size_t off = a - base;
    const std::size_t n = std::min(data.size() - done, line_size_ - off);
    Bytes& l = line_mut(base);
    std::copy_n(data.begin() + done, n, l.begin() + off);
    done += n;
  }
}

void ByteImage::write_u64(Addr addr, std::uint64_t v) {
  std::uint8_t buf[8];
  store_le64(buf, v);
  write(addr, buf);
}

Bytes ByteImage::line(Addr base) const {
  auto it = lines_.find(base);
  if (it == lines_.end()) return Bytes(line_size_, 0);
  return it->second;
}

void ByteImage::set_line(Addr base, std::span<const std::uint8_t> data) {
  line_mut(base).assign(data.begin(), data.end());
}

ByteImage ByteImage::slice(Addr lo, Addr hi) const {
  ByteImage out(line_size_);
  for (auto it = lines_.lower_bound(line_base(lo, line_size_)); it != lines_.end() && it->first < hi; ++it) {
    out.lines_.insert(*it);
  }
  return out;
}

std::uint64_t ByteImage::digest(Addr lo, Addr hi) const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint8_t c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (auto it = lines_.lower_bound(line_base(lo, line_size_)); it != lines_.end() && it->first < hi; ++it) {
    if (all_zero(it->second)) continue;
    for (int i = 0; i < 8; ++i) mix(static_cast<std::uint8_t>(it->first >> (8 * i)));
    for (auto c : it->second) mix(c);
  }
  return h;
}

std::string ByteImage::digest_hex(Addr lo, Addr hi) const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest(lo, hi)));
  return buf;
}

bool ByteImage::equal_range(const ByteImage& other, Addr lo, Addr hi) const {
  const Addr first = line_base(lo, line_size_);
  auto check = [&](const ByteImage& a, const ByteImage& b) {
    for (auto it = a.lines_.lower_bound(first); it != a.lines_.end() && it->first < hi; ++it) {
      if (it->second != b.line(it->first)) return false;
    }
    return true;
  };
  return check(*this, other) && check(other, *this);
}

bool operator==(const ByteImage& a, const ByteImage& b) {
  return a.line_size_ == b.line_size_ && a.equal_range(b, 0, ~Addr{0});
}

}  // namespace pmtx::pmem
