#include "pmtx/pmem/persist_tracker.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>

namespace pmtx::pmem {

PersistTracker::PersistTracker(PersistenceDomain domain, ByteImage initial)
    : domain_(domain), initial_(std::move(initial)) {}

void PersistTracker::apply(const PersistEvent& e) {
  if (domain_ == PersistenceDomain::TransientCaches) {
    apply_transient(e);
  } else {
    apply_persistent(e);
  }
}

PersistTracker::LineHistory& PersistTracker::history(Addr base) {
  auto [it, inserted] = lines_.try_emplace(base);
  if (inserted) it->second.versions.push_back({0, initial_.line(base)});
  return it->second;
}

void PersistTracker::apply_transient(const PersistEvent& e) {
  const std::size_t ls = line_size();
  switch (e.kind) {
    case EventKind::Store:
    case EventKind::NtStore: {
      const Addr addr = *e.addr;
      std::size_t done = 0;
      std::uint32_t frags = 0;
      while (done < e.value.size()) {
        const Addr a = addr + done;
        const Addr base = line_base(a, ls);
        const std::size_t off = a - base;
        const std::size_t n = std::min(e.value.size() - done, ls - off);
        LineHistory& h = history(base);
        Bytes next = h.versions.back().value;
        std::copy_n(e.value.begin() + done, n, next.begin() + off);
        h.versions.push_back({e.seq, std::move(next)});
        if (e.kind == EventKind::NtStore) pending_[e.thread].emplace_back(base, h.versions.size() - 1);
        done += n;
        ++frags;
      }
      fragments_[e.seq] = frags;
      break;
    }
    case EventKind::Clwb: {
      const Addr base = line_base(*e.addr, ls);
      LineHistory& h = history(base);
      pending_[e.thread].emplace_back(base, h.versions.size() - 1);
      break;
    }
    case EventKind::Sfence: {
      auto it = pending_.find(e.thread);
      if (it == pending_.end()) break;
      for (const auto& [base, idx] : it->second) {
        LineHistory& h = lines_.at(base);
        h.floor = std::max(h.floor, idx);
      }
      it->second.clear();
      break;
    }
    case EventKind::Drain:
    case EventKind::Crash:
      break;
  }
}

void PersistTracker::apply_persistent(const PersistEvent& e) {
  switch (e.kind) {
    case EventKind::Store:
    case EventKind::NtStore: {
      PcWindow& w = windows_[e.thread];
      pc_stores_.push_back({e.seq, e.thread, *e.addr, e.value});
      w.stores.push_back(pc_stores_.size() - 1);
      const bool extends = e.group != 0 && !w.unit_group.empty() && w.unit_group.back() == e.group &&
                           w.unit_end.size() > w.guaranteed_units;
      if (extends) {
        w.unit_end.back() = w.stores.size();
      } else {
        w.unit_end.push_back(w.stores.size());
        w.unit_group.push_back(e.group);
      }
      break;
    }
    case EventKind::Sfence:
    case EventKind::Drain: {
      PcWindow& w = windows_[e.thread];
      w.guaranteed_units = w.unit_end.size();
      break;
    }
    case EventKind::Clwb:
    case EventKind::Crash:
      break;
  }
}

std::vector<Addr> PersistTracker::open_lines() const {
  std::vector<Addr> out;
  for (const auto& [base, h] : lines_) {
    if (h.floor + 1 < h.versions.size()) out.push_back(base);
  }
  return out;
}

std::vector<ThreadId> PersistTracker::open_threads() const {
  std::vector<ThreadId> out;
  for (const auto& [t, w] : windows_) {
    if (w.unit_end.size() > w.guaranteed_units) out.push_back(t);
  }
  return out;
}

std::vector<std::uint32_t> PersistTracker::radix() const {
  std::vector<std::uint32_t> r;
  if (domain_ == PersistenceDomain::TransientCaches) {
    for (Addr base : open_lines()) {
      const LineHistory& h = lines_.at(base);
      r.push_back(static_cast<std::uint32_t>(h.versions.size() - h.floor));
    }
  } else {
    for (ThreadId t : open_threads()) {
      const PcWindow& w = windows_.at(t);
      r.push_back(static_cast<std::uint32_t>(w.unit_end.size() - w.guaranteed_units + 1));
    }
  }
  return r;
}

std::uint64_t PersistTracker::state_count() const {
  std::uint64_t n = 1;
  for (std::uint32_t r : radix()) {
    if (n > std::numeric_limits<std::uint64_t>::max() / r) return std::numeric_limits<std::uint64_t>::max();
    n *= r;
  }
  return n;
}

CrashState PersistTracker::state(std::span<const std::uint32_t> choice) const {
  const auto r = radix();
  if (choice.size() != r.size()) throw UsageError("crash-state choice has wrong arity");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (choice[i] >= r[i]) throw UsageError("crash-state choice out of range");
  }
  CrashState s{initial_, {}, {choice.begin(), choice.end()}};
  if (domain_ == PersistenceDomain::TransientCaches) {
    const auto open = open_lines();
    std::size_t k = 0;
    for (const auto& [base, h] : lines_) {
      std::size_t idx = h.floor;
      if (k < open.size() && open[k] == base) idx += choice[k++];
      s.persisted.set_line(base, h.versions[idx].value);
    }
  } else {
    std::vector<bool> keep(pc_stores_.size(), false);
    const auto open = open_threads();
    std::size_t k = 0;
    for (const auto& [t, w] : windows_) {
      std::size_t units = w.guaranteed_units;
      if (k < open.size() && open[k] == t) units += choice[k++];
      const std::size_t n = units == 0 ? 0 : w.unit_end[units - 1];
      for (std::size_t i = 0; i < n; ++i) keep[w.stores[i]] = true;
    }
    for (std::size_t i = 0; i < pc_stores_.size(); ++i) {
      if (keep[i]) s.persisted.write(pc_stores_[i].addr, pc_stores_[i].value);
    }
  }
  fill_witness(s);
  return s;
}

void PersistTracker::fill_witness(CrashState& s) const {
  s.witness.clear();
  if (domain_ == PersistenceDomain::TransientCaches) {
    const auto open = open_lines();
    std::map<Seq, std::uint32_t> seen;
    std::size_t k = 0;
    for (const auto& [base, h] : lines_) {
      std::size_t idx = h.floor;
      if (k < open.size() && open[k] == base) idx += s.choice[k++];
      for (std::size_t v = 1; v <= idx; ++v) ++seen[h.versions[v].seq];
    }
    for (const auto& [seq, n] : seen) {
      if (n == fragments_.at(seq)) s.witness.push_back(seq);
    }
  } else {
    const auto open = open_threads();
    std::size_t k = 0;
    for (const auto& [t, w] : windows_) {
      std::size_t units = w.guaranteed_units;
      if (k < open.size() && open[k] == t) units += s.choice[k++];
      const std::size_t n = units == 0 ? 0 : w.unit_end[units - 1];
      for (std::size_t i = 0; i < n; ++i) s.witness.push_back(pc_stores_[w.stores[i]].seq);
    }
    std::sort(s.witness.begin(), s.witness.end());
  }
}

CrashState PersistTracker::minimal() const {
  std::vector<std::uint32_t> c(radix().size(), 0);
  return state(c);
}

CrashState PersistTracker::maximal() const {
  auto c = radix();
  for (auto& x : c) --x;
  return state(c);
}

std::vector<CrashState> PersistTracker::states(std::size_t max_states, std::uint64_t seed) const {
  const auto r = radix();
  std::vector<CrashState> out;
  if (max_states == 0) return out;
  const std::uint64_t total = state_count();
  if (total <= max_states) {
    std::vector<std::uint32_t> c(r.size(), 0);
    for (std::uint64_t n = 0; n < total; ++n) {
      out.push_back(state(c));
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (++c[i] < r[i]) break;
        c[i] = 0;
      }
    }
    return out;
  }
  std::set<std::vector<std::uint32_t>> picked;
  std::vector<std::uint32_t> lo(r.size(), 0);
  std::vector<std::uint32_t> hi = r;
  for (auto& x : hi) --x;
  picked.insert(lo);
  picked.insert(hi);
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> c(r.size());
  for (std::size_t attempts = 0; picked.size() < max_states && attempts < 64 * max_states; ++attempts) {
    for (std::size_t i = 0; i < r.size(); ++i) c[i] = static_cast<std::uint32_t>(rng() % r[i]);
    picked.insert(c);
  }
  out.push_back(state(lo));
  out.push_back(state(hi));
  for (const auto& p : picked) {
    if (p != lo && p != hi) out.push_back(state(p));
  }
  return out;
}

std::vector<Seq> PersistTracker::candidates() const {
  std::set<Seq> out;
  if (domain_ == PersistenceDomain::TransientCaches) {
    for (const auto& [base, h] : lines_) {
      for (std::size_t v = h.floor + 1; v < h.versions.size(); ++v) out.insert(h.versions[v].seq);
    }
  } else {
    for (const auto& [t, w] : windows_) {
      const std::size_t g = w.guaranteed_units == 0 ? 0 : w.unit_end[w.guaranteed_units - 1];
      for (std::size_t i = g; i < w.stores.size(); ++i) out.insert(pc_stores_[w.stores[i]].seq);
    }
  }
  return {out.begin(), out.end()};
}

bool PersistTracker::guaranteed(Seq s) const {
  const auto c = candidates();
  if (std::binary_search(c.begin(), c.end(), s)) return false;
  if (domain_ == PersistenceDomain::TransientCaches) return fragments_.count(s) != 0;
  return std::any_of(pc_stores_.begin(), pc_stores_.end(), [s](const PcStore& p) { return p.seq == s; });
}

Bytes PersistTracker::guaranteed_line(Addr base) const {
  if (domain_ == PersistenceDomain::TransientCaches) {
    auto it = lines_.find(base);
    if (it == lines_.end()) return initial_.line(base);
    return it->second.versions[it->second.floor].value;
  }
  ByteImage img(line_size());
  img.set_line(base, initial_.line(base));
  std::vector<bool> keep(pc_stores_.size(), false);
  for (const auto& [t, w] : windows_) {
    const std::size_t n = w.guaranteed_units == 0 ? 0 : w.unit_end[w.guaranteed_units - 1];
    for (std::size_t i = 0; i < n; ++i) keep[w.stores[i]] = true;
  }
  for (std::size_t i = 0; i < pc_stores_.size(); ++i) {
    if (keep[i]) img.write(pc_stores_[i].addr, pc_stores_[i].value);
  }
  return img.line(base);
}

bool PersistTracker::flush_pending(Addr base) const {
  if (domain_ == PersistenceDomain::PersistentCaches) return false;
  auto line = lines_.find(base);
  if (line == lines_.end()) return false;
  for (const auto& [t, list] : pending_) {
    for (const auto& [b, idx] : list) {
      if (b == base && idx > line->second.floor) return true;
    }
  }
  return false;
}

}  // namespace pmtx::pmem
