#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdnnsim/core.hpp"

namespace vdnnsim {

using AllocId = std::uint64_t;

struct PoolStats {
  Bytes current_bytes = 0;
  Bytes high_water_bytes = 0;
  std::size_t live_count = 0;
  Bytes largest_free_extent = 0;
};

struct PoolTraceRow {
  TimeNs time = 0;
  char op = 'a';  // 'a' alloc, 'f' free
  std::string tag;
  Bytes offset = 0;
  Bytes bytes = 0;
  Bytes current = 0;
  Bytes high_water = 0;
};

// Fixed-capacity suballocator with 512-byte alignment, an offset-ordered
// free list and immediate coalescing on free. Placement is size-segregated:
// requests above capacity/8 use best-fit (smallest adequate extent) filled
// bottom-up, so same-class holes are recycled exactly; smaller and pinned
// requests fill the highest fitting extent top-down. Cycling large tensors
// and small long-lived buffers therefore keep to opposite ends of the pool
// instead of shredding each other's address range. Single-owner; all
// mutations come from the simulator's event loop with non-decreasing
// timestamps, which lets the pool keep an exact time-weighted usage integral.
class MemoryPool {
 public:
  static constexpr Bytes kAlignment = 512;

  explicit MemoryPool(Bytes capacity, bool keep_trace = false)
      : capacity_(capacity), keep_trace_(keep_trace) {
    if (capacity > 0) free_.emplace(0, capacity);
  }

  Bytes capacity() const { return capacity_; }

  // `pin_high` is for allocations that live until teardown (weights, the
  // baseline's network-wide provisioning): they stack at the top of the pool
  // so the cycling transients keep a contiguous range below.
  std::optional<AllocId> try_alloc(Bytes bytes, std::string tag, TimeNs time = 0,
                                   bool pin_high = false) {
    if (bytes == 0) throw PoolUseError("zero-byte allocation");
    advance(time);
    const Bytes need = align_up(bytes, kAlignment);
    const bool high_end = pin_high || need <= capacity_ / 8;
    auto chosen = free_.end();
    if (high_end) {
      // Highest fitting extent, placed at its top.
      for (auto it = free_.begin(); it != free_.end(); ++it) {
        if (it->second >= need) chosen = it;
      }
    } else {
      // Best fit (smallest adequate extent, lowest offset on ties), placed at
      // its bottom: recycles same-class holes exactly.
      for (auto it = free_.begin(); it != free_.end(); ++it) {
        if (it->second >= need && (chosen == free_.end() || it->second < chosen->second)) chosen = it;
      }
    }
    if (chosen == free_.end()) return std::nullopt;
    const Bytes ext_offset = chosen->first;
    const Bytes remain = chosen->second - need;
    const Bytes offset = high_end ? ext_offset + remain : ext_offset;
    free_.erase(chosen);
    if (remain > 0) free_.emplace(high_end ? ext_offset : ext_offset + need, remain);
    const AllocId id = next_id_++;
    live_.emplace(id, Extent{offset, need, bytes, tag});
    current_ += need;
    if (current_ > high_water_) high_water_ = current_;
    if (keep_trace_) trace_.push_back({time, 'a', std::move(tag), offset, need, current_, high_water_});
    return id;
  }

  void free(AllocId id, TimeNs time = 0) {
    advance(time);
    auto it = live_.find(id);
    if (it == live_.end()) throw PoolUseError("free of unknown or already-freed allocation id");
    const Extent e = it->second;
    live_.erase(it);
    current_ -= e.length;
    insert_free(e.offset, e.length);
    if (keep_trace_) trace_.push_back({time, 'f', e.tag, e.offset, e.length, current_, high_water_});
  }

  PoolStats stats() const {
    PoolStats s;
    s.current_bytes = current_;
    s.high_water_bytes = high_water_;
    s.live_count = live_.size();
    for (const auto& [off, len] : free_) s.largest_free_extent = std::max(s.largest_free_extent, len);
    return s;
  }

  Bytes current_bytes() const { return current_; }
  Bytes high_water_bytes() const { return high_water_; }

  Bytes free_bytes_total() const {
    Bytes t = 0;
    for (const auto& [off, len] : free_) t += len;
    return t;
  }

  Bytes largest_free_extent() const { return stats().largest_free_extent; }

  // True when a failed request would have fit in total free bytes but no
  // single extent holds it: capacity failure vs. fragmentation failure.
  bool fragmented_for(Bytes bytes) const {
    const Bytes need = align_up(bytes, kAlignment);
    return need <= free_bytes_total() && need > largest_free_extent();
  }

  Bytes offset_of(AllocId id) const {
    auto it = live_.find(id);
    if (it == live_.end()) throw PoolUseError("offset_of: unknown allocation id");
    return it->second.offset;
  }

  Bytes requested_of(AllocId id) const {
    auto it = live_.find(id);
    if (it == live_.end()) throw PoolUseError("requested_of: unknown allocation id");
    return it->second.requested;
  }

  Bytes padding_bytes() const {
    Bytes p = 0;
    for (const auto& [id, e] : live_) p += e.length - e.requested;
    return p;
  }

  // Disjointness and conservation; throws on violation.
  void self_check() const {
    std::map<Bytes, std::pair<Bytes, bool>> spans;  // offset -> (len, is_live)
    for (const auto& [off, len] : free_) spans.emplace(off, std::make_pair(len, false));
    for (const auto& [id, e] : live_) {
      if (!spans.emplace(e.offset, std::make_pair(e.length, true)).second) {
        throw PoolUseError("pool self-check: duplicate extent offset");
      }
    }
    Bytes cursor = 0, total = 0;
    bool prev_free = false;
    bool first = true;
    for (const auto& [off, span] : spans) {
      const auto& [len, is_live] = span;
      if (off < cursor) throw PoolUseError("pool self-check: overlapping extents");
      if (off != cursor) throw PoolUseError("pool self-check: gap in extent coverage");
      if (!first && prev_free && !is_live) {
        throw PoolUseError("pool self-check: adjacent free extents not coalesced");
      }
      prev_free = !is_live;
      cursor = off + len;
      total += len;
      first = false;
    }
    if (total != capacity_) throw PoolUseError("pool self-check: live + free != capacity");
  }

  const std::vector<PoolTraceRow>& trace() const { return trace_; }

  // Time-weighted usage integral up to `end`; exact in byte-nanoseconds.
  unsigned __int128 usage_integral(TimeNs end) {
    advance(end);
    return integral_;
  }

 private:
  struct Extent {
    Bytes offset = 0;
    Bytes length = 0;    // aligned
    Bytes requested = 0;
    std::string tag;
  };

  void advance(TimeNs time) {
    if (time < last_time_) throw PoolUseError("pool timestamps must be non-decreasing");
    integral_ += static_cast<unsigned __int128>(current_) *
                 static_cast<unsigned __int128>(time - last_time_);
    last_time_ = time;
  }

  void insert_free(Bytes offset, Bytes length) {
    auto next = free_.lower_bound(offset);
    if (next != free_.begin()) {
      auto prev = std::prev(next);
      if (prev->first + prev->second == offset) {
        offset = prev->first;
        length += prev->second;
        free_.erase(prev);
      }
    }
    if (next != free_.end() && offset + length == next->first) {
      length += next->second;
      free_.erase(next);
    }
    free_.emplace(offset, length);
  }

  Bytes capacity_;
  bool keep_trace_;
  std::map<Bytes, Bytes> free_;  // offset -> length, coalesced
  std::map<AllocId, Extent> live_;
  Bytes current_ = 0;
  Bytes high_water_ = 0;
  AllocId next_id_ = 1;
  TimeNs last_time_ = 0;
  unsigned __int128 integral_ = 0;
  std::vector<PoolTraceRow> trace_;
};

// Host-side pinned memory, modeled as unbounded; tracked for reporting the
// CPU-resident share of a run's allocations.
class HostLedger {
 public:
  void add(LayerId buffer_owner, Bytes bytes, TimeNs time) {
    advance(time);
    pinned_[buffer_owner] += bytes;
    current_ += bytes;
    if (current_ > peak_) peak_ = current_;
  }

  void remove(LayerId buffer_owner, TimeNs time) {
    advance(time);
    auto it = pinned_.find(buffer_owner);
    if (it == pinned_.end()) throw PoolUseError("host ledger: unknown buffer");
    current_ -= it->second;
    pinned_.erase(it);
  }

  Bytes current_bytes() const { return current_; }
  Bytes peak_bytes() const { return peak_; }
  const std::map<LayerId, Bytes>& pinned() const { return pinned_; }

 private:
  void advance(TimeNs time) {
    if (time < last_time_) throw PoolUseError("host ledger timestamps must be non-decreasing");
    last_time_ = time;
  }

  std::map<LayerId, Bytes> pinned_;
  Bytes current_ = 0;
  Bytes peak_ = 0;
  TimeNs last_time_ = 0;
};

}  // namespace vdnnsim
