#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vdnnsim/core.hpp"
#include "vdnnsim/net_graph.hpp"

namespace vdnnsim {

enum class Stream { Compute, Memory };
enum class EventKind { Fwd, Bwd, Offload, Prefetch, Alloc, Release, Sync };

inline const char* to_string(Stream s) { return s == Stream::Compute ? "compute" : "memory"; }

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Fwd: return "FWD";
    case EventKind::Bwd: return "BWD";
    case EventKind::Offload: return "OFFLOAD";
    case EventKind::Prefetch: return "PREFETCH";
    case EventKind::Alloc: return "ALLOC";
    case EventKind::Release: return "RELEASE";
    case EventKind::Sync: return "SYNC";
  }
  return "?";
}

struct StreamEvent {
  Stream stream = Stream::Compute;
  EventKind kind = EventKind::Fwd;
  LayerId layer = kNoLayer;
  TimeNs start = 0;
  TimeNs end = 0;
  Bytes bytes = 0;
  // Bookkeeping identity for ALLOC/RELEASE rows (JSON only, not in the
  // six-column timeline CSV): which buffer, and where the pool placed it.
  std::string tag;
  LayerId buffer = kNoLayer;
  Bytes offset = 0;
};

enum class Phase { Setup, Forward, Backward };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Setup: return "setup";
    case Phase::Forward: return "forward";
    case Phase::Backward: return "backward";
  }
  return "?";
}

struct OomInfo {
  LayerId layer = kNoLayer;
  Phase phase = Phase::Setup;
  bool fragmented = false;
  Bytes requested = 0;
  std::string tag;
};

struct RunReport {
  std::vector<StreamEvent> events;
  Bytes max_mem_bytes = 0;
  Bytes avg_mem_bytes = 0;  // time-weighted
  Bytes offload_traffic_bytes = 0;
  Bytes prefetch_traffic_bytes = 0;
  Bytes host_peak_bytes = 0;
  TimeNs stall_fwd_offload_ns = 0;
  TimeNs stall_bwd_prefetch_ns = 0;
  TimeNs total_ns = 0;
  bool pass = false;
  std::optional<OomInfo> oom;
  // Reuse distance of layer n's input X: time between the end of FWD(n) and
  // the start of BWD(n); -1 where undefined.
  std::vector<TimeNs> reuse_distance_ns;
  double interference_bound = 0.0;

  TimeNs stall_ns() const { return stall_fwd_offload_ns + stall_bwd_prefetch_ns; }

  std::string verdict() const {
    if (pass) return "PASS";
    if (!oom) return "FAIL";
    std::string v = "OOM(layer=" + std::to_string(oom->layer) + ", phase=" + to_string(oom->phase);
    if (oom->fragmented) v += ", fragmented";
    v += ")";
    return v;
  }
};

// Residency of a feature buffer on the device/host.
enum class Residency {
  Unallocated,
  Device,
  Offloading,   // device-resident, transfer to host in flight
  Host,         // released from the pool, pinned host copy only
  Prefetching,  // device extent reserved, transfer from host in flight
  Released,
};

// Mutable simulation state, exposed so the prefetch-layer search (and tests)
// can inspect residency directly.
struct SimState {
  TimeNs compute_clock = 0;
  TimeNs memory_clock = 0;
  std::vector<Residency> feature;                  // by feature-buffer owner layer
  std::vector<std::vector<LayerId>> offloaded_by;  // offloading layer -> buffer owners
  std::vector<int> fwd_remaining;                  // per feature buffer
  std::vector<int> bwd_remaining;                  // per feature buffer
  std::vector<int> grad_remaining;                 // per gradient buffer

  bool has_pending_offload(LayerId layer) const {
    for (LayerId o : offloaded_by[static_cast<std::size_t>(layer)]) {
      if (feature[static_cast<std::size_t>(o)] == Residency::Host) return true;
    }
    return false;
  }
};

}  // namespace vdnnsim
