#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vdnnsim/decision.hpp"
#include "vdnnsim/net_graph.hpp"
#include "vdnnsim/sim_types.hpp"

namespace vdnnsim {

struct Violation {
  std::string kind;
  std::string detail;
};

// Independent validator: re-walks a report's event log against its own
// derivation of the dataflow (alias resolution, operand sets, release rules)
// and an interval model of the pool. Kept deliberately separate from the
// simulator's planning code.
namespace replaydetail {

inline LayerId owner_of(const NetworkGraph& g, LayerId id) {
  LayerId cur = id;
  for (int guard = 0; guard < 1 << 20; ++guard) {
    const LayerDescriptor& l = g.layer(cur);
    if (l.kind != LayerKind::Actv) return cur;
    cur = l.inputs[0];
  }
  return cur;
}

// Feature buffers (by owner) a layer's forward step reads.
inline std::set<LayerId> fwd_reads(const NetworkGraph& g, LayerId id) {
  std::set<LayerId> r;
  for (LayerId q : g.layer(id).inputs) r.insert(owner_of(g, q));
  return r;
}

// Feature buffers a layer's backward step reads: CONV and FC use X, POOL uses
// X and its own Y, in-place ACTV uses the aliased map, LOSS reads nothing.
inline std::set<LayerId> bwd_reads(const NetworkGraph& g, LayerId id) {
  std::set<LayerId> r;
  switch (g.layer(id).kind) {
    case LayerKind::Conv:
    case LayerKind::Fc:
      return fwd_reads(g, id);
    case LayerKind::Pool:
      r = fwd_reads(g, id);
      r.insert(id);
      return r;
    case LayerKind::Actv:
      r.insert(owner_of(g, id));
      return r;
    case LayerKind::Input:
    case LayerKind::Loss:
      return r;
  }
  return r;
}

inline bool produces_gradient(const NetworkGraph& g, LayerId id) {
  const LayerDescriptor& l = g.layer(id);
  if (l.kind == LayerKind::Actv || l.kind == LayerKind::Input) return false;
  for (LayerId q : l.inputs) {
    if (g.layer(owner_of(g, q)).kind != LayerKind::Input) return true;
  }
  return false;
}

// Gradient buffers layer m's backward step consumes as its dY: the dX of
// every consumer reachable upward through in-place ACTV links.
inline void collect_grad_reads(const NetworkGraph& g, LayerId m, std::set<LayerId>& out) {
  for (LayerId c : g.consumers(m)) {
    if (g.layer(c).kind == LayerKind::Actv) {
      collect_grad_reads(g, c, out);
    } else if (produces_gradient(g, c)) {
      out.insert(c);
    }
  }
}

struct Interval {
  TimeNs start = 0;
  TimeNs end = -1;  // -1: still open
  Bytes offset = 0;
  Bytes bytes = 0;
};

}  // namespace replaydetail

inline std::vector<Violation> replay_check(const RunReport& report, const NetworkGraph& graph,
                                           const PolicyDecision& decision, Bytes capacity) {
  using replaydetail::Interval;
  std::vector<Violation> out;
  auto flag = [&out](std::string kind, std::string detail) {
    out.push_back({std::move(kind), std::move(detail)});
  };

  // -- Stream discipline: in-order, non-overlapping timed events.
  TimeNs last_end[2] = {0, 0};
  for (const StreamEvent& e : report.events) {
    if (e.end < e.start) flag("event-order", "event ends before it starts");
    if (e.kind == EventKind::Fwd || e.kind == EventKind::Bwd || e.kind == EventKind::Offload ||
        e.kind == EventKind::Prefetch) {
      const int s = e.stream == Stream::Compute ? 0 : 1;
      if (e.start < last_end[s]) {
        flag("stream-overlap", std::string(to_string(e.kind)) + " overlaps earlier work on its stream");
      }
      last_end[s] = std::max(last_end[s], e.end);
    }
  }

  // -- Pool extent model from ALLOC/RELEASE rows, in log order.
  struct OpenAlloc {
    Interval iv;
    std::string cls;
  };
  std::map<std::pair<std::string, LayerId>, std::vector<Interval>> history;
  std::map<std::pair<std::string, LayerId>, Interval> open;
  std::multimap<Bytes, Bytes> live_extents;  // offset -> end-offset
  Bytes live_total = 0, max_live = 0;
  auto normalize = [](const std::string& tag) {
    return (tag == "X" || tag == "Y") ? std::string("F") : tag;
  };
  unsigned __int128 integral = 0;
  TimeNs last_pool_time = 0;
  int g2_count = 0;
  for (const StreamEvent& e : report.events) {
    if (e.kind != EventKind::Alloc && e.kind != EventKind::Release) continue;
    if (e.start < last_pool_time) flag("pool-order", "pool operations out of time order");
    integral += static_cast<unsigned __int128>(live_total) *
                static_cast<unsigned __int128>(e.start - last_pool_time);
    last_pool_time = e.start;
    const auto key = std::make_pair(normalize(e.tag), e.buffer);
    if (e.kind == EventKind::Alloc) {
      const Bytes aligned = align_up(e.bytes, 512);
      if (e.offset + aligned > capacity) flag("capacity-breach", "allocation beyond pool capacity");
      for (const auto& [off, end] : live_extents) {
        if (e.offset < end && off < e.offset + aligned) {
          flag("pool-overlap", "live extents overlap at offset " + std::to_string(e.offset));
          break;
        }
      }
      live_extents.emplace(e.offset, e.offset + aligned);
      live_total += aligned;
      max_live = std::max(max_live, live_total);
      if (e.tag == "G2") {
        ++g2_count;
        continue;
      }
      if (open.contains(key)) {
        flag("double-alloc", "buffer allocated while already live: " + e.tag + "/" +
                                 std::to_string(e.buffer));
      }
      open[key] = Interval{e.start, -1, e.offset, aligned};
    } else {
      bool erased = false;
      for (auto it = live_extents.begin(); it != live_extents.end(); ++it) {
        if (it->first == e.offset) {
          live_total -= it->second - it->first;
          live_extents.erase(it);
          erased = true;
          break;
        }
      }
      if (!erased) flag("negative-count", "release of extent that is not live (double free?)");
      if (e.tag == "G2") continue;
      auto it = open.find(key);
      if (it == open.end()) {
        flag("negative-count", "release of buffer that is not open: " + e.tag + "/" +
                                   std::to_string(e.buffer));
        continue;
      }
      it->second.end = e.start;
      history[key].push_back(it->second);
      open.erase(it);
    }
  }
  for (auto& [key, iv] : open) {
    iv.end = -1;
    history[key].push_back(iv);  // never released; visible to reads
  }
  if (max_live != report.max_mem_bytes) {
    flag("report-mismatch", "max memory in report differs from event-log reconstruction");
  }
  if (report.total_ns > 0) {
    integral += static_cast<unsigned __int128>(live_total) *
                static_cast<unsigned __int128>(report.total_ns - last_pool_time);
    const Bytes avg = static_cast<Bytes>(integral / static_cast<unsigned __int128>(report.total_ns));
    if (avg != report.avg_mem_bytes) {
      flag("report-mismatch", "time-weighted average differs from event-log reconstruction");
    }
  }

  // -- Transfers per feature buffer.
  std::map<LayerId, std::vector<const StreamEvent*>> offloads, prefetches;
  for (const StreamEvent& e : report.events) {
    if (e.kind == EventKind::Offload) offloads[e.buffer].push_back(&e);
    if (e.kind == EventKind::Prefetch) prefetches[e.buffer].push_back(&e);
  }
  for (const auto& [o, evs] : offloads) {
    if (evs.size() > 1) flag("double-offload", "buffer " + std::to_string(o) + " offloaded twice");
    if (!decision.offloads(evs.front()->layer)) {
      flag("unsanctioned-offload", "offload by a layer the decision does not flag");
    }
  }
  for (const auto& [o, evs] : prefetches) {
    if (evs.size() > 1) flag("double-prefetch", "buffer " + std::to_string(o) + " prefetched twice");
    if (!offloads.contains(o)) {
      flag("prefetch-without-offload", "buffer " + std::to_string(o) + " was never offloaded");
    }
  }
  if (report.pass) {
    for (const auto& [o, evs] : offloads) {
      if (!prefetches.contains(o)) {
        flag("offload-not-prefetched", "buffer " + std::to_string(o) + " never returned to device");
      }
    }
  }

  // Offloaded data must be host-safe before its device extent is released:
  // the release that follows the offload may not precede the transfer end.
  for (const auto& [o, evs] : offloads) {
    const StreamEvent* off = evs.front();
    const auto key = std::make_pair(std::string("F"), o);
    auto hit = history.find(key);
    if (hit == history.end()) continue;
    for (const Interval& iv : hit->second) {
      if (iv.start <= off->start && iv.end >= 0 && iv.end < off->end) {
        flag("release-before-offload-end", "buffer " + std::to_string(o) +
                                               " released mid-offload");
      }
    }
  }

  // -- Compute-operand residency, derived independently from the graph.
  const bool per_layer = decision.gradient_scheme == GradientScheme::PerLayer;
  auto device_resident = [&](LayerId buffer, TimeNs start, TimeNs end, const char* cls) {
    auto hit = history.find(std::make_pair(std::string(cls), buffer));
    if (hit == history.end()) return false;
    for (const Interval& iv : hit->second) {
      if (iv.start <= start && (iv.end < 0 || iv.end >= end)) return true;
    }
    return false;
  };
  auto data_arrived = [&](LayerId buffer, TimeNs start) {
    auto p = prefetches.find(buffer);
    if (p == prefetches.end()) return true;
    // A buffer re-allocated for prefetch is readable only from transfer end.
    const StreamEvent* pre = p->second.front();
    if (start >= pre->end) return true;
    // Reads before the offload released the original copy are fine.
    const StreamEvent* off = offloads.contains(buffer) ? offloads[buffer].front() : nullptr;
    return off != nullptr && start < off->start;
  };
  for (const StreamEvent& e : report.events) {
    if (e.kind == EventKind::Fwd) {
      for (LayerId o : replaydetail::fwd_reads(graph, e.layer)) {
        if (!device_resident(o, e.start, e.end, "F")) {
          flag("use-after-release", "FWD(" + std::to_string(e.layer) + ") reads non-resident buffer " +
                                        std::to_string(o));
        }
      }
    } else if (e.kind == EventKind::Bwd) {
      for (LayerId o : replaydetail::bwd_reads(graph, e.layer)) {
        if (!device_resident(o, e.start, e.end, "F")) {
          flag("use-after-release", "BWD(" + std::to_string(e.layer) + ") reads non-resident buffer " +
                                        std::to_string(o));
        }
        if (!data_arrived(o, e.start)) {
          flag("prefetch-before-use", "BWD(" + std::to_string(e.layer) +
                                          ") starts before prefetch of buffer " + std::to_string(o) +
                                          " lands");
        }
      }
      if (per_layer) {
        if (replaydetail::produces_gradient(graph, e.layer) &&
            !device_resident(e.layer, e.start, e.end, "dX")) {
          flag("use-after-release", "BWD(" + std::to_string(e.layer) + ") lacks its gradient buffer");
        }
        std::set<LayerId> dy;
        replaydetail::collect_grad_reads(graph, e.layer, dy);
        for (LayerId c : dy) {
          if (!device_resident(c, e.start, e.end, "dX")) {
            flag("use-after-release", "BWD(" + std::to_string(e.layer) +
                                          ") reads released gradient of layer " + std::to_string(c));
          }
        }
      }
    }
  }
  if (!per_layer && report.pass) {
    Bytes need = max_gradient_map_bytes(graph, CostModel{});
    if (need > 0 && g2_count != 2) {
      flag("missing-gradient-buffers", "two-buffer scheme did not provision both buffers");
    }
  }

  return out;
}

}  // namespace vdnnsim
