#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdnnsim/decision.hpp"
#include "vdnnsim/simulator.hpp"

namespace vdnnsim {

struct ProfilePassResult {
  std::string phase;  // P1 / P2 / P3 / fallback
  PolicyDecision decision;
  bool pass = false;
  std::optional<OomInfo> oom;
  TimeNs total_ns = 0;
  Bytes max_mem_bytes = 0;
};

struct DynamicSelection {
  std::optional<PolicyDecision> decision;  // nullopt: untrainable
  std::vector<ProfilePassResult> passes;
  bool untrainable() const { return !decision.has_value(); }
};

namespace detail {

inline ProfilePassResult record_pass(std::string phase, const PolicyDecision& d,
                                     const RunReport& r) {
  ProfilePassResult p;
  p.phase = std::move(phase);
  p.decision = d;
  p.pass = r.pass;
  p.oom = r.oom;
  p.total_ns = r.total_ns;
  p.max_mem_bytes = r.max_mem_bytes;
  return p;
}

// Peak pool usage while each layer's own FWD/BWD events run. Liveness depends
// only on event order, never on durations, so one pass with zero workspaces
// prices every layer's headroom for workspace.
inline void per_layer_event_peaks(const RunReport& r, std::vector<Bytes>& fwd_peak,
                                  std::vector<Bytes>& bwd_peak, std::size_t layers) {
  fwd_peak.assign(layers, 0);
  bwd_peak.assign(layers, 0);
  Bytes current = 0;
  for (const StreamEvent& e : r.events) {
    if (e.kind == EventKind::Alloc) current += align_up(e.bytes, MemoryPool::kAlignment);
    if (e.kind == EventKind::Release) current -= align_up(e.bytes, MemoryPool::kAlignment);
    if (e.kind == EventKind::Fwd) fwd_peak[static_cast<std::size_t>(e.layer)] = current;
    if (e.kind == EventKind::Bwd) bwd_peak[static_cast<std::size_t>(e.layer)] = current;
  }
}

}  // namespace detail

// Greedy per-layer algorithm downgrade under a fixed offload policy: start
// every CONV layer at its fastest applicable algorithm and, in forward order,
// step any layer whose events would overflow the budget down the
// FFT -> GEMM_WS -> IMPLICIT_GEMM list until it fits. One full simulation
// validates the result.
inline std::optional<PolicyDecision> greedy_downgrade(const NetworkGraph& g, Bytes capacity,
                                                      PolicyKind offload_kind, const CostModel& cm,
                                                      std::vector<ProfilePassResult>* transcript =
                                                          nullptr) {
  PolicyDecision d = static_decision(offload_kind, AlgoMode::PerfOptimal, g, cm);
  d.label = (offload_kind == PolicyKind::VdnnConv ? "vdnn-conv" : "vdnn-all") + std::string("+greedy");

  // Workspace-free probe run prices each layer's live set.
  PolicyDecision probe = d;
  for (auto& [id, algo] : probe.algos) algo = AlgoId::ImplicitGemm;
  const RunReport base = simulate(g, probe, cm, kUnlimitedBytes);
  std::vector<Bytes> fwd_peak, bwd_peak;
  detail::per_layer_event_peaks(base, fwd_peak, bwd_peak, g.size());

  for (const LayerDescriptor& l : g.layers()) {
    if (l.kind != LayerKind::Conv) continue;
    const auto i = static_cast<std::size_t>(l.id);
    const Bytes headroom_fwd = capacity > fwd_peak[i] ? capacity - fwd_peak[i] : 0;
    const Bytes headroom_bwd = capacity > bwd_peak[i] ? capacity - bwd_peak[i] : 0;
    const Bytes headroom = std::min(headroom_fwd, headroom_bwd);
    AlgoId algo = d.algos.at(l.id);
    while (align_up(cm.conv_workspace(g, l.id, algo), MemoryPool::kAlignment) > headroom) {
      auto down = downgrade_of(algo);
      if (!down) break;
      algo = *down;
    }
    d.algos[l.id] = algo;
  }

  const RunReport check = simulate(g, d, cm, capacity);
  if (transcript) transcript->push_back(detail::record_pass("P3", d, check));
  if (check.pass) return d;

  // Per-layer headroom is necessary but not sufficient once placement
  // fragments near the budget; finish the downgrade at the floor before
  // giving up.
  bool at_floor = true;
  for (const auto& [id, algo] : d.algos) at_floor = at_floor && algo == AlgoId::ImplicitGemm;
  if (at_floor) return std::nullopt;
  for (auto& [id, algo] : d.algos) algo = AlgoId::ImplicitGemm;
  const RunReport floor_check = simulate(g, d, cm, capacity);
  if (transcript) transcript->push_back(detail::record_pass("P3", d, floor_check));
  if (!floor_check.pass) return std::nullopt;
  return d;
}

// The three-phase runtime policy search: (P1) the memory floor decides
// trainability, (P2) the fastest static configurations in increasing order of
// memory effort, (P3) greedy per-layer downgrades, falling back to the P1
// decision when everything else oversubscribes.
inline DynamicSelection dynamic_select(const NetworkGraph& g, Bytes capacity, const CostModel& cm) {
  DynamicSelection sel;

  PolicyDecision floor = static_decision(PolicyKind::VdnnAll, AlgoMode::MemoryOptimal, g, cm);
  const RunReport r1 = simulate(g, floor, cm, capacity);
  sel.passes.push_back(detail::record_pass("P1", floor, r1));
  if (!r1.pass) return sel;  // untrainable

  const std::pair<PolicyKind, const char*> phase2[] = {
      {PolicyKind::Baseline, "P2"},
      {PolicyKind::VdnnConv, "P2"},
      {PolicyKind::VdnnAll, "P2"},
  };
  for (const auto& [kind, phase] : phase2) {
    PolicyDecision d = static_decision(kind, AlgoMode::PerfOptimal, g, cm);
    const RunReport r = simulate(g, d, cm, capacity);
    sel.passes.push_back(detail::record_pass(phase, d, r));
    if (r.pass) {
      sel.decision = std::move(d);
      return sel;
    }
  }

  for (PolicyKind kind : {PolicyKind::VdnnConv, PolicyKind::VdnnAll}) {
    if (auto d = greedy_downgrade(g, capacity, kind, cm, &sel.passes)) {
      sel.decision = std::move(d);
      return sel;
    }
  }

  sel.passes.push_back(detail::record_pass("fallback", floor, r1));
  sel.decision = std::move(floor);
  return sel;
}

// The hypothetical device with enough memory for everything: no offloading,
// fastest algorithms. Denominator for all slowdown figures.
inline RunReport simulate_oracle(const NetworkGraph& g, const CostModel& cm) {
  PolicyDecision d = static_decision(PolicyKind::Baseline, AlgoMode::PerfOptimal, g, cm);
  d.label = "oracle";
  return simulate(g, d, cm, kUnlimitedBytes);
}

}  // namespace vdnnsim
