#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vdnnsim/cost_model.hpp"
#include "vdnnsim/decision.hpp"
#include "vdnnsim/footprint.hpp"
#include "vdnnsim/memory_pool.hpp"
#include "vdnnsim/net_graph.hpp"
#include "vdnnsim/prefetch.hpp"
#include "vdnnsim/sim_types.hpp"

namespace vdnnsim {

struct SimOptions {
  bool keep_pool_trace = false;
  bool include_weight_grads = false;
};

namespace detail {

// Static dataflow derived from graph + decision: who owns, reads and releases
// each buffer. Event durations never change these sets, so liveness is a pure
// function of (graph, decision).
struct SimPlan {
  std::size_t L = 0;
  std::vector<Bytes> feat_bytes;                       // by owner layer; 0 = no buffer
  std::vector<std::vector<LayerId>> fwd_readers;       // feature buffer -> forward readers
  std::vector<std::vector<LayerId>> bwd_feat_readers;  // feature buffer -> backward readers
  std::vector<std::vector<LayerId>> input_owners;      // layer -> distinct owners of its X
  std::vector<std::vector<LayerId>> bwd_feat_operands; // layer -> feature buffers its BWD reads
  std::vector<Bytes> grad_bytes;                       // by layer (its dX); 0 = none
  std::vector<std::vector<LayerId>> grad_readers;      // grad buffer -> backward readers
  std::vector<std::vector<LayerId>> reads_grads;       // layer -> grad buffers its BWD reads
  std::vector<std::vector<LayerId>> offload_plan;      // layer -> buffers it offloads
  std::vector<Bytes> weight_bytes;
  std::vector<Bytes> ws_bytes;
  std::vector<TimeNs> fwd_ns;
  std::vector<TimeNs> bwd_ns;
  std::vector<TimeNs> transfer_ns;  // per feature buffer
  Bytes grad_reuse_bytes = 0;       // each of the two baseline gradient buffers
  Bytes ws_reuse_bytes = 0;         // baseline network-max workspace
};

inline void sort_unique(std::vector<LayerId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

inline SimPlan build_plan(const NetworkGraph& g, const PolicyDecision& d, const CostModel& cm,
                          const SimOptions& opt) {
  SimPlan p;
  p.L = g.size();
  p.feat_bytes.assign(p.L, 0);
  p.fwd_readers.assign(p.L, {});
  p.bwd_feat_readers.assign(p.L, {});
  p.input_owners.assign(p.L, {});
  p.bwd_feat_operands.assign(p.L, {});
  p.grad_bytes.assign(p.L, 0);
  p.grad_readers.assign(p.L, {});
  p.reads_grads.assign(p.L, {});
  p.offload_plan.assign(p.L, {});
  p.weight_bytes.assign(p.L, 0);
  p.ws_bytes.assign(p.L, 0);
  p.fwd_ns.assign(p.L, 0);
  p.bwd_ns.assign(p.L, 0);
  p.transfer_ns.assign(p.L, 0);

  for (const LayerDescriptor& l : g.layers()) {
    const auto i = static_cast<std::size_t>(l.id);
    if (l.kind != LayerKind::Actv && l.kind != LayerKind::Loss) {
      p.feat_bytes[i] = cm.tensor_bytes_of(g.shape(l.id));
      p.transfer_ns[i] = to_ns(cm.transfer_latency(p.feat_bytes[i]));
    }
    p.weight_bytes[i] = cm.weight_bytes(g, l.id);
    const AlgoId algo = l.kind == LayerKind::Conv ? d.algos.at(l.id) : AlgoId::ImplicitGemm;
    if (l.kind == LayerKind::Conv) p.ws_bytes[i] = cm.conv_workspace(g, l.id, algo);
    p.fwd_ns[i] = to_ns(cm.layer_latency(g, l.id, Direction::Fwd, algo));
    p.bwd_ns[i] = to_ns(cm.layer_latency(g, l.id, Direction::Bwd, algo));

    for (LayerId q : l.inputs) p.input_owners[i].push_back(feature_owner(g, q));
    sort_unique(p.input_owners[i]);
    for (LayerId o : p.input_owners[i]) p.fwd_readers[static_cast<std::size_t>(o)].push_back(l.id);

    // Backward feature operands by layer kind: CONV/FC read X; POOL reads X
    // and its own Y; in-place ACTV reads the aliased Y; LOSS reads nothing.
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::Fc:
        p.bwd_feat_operands[i] = p.input_owners[i];
        break;
      case LayerKind::Pool:
        p.bwd_feat_operands[i] = p.input_owners[i];
        p.bwd_feat_operands[i].push_back(l.id);
        sort_unique(p.bwd_feat_operands[i]);
        break;
      case LayerKind::Actv:
        p.bwd_feat_operands[i] = {feature_owner(g, l.id)};
        break;
      case LayerKind::Input:
      case LayerKind::Loss:
        break;
    }
    for (LayerId o : p.bwd_feat_operands[i]) {
      p.bwd_feat_readers[static_cast<std::size_t>(o)].push_back(l.id);
    }

    // Gradient buffer dX(l) and the backward steps that read it as their dY:
    // each producer chain walks through in-place ACTVs until a layer that owns
    // its own gradient. Gradients with respect to raw input data do not exist.
    p.grad_bytes[i] = gradient_map_bytes(g, l.id, cm);
    if (p.grad_bytes[i] > 0) {
      for (LayerId q : l.inputs) {
        LayerId cur = q;
        while (true) {
          const LayerKind k = g.layer(cur).kind;
          if (k == LayerKind::Input) break;
          p.grad_readers[i].push_back(cur);
          if (k != LayerKind::Actv) break;
          cur = g.layer(cur).inputs[0];
        }
      }
      sort_unique(p.grad_readers[i]);
      for (LayerId r : p.grad_readers[i]) p.reads_grads[static_cast<std::size_t>(r)].push_back(l.id);
    }
  }
  for (auto& v : p.bwd_feat_readers) sort_unique(v);
  for (auto& v : p.reads_grads) sort_unique(v);

  // Offload plan: layer n offloads buffer o when n is flagged, n is o's last
  // forward consumer, and o is reused in backward (otherwise plain release).
  for (const LayerDescriptor& l : g.layers()) {
    const auto i = static_cast<std::size_t>(l.id);
    if (!d.offloads(l.id)) continue;
    if (l.kind != LayerKind::Conv && l.kind != LayerKind::Pool) continue;
    for (LayerId o : p.input_owners[i]) {
      const auto& readers = p.fwd_readers[static_cast<std::size_t>(o)];
      if (readers.empty() || readers.back() != l.id) continue;
      if (p.bwd_feat_readers[static_cast<std::size_t>(o)].empty()) continue;
      p.offload_plan[i].push_back(o);
    }
  }

  if (d.gradient_scheme == GradientScheme::TwoBufferReuse) {
    p.grad_reuse_bytes = max_gradient_map_bytes(g, cm);
    for (std::size_t i = 0; i < p.L; ++i) p.ws_reuse_bytes = std::max(p.ws_reuse_bytes, p.ws_bytes[i]);
  }
  (void)opt;
  return p;
}

class Simulator {
 public:
  Simulator(const NetworkGraph& g, const PolicyDecision& d, const CostModel& cm, Bytes capacity,
            const SimOptions& opt)
      : g_(g), d_(d), cm_(cm), opt_(opt), plan_(build_plan(g, d, cm, opt)),
        pool_(capacity, opt.keep_pool_trace) {
    state_.feature.assign(plan_.L, Residency::Unallocated);
    state_.offloaded_by = plan_.offload_plan;
    state_.fwd_remaining.assign(plan_.L, 0);
    state_.bwd_remaining.assign(plan_.L, 0);
    state_.grad_remaining.assign(plan_.L, 0);
    for (std::size_t i = 0; i < plan_.L; ++i) {
      state_.fwd_remaining[i] = int(plan_.fwd_readers[i].size());
      state_.bwd_remaining[i] = int(plan_.bwd_feat_readers[i].size());
      state_.grad_remaining[i] = int(plan_.grad_readers[i].size());
    }
    feat_alloc_.assign(plan_.L, 0);
    grad_alloc_.assign(plan_.L, 0);
    weight_alloc_.assign(plan_.L, 0);
    wgrad_alloc_.assign(plan_.L, 0);
    offload_end_.assign(plan_.L, 0);
    prefetch_end_.assign(plan_.L, 0);
    fwd_end_.assign(plan_.L, -1);
    bwd_start_.assign(plan_.L, -1);
  }

  RunReport run() {
    d_.validate(g_);
    if (setup() && forward() && backward()) {
      report_.pass = true;
      cleanup();
    }
    finalize();
    return std::move(report_);
  }

  MemoryPool& pool() { return pool_; }

 private:
  bool two_buffer() const { return d_.gradient_scheme == GradientScheme::TwoBufferReuse; }

  void push_event(Stream s, EventKind k, LayerId layer, TimeNs start, TimeNs end, Bytes bytes,
                  std::string tag = {}, LayerId buffer = kNoLayer, Bytes offset = 0) {
    report_.events.push_back({s, k, layer, start, end, bytes, std::move(tag), buffer, offset});
  }

  std::optional<AllocId> alloc(Bytes bytes, const char* tag, LayerId buffer, LayerId at_layer,
                               Phase phase, TimeNs time, Stream stream, bool pin_high = false) {
    auto id = pool_.try_alloc(bytes, tag, time, pin_high);
    if (!id) {
      report_.oom = OomInfo{at_layer, phase, pool_.fragmented_for(bytes), bytes, tag};
      return std::nullopt;
    }
    push_event(stream, EventKind::Alloc, at_layer, time, time, bytes, tag, buffer, pool_.offset_of(*id));
    return id;
  }

  void release(AllocId id, const char* tag, LayerId buffer, LayerId at_layer, TimeNs time,
               Stream stream) {
    const Bytes off = pool_.offset_of(id);
    const Bytes bytes = pool_.requested_of(id);
    push_event(stream, EventKind::Release, at_layer, time, time, bytes, tag, buffer, off);
    pool_.free(id, time);
  }

  bool setup() {
    // Everything provisioned here survives the whole run; pin it to the top
    // of the pool so the per-layer transients cycle in one contiguous range.
    for (const LayerDescriptor& l : g_.layers()) {
      const auto i = static_cast<std::size_t>(l.id);
      if (plan_.weight_bytes[i] > 0) {
        auto id = alloc(plan_.weight_bytes[i], "W", l.id, l.id, Phase::Setup, 0, Stream::Compute,
                        /*pin_high=*/true);
        if (!id) return false;
        weight_alloc_[i] = *id;
      }
      if (opt_.include_weight_grads && plan_.weight_bytes[i] > 0 && two_buffer()) {
        auto id = alloc(plan_.weight_bytes[i], "dW", l.id, l.id, Phase::Setup, 0, Stream::Compute,
                        /*pin_high=*/true);
        if (!id) return false;
        wgrad_alloc_[i] = *id;
      }
      if (l.kind == LayerKind::Input) {
        auto id = alloc(plan_.feat_bytes[i], "X", l.id, l.id, Phase::Setup, 0, Stream::Compute,
                        /*pin_high=*/true);
        if (!id) return false;
        feat_alloc_[i] = *id;
        state_.feature[i] = Residency::Device;
      }
    }
    if (two_buffer()) {
      // Network-wide provisioning: every feature map, both reused gradient
      // buffers and the max-size workspace are resident up front.
      for (const LayerDescriptor& l : g_.layers()) {
        const auto i = static_cast<std::size_t>(l.id);
        if (l.kind == LayerKind::Input || plan_.feat_bytes[i] == 0) continue;
        auto id = alloc(plan_.feat_bytes[i], "Y", l.id, l.id, Phase::Setup, 0, Stream::Compute,
                        /*pin_high=*/true);
        if (!id) return false;
        feat_alloc_[i] = *id;
        state_.feature[i] = Residency::Device;
      }
      for (int k = 0; k < 2 && plan_.grad_reuse_bytes > 0; ++k) {
        auto id = alloc(plan_.grad_reuse_bytes, "G2", kNoLayer, kNoLayer, Phase::Setup, 0,
                        Stream::Compute, /*pin_high=*/true);
        if (!id) return false;
        grad2_alloc_.push_back(*id);
      }
      if (plan_.ws_reuse_bytes > 0) {
        auto id = alloc(plan_.ws_reuse_bytes, "WS", kNoLayer, kNoLayer, Phase::Setup, 0,
                        Stream::Compute, /*pin_high=*/true);
        if (!id) return false;
        ws_reuse_alloc_ = *id;
      }
    }
    return true;
  }

  bool forward() {
    for (const LayerDescriptor& l : g_.layers()) {
      const auto i = static_cast<std::size_t>(l.id);
      if (l.kind == LayerKind::Input) continue;
      const TimeNs t0 = state_.compute_clock;

      std::optional<AllocId> ws_id;
      if (!two_buffer()) {
        if (plan_.feat_bytes[i] > 0) {
          auto id = alloc(plan_.feat_bytes[i], "Y", l.id, l.id, Phase::Forward, t0, Stream::Compute);
          if (!id) return false;
          feat_alloc_[i] = *id;
          state_.feature[i] = Residency::Device;
        }
        if (plan_.ws_bytes[i] > 0) {
          ws_id = alloc(plan_.ws_bytes[i], "WS", l.id, l.id, Phase::Forward, t0, Stream::Compute);
          if (!ws_id) return false;
        }
      }

      const TimeNs fwd_end = t0 + plan_.fwd_ns[i];
      push_event(Stream::Compute, EventKind::Fwd, l.id, t0, fwd_end, 0);
      fwd_end_[i] = fwd_end;

      // Offload the inputs this layer is the last consumer of, overlapped
      // with its own forward computation (read-only data).
      TimeNs last_off_end = 0;
      for (LayerId o : plan_.offload_plan[i]) {
        const auto oi = static_cast<std::size_t>(o);
        const TimeNs start = std::max(t0, state_.memory_clock);
        const TimeNs end = start + plan_.transfer_ns[oi];
        push_event(Stream::Memory, EventKind::Offload, l.id, start, end, plan_.feat_bytes[oi], "X", o);
        state_.memory_clock = end;
        state_.feature[oi] = Residency::Offloading;
        offload_end_[oi] = end;
        report_.offload_traffic_bytes += plan_.feat_bytes[oi];
        host_.add(o, plan_.feat_bytes[oi], end);
        last_off_end = end;
      }

      // Sync rule: the next layer's forward may not start until this layer's
      // offloads have drained.
      TimeNs next = std::max(fwd_end, last_off_end);
      if (next > fwd_end) {
        push_event(Stream::Compute, EventKind::Sync, l.id, fwd_end, next, 0);
        report_.stall_fwd_offload_ns += next - fwd_end;
      }
      state_.compute_clock = next;

      if (!two_buffer()) {
        if (ws_id) release(*ws_id, "WS", l.id, l.id, fwd_end, Stream::Compute);
        // Order releases by time so the pool clock stays monotone.
        struct PendingRelease {
          TimeNs t;
          LayerId o;
          bool offloaded;
        };
        std::vector<PendingRelease> pending;
        for (LayerId o : plan_.input_owners[i]) {
          const auto oi = static_cast<std::size_t>(o);
          if (--state_.fwd_remaining[oi] > 0) continue;
          if (state_.feature[oi] == Residency::Offloading) {
            pending.push_back({std::max(fwd_end, offload_end_[oi]), o, true});
          } else if (state_.bwd_remaining[oi] == 0) {
            // Never reused in backward: plain release, no offload needed.
            pending.push_back({fwd_end, o, false});
          }
        }
        std::stable_sort(pending.begin(), pending.end(),
                         [](const PendingRelease& a, const PendingRelease& b) { return a.t < b.t; });
        for (const PendingRelease& pr : pending) {
          const auto oi = static_cast<std::size_t>(pr.o);
          release(feat_alloc_[oi], "X", pr.o, l.id, pr.t,
                  pr.offloaded ? Stream::Memory : Stream::Compute);
          state_.feature[oi] = pr.offloaded ? Residency::Host : Residency::Released;
        }
      } else {
        for (LayerId o : plan_.input_owners[i]) --state_.fwd_remaining[static_cast<std::size_t>(o)];
      }
    }
    return true;
  }

  bool backward() {
    const auto order = g_.backward_order();
    for (LayerId m : order) {
      const LayerDescriptor& l = g_.layer(m);
      if (l.kind == LayerKind::Input) continue;
      const auto i = static_cast<std::size_t>(m);
      const TimeNs t0 = state_.compute_clock;

      // One prefetch launch per backward step, overlapped with this layer's
      // computation; the transfer needs its device destination immediately.
      // Prefetching is opportunistic: if the destination does not fit right
      // now, skip this step and let a later step (or first use) fetch it.
      TimeNs enqueued_end = 0;
      if (auto p = find_prefetch_layer(m, state_, g_)) {
        Bytes step_required = 0;
        if (!two_buffer()) {
          if (plan_.grad_bytes[i] > 0) step_required += align_up(plan_.grad_bytes[i], MemoryPool::kAlignment);
          if (plan_.ws_bytes[i] > 0) step_required += align_up(plan_.ws_bytes[i], MemoryPool::kAlignment);
          if (opt_.include_weight_grads) step_required += align_up(plan_.weight_bytes[i], MemoryPool::kAlignment);
        }
        if (prefetch_fits(*p, step_required)) {
          for (LayerId o : plan_.offload_plan[static_cast<std::size_t>(*p)]) {
            const auto oi = static_cast<std::size_t>(o);
            if (state_.feature[oi] != Residency::Host) continue;
            if (!fetch_back(o, *p, t0, enqueued_end, /*opportunistic=*/true)) return false;
          }
        }
      }

      // On-demand fallback: any operand still host-resident is fetched now,
      // fully exposed (keeps arbitrary decision files runnable).
      TimeNs ready = t0;
      for (LayerId o : plan_.bwd_feat_operands[i]) {
        const auto oi = static_cast<std::size_t>(o);
        if (state_.feature[oi] == Residency::Host) {
          TimeNs end = 0;
          if (!fetch_back(o, m, t0, end)) return false;
          ready = std::max(ready, end);
        } else if (state_.feature[oi] == Residency::Prefetching) {
          ready = std::max(ready, prefetch_end_[oi]);
        }
      }
      for (LayerId o : plan_.bwd_feat_operands[i]) {
        const auto oi = static_cast<std::size_t>(o);
        if (state_.feature[oi] == Residency::Prefetching && prefetch_end_[oi] <= ready) {
          state_.feature[oi] = Residency::Device;
        }
      }
      if (ready > t0) {
        push_event(Stream::Compute, EventKind::Sync, m, t0, ready, 0);
        report_.stall_bwd_prefetch_ns += ready - t0;
      }

      // Gradient map, workspace and (optionally) weight gradients materialize
      // on the compute path, right as the backward computation launches.
      std::optional<AllocId> ws_id, wgrad_id;
      if (!two_buffer()) {
        if (plan_.grad_bytes[i] > 0) {
          auto id = alloc(plan_.grad_bytes[i], "dX", m, m, Phase::Backward, ready, Stream::Compute);
          if (!id) return false;
          grad_alloc_[i] = *id;
        }
        if (plan_.ws_bytes[i] > 0) {
          ws_id = alloc(plan_.ws_bytes[i], "WS", m, m, Phase::Backward, ready, Stream::Compute);
          if (!ws_id) return false;
        }
        if (opt_.include_weight_grads && plan_.weight_bytes[i] > 0) {
          wgrad_id = alloc(plan_.weight_bytes[i], "dW", m, m, Phase::Backward, ready, Stream::Compute);
          if (!wgrad_id) return false;
        }
      }

      const TimeNs bwd_end = ready + plan_.bwd_ns[i];
      push_event(Stream::Compute, EventKind::Bwd, m, ready, bwd_end, 0);
      bwd_start_[i] = ready;

      // Prefetches launched during this step must land before the next
      // backward computation starts.
      TimeNs next = std::max(bwd_end, enqueued_end);
      if (next > bwd_end) {
        push_event(Stream::Compute, EventKind::Sync, m, bwd_end, next, 0);
        report_.stall_bwd_prefetch_ns += next - bwd_end;
      }
      state_.compute_clock = next;
      for (std::size_t oi = 0; oi < plan_.L; ++oi) {
        if (state_.feature[oi] == Residency::Prefetching && prefetch_end_[oi] <= next) {
          state_.feature[oi] = Residency::Device;
        }
      }

      if (two_buffer()) continue;

      if (ws_id) release(*ws_id, "WS", m, m, bwd_end, Stream::Compute);
      if (wgrad_id) release(*wgrad_id, "dW", m, m, bwd_end, Stream::Compute);
      for (LayerId o : plan_.bwd_feat_operands[i]) {
        const auto oi = static_cast<std::size_t>(o);
        if (--state_.bwd_remaining[oi] > 0) continue;
        if (state_.fwd_remaining[oi] == 0 && state_.feature[oi] == Residency::Device) {
          release(feat_alloc_[oi], "Y", o, m, bwd_end, Stream::Compute);
          state_.feature[oi] = Residency::Released;
        }
      }
      for (LayerId gbuf : plan_.reads_grads[i]) {
        const auto gi = static_cast<std::size_t>(gbuf);
        if (--state_.grad_remaining[gi] == 0) {
          release(grad_alloc_[gi], "dX", gbuf, m, bwd_end, Stream::Compute);
        }
      }
      if (plan_.grad_bytes[i] > 0 && plan_.grad_readers[i].empty()) {
        release(grad_alloc_[i], "dX", m, m, bwd_end, Stream::Compute);
      }
    }
    return true;
  }

  // A prefetch may only camp ahead of its use if it leaves room for the
  // current step's own allocations; otherwise it waits for a later step.
  bool prefetch_fits(LayerId p, Bytes step_required) const {
    Bytes fetch = 0;
    for (LayerId o : plan_.offload_plan[static_cast<std::size_t>(p)]) {
      const auto oi = static_cast<std::size_t>(o);
      if (state_.feature[oi] != Residency::Host) continue;
      fetch += align_up(plan_.feat_bytes[oi], MemoryPool::kAlignment);
    }
    return fetch + step_required <= pool_.largest_free_extent();
  }

  bool fetch_back(LayerId o, LayerId at_layer, TimeNs t0, TimeNs& end_out,
                  bool opportunistic = false) {
    const auto oi = static_cast<std::size_t>(o);
    auto raw = pool_.try_alloc(plan_.feat_bytes[oi], "X", t0);
    if (!raw && opportunistic) return true;  // stays host-resident; fetched later
    std::optional<AllocId> id;
    if (raw) {
      push_event(Stream::Memory, EventKind::Alloc, at_layer, t0, t0, plan_.feat_bytes[oi], "X", o,
                 pool_.offset_of(*raw));
      id = raw;
    } else {
      report_.oom = OomInfo{at_layer, Phase::Backward, pool_.fragmented_for(plan_.feat_bytes[oi]),
                            plan_.feat_bytes[oi], "X"};
      return false;
    }
    feat_alloc_[oi] = *id;
    const TimeNs start = std::max(t0, state_.memory_clock);
    const TimeNs end = start + plan_.transfer_ns[oi];
    push_event(Stream::Memory, EventKind::Prefetch, at_layer, start, end, plan_.feat_bytes[oi], "X", o);
    state_.memory_clock = end;
    state_.feature[oi] = Residency::Prefetching;
    prefetch_end_[oi] = end;
    host_.remove(o, end);
    report_.prefetch_traffic_bytes += plan_.feat_bytes[oi];
    end_out = std::max(end_out, end);
    return true;
  }

  void cleanup() {
    const TimeNs t = std::max(state_.compute_clock, state_.memory_clock);
    for (std::size_t i = 0; i < plan_.L; ++i) {
      const LayerId id = static_cast<LayerId>(i);
      if (state_.feature[i] == Residency::Device || state_.feature[i] == Residency::Offloading ||
          state_.feature[i] == Residency::Prefetching) {
        release(feat_alloc_[i], "Y", id, kNoLayer, t, Stream::Compute);
        state_.feature[i] = Residency::Released;
      }
      if (weight_alloc_[i] != 0) release(weight_alloc_[i], "W", id, kNoLayer, t, Stream::Compute);
      if (wgrad_alloc_[i] != 0) release(wgrad_alloc_[i], "dW", id, kNoLayer, t, Stream::Compute);
    }
    for (AllocId id : grad2_alloc_) release(id, "G2", kNoLayer, kNoLayer, t, Stream::Compute);
    if (ws_reuse_alloc_ != 0) release(ws_reuse_alloc_, "WS", kNoLayer, kNoLayer, t, Stream::Compute);
  }

  void finalize() {
    const TimeNs total = std::max(state_.compute_clock, state_.memory_clock);
    report_.total_ns = total;
    report_.max_mem_bytes = pool_.high_water_bytes();
    if (total > 0) {
      report_.avg_mem_bytes =
          static_cast<Bytes>(pool_.usage_integral(total) / static_cast<unsigned __int128>(total));
    }
    report_.host_peak_bytes = host_.peak_bytes();
    report_.interference_bound = cm_.offload_interference_bound();
    report_.reuse_distance_ns.assign(plan_.L, -1);
    for (std::size_t i = 0; i < plan_.L; ++i) {
      if (fwd_end_[i] >= 0 && bwd_start_[i] >= 0) {
        report_.reuse_distance_ns[i] = bwd_start_[i] - fwd_end_[i];
      }
    }
  }

  const NetworkGraph& g_;
  PolicyDecision d_;
  const CostModel& cm_;
  SimOptions opt_;
  SimPlan plan_;
  MemoryPool pool_;
  HostLedger host_;
  SimState state_;
  RunReport report_;
  std::vector<AllocId> feat_alloc_, grad_alloc_, weight_alloc_, wgrad_alloc_;
  std::vector<AllocId> grad2_alloc_;
  AllocId ws_reuse_alloc_ = 0;
  std::vector<TimeNs> offload_end_, prefetch_end_;
  std::vector<TimeNs> fwd_end_, bwd_start_;
};

}  // namespace detail

// One full forward + backward pass of `graph` under `decision`, against a
// pool of `capacity` bytes. Deterministic: identical inputs produce
// bit-identical reports.
inline RunReport simulate(const NetworkGraph& graph, const PolicyDecision& decision,
                          const CostModel& cost, Bytes capacity, const SimOptions& options = {}) {
  detail::Simulator sim(graph, decision, cost, capacity, options);
  return sim.run();
}

// Pool-trace variant: returns the pool's alloc/free trace alongside the report.
inline RunReport simulate_with_trace(const NetworkGraph& graph, const PolicyDecision& decision,
                                     const CostModel& cost, Bytes capacity,
                                     std::vector<PoolTraceRow>& trace_out,
                                     SimOptions options = {}) {
  options.keep_pool_trace = true;
  detail::Simulator sim(graph, decision, cost, capacity, options);
  RunReport r = sim.run();
  trace_out = sim.pool().trace();
  return r;
}

}  // namespace vdnnsim
