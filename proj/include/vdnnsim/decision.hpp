#pragma once

#include <string>
#include <vector>

#include "vdnnsim/cost_model.hpp"
#include "vdnnsim/footprint.hpp"
#include "vdnnsim/net_graph.hpp"

namespace vdnnsim {

enum class PolicyKind { Baseline, VdnnAll, VdnnConv };
enum class AlgoMode { MemoryOptimal, PerfOptimal };

// Baseline reuses two network-max gradient buffers (and allocates the whole
// network up front); vDNN policies allocate gradient maps per layer.
enum class GradientScheme { TwoBufferReuse, PerLayer };

inline const char* to_string(GradientScheme s) {
  return s == GradientScheme::TwoBufferReuse ? "two_buffer_reuse" : "per_layer";
}

// Which layers may offload their input feature maps: CONV and POOL read-only
// inputs (plus the raw input data). In-place ACTV and the classifier FC
// layers never offload.
inline bool offload_eligible(LayerKind k) {
  return k == LayerKind::Conv || k == LayerKind::Pool || k == LayerKind::Input;
}

struct PolicyDecision {
  std::vector<char> offload;  // per layer: offload that layer's input X in forward
  AlgoAssignment algos;       // per CONV layer
  GradientScheme gradient_scheme = GradientScheme::PerLayer;
  std::string label;

  bool offloads(LayerId id) const { return offload[static_cast<std::size_t>(id)] != 0; }

  void validate(const NetworkGraph& g) const {
    if (offload.size() != g.size()) throw InvalidDecision("offload flags do not cover the graph");
    for (const LayerDescriptor& l : g.layers()) {
      if (offload[static_cast<std::size_t>(l.id)] && !offload_eligible(l.kind)) {
        throw InvalidDecision("layer " + std::to_string(l.id) + " is not offload-eligible");
      }
      if ((l.kind == LayerKind::Conv) != algos.contains(l.id)) {
        throw InvalidDecision("algorithm assignment must cover exactly the CONV layers");
      }
      if (offload[static_cast<std::size_t>(l.id)] && gradient_scheme == GradientScheme::TwoBufferReuse) {
        throw InvalidDecision("two-buffer gradient reuse implies the network-wide baseline: no offloading");
      }
    }
    for (const auto& [id, algo] : algos) {
      if (id < 0 || static_cast<std::size_t>(id) >= g.size()) {
        throw InvalidDecision("algorithm assignment references unknown layer");
      }
    }
  }
};

inline AlgoAssignment assign_algos(const NetworkGraph& g, AlgoMode mode, const CostModel& cm) {
  AlgoAssignment a;
  for (const LayerDescriptor& l : g.layers()) {
    if (l.kind != LayerKind::Conv) continue;
    a[l.id] = mode == AlgoMode::MemoryOptimal ? AlgoId::ImplicitGemm : cm.fastest_algo(g, l.id);
  }
  return a;
}

inline PolicyDecision static_decision(PolicyKind kind, AlgoMode mode, const NetworkGraph& g,
                                      const CostModel& cm) {
  PolicyDecision d;
  d.offload.assign(g.size(), 0);
  d.algos = assign_algos(g, mode, cm);
  switch (kind) {
    case PolicyKind::Baseline:
      d.gradient_scheme = GradientScheme::TwoBufferReuse;
      d.label = "baseline";
      break;
    case PolicyKind::VdnnAll:
      d.gradient_scheme = GradientScheme::PerLayer;
      d.label = "vdnn-all";
      for (const LayerDescriptor& l : g.layers()) {
        if (offload_eligible(l.kind)) d.offload[static_cast<std::size_t>(l.id)] = 1;
      }
      break;
    case PolicyKind::VdnnConv:
      d.gradient_scheme = GradientScheme::PerLayer;
      d.label = "vdnn-conv";
      for (const LayerDescriptor& l : g.layers()) {
        if (l.kind == LayerKind::Conv) d.offload[static_cast<std::size_t>(l.id)] = 1;
      }
      break;
  }
  d.label += mode == AlgoMode::MemoryOptimal ? "(m)" : "(p)";
  return d;
}

}  // namespace vdnnsim
