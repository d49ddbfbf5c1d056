#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "vdnnsim/cost_model.hpp"
#include "vdnnsim/net_graph.hpp"

namespace vdnnsim {

using AlgoAssignment = std::map<LayerId, AlgoId>;

// Network-wide allocation accounting: everything the baseline policy keeps
// resident for one training pass.
struct FootprintReport {
  Bytes weights_bytes = 0;
  Bytes feature_maps_bytes = 0;
  Bytes gradient_buffers_bytes = 0;  // 2 x max gradient map
  Bytes workspace_bytes = 0;         // max over layers for the chosen algorithms
  Bytes total_bytes = 0;
  Bytes classifier_bytes = 0;  // FC-attributable share, for reporting

  double feature_map_fraction() const {
    return total_bytes == 0 ? 0.0 : double(feature_maps_bytes) / double(total_bytes);
  }
  // Share of the footprint attributable to the feature extraction layers.
  double feature_extraction_fraction() const {
    return total_bytes == 0 ? 0.0 : 1.0 - double(classifier_bytes) / double(total_bytes);
  }
};

namespace detail {

// Consumers of a feature buffer, looking through in-place ACTV aliases.
inline void collect_alias_consumers(const NetworkGraph& g, LayerId owner,
                                    std::vector<LayerId>& out) {
  for (LayerId c : g.consumers(owner)) {
    out.push_back(c);
    if (g.layer(c).kind == LayerKind::Actv) collect_alias_consumers(g, c, out);
  }
}

}  // namespace detail

// A feature buffer is persistent baseline state when some CONV/ACTV/POOL/FC
// layer reads it; buffers feeding only the loss are transient.
inline bool feature_buffer_counted(const NetworkGraph& g, LayerId owner) {
  if (g.layer(owner).kind == LayerKind::Actv || g.layer(owner).kind == LayerKind::Loss) return false;
  std::vector<LayerId> readers;
  detail::collect_alias_consumers(g, owner, readers);
  for (LayerId r : readers) {
    if (g.layer(r).kind != LayerKind::Loss) return true;
  }
  return false;
}

// Gradient map produced by layer m's backward step (its dX). Gradients with
// respect to raw input data are not materialized.
inline Bytes gradient_map_bytes(const NetworkGraph& g, LayerId m, const CostModel& cm) {
  const LayerDescriptor& l = g.layer(m);
  if (l.kind == LayerKind::Actv || l.kind == LayerKind::Input) return 0;
  Bytes total = 0;
  for (LayerId q : l.inputs) {
    if (g.layer(feature_owner(g, q)).kind == LayerKind::Input) continue;
    const Bytes b = cm.tensor_bytes_of(g.shape(q));
    if (l.join == JoinRule::Elementwise) return b;  // one shared gradient
    total += b;
  }
  return total;
}

inline Bytes max_gradient_map_bytes(const NetworkGraph& g, const CostModel& cm) {
  Bytes m = 0;
  for (const LayerDescriptor& l : g.layers()) {
    m = std::max(m, gradient_map_bytes(g, l.id, cm));
  }
  return m;
}

inline FootprintReport baseline_footprint(const NetworkGraph& g, const AlgoAssignment& algos,
                                          const CostModel& cm, bool include_weight_grads = false) {
  FootprintReport r;
  for (const LayerDescriptor& l : g.layers()) {
    Bytes w = cm.weight_bytes(g, l.id);
    if (include_weight_grads) w *= 2;  // persistent dW mirrors W
    r.weights_bytes += w;
    if (l.kind == LayerKind::Fc) r.classifier_bytes += w;
    if (feature_buffer_counted(g, l.id)) {
      const Bytes b = cm.tensor_bytes_of(g.shape(l.id));
      r.feature_maps_bytes += b;
      if (l.kind == LayerKind::Fc) r.classifier_bytes += b;
    }
    if (l.kind == LayerKind::Conv) {
      auto it = algos.find(l.id);
      const AlgoId a = it == algos.end() ? AlgoId::ImplicitGemm : it->second;
      r.workspace_bytes = std::max(r.workspace_bytes, cm.conv_workspace(g, l.id, a));
    }
  }
  r.gradient_buffers_bytes = 2 * max_gradient_map_bytes(g, cm);
  r.total_bytes = r.weights_bytes + r.feature_maps_bytes + r.gradient_buffers_bytes +
                  r.workspace_bytes;
  return r;
}

}  // namespace vdnnsim
