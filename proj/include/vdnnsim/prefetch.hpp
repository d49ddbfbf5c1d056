#pragma once

#include <optional>

#include "vdnnsim/net_graph.hpp"
#include "vdnnsim/sim_types.hpp"

namespace vdnnsim {

// Search for the layer whose offloaded input X should be prefetched while
// `current`'s backward computation runs. Scans layer ids downward from
// current-1 and returns the first layer with an offloaded, not yet
// prefetch-enqueued X. The scan stops right after examining the first CONV
// layer it meets, which bounds how far ahead of its reuse a prefetched
// tensor may sit in device memory.
inline std::optional<LayerId> find_prefetch_layer(LayerId current, const SimState& state,
                                                  const NetworkGraph& graph) {
  for (LayerId i = current - 1; i >= 0; --i) {
    if (state.has_pending_offload(i)) return i;
    if (graph.layer(i).kind == LayerKind::Conv) break;
  }
  return std::nullopt;
}

}  // namespace vdnnsim
