#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vdnnsim/decision.hpp"
#include "vdnnsim/footprint.hpp"
#include "vdnnsim/memory_pool.hpp"
#include "vdnnsim/net_graph.hpp"
#include "vdnnsim/policy.hpp"
#include "vdnnsim/sim_types.hpp"

namespace vdnnsim {

using nlohmann::json;

inline std::string format_bytes(Bytes b) {
  std::ostringstream os;
  os << std::fixed;
  if (b >= 1000000000ull) {
    os << std::setprecision(2) << double(b) / 1e9 << " GB";
  } else if (b >= 1000000ull) {
    os << std::setprecision(2) << double(b) / 1e6 << " MB";
  } else if (b >= 1000ull) {
    os << std::setprecision(1) << double(b) / 1e3 << " KB";
  } else {
    os << b << " B";
  }
  return os.str();
}

inline std::string format_seconds(TimeNs ns) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << double(ns) / 1e9 << " s";
  return os.str();
}

// ---- network graph ------------------------------------------------------

inline json graph_to_json(const NetworkGraph& g) {
  json j;
  j["batch"] = g.batch();
  json layers = json::array();
  for (const LayerDescriptor& l : g.layers()) {
    json e;
    e["id"] = l.id;
    e["kind"] = to_string(l.kind);
    if (!l.inputs.empty()) e["inputs"] = l.inputs;
    if (l.inputs.size() > 1) e["join"] = l.join == JoinRule::Concat ? "concat" : "eltwise";
    if (l.conv) {
      e["kernel"] = l.conv->kernel;
      e["stride"] = l.conv->stride;
      e["pad"] = l.conv->pad;
      e["out_channels"] = l.conv->out_channels;
    }
    if (l.pool) {
      e["window"] = l.pool->window;
      e["stride"] = l.pool->stride;
    }
    if (l.fc) e["out_features"] = l.fc->out_features;
    if (l.input) {
      e["c"] = l.input->c;
      e["h"] = l.input->h;
      e["w"] = l.input->w;
    }
    if (g.has_shapes()) {
      const TensorShape& s = g.shape(l.id);
      e["shape"] = {s.n, s.c, s.h, s.w};
    }
    layers.push_back(std::move(e));
  }
  j["layers"] = std::move(layers);
  return j;
}

inline NetworkGraph graph_from_json(const json& j) {
  NetworkGraph g(j.at("batch").get<std::uint64_t>());
  for (const json& e : j.at("layers")) {
    LayerDescriptor d;
    d.kind = layer_kind_from(e.at("kind").get<std::string>());
    if (e.contains("inputs")) d.inputs = e.at("inputs").get<std::vector<LayerId>>();
    if (e.contains("join")) {
      d.join = e.at("join").get<std::string>() == "eltwise" ? JoinRule::Elementwise : JoinRule::Concat;
    }
    switch (d.kind) {
      case LayerKind::Conv:
        d.conv = ConvParams{e.at("kernel").get<std::uint64_t>(), e.at("stride").get<std::uint64_t>(),
                            e.at("pad").get<std::uint64_t>(), e.at("out_channels").get<std::uint64_t>()};
        break;
      case LayerKind::Pool:
        d.pool = PoolParams{e.at("window").get<std::uint64_t>(), e.at("stride").get<std::uint64_t>()};
        break;
      case LayerKind::Fc:
        d.fc = FcParams{e.at("out_features").get<std::uint64_t>()};
        break;
      case LayerKind::Input:
        d.input = InputParams{e.at("c").get<std::uint64_t>(), e.at("h").get<std::uint64_t>(),
                              e.at("w").get<std::uint64_t>()};
        break;
      default:
        break;
    }
    g.add_layer(std::move(d));
  }
  g.finalize();
  return g;
}

// ---- decisions ------------------------------------------------------------

inline json decision_to_json(const PolicyDecision& d) {
  json j;
  j["label"] = d.label;
  j["gradient_scheme"] = to_string(d.gradient_scheme);
  json off = json::array();
  for (std::size_t i = 0; i < d.offload.size(); ++i) {
    if (d.offload[i]) off.push_back(i);
  }
  j["offload_layers"] = std::move(off);
  json algos = json::object();
  for (const auto& [id, a] : d.algos) algos[std::to_string(id)] = to_string(a);
  j["algorithms"] = std::move(algos);
  j["layer_count"] = d.offload.size();
  return j;
}

inline PolicyDecision decision_from_json(const json& j, const NetworkGraph& g) {
  PolicyDecision d;
  d.label = j.value("label", "decision-file");
  d.gradient_scheme = j.value("gradient_scheme", std::string("per_layer")) == "two_buffer_reuse"
                          ? GradientScheme::TwoBufferReuse
                          : GradientScheme::PerLayer;
  d.offload.assign(g.size(), 0);
  for (const json& id : j.at("offload_layers")) {
    const auto i = id.get<std::size_t>();
    if (i >= g.size()) throw InvalidDecision("decision file references unknown layer");
    d.offload[i] = 1;
  }
  for (const auto& [key, val] : j.at("algorithms").items()) {
    d.algos[LayerId(std::stol(key))] = algo_from(val.get<std::string>());
  }
  d.validate(g);
  return d;
}

// ---- run reports ----------------------------------------------------------

inline json event_to_json(const StreamEvent& e) {
  json j;
  j["stream"] = to_string(e.stream);
  j["kind"] = to_string(e.kind);
  j["layer"] = e.layer;
  j["start_ns"] = e.start;
  j["end_ns"] = e.end;
  j["bytes"] = e.bytes;
  if (!e.tag.empty()) j["tag"] = e.tag;
  if (e.buffer != kNoLayer) j["buffer"] = e.buffer;
  if (e.kind == EventKind::Alloc || e.kind == EventKind::Release) j["offset"] = e.offset;
  return j;
}

inline json report_to_json(const RunReport& r, bool with_events = true) {
  json j;
  j["verdict"] = r.verdict();
  j["pass"] = r.pass;
  if (r.oom) {
    j["oom"] = {{"layer", r.oom->layer},
                {"phase", to_string(r.oom->phase)},
                {"fragmented", r.oom->fragmented},
                {"requested_bytes", r.oom->requested},
                {"tag", r.oom->tag}};
  }
  j["max_mem_bytes"] = r.max_mem_bytes;
  j["avg_mem_bytes"] = r.avg_mem_bytes;
  j["offload_traffic_bytes"] = r.offload_traffic_bytes;
  j["prefetch_traffic_bytes"] = r.prefetch_traffic_bytes;
  j["host_peak_bytes"] = r.host_peak_bytes;
  j["stall_fwd_offload_ns"] = r.stall_fwd_offload_ns;
  j["stall_bwd_prefetch_ns"] = r.stall_bwd_prefetch_ns;
  j["total_ns"] = r.total_ns;
  j["interference_bound"] = r.interference_bound;
  j["reuse_distance_ns"] = r.reuse_distance_ns;
  if (with_events) {
    json evs = json::array();
    for (const StreamEvent& e : r.events) evs.push_back(event_to_json(e));
    j["events"] = std::move(evs);
  }
  return j;
}

// Timeline export: one row per event, the documented six columns.
inline std::string events_csv(const RunReport& r) {
  std::ostringstream os;
  os << "stream,kind,layer,start_ns,end_ns,bytes\n";
  for (const StreamEvent& e : r.events) {
    os << to_string(e.stream) << ',' << to_string(e.kind) << ',' << e.layer << ',' << e.start << ','
       << e.end << ',' << e.bytes << '\n';
  }
  return os.str();
}

inline std::string pool_trace_csv(const std::vector<PoolTraceRow>& trace) {
  std::ostringstream os;
  os << "time_ns,op,tag,offset,bytes,current,high_water\n";
  for (const PoolTraceRow& t : trace) {
    os << t.time << ',' << (t.op == 'a' ? "alloc" : "free") << ',' << t.tag << ',' << t.offset << ','
       << t.bytes << ',' << t.current << ',' << t.high_water << '\n';
  }
  return os.str();
}

inline json footprint_to_json(const FootprintReport& r) {
  json j;
  j["weights_bytes"] = r.weights_bytes;
  j["feature_maps_bytes"] = r.feature_maps_bytes;
  j["gradient_buffers_bytes"] = r.gradient_buffers_bytes;
  j["workspace_bytes"] = r.workspace_bytes;
  j["total_bytes"] = r.total_bytes;
  j["feature_map_fraction"] = r.feature_map_fraction();
  j["feature_extraction_fraction"] = r.feature_extraction_fraction();
  return j;
}

inline std::string profile_passes_csv(const std::vector<ProfilePassResult>& passes) {
  std::ostringstream os;
  os << "phase,decision,verdict,total_ns,max_mem_bytes\n";
  for (const ProfilePassResult& p : passes) {
    os << p.phase << ',' << p.decision.label << ',' << (p.pass ? "PASS" : "OOM") << ',' << p.total_ns
       << ',' << p.max_mem_bytes << '\n';
  }
  return os.str();
}

}  // namespace vdnnsim
